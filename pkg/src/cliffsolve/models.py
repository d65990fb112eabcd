"""Covariantly equipped systems and the model Dirac / Dirac-Hestenes equations.

Every model is reduced to Friedrichs form by multiplying from the left by
``beta = e^1``: ``H_mu = L(beta h^mu)``, ``M = sum_j L(beta A_j) R(B_j)``,
``j = c(beta f)``.  The harnesses here check the ideal-preservation theorem,
the free dispersion relation and grid convergence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from cliffsolve.clifford_core import Multivector, Signature, grade_project, parity_mask
from cliffsolve.errors import FriedrichsError, MembershipError, ParityError, SignatureError
from cliffsolve.genform import Tetrad
from cliffsolve.hyperbolic_solver import (
    FieldGrid,
    FirstOrderSystem,
    Grid,
    _Stepper,
    energy,
    solve_cauchy,
    validate_friedrichs,
)
from cliffsolve.matrix_rep import mul_operator, restrict_parity
from cliffsolve.spinor_ideals import HermitianIdempotent, canonical, membership

log = logging.getLogger(__name__)

LIE_TOL = 1e-10
K_TOL = 1e-13


# ---------------------------------------------------------------------------
# Scalar envelopes and x-dependent genforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """Scalar envelope on the periodic box.

    kinds: ``constant``; ``gaussian`` (``center``, ``width``); ``cos``
    (``q`` integer mode numbers, ``phase``) which is real; ``plane_wave``
    ``exp(i (2 pi q . x / L + phase))`` which is complex.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    center: tuple[float, ...] | None = None
    width: float = 1.0
    q: tuple[int, ...] | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian", "cos", "plane_wave"):
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @property
    def is_real(self) -> bool:
        return self.kind != "plane_wave"

    def sample(self, grid: Grid) -> np.ndarray:
        coords = grid.coordinates()
        shape = grid.shape
        if self.kind == "constant":
            return np.full(shape, self.amplitude, dtype=np.complex128)
        if self.kind == "gaussian":
            center = self.center or tuple(0.5 * e for e in grid.extents)
            r2 = np.zeros(shape)
            for x, c, ext in zip(coords, center, grid.extents):
                d = (x - c + 0.5 * ext) % ext - 0.5 * ext  # periodic distance
                r2 = r2 + d * d
            return (self.amplitude * np.exp(-r2 / (2.0 * self.width ** 2))).astype(np.complex128)
        q = self.q or (1,) * len(coords)
        arg = np.full(shape, self.phase)
        for x, qk, ext in zip(coords, q, grid.extents):
            arg = arg + 2.0 * np.pi * qk * x / ext
        if self.kind == "cos":
            return (self.amplitude * np.cos(arg)).astype(np.complex128)
        return self.amplitude * np.exp(1j * arg)


@dataclass(frozen=True)
class GenformField:
    """``profile(x) * element``; a None profile means constant in x."""

    element: Multivector
    profile: Profile | None = None

    @property
    def signature(self) -> Signature:
        return self.element.signature

    @property
    def is_constant(self) -> bool:
        return self.profile is None or self.profile.kind == "constant"

    def constant_value(self) -> Multivector:
        amp = 1.0 if self.profile is None else self.profile.amplitude
        return amp * self.element

    def sample(self, grid: Grid) -> np.ndarray:
        """Blade coefficients per grid point, shape ``(*grid.shape, 2**n)``."""
        env = np.ones(grid.shape, dtype=np.complex128) if self.profile is None else self.profile.sample(grid)
        return env[..., None] * self.element.coeffs


FieldLike = Union[Multivector, GenformField]


def as_field(value: FieldLike) -> GenformField:
    return value if isinstance(value, GenformField) else GenformField(value)


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------

@dataclass
class EquippedSystemSpec:
    """``d phi + sum_j A_j phi B_j = f`` with ``d = h^mu d_mu``."""

    tetrad: Tetrad
    terms: list[tuple[FieldLike, FieldLike]] = field(default_factory=list)
    source: FieldLike | None = None
    parity: str = "none"  # parity of the unknown: none | even | odd
    label: str = "equipped"

    @property
    def signature(self) -> Signature:
        return self.tetrad.signature


@dataclass
class DiracModelSpec:
    """``h^mu (d_mu psi + psi A_mu) + i m psi = 0`` with ``A_mu`` in L(t)."""

    idempotent: HermitianIdempotent
    tetrad: Tetrad
    mass: float = 1.0
    gauge: list[FieldLike] | None = None  # A_1..A_n, None means A = 0

    @property
    def signature(self) -> Signature:
        return self.tetrad.signature

    def gauge_fields(self) -> list[GenformField]:
        sig = self.signature
        if self.gauge is None:
            return [GenformField(Multivector.zero(sig)) for _ in range(sig.n)]
        if len(self.gauge) != sig.n:
            raise ValueError(f"need {sig.n} gauge components A_1..A_n, got {len(self.gauge)}")
        return [as_field(a) for a in self.gauge]

    @property
    def is_free(self) -> bool:
        return all(not np.any(a.element.coeffs) for a in self.gauge_fields())


@dataclass
class HestenesModelSpec:
    """``d Psi + A Psi K + m Psi K beta = 0``, ``A = a_mu h^mu``, Psi even or odd."""

    tetrad: Tetrad
    mass: float = 1.0
    covector: Sequence[float] | None = None  # a_mu, real
    covector_profile: Profile | None = None
    K: Multivector | None = None  # defaults to -e^23
    parity: str = "even"

    @property
    def signature(self) -> Signature:
        return self.tetrad.signature

    def k_element(self) -> Multivector:
        if self.K is not None:
            return self.K
        return Multivector.blade(self.signature, (2, 3), -1.0)


def default_dirac_spec(mass: float = 1.0, idempotent: str = "t2") -> DiracModelSpec:
    sig = Signature(1, 3)
    return DiracModelSpec(canonical(idempotent), Tetrad.identity(sig), mass)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _parity_of(u: Multivector) -> str | None:
    """``even``/``odd`` for pure-parity elements (zero counts as both: returns ``any``)."""
    if not np.any(u.coeffs):
        return "any"
    even = np.any(grade_project(u, parity="even").coeffs)
    odd = np.any(grade_project(u, parity="odd").coeffs)
    if even and odd:
        return None
    return "even" if even else "odd"


def _flip(parity: str) -> str:
    return "odd" if parity == "even" else "even"


def _check_grading(spec: EquippedSystemSpec):
    for idx, (a, b) in enumerate(spec.terms):
        pa, pb = _parity_of(as_field(a).element), _parity_of(as_field(b).element)
        if "any" in (pa, pb):
            continue
        if pa is None or pb is None or pa == pb:
            raise ParityError(f"term {idx}: need (A even, B odd) or (A odd, B even), got ({pa}, {pb})")
    if spec.source is not None:
        pf = _parity_of(as_field(spec.source).element)
        if pf not in ("any", _flip(spec.parity)):
            raise ParityError(f"source must be {_flip(spec.parity)} for a {spec.parity} unknown, got {pf}")


def principal_symbols(tetrad: Tetrad, parity: str = "none") -> tuple[np.ndarray, ...]:
    """``H_mu = L(beta h^mu)``, restricted to the parity subspace if asked."""
    sig = tetrad.signature
    beta = Multivector.blade(sig, (1,))
    mats = [mul_operator(beta * h, "left") for h in tetrad.genvectors]
    if parity != "none":
        mats = [restrict_parity(m, sig, parity) for m in mats]
    return tuple(mats)


def model_parity(spec) -> str:
    return getattr(spec, "parity", "none") if not isinstance(spec, DiracModelSpec) else "none"


def assemble_equipped(spec: EquippedSystemSpec, grid: Grid | None = None) -> FirstOrderSystem:
    """Friedrichs form of an equipped system.  ``grid`` is needed for x-dependent terms."""
    sig = spec.signature
    if not sig.is_lorentzian:
        raise SignatureError(f"Friedrichs reduction needs signature (1, n-1), got {sig}")
    if spec.parity not in ("none", "even", "odd"):
        raise ValueError(f"unknown parity {spec.parity!r}")
    restricted = spec.parity != "none"
    if restricted:
        _check_grading(spec)

    beta = Multivector.blade(sig, (1,))
    cut = (lambda m: restrict_parity(m, sig, spec.parity)) if restricted else (lambda m: m)
    H = principal_symbols(spec.tetrad, spec.parity)

    d = H[0].shape[0]
    m_const = np.zeros((d, d), dtype=np.complex128)
    m_field = None
    for a, b in spec.terms:
        fa, fb = as_field(a), as_field(b)
        if not fa.is_constant and not fb.is_constant:
            raise ValueError("at most one factor of a term may vary in x")
        op = cut(mul_operator(beta * fa.element, "left") @ mul_operator(fb.element, "right"))
        varying = fa if not fa.is_constant else (fb if not fb.is_constant else None)
        if varying is None:
            m_const += _scale(fa) * _scale(fb) * op
            continue
        if grid is None:
            raise ValueError("x-dependent terms need a grid")
        env = varying.profile.sample(grid)
        other = fb if varying is fa else fa
        term = (_scale(other) * env)[..., None, None] * op
        m_field = term if m_field is None else m_field + term
    M = m_const if m_field is None else m_field + m_const

    j = None
    if spec.source is not None:
        src = as_field(spec.source)
        keep = parity_mask(sig, spec.parity) if restricted else slice(None)
        bf = GenformField(beta * src.element, src.profile)
        if bf.is_constant:
            vec = bf.constant_value().coeffs[keep]
            j = vec if np.any(vec) else None
        else:
            if grid is None:
                raise ValueError("an x-dependent source needs a grid")
            j = bf.sample(grid)[..., keep]
    label = spec.label + (f"[{spec.parity}]" if restricted else "")
    system = FirstOrderSystem(H, M, j, label=label)

    report = validate_friedrichs(system)
    if not report.passed:
        raise FriedrichsError(f"assembly refused: {report.message}")
    return system


def _scale(f: GenformField) -> complex:
    # amplitude of a constant profile; varying envelopes carry their own
    return f.profile.amplitude if f.profile is not None and f.profile.kind == "constant" else 1.0


def state_blades(sig: Signature, parity: str = "none") -> np.ndarray:
    """Blade mask carried by each state component."""
    if parity == "none":
        return np.arange(sig.dim)
    return np.flatnonzero(parity_mask(sig, parity))


def _check_gauge(spec: DiracModelSpec):
    t = spec.idempotent
    if t.signature != spec.signature:
        raise SignatureError("idempotent and tetrad signatures differ")
    for mu, a in enumerate(spec.gauge_fields(), start=1):
        if a.profile is not None and not a.profile.is_real:
            raise MembershipError(f"A_{mu}: L(t) is a real Lie algebra, the envelope must be real")
        if not membership(a.element, t, "L", LIE_TOL):
            raise MembershipError(f"A_{mu} = {a.element} is not in L(t)")


def dirac_as_equipped(spec: DiracModelSpec) -> EquippedSystemSpec:
    """Terms ``(h^mu, A_mu)`` and ``(i m e, e)``."""
    sig = spec.signature
    e = Multivector.scalar(sig)
    terms: list[tuple[FieldLike, FieldLike]] = []
    for h, a in zip(spec.tetrad.genvectors, spec.gauge_fields()):
        if np.any(a.element.coeffs):
            terms.append((h, a))
    if spec.mass:
        terms.append((1j * spec.mass * e, e))
    return EquippedSystemSpec(spec.tetrad, terms, None, "none", label="model-dirac")


def assemble_model_dirac(spec: DiracModelSpec, grid: Grid | None = None) -> FirstOrderSystem:
    _check_gauge(spec)
    return assemble_equipped(dirac_as_equipped(spec), grid)


def check_k(k: Multivector, tol: float = K_TOL) -> dict:
    """Residuals of ``K in grade 2``, ``K^2 = -e``, ``[beta, K] = 0``."""
    sig = k.signature
    beta = Multivector.blade(sig, (1,))
    e = Multivector.scalar(sig)
    res = {
        "grade2_residual": (k - k.grade(2)).norm(),
        "square_residual": (k * k + e).norm(),
        "commutator_residual": (beta * k - k * beta).norm(),
    }
    res["passed"] = all(v <= tol for v in res.values())
    return res


def hestenes_as_equipped(spec: HestenesModelSpec) -> EquippedSystemSpec:
    sig = spec.signature
    if sig != Signature(1, 3):
        raise SignatureError(f"the Dirac-Hestenes model lives in signature (1,3), got {sig}")
    if spec.parity not in ("even", "odd"):
        raise ValueError("Psi must be even or odd")
    k = spec.k_element()
    checks = check_k(k)
    if not checks["passed"]:
        raise ValueError(f"K fails its conditions: {checks}")
    beta = Multivector.blade(sig, (1,))
    terms: list[tuple[FieldLike, FieldLike]] = []
    a_mu = np.zeros(sig.n) if spec.covector is None else np.asarray(spec.covector, dtype=float)
    if a_mu.shape != (sig.n,):
        raise ValueError(f"covector needs {sig.n} components")
    if spec.covector_profile is not None and not spec.covector_profile.is_real:
        raise ValueError("the covector a_mu is real; use a real envelope")
    if np.any(a_mu):
        a_vec = sum((float(c) * h for c, h in zip(a_mu, spec.tetrad.genvectors)), Multivector.zero(sig))
        terms.append((GenformField(a_vec, spec.covector_profile), k))
    if spec.mass:
        terms.append((spec.mass * Multivector.scalar(sig), k * beta))
    return EquippedSystemSpec(spec.tetrad, terms, None, spec.parity, label="dirac-hestenes")


def assemble_dirac_hestenes(spec: HestenesModelSpec, grid: Grid | None = None) -> FirstOrderSystem:
    return assemble_equipped(hestenes_as_equipped(spec), grid)


def anti_hermiticity_residual(system: FirstOrderSystem) -> float:
    """``max |M + M^dagger|`` over all points."""
    if system.M is None:
        return 0.0
    m = system.M
    return float(np.max(np.abs(m + np.swapaxes(m, -1, -2).conj())))


# ---------------------------------------------------------------------------
# Theorem harness
# ---------------------------------------------------------------------------

def _data_array(data, grid: Grid, dim: int) -> np.ndarray:
    if isinstance(data, (GenformField, Multivector)):
        return as_field(data).sample(grid)
    arr = np.asarray(data, dtype=np.complex128)
    if arr.shape != tuple(grid.shape) + (dim,):
        raise ValueError(f"initial data shape {arr.shape} does not match grid {grid.shape} x {dim}")
    return arr


@dataclass
class TheoremReport:
    leakage_max: float
    phi_prime_max: float
    restricted_vs_equipped: float
    equation_residual: float
    control_residual: float
    control_phi_prime_max: float
    energy_drift: float
    gamma: float
    initial_membership_residual: float
    steps: int
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        tol = self.tolerances
        return (self.leakage_max <= tol.get("leakage", 1e-12)
                and self.restricted_vs_equipped <= tol.get("agreement", 1e-11)
                and self.control_residual <= tol.get("control", 1e-11)
                and self.phi_prime_max <= tol.get("zero_data", 1e-12))

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        out["passed"] = self.passed
        return out


def _rel_max(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0


def verify_theorem(spec: DiracModelSpec, psi0, grid: Grid, *, control_data=None,
                   tolerances: dict | None = None) -> TheoremReport:
    """Run the equipped problem from data in I(t) and check it never leaves I(t).

    Reports the relative leakage ``|Psi t'| / |Psi|`` over every step, the
    agreement with the run projected onto I(t) after each step, the discrete
    residual of the original equation on ``phi = Psi t``, and a control run
    whose data has a ``t'`` component: there ``Psi t'`` must match the
    separately solved free problem.
    """
    sig = spec.signature
    t = spec.idempotent
    system = assemble_model_dirac(spec, grid)
    dim = system.D
    data = _data_array(psi0, grid, dim)
    flat = data.reshape(-1, dim)
    r_t, r_tp = t.right_op, t.right_op_prime
    init_res = _rel_max(flat @ r_t.T, flat)
    if init_res > 1e-12:
        raise MembershipError(f"initial data is not in I(t) (relative residual {init_res:.3e})")

    dense = replace(grid, sample_every=1)
    leak = {"rel": 0.0, "abs": 0.0}

    def monitor(step, time, u):
        prime = u @ r_tp.T
        a = float(np.max(np.abs(prime))) if prime.size else 0.0
        norm = float(np.max(np.abs(u))) if u.size else 0.0
        leak["abs"] = max(leak["abs"], a)
        if norm > 0:
            leak["rel"] = max(leak["rel"], a / norm)
        return None

    equipped = solve_cauchy(system, data, dense, post_step=monitor)
    restricted = solve_cauchy(system, data, dense, post_step=lambda s, tm, u: u @ r_t.T)
    agree = _rel_max(equipped.stacked(), restricted.stacked())

    # discrete residual of the original equation on phi = Psi t (centred in time)
    stepper = _Stepper(system, dense)
    phis = [s.values.reshape(-1, dim) @ r_t.T for s in equipped.slices]
    buf = np.empty_like(phis[0])
    eq_res = 0.0
    for k in range(1, len(phis) - 1):
        dt_phi = (phis[k + 1] - phis[k - 1]) / (2.0 * dense.dt)
        eq_res = max(eq_res, float(np.max(np.abs(dt_phi - stepper.rhs(phis[k], buf)))) if buf.size else 0.0)

    if control_data is None:
        # right multiplication by e^2 pushes part of the data out of I(t)
        e2 = mul_operator(Multivector.blade(sig, (2,)), "right")
        ctrl = data + (flat @ e2.T).reshape(data.shape)
    else:
        ctrl = _data_array(control_data, grid, dim)
    ctrl_run = solve_cauchy(system, ctrl, grid)
    free = assemble_model_dirac(replace(spec, gauge=None), grid)
    ctrl_prime0 = (ctrl.reshape(-1, dim) @ r_tp.T).reshape(ctrl.shape)
    free_run = solve_cauchy(free, ctrl_prime0, grid)
    ctrl_res = 0.0
    ctrl_prime_max = 0.0
    for a, b in zip(ctrl_run.slices, free_run.slices):
        pa = a.values.reshape(-1, dim) @ r_tp.T
        ctrl_res = max(ctrl_res, _rel_max(pa, b.values.reshape(-1, dim)))
        ctrl_prime_max = max(ctrl_prime_max, float(np.max(np.abs(pa))))

    e0 = energy(system, equipped.slices[0], grid)
    e1 = energy(system, equipped.final, grid)
    drift = abs(e1 - e0) / e0 if e0 > 0 else abs(e1)
    gamma = validate_friedrichs(system).gamma
    return TheoremReport(
        leakage_max=leak["rel"],
        phi_prime_max=leak["abs"],
        restricted_vs_equipped=agree,
        equation_residual=eq_res,
        control_residual=ctrl_res,
        control_phi_prime_max=ctrl_prime_max,
        energy_drift=drift,
        gamma=gamma,
        initial_membership_residual=init_res,
        steps=grid.steps,
        tolerances=dict(tolerances or {}),
    )


# ---------------------------------------------------------------------------
# Dispersion and convergence
# ---------------------------------------------------------------------------

ModelSpec = Union[DiracModelSpec, HestenesModelSpec]


def _with_mass(spec: ModelSpec, m: float) -> ModelSpec:
    return replace(spec, mass=m)


def assemble_model(spec: ModelSpec, grid: Grid | None = None) -> FirstOrderSystem:
    if isinstance(spec, DiracModelSpec):
        return assemble_model_dirac(spec, grid)
    if isinstance(spec, HestenesModelSpec):
        return assemble_dirac_hestenes(spec, grid)
    if isinstance(spec, EquippedSystemSpec):
        return assemble_equipped(spec, grid)
    raise TypeError(f"unsupported spec {type(spec).__name__}")


def _require_free(spec: ModelSpec):
    if isinstance(spec, DiracModelSpec) and not spec.is_free:
        raise ValueError("dispersion check needs A = 0")
    if isinstance(spec, HestenesModelSpec) and spec.covector is not None and np.any(spec.covector):
        raise ValueError("dispersion check needs a = 0")


def plane_wave_frequencies(system: FirstOrderSystem, k: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``H_1^{-1} (sum_{i>=2} k_i H_i - i M)``; ``k`` holds ``k_2..k_n``."""
    k = np.asarray(k, dtype=float)
    if k.shape != (system.n - 1,):
        raise ValueError(f"wave covector needs {system.n - 1} spatial components")
    if system.M_is_field:
        raise ValueError("plane waves need a constant lower-order term")
    m = np.zeros_like(system.H[0]) if system.M is None else system.M
    a = sum((ki * h for ki, h in zip(k, system.H[1:])), np.zeros_like(system.H[0])) - 1j * m
    herm = 0.5 * (a + a.conj().T)
    if np.max(np.abs(a - herm)) <= 1e-12:
        return scipy.linalg.eigh(herm, system.H[0])
    w, v = scipy.linalg.eig(a, system.H[0])
    return w, v


@dataclass
class DispersionReport:
    mass: float
    k: list[float]
    omegas: list[float]
    expected: float
    max_error: float
    max_imag: float
    on_shell_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def dispersion_check(m: float, k: Sequence[float], spec: ModelSpec) -> DispersionReport:
    """Compare the plane-wave spectrum with ``+-sqrt(m^2 + |k|^2)``.

    ``k`` is the spatial covector ``(k_2, ..., k_n)``; the mass in ``spec`` is
    overridden by ``m``.
    """
    _require_free(spec)
    system = assemble_model(_with_mass(spec, m))
    w, _ = plane_wave_frequencies(system, k)
    w = np.asarray(w)
    k = np.asarray(k, dtype=float)
    expected = float(np.sqrt(m * m + k @ k))
    err = float(np.max(np.abs(np.abs(w.real) - expected)))
    eta = spec.signature.eta
    shell = 0.0
    for om in w.real:
        cov = np.concatenate([[-om], k])
        shell = max(shell, abs(cov @ eta @ cov - m * m))
    return DispersionReport(float(m), k.tolist(), sorted(float(x) for x in w.real), expected,
                            err, float(np.max(np.abs(w.imag))), float(shell))


def plane_wave_data(system: FirstOrderSystem, grid: Grid, q: Sequence[int], branch: int = -1):
    """Eigenmode ``u_hat exp(i k.x)`` for integer mode numbers ``q`` (``k = 2 pi q / L``).

    Returns ``(data, omega, k)``; ``branch`` indexes the ascending eigenvalues.
    """
    k_full = np.zeros(system.n - 1)
    for ax, qk, ext in zip(grid.active_axes, q, grid.extents):
        k_full[ax - 2] = 2.0 * np.pi * qk / ext
    w, v = plane_wave_frequencies(system, k_full)
    order = np.argsort(w.real)
    om = float(w.real[order[branch]])
    vec = v[:, order[branch]]
    vec = vec / np.linalg.norm(vec)
    coords = grid.coordinates()
    phase = np.zeros(grid.shape)
    for ax, x in zip(grid.active_axes, coords):
        phase = phase + k_full[ax - 2] * x
    data = np.exp(1j * phase)[..., None] * vec
    return data, om, k_full


def exact_plane_wave(data: np.ndarray, omega: float, time: float) -> np.ndarray:
    return data * np.exp(-1j * omega * time)


def time_domain_phase_check(spec: ModelSpec, m: float, q: Sequence[int], extent: float,
                            points: int, t_final: float, axis: int = 2, order: int = 2) -> dict:
    """Evolve one eigenmode and compare with ``exp(-i omega T)``.

    Returns the relative L2 error, the phase error, and the phase error that
    the central-difference modified wavenumber predicts.
    """
    _require_free(spec)
    system = assemble_model(_with_mass(spec, m))
    grid = Grid.for_system(system, [axis], [extent], [points], t_final=t_final, order=order)
    data, om, k = plane_wave_data(system, grid, q)
    traj = solve_cauchy(system, data, grid)
    exact = exact_plane_wave(data, om, grid.steps * grid.dt)
    num = traj.final.values
    overlap = np.vdot(exact.ravel(), num.ravel())
    rel = float(np.linalg.norm(num - exact) / np.linalg.norm(exact))
    kk = float(np.linalg.norm(k))
    dx = extent / points
    k_eff = np.sin(kk * dx) / dx if order == 2 else (8 * np.sin(kk * dx) - np.sin(2 * kk * dx)) / (6 * dx)
    om_eff = np.sign(om) * np.sqrt(m * m + k_eff ** 2)
    return {
        "points": points,
        "dx": dx,
        "omega": om,
        "relative_l2_error": rel,
        "phase_error": float(abs(np.angle(overlap))),
        "predicted_phase_error": float(abs(om - om_eff) * grid.steps * grid.dt),
    }


def convergence_study(spec: ModelSpec, *, mass: float = 1.0, q: Sequence[int] = (1,),
                      extent: float = 2.0 * np.pi, levels: Sequence[int] = (128, 256, 512),
                      t_final: float = 1.0, axis: int = 2, order: int = 2, cfl: float = 0.4) -> dict:
    """L2 error of a free plane wave at ``t_final`` on successively refined grids."""
    _require_free(spec)
    system = assemble_model(_with_mass(spec, mass))
    errors = []
    for pts in levels:
        grid = Grid.for_system(system, [axis], [extent], [pts], t_final=t_final, order=order, cfl=cfl)
        data, om, _ = plane_wave_data(system, grid, q)
        traj = solve_cauchy(system, data, grid)
        exact = exact_plane_wave(data, om, grid.steps * grid.dt)
        diff = traj.final.values - exact
        errors.append(float(np.sqrt(np.sum(np.abs(diff) ** 2) * grid.cell_volume)))
    orders = [float(np.log(errors[i] / errors[i + 1]) / np.log(levels[i + 1] / levels[i]))
              for i in range(len(errors) - 1)]
    return {"levels": list(levels), "errors": errors, "orders": orders}


def gauge_transform(spec: DiracModelSpec, u: Multivector) -> DiracModelSpec:
    """Replace every ``A_mu`` by ``U^dagger A_mu U`` for a constant ``U`` in G(t)."""
    if not membership(u, spec.idempotent, "G", 1e-10):
        raise MembershipError("gauge transformation must lie in G(t)")
    ud = u.dagger()
    new = [GenformField(ud * a.element * u, a.profile) for a in spec.gauge_fields()]
    return replace(spec, gauge=new)
