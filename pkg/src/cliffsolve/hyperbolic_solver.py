"""Friedrichs symmetric hyperbolic systems ``sum_i H_i d_i u + M u = j``.

``x^1`` is the evolution direction.  Spatial axes ``2..n`` are periodic; only
the active ones are discretised (central differences), fields are constant
along the rest.  Time stepping is classical RK4.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from cliffsolve import kernels
from cliffsolve.errors import CFLError, FriedrichsError, NonFiniteError
from cliffsolve.matrix_rep import DEFINITE_TOL, HERMITIAN_TOL, spectral_check

log = logging.getLogger(__name__)

DEFAULT_CFL = 0.4


@dataclass(frozen=True, eq=False)
class FirstOrderSystem:
    """Constant ``H_i``; ``M`` is ``(D, D)`` or a per-point ``(*shape, D, D)``
    field; ``j`` is ``(D,)`` or ``(*shape, D)``; either may be None."""

    H: tuple[np.ndarray, ...]
    M: np.ndarray | None = None
    j: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        hs = tuple(np.asarray(h, dtype=np.complex128) for h in self.H)
        d = hs[0].shape[0]
        for h in hs:
            if h.shape != (d, d):
                raise ValueError(f"all H_i must be {d}x{d}, got {h.shape}")
        object.__setattr__(self, "H", hs)
        if self.M is not None:
            object.__setattr__(self, "M", np.asarray(self.M, dtype=np.complex128))
        if self.j is not None:
            object.__setattr__(self, "j", np.asarray(self.j, dtype=np.complex128))

    @property
    def n(self) -> int:
        return len(self.H)

    @property
    def D(self) -> int:
        return self.H[0].shape[0]

    @property
    def M_is_field(self) -> bool:
        return self.M is not None and self.M.ndim > 2

    def replace(self, **changes) -> "FirstOrderSystem":
        kw = {"H": self.H, "M": self.M, "j": self.j, "label": self.label}
        kw.update(changes)
        return FirstOrderSystem(**kw)


@dataclass(frozen=True)
class FriedrichsReport:
    passed: bool
    hermiticity_residuals: list[float]
    gamma: float
    max_eigenvalue_h1: float
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "hermiticity_residuals": list(self.hermiticity_residuals),
            "gamma": self.gamma,
            "max_eigenvalue_h1": self.max_eigenvalue_h1,
            "message": self.message,
        }


def validate_friedrichs(system: FirstOrderSystem) -> FriedrichsReport:
    """Condition a): every ``H_i`` Hermitian and ``H_1`` positive definite."""
    resid = [spectral_check(h).hermiticity_residual for h in system.H]
    h1 = spectral_check(system.H[0])
    problems = []
    bad = [i + 1 for i, r in enumerate(resid) if r > HERMITIAN_TOL]
    if bad:
        problems.append(f"H_{bad} not Hermitian")
    if h1.min_eigenvalue <= DEFINITE_TOL:
        problems.append(f"H_1 not positive definite (min eigenvalue {h1.min_eigenvalue:.3e})")
    return FriedrichsReport(not problems, resid, h1.min_eigenvalue, h1.max_eigenvalue, "; ".join(problems))


def boundary_flux_matrix(system: FirstOrderSystem, tau: Sequence[float]) -> tuple[np.ndarray, float]:
    """``sum_i H_i tau_i`` and its smallest eigenvalue (condition b), pointwise)."""
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (system.n,):
        raise ValueError(f"normal must have {system.n} components, got shape {tau.shape}")
    if not np.any(tau):
        raise ValueError("normal vector must be nonzero")
    mat = sum(t * h for t, h in zip(tau, system.H))
    return mat, spectral_check(mat).min_eigenvalue


def characteristic_speed(system: FirstOrderSystem, axes: Sequence[int]) -> float:
    """Largest ``|eigenvalue|`` of ``H_1^{-1} H_i`` over the given (1-based) axes."""
    speed = 0.0
    for ax in axes:
        h = system.H[ax - 1]
        if not np.any(h):
            continue
        ev = scipy.linalg.eigh(0.5 * (h + h.conj().T), system.H[0], eigvals_only=True)
        speed = max(speed, float(np.max(np.abs(ev))))
    return speed


# ---------------------------------------------------------------------------
# Grids and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Periodic box over the active spatial axes, plus the time stepping."""

    n: int
    active_axes: tuple[int, ...]
    extents: tuple[float, ...]
    points: tuple[int, ...]
    dt: float
    steps: int
    order: int = 2
    cfl: float = DEFAULT_CFL
    sample_every: int = 0
    periodic: bool = True

    def __post_init__(self):
        axes = tuple(int(a) for a in self.active_axes)
        if any(not 2 <= a <= self.n for a in axes) or len(set(axes)) != len(axes):
            raise ValueError(f"active axes must be distinct values in 2..{self.n}, got {axes}")
        if not (len(self.extents) == len(self.points) == len(axes)):
            raise ValueError("need one extent and one point count per active axis")
        if self.order not in kernels.STENCILS:
            raise ValueError(f"stencil order must be one of {sorted(kernels.STENCILS)}")
        if not self.periodic:
            raise ValueError("only periodic boundaries are supported")
        if self.dt <= 0 or self.steps < 0:
            raise ValueError("dt must be positive and steps non-negative")
        object.__setattr__(self, "active_axes", axes)
        object.__setattr__(self, "extents", tuple(float(x) for x in self.extents))
        object.__setattr__(self, "points", tuple(int(p) for p in self.points))

    @classmethod
    def for_system(cls, system: FirstOrderSystem, active_axes: Sequence[int], extents: Sequence[float],
                   points: Sequence[int], *, steps: int | None = None, t_final: float | None = None,
                   cfl: float = DEFAULT_CFL, order: int = 2, sample_every: int = 0) -> "Grid":
        """Grid whose time step sits at the CFL bound.

        With ``t_final`` the step is shrunk so an integer number of steps lands
        exactly on ``t_final``.
        """
        dx = min(e / p for e, p in zip(extents, points)) if points else np.inf
        speed = characteristic_speed(system, active_axes)
        dt_max = cfl * dx / speed if speed > 0 else (t_final / max(steps or 1, 1) if t_final else 0.01)
        if t_final is not None:
            nsteps = max(1, int(np.ceil(t_final / dt_max - 1e-12)))
            dt = t_final / nsteps
        elif steps is not None:
            nsteps, dt = steps, dt_max
        else:
            raise ValueError("give steps or t_final")
        return cls(system.n, tuple(active_axes), tuple(extents), tuple(points), dt, nsteps,
                   order=order, cfl=cfl, sample_every=sample_every)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / p for e, p in zip(self.extents, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing)) if self.points else 1.0

    @property
    def npoints(self) -> int:
        return int(np.prod(self.points)) if self.points else 1

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per active axis (``ij`` indexing)."""
        axes = [np.arange(p) * h for p, h in zip(self.points, self.spacing)]
        return list(np.meshgrid(*axes, indexing="ij")) if axes else []

    def neighbors(self) -> np.ndarray:
        offsets, _ = kernels.STENCILS[self.order]
        idx = np.arange(self.npoints).reshape(self.shape)
        out = np.empty((len(self.points), len(offsets), self.npoints), dtype=np.int64)
        for k in range(len(self.points)):
            for o, off in enumerate(offsets):
                out[k, o] = np.roll(idx, -off, axis=k).ravel()
        return out


@dataclass
class FieldGrid:
    values: np.ndarray  # (*grid.shape, D)
    time: float = 0.0
    step: int = 0


@dataclass
class Trajectory:
    slices: list[FieldGrid] = field(default_factory=list)

    @property
    def final(self) -> FieldGrid:
        return self.slices[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.slices])

    def stacked(self) -> np.ndarray:
        return np.stack([s.values for s in self.slices])


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

class _Stepper:
    """Precomputed ``H_1^{-1}``-scaled operators and one RK4 step."""

    def __init__(self, system: FirstOrderSystem, grid: Grid):
        d = system.D
        npts = grid.npoints
        chol = scipy.linalg.cho_factor(system.H[0])
        solve = lambda b: scipy.linalg.cho_solve(chol, b)  # noqa: E731
        self.G = np.stack([solve(system.H[a - 1]) for a in grid.active_axes]) if grid.active_axes \
            else np.zeros((0, d, d), dtype=np.complex128)
        self.G = np.ascontiguousarray(self.G, dtype=np.complex128)
        if system.M is None:
            self.M = np.zeros((1, d, d), dtype=np.complex128)
        elif system.M.ndim == 2:
            self.M = solve(system.M)[None]
        else:
            mf = system.M.reshape(npts, d, d)
            self.M = np.einsum("ij,pjk->pik", scipy.linalg.cho_solve(chol, np.eye(d)), mf)
        self.M = np.ascontiguousarray(self.M, dtype=np.complex128)
        self.g_cols, self.g_vals = kernels.ell_pack(self.G)
        self.m_cols, self.m_vals = kernels.ell_pack(self.M)
        if system.j is None:
            self.s = np.zeros((1, d), dtype=np.complex128)
        elif system.j.ndim == 1:
            self.s = solve(system.j)[None]
        else:
            self.s = solve(system.j.reshape(npts, d).T).T
        self.s = np.ascontiguousarray(self.s, dtype=np.complex128)
        _, weights = kernels.STENCILS[grid.order]
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self.neighbors = grid.neighbors()
        self.inv_dx = np.array([1.0 / h for h in grid.spacing], dtype=np.float64)
        self.dt = grid.dt
        self._k = [np.empty((npts, d), dtype=np.complex128) for _ in range(4)]
        self._tmp = np.empty((npts, d), dtype=np.complex128)

    def rhs(self, u: np.ndarray, out: np.ndarray) -> np.ndarray:
        kernels.system_rhs(u, self.neighbors, self.weights, self.inv_dx, self.g_cols, self.g_vals,
                           self.m_cols, self.m_vals, self.s, out)
        return out

    def step(self, u: np.ndarray) -> np.ndarray:
        k1, k2, k3, k4 = self._k
        dt, tmp = self.dt, self._tmp
        self.rhs(u, k1)
        np.multiply(k1, 0.5 * dt, out=tmp)
        tmp += u
        self.rhs(tmp, k2)
        np.multiply(k2, 0.5 * dt, out=tmp)
        tmp += u
        self.rhs(tmp, k3)
        np.multiply(k3, dt, out=tmp)
        tmp += u
        self.rhs(tmp, k4)
        return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


PostStep = Callable[[int, float, np.ndarray], "np.ndarray | None"]


def check_cfl(system: FirstOrderSystem, grid: Grid) -> float:
    speed = characteristic_speed(system, grid.active_axes)
    if speed == 0 or not grid.points:
        return 0.0
    limit = grid.cfl * min(grid.spacing) / speed
    if grid.dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={grid.dt:.6g} exceeds CFL bound {limit:.6g} (cfl={grid.cfl}, speed={speed:.6g})")
    return grid.dt * speed / min(grid.spacing)


def solve_cauchy(system: FirstOrderSystem, psi0: FieldGrid | np.ndarray, grid: Grid, *,
                 post_step: PostStep | None = None) -> Trajectory:
    """Evolve ``psi0`` from ``x^1 = 0`` through ``grid.steps`` RK4 steps.

    ``post_step(step, time, u)`` runs after every step on the flattened
    ``(npoints, D)`` state; returning an array replaces the state (used for
    projections).  Slices are kept every ``grid.sample_every`` steps (0 keeps
    only the initial and final ones).
    """
    report = validate_friedrichs(system)
    if not report.passed:
        raise FriedrichsError(report.message)
    if system.n != grid.n:
        raise ValueError(f"system has n={system.n}, grid has n={grid.n}")
    check_cfl(system, grid)

    values = psi0.values if isinstance(psi0, FieldGrid) else np.asarray(psi0)
    expected = tuple(grid.shape) + (system.D,)
    if values.shape != expected:
        raise ValueError(f"initial data has shape {values.shape}, expected {expected}")
    t0 = psi0.time if isinstance(psi0, FieldGrid) else 0.0

    stepper = _Stepper(system, grid)
    u = np.array(values, dtype=np.complex128).reshape(grid.npoints, system.D)
    traj = Trajectory([FieldGrid(u.reshape(expected).copy(), t0, 0)])
    for step in range(1, grid.steps + 1):
        u = stepper.step(u)
        time = t0 + step * grid.dt
        if not np.all(np.isfinite(u)):
            raise NonFiniteError(f"non-finite values at step {step} (t={time:.6g})")
        if post_step is not None:
            replaced = post_step(step, time, u)
            if replaced is not None:
                u = np.ascontiguousarray(replaced, dtype=np.complex128)
        if step == grid.steps or (grid.sample_every and step % grid.sample_every == 0):
            traj.slices.append(FieldGrid(u.reshape(expected).copy(), time, step))
    return traj


def energy(system: FirstOrderSystem, slice_: FieldGrid | np.ndarray, grid: Grid) -> float:
    """``sum_points (H_1 u, u) * cell volume``."""
    values = slice_.values if isinstance(slice_, FieldGrid) else np.asarray(slice_)
    u = values.reshape(-1, system.D)
    density = np.einsum("pi,ij,pj->", u.conj(), system.H[0], u)
    return float(density.real) * grid.cell_volume
