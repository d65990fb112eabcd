"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

A summary line per criterion is printed at the end of the pytest run.
"""

from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

from cliffsolve.clifford_core import Multivector, Signature
from cliffsolve.genform import Tetrad, boost, random_tetrad
from cliffsolve.hyperbolic_solver import (
    FirstOrderSystem,
    Grid,
    boundary_flux_matrix,
    energy,
    solve_cauchy,
    validate_friedrichs,
)
from cliffsolve.matrix_rep import build_gamma, rep
from cliffsolve.models import (
    DiracModelSpec,
    EquippedSystemSpec,
    GenformField,
    HestenesModelSpec,
    Profile,
    assemble_model,
    convergence_study,
    dispersion_check,
    model_parity,
    principal_symbols,
    state_blades,
    time_domain_phase_check,
    verify_theorem,
)
from cliffsolve.spinor_ideals import (
    canonical_idempotents,
    decompose,
    dual,
    exp_to_G,
    is_hermitian_idempotent,
    membership,
    random_ideal_element,
    random_lie_element,
    unitary_equivalent,
)

S13 = Signature(1, 3)


def rel(a: Multivector, b: Multivector) -> float:
    """Max-norm residual relative to the size of the operands (floor 1)."""
    return (a - b).norm() / max(1.0, a.norm(), b.norm())


def test_c01_algebra_suite(criterion):
    c = criterion(1, "algebra relations, associativity, dagger laws", 10)
    rng = np.random.default_rng(101)
    worst = 0.0
    for sig in (Signature(1, 1), S13):
        gens = [Multivector.blade(sig, (a,)) for a in range(1, sig.n + 1)]
        for a in range(sig.n):
            for b in range(sig.n):
                assert gens[a] * gens[b] + gens[b] * gens[a] == Multivector.scalar(sig, 2 * sig.eta[a, b])
        mvs = [Multivector.random(sig, rng) for _ in range(1000)]
        for i in range(0, 1000, 3):
            u, v, w = mvs[i], mvs[(i + 1) % 1000], mvs[(i + 2) % 1000]
            worst = max(worst,
                        rel((u * v) * w, u * (v * w)),
                        rel((u * v).dagger(), v.dagger() * u.dagger()))
        for u in mvs:
            worst = max(worst, rel(u.dagger().dagger(), u))
    c.note(max_residual=worst)
    assert worst <= 1e-13
    assert c.elapsed < 10


def test_c02_symmetrization(criterion):
    c = criterion(2, "beta h^mu Hermitian, H_1 definite, boost oracle", 30)
    rng = np.random.default_rng(202)
    worst_herm, min_gamma = 0.0, np.inf
    for k in range(100):
        sig = Signature(1, 1) if k % 2 == 0 else S13
        tet = random_tetrad(sig, rng)
        beta = Multivector.blade(sig, (1,))
        for h in tet.genvectors:
            bh = beta * h
            worst_herm = max(worst_herm, (bh.dagger() - bh).norm())
        h1 = principal_symbols(tet)[0]
        min_gamma = min(min_gamma, float(np.linalg.eigvalsh(h1)[0]))
    boost_err = 0.0
    for chi in np.linspace(-3, 3, 25):
        tet = Tetrad(boost(2, 2, chi), Signature(1, 1))
        lam = float(np.linalg.eigvalsh(principal_symbols(tet)[0])[0])
        boost_err = max(boost_err, abs(lam - np.exp(-abs(chi))))
    c.note(hermiticity=worst_herm, min_eig=min_gamma, boost_error=boost_err)
    assert worst_herm <= 1e-12
    assert min_gamma > 0
    assert boost_err <= 1e-10
    assert c.elapsed < 30


def test_c03_representation(criterion):
    c = criterion(3, "rep homomorphism, rep(U^dagger), blade orthonormality", 30)
    rng = np.random.default_rng(303)
    worst = 0.0
    for n in (2, 4, 6):
        g = build_gamma(n)
        sig = g.signature
        for _ in range(20):
            u, v = Multivector.random(sig, rng), Multivector.random(sig, rng)
            ru, rv = rep(u, g), rep(v, g)
            scale = max(1.0, np.abs(ru).max() * np.abs(rv).max() * g.N)
            worst = max(worst, np.abs(rep(u * v, g) - ru @ rv).max() / scale,
                        np.abs(rep(u.dagger(), g) - ru.conj().T).max() / max(1.0, np.abs(ru).max()))
    g4 = build_gamma(4)
    mats = g4.blade_matrices
    gram = np.einsum("aij,bij->ab", mats.conj(), mats) / g4.N
    ortho = float(np.abs(gram - np.eye(16)).max())
    c.note(homomorphism=worst, orthonormality=ortho)
    assert worst <= 1e-12
    assert ortho <= 1e-12
    assert c.elapsed < 30


def test_c04_idempotents(criterion):
    c = criterion(4, "canonical idempotents, dual pairs, I/K/L/G closure", 10)
    ts = canonical_idempotents()
    rng = np.random.default_rng(404)
    worst_idem, worst_closure = 0.0, 0.0
    pairs_ok = True
    for k, t in enumerate(ts):
        chk = is_hermitian_idempotent(t.t)
        worst_idem = max(worst_idem, chk.square_residual, chk.hermitian_residual)
        d = dual(t)
        u = unitary_equivalent(d.t, ts[4 - k].t)
        pairs_ok &= u is not None and d.rank == ts[4 - k].rank
        for _ in range(10):
            a = Multivector.random(S13, rng)
            x = random_ideal_element(t, rng)
            kk = t.t * a * t.t
            l1, l2 = random_lie_element(t, rng), random_lie_element(t, rng)
            g1, g2 = exp_to_G(l1, t), exp_to_G(l2, t)
            phi, phi_p = decompose(a, t)
            worst_closure = max(
                worst_closure,
                membership(a * x, t, "I").residual,
                membership(kk, t, "K").residual,
                membership(x * kk, t, "I").residual,
                membership(l1 * l2 - l2 * l1, t, "L").residual,
                membership(g1 * g2, t, "G").residual,
                membership(g1.dagger(), t, "G").residual,
                membership(phi, t, "I").residual,
                (phi_p * t.t).norm() / max(1.0, a.norm()),
            )
    c.note(idempotent=worst_idem, closure=worst_closure, dual_pairs=pairs_ok)
    assert worst_idem <= 1e-13
    assert pairs_ok
    assert worst_closure <= 1e-12
    assert c.elapsed < 10


def _free_dirac(mass=1.0):
    return DiracModelSpec(canonical_idempotents()[2], Tetrad.identity(S13), mass)


def test_c05_convergence(criterion):
    c = criterion(5, "free Dirac plane wave L2 convergence 128/256/512", 120)
    res = convergence_study(_free_dirac(), mass=1.0, q=(1,), extent=2 * np.pi,
                            levels=(128, 256, 512), t_final=1.0, order=2)
    c.note(order_1=res["orders"][0], order_2=res["orders"][1], error_512=res["errors"][-1])
    assert min(res["orders"]) >= 1.9
    assert c.elapsed < 120


def test_c06_dispersion(criterion):
    c = criterion(6, "dispersion eigen-oracle and time-domain phase", 60)
    rng = np.random.default_rng(606)
    spec = _free_dirac()
    worst = 0.0
    for _ in range(20):
        m = float(rng.uniform(0, 3))
        k = rng.uniform(-3, 3, size=3)
        worst = max(worst, dispersion_check(m, k, spec).max_error)
    runs = [time_domain_phase_check(spec, 1.0, (1,), 2 * np.pi, p, 1.0) for p in (64, 128, 256)]
    ratios = [r["phase_error"] / r["predicted_phase_error"] for r in runs]
    orders = [np.log2(runs[i]["phase_error"] / runs[i + 1]["phase_error"]) for i in range(2)]
    c.note(max_error=worst, phase_order=min(orders), phase_vs_predicted=max(abs(r - 1) for r in ratios))
    assert worst <= 1e-10
    assert min(orders) >= 1.9  # O(dx^2)
    assert all(abs(r - 1) <= 0.05 for r in ratios)
    assert c.elapsed < 60


def _energy_drift(spec, data_elem, points=256, extent=20.0, steps=1000):
    sys0 = FirstOrderSystem(principal_symbols(spec.tetrad, model_parity(spec)))
    grid = Grid.for_system(sys0, [2], [extent], [points], steps=steps, cfl=0.4)
    system = assemble_model(spec, grid)
    data = GenformField(data_elem, Profile("gaussian", width=1.5)).sample(grid)
    if isinstance(spec, HestenesModelSpec):
        data = data[..., state_blades(S13, spec.parity)]
    e0 = energy(system, data, grid)
    drift = [0.0]

    def hook(step, time, u):
        drift[0] = max(drift[0], abs(energy(system, u, grid) - e0) / e0)

    solve_cauchy(system, data, grid, post_step=hook)
    return drift[0]


def test_c07_energy(criterion):
    c = criterion(7, "energy drift over 1000 steps at CFL 0.4", 120)
    rng = np.random.default_rng(707)
    t2 = canonical_idempotents()[2]
    free = _free_dirac()
    # coupling comparable to the mass; RK4 drift grows like steps * (dt * rho(M))**6
    gauge = [random_lie_element(t2, rng, 0.1) for _ in range(4)]
    interacting = replace(free, gauge=gauge)
    hestenes = HestenesModelSpec(Tetrad.identity(S13), 1.0)
    psi = Multivector.random(S13, rng)
    d_free = _energy_drift(free, psi)
    d_int = _energy_drift(interacting, psi)
    d_hes = _energy_drift(hestenes, psi.even())
    c.note(free=d_free, interacting=d_int, hestenes=d_hes)
    assert max(d_free, d_int, d_hes) <= 1e-6
    assert c.elapsed < 120


def test_c08_theorem(criterion):
    c = criterion(8, "ideal preservation theorem, restricted and control runs", 120)
    t2 = canonical_idempotents()[2]
    rng = np.random.default_rng(808)
    env = Profile("cos", amplitude=1.0, q=(1,))
    gauge = [GenformField(random_lie_element(t2, rng, 0.5), env) for _ in range(4)]
    spec = DiracModelSpec(t2, Tetrad.identity(S13), 1.0, gauge)
    sys0 = FirstOrderSystem(principal_symbols(spec.tetrad))
    grid = Grid.for_system(sys0, [2], [20.0], [256], steps=500)
    psi0 = GenformField(random_ideal_element(t2, rng), Profile("gaussian", width=1.5))
    r = verify_theorem(spec, psi0, grid)
    c.note(leakage=r.leakage_max, agreement=r.restricted_vs_equipped,
           control=r.control_residual, zero_data_phi_prime=r.phi_prime_max)
    assert r.leakage_max <= 1e-12
    assert r.restricted_vs_equipped <= 1e-11
    assert r.control_residual <= 1e-11
    assert r.phi_prime_max <= 1e-12
    assert r.control_phi_prime_max > 0.1
    assert c.elapsed < 120


def test_c09_zero_data(criterion):
    c = criterion(9, "zero data and zero source stay zero", 30)
    rng = np.random.default_rng(909)
    t2 = canonical_idempotents()[2]
    tet = Tetrad.identity(S13)
    env = Profile("cos", q=(2,))
    specs = [
        _free_dirac(),
        replace(_free_dirac(), gauge=[GenformField(random_lie_element(t2, rng), env) for _ in range(4)]),
        HestenesModelSpec(tet, 1.0, covector=(0.2, -0.1, 0.3, 0.0), covector_profile=env),
        HestenesModelSpec(tet, 1.0, parity="odd"),
        EquippedSystemSpec(tet, [(Multivector.random(S13, rng), Multivector.scalar(S13))]),
    ]
    worst = 0.0
    for spec in specs:
        sys0 = FirstOrderSystem(principal_symbols(tet, model_parity(spec)))
        grid = Grid.for_system(sys0, [2], [20.0], [128], steps=200)
        system = assemble_model(spec, grid)
        peak = [0.0]

        def hook(step, time, u, peak=peak):
            peak[0] = max(peak[0], float(np.abs(u).max()))

        solve_cauchy(system, np.zeros(grid.shape + (system.D,)), grid, post_step=hook)
        worst = max(worst, peak[0])
    c.note(max_abs=worst, models=len(specs))
    assert worst <= 1e-14
    assert c.elapsed < 30


def test_c10_boundary_flux(criterion):
    c = criterion(10, "boundary flux along e_1 and along a characteristic (n=2)", 5)
    sig = Signature(1, 1)
    spec = EquippedSystemSpec(Tetrad.identity(sig), [(1j * Multivector.scalar(sig), Multivector.scalar(sig))])
    system = assemble_model(spec)
    gamma = validate_friedrichs(system).gamma
    _, lam_time = boundary_flux_matrix(system, [1.0, 0.0])
    # eigen-oracle: H_1^{-1} H_2 eigenvalues mu give characteristic normals (1, -1/mu)
    mus = scipy.linalg.eigh(system.H[1], system.H[0], eigvals_only=True)
    worst = 0.0
    for mu in mus:
        tau = np.array([1.0, -1.0 / mu])
        _, lam = boundary_flux_matrix(system, tau / np.linalg.norm(tau))
        worst = max(worst, abs(lam))
    c.note(gamma=gamma, min_eig_e1=lam_time, characteristic=worst)
    assert lam_time == pytest.approx(gamma, abs=1e-12)
    assert worst <= 1e-10
    assert c.elapsed < 5
