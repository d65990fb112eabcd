import numpy as np
import pytest

from cliffsolve.errors import CFLError, FriedrichsError, NonFiniteError
from cliffsolve.hyperbolic_solver import (
    FieldGrid,
    FirstOrderSystem,
    Grid,
    boundary_flux_matrix,
    characteristic_speed,
    energy,
    solve_cauchy,
    validate_friedrichs,
)


def transport(c: float) -> FirstOrderSystem:
    # d_1 u + c d_2 u = 0: u(x, t) = u0(x - c t)
    return FirstOrderSystem((np.eye(1), c * np.eye(1)), label="transport")


def transport_error(points: int, order: int = 2) -> float:
    sys_ = transport(0.7)
    L = 2 * np.pi
    grid = Grid.for_system(sys_, [2], [L], [points], t_final=1.0, order=order)
    x = grid.coordinates()[0]
    u0 = np.exp(np.sin(x))[..., None]
    traj = solve_cauchy(sys_, u0, grid)
    exact = np.exp(np.sin(x - 0.7 * 1.0))[..., None]
    return float(np.sqrt(np.sum(np.abs(traj.final.values - exact) ** 2) * grid.cell_volume))


@pytest.mark.parametrize("order", [2, 4])
def test_transport_convergence_order(order):
    errs = [transport_error(p, order) for p in (64, 128, 256)]
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) >= order - 0.1


def test_source_only_ode():
    # H_1 du/dx1 = j with no active axes: u = u0 + H_1^{-1} j t
    h1 = np.diag([2.0, 4.0]).astype(complex)
    j = np.array([1.0, 2.0j])
    sys_ = FirstOrderSystem((h1, np.zeros((2, 2))), j=j)
    grid = Grid(2, (), (), (), dt=0.1, steps=10)
    traj = solve_cauchy(sys_, np.zeros(2), grid)
    assert np.allclose(traj.final.values, np.array([0.5, 0.5j]) * 1.0, atol=1e-14)


def test_lower_order_decay():
    # H_1 u' + M u = 0 with M = m I: u = exp(-m t)
    sys_ = FirstOrderSystem((np.eye(1), np.zeros((1, 1))), M=0.5 * np.eye(1))
    grid = Grid(2, (), (), (), dt=0.01, steps=100)
    traj = solve_cauchy(sys_, np.ones(1), grid)
    assert traj.final.values[0] == pytest.approx(np.exp(-0.5), abs=1e-10)


def test_energy_conserved_for_hermitian_symbols():
    rng = np.random.default_rng(0)
    d = 4
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h1 = a @ a.conj().T + d * np.eye(d)
    b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h2 = b + b.conj().T
    c = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = c - c.conj().T  # anti-Hermitian: no energy exchange
    sys_ = FirstOrderSystem((h1, h2), M=m)
    grid = Grid.for_system(sys_, [2], [10.0], [128], steps=400)
    x = grid.coordinates()[0]
    u0 = np.exp(-(x - 5) ** 2)[..., None] * rng.standard_normal(d)
    traj = solve_cauchy(sys_, u0, grid)
    e0, e1 = energy(sys_, traj.slices[0], grid), energy(sys_, traj.final, grid)
    assert abs(e1 - e0) / e0 <= 1e-6


def test_validate_friedrichs():
    good = FirstOrderSystem((np.eye(2), np.diag([1.0, -1.0])))
    rep = validate_friedrichs(good)
    assert rep.passed and rep.gamma == 1.0
    bad_h1 = FirstOrderSystem((np.diag([1.0, -1.0]), np.eye(2)))
    assert not validate_friedrichs(bad_h1).passed
    non_herm = FirstOrderSystem((np.eye(2), np.array([[0, 1], [0, 0]], dtype=float)))
    rep = validate_friedrichs(non_herm)
    assert not rep.passed and "Hermitian" in rep.message
    grid = Grid(2, (2,), (1.0,), (8,), dt=0.01, steps=1)
    with pytest.raises(FriedrichsError):
        solve_cauchy(bad_h1, np.zeros((8, 2)), grid)


def test_cfl_guard():
    sys_ = transport(1.0)
    grid = Grid(2, (2,), (1.0,), (10,), dt=0.2, steps=1)
    with pytest.raises(CFLError):
        solve_cauchy(sys_, np.zeros((10, 1)), grid)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_guard():
    sys_ = FirstOrderSystem((np.eye(1), np.zeros((1, 1))), M=-1e300 * np.eye(1))
    grid = Grid(2, (), (), (), dt=1.0, steps=5)
    with pytest.raises(NonFiniteError):
        solve_cauchy(sys_, np.ones(1), grid)


def test_shape_and_dimension_checks():
    sys_ = transport(1.0)
    grid = Grid(2, (2,), (1.0,), (10,), dt=0.01, steps=1)
    with pytest.raises(ValueError):
        solve_cauchy(sys_, np.zeros((9, 1)), grid)
    with pytest.raises(ValueError):
        solve_cauchy(sys_, np.zeros((10, 1)), Grid(3, (2,), (1.0,), (10,), dt=0.01, steps=1))
    with pytest.raises(ValueError):
        FirstOrderSystem((np.eye(2), np.eye(3)))
    with pytest.raises(ValueError):
        Grid(2, (3,), (1.0,), (10,), dt=0.01, steps=1)
    with pytest.raises(ValueError):
        Grid(2, (2,), (1.0,), (10,), dt=0.01, steps=1, order=3)
    with pytest.raises(ValueError):
        Grid(2, (2,), (1.0,), (10,), dt=0.01, steps=1, periodic=False)


def test_sampling_and_post_step():
    sys_ = transport(1.0)
    grid = Grid.for_system(sys_, [2], [1.0], [16], steps=10, sample_every=4)
    seen = []

    def hook(step, time, u):
        seen.append(step)
        return 0.5 * u

    traj = solve_cauchy(sys_, np.ones((16, 1)), grid, post_step=hook)
    assert [s.step for s in traj.slices] == [0, 4, 8, 10]
    assert seen == list(range(1, 11))
    assert np.allclose(traj.final.values, 0.5 ** 10)
    assert np.allclose(traj.times, [0, 4 * grid.dt, 8 * grid.dt, 10 * grid.dt])
    start = FieldGrid(np.ones((16, 1)), time=2.0)
    assert solve_cauchy(sys_, start, grid).final.time == pytest.approx(2.0 + 10 * grid.dt)


def test_for_system_lands_on_t_final():
    grid = Grid.for_system(transport(3.0), [2], [1.0], [100], t_final=0.123)
    assert grid.steps * grid.dt == pytest.approx(0.123, abs=1e-15)
    assert grid.dt <= 0.4 * 0.01 / 3.0 + 1e-15


def test_boundary_flux_and_speed():
    sys_ = FirstOrderSystem((np.eye(2), np.diag([1.0, -1.0])))
    _, lam = boundary_flux_matrix(sys_, [1.0, 0.0])
    assert lam == pytest.approx(1.0)
    _, lam = boundary_flux_matrix(sys_, np.array([1.0, 1.0]) / np.sqrt(2))
    assert lam == pytest.approx(0.0, abs=1e-15)
    assert characteristic_speed(sys_, [2]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boundary_flux_matrix(sys_, [0.0, 0.0])
    with pytest.raises(ValueError):
        boundary_flux_matrix(sys_, [1.0])
