"""``cliffsolve <command> --config <file> [--out <dir>] [--seed <u64>]``

Exit status: 0 when every check passes, 2 when a check fails or a
precondition is violated, 1 for configuration errors.  Failures always print
a JSON error object.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from cliffsolve import reporting
from cliffsolve._backend import BACKEND, apply_thread_cap
from cliffsolve.clifford_core import Multivector, Signature, format_multivector
from cliffsolve.config import COMMANDS, RunConfig, load_config
from cliffsolve.errors import CliffsolveError, ConfigError
from cliffsolve.hyperbolic_solver import (
    FirstOrderSystem,
    Grid,
    boundary_flux_matrix,
    energy,
    solve_cauchy,
    validate_friedrichs,
)
from cliffsolve.matrix_rep import spectral_check
from cliffsolve.models import (
    DiracModelSpec,
    GenformField,
    Profile,
    anti_hermiticity_residual,
    assemble_model,
    dispersion_check,
    model_parity,
    plane_wave_data,
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

log = logging.getLogger("cliffsolve")

EXIT_PASS, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


class _Run:
    def __init__(self, cfg: RunConfig, out: Path | None):
        self.cfg = cfg
        self.out = out
        self.rng = np.random.default_rng(cfg.seed)

    # helpers ------------------------------------------------------------

    def grid(self) -> Grid:
        probe = FirstOrderSystem(principal_symbols(self.cfg.tetrad, model_parity(self.cfg.model)))
        return self.cfg.grid.build(probe)

    def system(self, grid: Grid | None = None) -> FirstOrderSystem:
        return assemble_model(self.cfg.model, grid)

    def default_initial(self) -> GenformField:
        sig = self.cfg.signature
        model = self.cfg.model
        gauss = Profile("gaussian", width=1.5)
        if isinstance(model, DiracModelSpec):
            return GenformField(model.idempotent.t, gauss)
        parity = model_parity(model)
        elem = Multivector.blade(sig, (1,)) if parity == "odd" else Multivector.scalar(sig)
        return GenformField(elem, gauss)

    def initial_state(self, system: FirstOrderSystem, grid: Grid) -> np.ndarray:
        if self.cfg.initial_plane_wave is not None:
            pw = self.cfg.initial_plane_wave
            data, _, _ = plane_wave_data(system, grid, pw["q"], pw["branch"])
            return data
        init = self.cfg.initial or self.default_initial()
        full = init.sample(grid)
        return full[..., state_blades(self.cfg.signature, model_parity(self.cfg.model))]

    def write(self, report: dict):
        if self.out is not None:
            reporting.write_report(self.out / "report.json", report)
        sys.stdout.write(reporting.dumps(report))

    # commands -----------------------------------------------------------

    def validate(self) -> bool:
        need_grid = self.cfg.initial is not None or _has_fields(self.cfg.model)
        grid = self.grid() if need_grid else None
        system = self.system(grid)
        fr = validate_friedrichs(system)
        normals = self.cfg.normals or _default_normals(system.n, self.cfg.grid.active_axes)
        flux = []
        for tau in normals:
            tau = np.asarray(tau, dtype=float)
            _, lam = boundary_flux_matrix(system, tau / np.linalg.norm(tau))
            flux.append({"normal": tau.tolist(), "min_eigenvalue": lam})
        report = {
            "command": "validate",
            "model": system.label,
            "state_dimension": system.D,
            "passed": fr.passed,
            "friedrichs": fr.as_dict(),
            "h1_spectrum": spectral_check(system.H[0]).as_dict(),
            "hermiticity_residuals": fr.hermiticity_residuals,
            "gamma": fr.gamma,
            "lower_order_anti_hermiticity": anti_hermiticity_residual(system),
            "boundary_flux": flux,
        }
        self.write(report)
        return fr.passed

    def idempotents(self) -> bool:
        if self.cfg.signature != Signature(1, 3):
            raise ConfigError("the canonical idempotents live in signature (1,3)")
        tol = self.cfg.tolerances["idempotent"]
        ts = canonical_idempotents()
        entries = []
        ok = True
        for k, t in enumerate(ts):
            chk = is_hermitian_idempotent(t.t, tol)
            d = dual(t)
            partner = ts[len(ts) - 1 - k]
            conj = unitary_equivalent(d.t, partner.t)
            closure = _closure_residuals(t, self.rng)
            passed = bool(chk) and conj is not None and all(v <= 1e-12 for v in closure.values())
            ok &= passed
            entries.append({
                "name": t.name,
                "value": format_multivector(t.t),
                "rank": t.rank,
                "square_residual": chk.square_residual,
                "hermitian_residual": chk.hermitian_residual,
                "dual": format_multivector(d.t),
                "dual_equivalent_to": partner.name,
                "dual_conjugator": None if conj is None else format_multivector(conj),
                "closure_residuals": closure,
                "passed": passed,
            })
        self.write({"command": "idempotents", "count": len(entries), "passed": ok, "idempotents": entries})
        return ok

    def _evolve(self, log_energy: bool):
        grid = self.grid()
        system = self.system(grid)
        u0 = self.initial_state(system, grid)
        rows = [(0, 0.0, energy(system, u0, grid))]

        def hook(step, time, u):
            rows.append((step, time, energy(system, u, grid)))

        traj = solve_cauchy(system, u0, grid, post_step=hook if log_energy else None)
        return grid, system, traj, rows

    def solve(self) -> bool:
        grid, system, traj, rows = self._evolve(log_energy=False)
        if self.out is not None:
            for sl in traj.slices:
                reporting.write_field_csv(self.out / "fields" / f"step_{sl.step:04d}.csv", sl, grid)
        e0 = rows[0][2]
        e1 = energy(system, traj.final, grid)
        report = {
            "command": "solve",
            "model": system.label,
            "state_dimension": system.D,
            "passed": True,
            "steps": grid.steps,
            "dt": grid.dt,
            "final_time": traj.final.time,
            "gamma": validate_friedrichs(system).gamma,
            "energy_initial": e0,
            "energy_final": e1,
            "energy_drift": abs(e1 - e0) / e0 if e0 > 0 else abs(e1),
            "max_abs_final": float(np.max(np.abs(traj.final.values))),
            "slices": [sl.step for sl in traj.slices],
        }
        self.write(report)
        return True

    def energy(self) -> bool:
        grid, system, traj, rows = self._evolve(log_energy=True)
        if self.out is not None:
            reporting.write_energy_csv(self.out / "energy.csv", rows)
        e0 = rows[0][2]
        drift = max((abs(e - e0) / e0 if e0 > 0 else abs(e)) for _, _, e in rows)
        passed = drift <= self.cfg.tolerances["energy_drift"]
        self.write({
            "command": "energy",
            "model": system.label,
            "passed": passed,
            "steps": grid.steps,
            "dt": grid.dt,
            "energy_initial": e0,
            "energy_final": rows[-1][2],
            "energy_drift": drift,
            "tolerance": self.cfg.tolerances["energy_drift"],
        })
        return passed

    def theorem(self) -> bool:
        spec = self.cfg.model
        if not isinstance(spec, DiracModelSpec):
            raise ConfigError("the theorem command needs model.kind: dirac")
        grid = self.grid()
        psi0 = self.cfg.initial or self.default_initial()
        rep = verify_theorem(spec, psi0, grid, control_data=self.cfg.control, tolerances=self.cfg.tolerances)
        system = assemble_model(spec, grid)
        report = {"command": "theorem", "model": system.label, "idempotent": format_multivector(spec.idempotent.t)}
        report.update(rep.as_dict())
        report["hermiticity_residuals"] = validate_friedrichs(system).hermiticity_residuals
        report["lower_order_anti_hermiticity"] = anti_hermiticity_residual(system)
        self.write(report)
        return rep.passed

    def dispersion(self) -> bool:
        spec = self.cfg.model
        opts = self.cfg.dispersion
        masses = [float(m) for m in opts.get("masses", [0.0, 0.5, 1.0, 2.0])]
        n = self.cfg.signature.n
        wavevectors = opts.get("wavevectors") or [[0.0] * (n - 1), [1.0] + [0.0] * (n - 2),
                                                  ([0.3, -1.2] + [0.7] * (n - 3))[: n - 1]]
        tol = self.cfg.tolerances["dispersion"]
        checks = []
        worst = 0.0
        for m in masses:
            for k in wavevectors:
                rep = dispersion_check(m, k, spec)
                worst = max(worst, rep.max_error)
                checks.append(rep.as_dict())
        report = {"command": "dispersion", "passed": worst <= tol, "max_error": worst,
                  "tolerance": tol, "checks": checks}
        td = opts.get("time_domain")
        if td:
            levels = [int(p) for p in td.get("points", [64, 128])]
            runs = [time_domain_phase_check(spec, float(td.get("mass", 1.0)), _listify(td.get("q", 1)),
                                            float(td.get("extent", 2 * np.pi)), p,
                                            float(td.get("t_final", 1.0)))
                    for p in levels]
            orders = [float(np.log(runs[i]["phase_error"] / runs[i + 1]["phase_error"])
                            / np.log(levels[i + 1] / levels[i])) for i in range(len(runs) - 1)]
            report["time_domain"] = runs
            report["convergence_orders"] = orders
            report["passed"] = report["passed"] and all(
                o >= self.cfg.tolerances["convergence_order"] for o in orders)
        self.write(report)
        return report["passed"]


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _has_fields(model) -> bool:
    if isinstance(model, DiracModelSpec):
        return any(not f.is_constant for f in model.gauge_fields())
    prof = getattr(model, "covector_profile", None)
    if prof is not None and prof.kind != "constant":
        return True
    terms = getattr(model, "terms", [])
    for pair in terms:
        for f in pair:
            if isinstance(f, GenformField) and not f.is_constant:
                return True
    src = getattr(model, "source", None)
    return isinstance(src, GenformField) and not src.is_constant


def _default_normals(n: int, axes) -> list[list[float]]:
    out = [[1.0] + [0.0] * (n - 1)]
    for ax in axes:
        for sgn in (1.0, -1.0):
            tau = [0.0] * n
            tau[0], tau[ax - 1] = 1.0, sgn
            out.append(tau)
    return out


def _closure_residuals(t, rng: np.random.Generator, samples: int = 20) -> dict:
    """Worst relative residual of the ideal/Lie/group closure laws on random samples."""
    worst = {"left_ideal": 0.0, "two_sided": 0.0, "lie_bracket": 0.0, "group": 0.0, "decompose": 0.0}
    for _ in range(samples):
        a = Multivector.random(t.signature, rng)
        u = random_ideal_element(t, rng)
        worst["left_ideal"] = max(worst["left_ideal"], membership(a * u, t, "I").residual)
        kk = t.t * a * t.t
        worst["two_sided"] = max(worst["two_sided"], membership(u * kk, t, "I").residual)
        l1, l2 = random_lie_element(t, rng), random_lie_element(t, rng)
        worst["lie_bracket"] = max(worst["lie_bracket"], membership(l1 * l2 - l2 * l1, t, "L").residual)
        g1, g2 = exp_to_G(l1, t), exp_to_G(l2, t)
        worst["group"] = max(worst["group"], membership(g1 * g2, t, "G").residual,
                             membership(g1.dagger(), t, "G").residual)
        phi, phi_p = decompose(a, t)
        worst["decompose"] = max(worst["decompose"], (phi * t.prime).norm(), (phi_p * t.t).norm())
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cliffsolve", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML run configuration (defaults: n=4 model Dirac, t=t2)")
    p.add_argument("--out", help="output directory for report.json, fields/ and energy.csv")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error(kind: str, exc: BaseException, code: int) -> int:
    sys.stdout.write(reporting.dumps({"error": {"type": kind, "message": str(exc)}, "exit_code": code}))
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _error("UsageError", ValueError("invalid command line"), EXIT_CONFIG)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    apply_thread_cap()
    log.info("kernel backend: %s", BACKEND)
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        out = Path(args.out) if args.out else (Path(cfg.output) if cfg.output else None)
        run = _Run(cfg, out)
        passed = getattr(run, args.command)()
    except ConfigError as exc:
        return _error("ConfigError", exc, EXIT_CONFIG)
    except CliffsolveError as exc:
        return _error(type(exc).__name__, exc, EXIT_CHECK)
    except (ValueError, KeyError, TypeError, IndexError, np.linalg.LinAlgError) as exc:
        return _error(type(exc).__name__, exc, EXIT_CHECK)
    return EXIT_PASS if passed else EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
