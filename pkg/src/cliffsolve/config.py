"""YAML run configuration -> library objects.

Every key is optional; the defaults give the n = 4 model Dirac equation with
``t = t2``, ``K = -e^23`` and the identity tetrad.  See ``configs/`` and the
README for the full schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from cliffsolve.clifford_core import Multivector, Signature, parse_multivector
from cliffsolve.errors import CliffsolveError, ConfigError, ParseError
from cliffsolve.genform import Tetrad, boost
from cliffsolve.hyperbolic_solver import DEFAULT_CFL, FirstOrderSystem, Grid
from cliffsolve.models import (
    DiracModelSpec,
    EquippedSystemSpec,
    GenformField,
    HestenesModelSpec,
    Profile,
)
from cliffsolve.spinor_ideals import CANONICAL_LITERALS, HermitianIdempotent, canonical

COMMANDS = ("validate", "idempotents", "solve", "theorem", "dispersion", "energy")

DEFAULT_TOLERANCES = {
    "idempotent": 1e-13,
    "leakage": 1e-12,
    "agreement": 1e-11,
    "control": 1e-11,
    "zero_data": 1e-12,
    "energy_drift": 1e-6,
    "dispersion": 1e-10,
    "convergence_order": 1.9,
}


@dataclass
class GridParams:
    active_axes: tuple[int, ...] = (2,)
    extents: tuple[float, ...] = (20.0,)
    points: tuple[int, ...] = (256,)
    steps: int | None = 500
    t_final: float | None = None
    dt: float | None = None
    cfl: float = DEFAULT_CFL
    order: int = 2
    sample_every: int = 0

    def build(self, system: FirstOrderSystem) -> Grid:
        if self.dt is not None:
            if self.steps is None:
                raise ConfigError("grid.dt needs grid.steps")
            return Grid(system.n, self.active_axes, self.extents, self.points, self.dt, self.steps,
                        order=self.order, cfl=self.cfl, sample_every=self.sample_every)
        return Grid.for_system(system, self.active_axes, self.extents, self.points,
                               steps=None if self.t_final is not None else self.steps,
                               t_final=self.t_final, cfl=self.cfl, order=self.order,
                               sample_every=self.sample_every)


@dataclass
class RunConfig:
    command: str | None
    signature: Signature
    tetrad: Tetrad
    model_kind: str
    model: Any
    grid: GridParams
    initial: GenformField | None
    initial_plane_wave: dict | None
    control: GenformField | None
    dispersion: dict
    normals: list[list[float]] | None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    output: str | None = None


def _literal(value: Any, sig: Signature, where: str) -> Multivector:
    if isinstance(value, (int, float)):
        return Multivector.scalar(sig, float(value))
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a multivector literal, got {value!r}")
    try:
        return parse_multivector(value, sig)
    except ParseError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _profile(raw: Any, where: str) -> Profile | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: profile must be a mapping")
    known = {"kind", "amplitude", "center", "width", "q", "phase"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown profile keys {sorted(extra)}")
    kw = dict(raw)
    for key in ("center", "q"):
        if kw.get(key) is not None:
            kw[key] = tuple(kw[key])
    try:
        return Profile(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _field(raw: Any, sig: Signature, where: str) -> GenformField:
    if isinstance(raw, dict):
        if "element" not in raw:
            raise ConfigError(f"{where}: field needs an 'element'")
        return GenformField(_literal(raw["element"], sig, where), _profile(raw.get("profile"), where))
    return GenformField(_literal(raw, sig, where))


def _idempotent(raw: Any, sig: Signature) -> HermitianIdempotent:
    if raw is None:
        raw = "t2"
    if isinstance(raw, str) and raw in CANONICAL_LITERALS:
        if sig != Signature(1, 3):
            raise ConfigError(f"canonical idempotent {raw!r} needs signature (1,3), got {sig}")
        return canonical(raw)
    try:
        return HermitianIdempotent(_literal(raw, sig, "model.idempotent"))
    except CliffsolveError as exc:
        raise ConfigError(f"model.idempotent: {exc}") from exc


def _tetrad(raw: Any, sig: Signature) -> Tetrad:
    if raw is None or raw == "identity":
        return Tetrad.identity(sig)
    if not isinstance(raw, dict):
        raise ConfigError("tetrad must be 'identity' or a mapping with 'matrix' or 'boost'")
    try:
        if "matrix" in raw:
            return Tetrad(np.array(raw["matrix"], dtype=float), sig)
        if "boost" in raw:
            b = raw["boost"]
            return Tetrad(boost(sig.n, int(b.get("axis", 2)), float(b["rapidity"])), sig)
    except (CliffsolveError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"tetrad: {exc}") from exc
    raise ConfigError("tetrad mapping needs 'matrix' or 'boost'")


def _tuple(raw: Any, cast, where: str) -> tuple:
    if not isinstance(raw, (list, tuple)):
        raw = [raw]
    try:
        return tuple(cast(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _grid(raw: dict) -> GridParams:
    g = GridParams()
    if not raw:
        return g
    known = set(GridParams.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"grid: unknown keys {sorted(extra)}")
    if "active_axes" in raw:
        g.active_axes = _tuple(raw["active_axes"], int, "grid.active_axes")
    if "extents" in raw:
        g.extents = _tuple(raw["extents"], float, "grid.extents")
    if "points" in raw:
        g.points = _tuple(raw["points"], int, "grid.points")
    if "t_final" in raw:
        g.t_final = float(raw["t_final"])
        g.steps = None
    for key, cast in (("steps", int), ("dt", float), ("cfl", float), ("order", int), ("sample_every", int)):
        if key in raw and raw[key] is not None:
            setattr(g, key, cast(raw[key]))
    return g


def _model(raw: dict, sig: Signature, tetrad: Tetrad) -> tuple[str, Any]:
    kind = raw.get("kind", "dirac")
    if kind == "dirac":
        gauge = raw.get("gauge")
        fields = None
        if gauge is not None:
            if len(gauge) != sig.n:
                raise ConfigError(f"model.gauge needs {sig.n} entries A_1..A_n")
            fields = [_field(a, sig, f"model.gauge[{i}]") for i, a in enumerate(gauge)]
        spec = DiracModelSpec(_idempotent(raw.get("idempotent"), sig), tetrad,
                              float(raw.get("mass", 1.0)), fields)
        return kind, spec
    if kind == "hestenes":
        if sig != Signature(1, 3):
            raise ConfigError(f"the hestenes model needs signature (1,3), got {sig}")
        k = _literal(raw["K"], sig, "model.K") if "K" in raw else None
        cov = raw.get("covector")
        spec = HestenesModelSpec(tetrad, float(raw.get("mass", 1.0)),
                                 None if cov is None else _tuple(cov, float, "model.covector"),
                                 _profile(raw.get("covector_profile"), "model.covector_profile"),
                                 k, raw.get("parity", "even"))
        return kind, spec
    if kind == "equipped":
        terms = []
        for i, pair in enumerate(raw.get("terms", []) or []):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ConfigError(f"model.terms[{i}] must be a pair [A, B]")
            terms.append((_field(pair[0], sig, f"model.terms[{i}][0]"),
                          _field(pair[1], sig, f"model.terms[{i}][1]")))
        src = raw.get("source")
        spec = EquippedSystemSpec(tetrad, terms, None if src is None else _field(src, sig, "model.source"),
                                  raw.get("parity", "none"))
        return kind, spec
    raise ConfigError(f"unknown model kind {kind!r}; expected dirac, hestenes or equipped")


def parse_config(raw: dict | None, command: str | None = None) -> RunConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    try:
        sig_raw = raw.get("signature", [1, 3])
        sig = Signature(int(sig_raw[0]), int(sig_raw[1]))
    except (CliffsolveError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"signature: {exc}") from exc
    tetrad = _tetrad(raw.get("tetrad"), sig)
    kind, model = _model(raw.get("model", {}) or {}, sig, tetrad)

    initial = raw.get("initial")
    plane = None
    init_field = None
    if isinstance(initial, dict) and initial.get("kind") == "plane_wave":
        plane = {"q": _tuple(initial.get("q", 1), int, "initial.q"), "branch": int(initial.get("branch", -1))}
    elif initial is not None:
        init_field = _field(initial, sig, "initial")
    control = raw.get("control")

    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (raw.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
        tol[key] = float(val)

    cmd = command or raw.get("command")
    if cmd is not None and cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    normals = raw.get("normals")
    return RunConfig(
        command=cmd,
        signature=sig,
        tetrad=tetrad,
        model_kind=kind,
        model=model,
        grid=_grid(raw.get("grid") or {}),
        initial=init_field,
        initial_plane_wave=plane,
        control=None if control is None else _field(control, sig, "control"),
        dispersion=dict(raw.get("dispersion") or {}),
        normals=None if normals is None else [list(map(float, v)) for v in normals],
        tolerances=tol,
        seed=int(raw.get("seed", 0)),
        output=raw.get("output"),
    )


def load_config(path: str | Path | None, command: str | None = None) -> RunConfig:
    if path is None:
        return parse_config({}, command)
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return parse_config(raw, command)
