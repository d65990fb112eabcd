"""Tetrads, genvectors ``h^mu = y^mu_a e^a`` and the genform <-> tensor map."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Mapping

import numpy as np
import scipy.linalg

from cliffsolve.clifford_core import Multivector, Signature, blade_mask, wedge
from cliffsolve.errors import TetradError

TETRAD_TOL = 1e-12


@dataclass(frozen=True)
class TetradReport:
    valid: bool
    max_deviation: float


def validate_tetrad(y, sig: Signature, tol: float = TETRAD_TOL) -> TetradReport:
    """Check ``y eta y^T == eta`` entrywise."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise TetradError(f"tetrad must be square, got shape {y.shape}")
    if y.shape[0] != sig.n:
        raise TetradError(f"tetrad is {y.shape[0]}x{y.shape[0]} but signature has n={sig.n}")
    eta = sig.eta
    dev = float(np.max(np.abs(y @ eta @ y.T - eta)))
    return TetradReport(dev <= tol, dev)


@dataclass(frozen=True, eq=False)
class Tetrad:
    """Validated tetrad; row index is the coordinate index mu, column the frame index a."""

    y: np.ndarray
    signature: Signature

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        report = validate_tetrad(y, self.signature)
        if not report.valid:
            raise TetradError(f"tetrad does not preserve the metric (max deviation {report.max_deviation:.3e})")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @classmethod
    def identity(cls, sig: Signature) -> "Tetrad":
        return cls(np.eye(sig.n), sig)

    @property
    def n(self) -> int:
        return self.signature.n

    def genvector(self, mu: int) -> Multivector:
        return genvector(self, mu)

    @cached_property
    def genvectors(self) -> tuple[Multivector, ...]:
        return tuple(genvector(self, mu) for mu in range(1, self.n + 1))

    @cached_property
    def wedge_basis(self) -> np.ndarray:
        """Column ``mask(S)`` holds the blade coefficients of h^{S}."""
        sig = self.signature
        cols = np.zeros((sig.dim, sig.dim), dtype=np.complex128)
        hs = self.genvectors
        for mask in range(sig.dim):
            mv = Multivector.scalar(sig)
            for j in range(sig.n):
                if (mask >> j) & 1:
                    mv = wedge(mv, hs[j])
            cols[:, mask] = mv.coeffs
        cols.setflags(write=False)
        return cols

    @cached_property
    def _wedge_lu(self):
        return scipy.linalg.lu_factor(self.wedge_basis)


def genvector(tetrad: Tetrad, mu: int) -> Multivector:
    if not 1 <= mu <= tetrad.n:
        raise IndexError(f"genvector index {mu} outside 1..{tetrad.n}")
    sig = tetrad.signature
    coeffs = np.zeros(sig.dim, dtype=np.complex128)
    coeffs[1 << np.arange(sig.n)] = tetrad.y[mu - 1]
    return Multivector(sig, coeffs)


def boost(n: int, axis: int, chi: float) -> np.ndarray:
    """Lorentz boost of rapidity ``chi`` mixing coordinate 1 with ``axis`` (1-based)."""
    lam = np.eye(n)
    a = axis - 1
    lam[0, 0] = lam[a, a] = np.cosh(chi)
    lam[0, a] = lam[a, 0] = np.sinh(chi)
    return lam


def random_tetrad(sig: Signature, rng: np.random.Generator, scale: float = 0.5) -> Tetrad:
    """Proper orthochronous tetrad: ``expm(S eta)`` with ``S`` antisymmetric."""
    a = scale * rng.standard_normal((sig.n, sig.n))
    s = a - a.T
    return Tetrad(scipy.linalg.expm(s @ sig.eta), sig)


# ---------------------------------------------------------------------------
# Antisymmetric tensor components
# ---------------------------------------------------------------------------

@dataclass
class TensorComponents:
    """Components ``u_{mu1..muk}`` for ``mu1 < ... < muk``, one array per rank.

    ``ranks[k]`` is ordered like ``itertools.combinations(range(1, n+1), k)``.
    """

    n: int
    ranks: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.ranks:
            self.ranks = [np.zeros(comb(self.n, k), dtype=np.complex128) for k in range(self.n + 1)]
        if len(self.ranks) != self.n + 1:
            raise ValueError(f"need {self.n + 1} ranks, got {len(self.ranks)}")
        fixed = []
        for k, arr in enumerate(self.ranks):
            arr = np.asarray(arr, dtype=np.complex128).reshape(-1)
            if arr.size != comb(self.n, k):
                raise ValueError(f"rank {k} needs {comb(self.n, k)} components, got {arr.size}")
            fixed.append(arr)
        self.ranks = fixed

    @classmethod
    def from_dict(cls, n: int, values: Mapping[tuple[int, ...], complex]) -> "TensorComponents":
        out = cls(n)
        for idx, val in values.items():
            out[idx] = val
        return out

    @staticmethod
    def index_sets(n: int, k: int) -> list[tuple[int, ...]]:
        return list(combinations(range(1, n + 1), k))

    def _locate(self, idx: tuple[int, ...]) -> tuple[int, int]:
        k = len(idx)
        return k, self.index_sets(self.n, k).index(tuple(idx))

    def __getitem__(self, idx: tuple[int, ...]) -> complex:
        k, pos = self._locate(idx)
        return complex(self.ranks[k][pos])

    def __setitem__(self, idx: tuple[int, ...], value: complex):
        k, pos = self._locate(idx)
        self.ranks[k][pos] = value

    def to_mask_vector(self) -> np.ndarray:
        out = np.zeros(1 << self.n, dtype=np.complex128)
        for k, arr in enumerate(self.ranks):
            for pos, idx in enumerate(self.index_sets(self.n, k)):
                out[blade_mask(idx)] = arr[pos]
        return out

    @classmethod
    def from_mask_vector(cls, n: int, vec: np.ndarray) -> "TensorComponents":
        ranks = []
        for k in range(n + 1):
            ranks.append(np.array([vec[blade_mask(idx)] for idx in cls.index_sets(n, k)],
                                  dtype=np.complex128))
        return cls(n, ranks)

    def allclose(self, other: "TensorComponents", atol: float = 1e-12) -> bool:
        return self.n == other.n and all(
            np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.ranks, other.ranks))


def from_tensors(c: TensorComponents, tetrad: Tetrad) -> Multivector:
    if c.n != tetrad.n:
        raise ValueError(f"components are for n={c.n}, tetrad has n={tetrad.n}")
    return Multivector(tetrad.signature, tetrad.wedge_basis @ c.to_mask_vector())


def to_tensors(u: Multivector, tetrad: Tetrad) -> TensorComponents:
    if u.signature != tetrad.signature:
        raise ValueError("multivector and tetrad signatures differ")
    vec = scipy.linalg.lu_solve(tetrad._wedge_lu, u.coeffs)
    return TensorComponents.from_mask_vector(tetrad.n, vec)
