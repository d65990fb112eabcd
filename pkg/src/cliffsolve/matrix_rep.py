"""Matrix representation of C(x)Cl(1, n-1) and multiplication operators.

The spinor representation (``build_gamma``/``rep``) is only used for
cross-checks.  Evolution runs on blade coefficients, where left and right
multiplications are plain ``2**n x 2**n`` matrices (``mul_operator``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from cliffsolve import kernels
from cliffsolve.clifford_core import Multivector, Signature, parity_mask
from cliffsolve.errors import ParityError, SignatureError

HERMITIAN_TOL = 1e-10
DEFINITE_TOL = 1e-10

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class GammaSet:
    n: int
    gammas: tuple[np.ndarray, ...]

    @property
    def N(self) -> int:
        return self.gammas[0].shape[0]

    @property
    def signature(self) -> Signature:
        return Signature(1, self.n - 1)

    @cached_property
    def blade_matrices(self) -> np.ndarray:
        """Stack of ``gamma^{A}`` (ascending generator order) indexed by mask."""
        dim = 1 << self.n
        out = np.empty((dim, self.N, self.N), dtype=np.complex128)
        out[0] = np.eye(self.N)
        for mask in range(1, dim):
            low = mask & -mask  # strip the lowest generator, reuse the rest
            out[mask] = self.gammas[low.bit_length() - 1] @ out[mask ^ low]
        out.setflags(write=False)
        return out


def build_gamma(n: int) -> GammaSet:
    """Gamma matrices for signature (1, n-1), n even, built by tensor doubling.

    Start from ``gamma^1 = sigma_x``, ``gamma^2 = i sigma_y``.  Each doubling
    keeps the old set as ``gamma (x) sigma_z`` and appends ``I (x) i sigma_x``
    and ``I (x) i sigma_y``, both anti-Hermitian and squaring to ``-I``.
    """
    if n % 2 or not 2 <= n <= 12:
        raise SignatureError(f"gamma matrices need even n in 2..12, got {n}")
    gammas = [_SX, 1j * _SY]
    while len(gammas) < n:
        eye = np.eye(gammas[0].shape[0])
        gammas = [np.kron(g, _SZ) for g in gammas]
        gammas += [np.kron(eye, 1j * _SX), np.kron(eye, 1j * _SY)]
    gset = GammaSet(n, tuple(gammas))
    _verify_gammas(gset)
    return gset


def _verify_gammas(g: GammaSet, tol: float = 1e-14):
    eta = g.signature.eta
    eye = np.eye(g.N)
    for a, ga in enumerate(g.gammas):
        for b, gb in enumerate(g.gammas):
            if np.max(np.abs(ga @ gb + gb @ ga - 2 * eta[a, b] * eye)) > tol:
                raise AssertionError(f"gamma^{a + 1}, gamma^{b + 1} break the Clifford relations")
        herm = np.max(np.abs(ga.conj().T - (ga if a == 0 else -ga)))
        if herm > tol:
            raise AssertionError(f"gamma^{a + 1} has the wrong Hermiticity")


def rep(u: Multivector, g: GammaSet) -> np.ndarray:
    if u.signature != g.signature:
        raise SignatureError(f"multivector signature {u.signature} does not match gamma set {g.signature}")
    return np.tensordot(u.coeffs, g.blade_matrices, axes=1)


# ---------------------------------------------------------------------------
# Operators on blade-coefficient space
# ---------------------------------------------------------------------------

def restrict_parity(mat: np.ndarray, sig: Signature, parity: str | Sequence[str]) -> np.ndarray:
    """Principal (or off-diagonal) block of ``mat`` on a parity subspace.

    ``parity`` is ``"even"``/``"odd"`` (domain = codomain) or a
    ``(domain, codomain)`` pair.  Raises :class:`ParityError` if ``mat`` leaks
    out of the requested codomain.
    """
    dom, cod = (parity, parity) if isinstance(parity, str) else tuple(parity)
    cols = parity_mask(sig, dom)
    rows = parity_mask(sig, cod)
    leak = mat[np.ix_(~rows, cols)]
    if leak.size and np.max(np.abs(leak)) > 0:
        raise ParityError(f"operator maps {dom} elements outside the {cod} subspace")
    return mat[np.ix_(rows, cols)]


def mul_operator(a: Multivector, side: str = "left",
                 parity_restrict: str | Sequence[str] | None = None) -> np.ndarray:
    """Matrix of ``U -> A U`` (``side="left"``) or ``U -> U A`` on blade coefficients."""
    signs = a.signature.signs
    if side == "left":
        mat = kernels.left_matrix(signs, a.coeffs)
    elif side == "right":
        mat = kernels.right_matrix(signs, a.coeffs)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if parity_restrict in (None, "none"):
        return mat
    return restrict_parity(mat, a.signature, parity_restrict)


@dataclass(frozen=True)
class SpectralReport:
    is_hermitian: bool
    hermiticity_residual: float
    min_eigenvalue: float
    max_eigenvalue: float

    @property
    def gamma(self) -> float:
        return self.min_eigenvalue

    @property
    def definiteness(self) -> str:
        if self.min_eigenvalue > DEFINITE_TOL:
            return "positive definite"
        if self.min_eigenvalue >= -DEFINITE_TOL:
            return "semidefinite within tolerance"
        return "indefinite"

    def as_dict(self) -> dict:
        return {
            "is_hermitian": self.is_hermitian,
            "hermiticity_residual": self.hermiticity_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "gamma": self.gamma,
            "definiteness": self.definiteness,
        }


def spectral_check(mat: np.ndarray) -> SpectralReport:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"spectral_check needs a square matrix, got {mat.shape}")
    resid = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    herm = 0.5 * (mat + mat.conj().T)
    evals = np.linalg.eigvalsh(herm)
    return SpectralReport(resid <= HERMITIAN_TOL, resid, float(evals[0]), float(evals[-1]))
