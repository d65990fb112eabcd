"""Complexified Clifford algebra C(x)Cl(r, s) in the bitmask blade basis.

Bit ``a`` of a blade mask marks the generator ``e^{a+1}``; the first ``r``
generators square to ``+e`` and the remaining ``s`` to ``-e``.  Multivectors
hold a dense array of ``2**n`` complex coefficients indexed by mask.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

from cliffsolve import kernels
from cliffsolve.errors import ParseError, SignatureError

MAX_DIM = 12


@dataclass(frozen=True)
class Signature:
    r: int
    s: int

    def __post_init__(self):
        if self.r < 0 or self.s < 0:
            raise SignatureError(f"negative signature counts ({self.r}, {self.s})")
        if not 1 <= self.r + self.s <= MAX_DIM:
            raise SignatureError(f"dimension {self.r + self.s} outside 1..{MAX_DIM}")

    @property
    def n(self) -> int:
        return self.r + self.s

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def eta(self) -> np.ndarray:
        return np.diag([1.0] * self.r + [-1.0] * self.s)

    @property
    def is_lorentzian(self) -> bool:
        """True for (1, n-1), the only case with a Hermitian conjugation."""
        return self.r == 1

    @property
    def signs(self) -> np.ndarray:
        return _cayley(self.n, self.r)

    def __str__(self):
        return f"({self.r},{self.s})"


@lru_cache(maxsize=None)
def _cayley(n: int, r: int) -> np.ndarray:
    table = kernels.cayley_signs(n, r)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _outer_signs(n: int, r: int) -> np.ndarray:
    idx = np.arange(1 << n)
    disjoint = (idx[:, None] & idx[None, :]) == 0
    table = np.where(disjoint, _cayley(n, r), 0).astype(np.int8)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def _grades(n: int) -> np.ndarray:
    g = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        g += (np.arange(1 << n) >> j) & 1
    g.setflags(write=False)
    return g


@lru_cache(maxsize=None)
def _reverse_signs(n: int) -> np.ndarray:
    k = _grades(n)
    out = np.where((k * (k - 1) // 2) % 2 == 0, 1, -1).astype(np.int8)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _dagger_signs(n: int, r: int) -> np.ndarray:
    # (e^A)^dagger = beta rev(e^A) beta = sign[A] e^A, bookkept exactly in integers
    signs = _cayley(n, r)
    rev = _reverse_signs(n)
    out = np.empty(1 << n, dtype=np.int8)
    for mask in range(1 << n):
        left = signs[1, mask]  # beta * e^A lands on e^{A^1}
        right = signs[mask ^ 1, 1]  # (e^{A^1}) * beta lands back on e^A
        out[mask] = rev[mask] * left * right
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Blades
# ---------------------------------------------------------------------------

def grade_of(mask: int) -> int:
    return bin(mask).count("1")


def blade_mask(indices: Iterable[int]) -> int:
    """Mask for a strictly ascending tuple of 1-based generator indices."""
    mask = 0
    last = 0
    for idx in indices:
        if idx <= last:
            raise ValueError(f"blade indices must be strictly ascending, got {tuple(indices)}")
        mask |= 1 << (idx - 1)
        last = idx
    return mask


def blade_indices(mask: int) -> tuple[int, ...]:
    return tuple(j + 1 for j in range(mask.bit_length()) if (mask >> j) & 1)


def blade_product(a: int, b: int, sig: Signature) -> tuple[int, int]:
    """Return ``(coef, mask)`` with ``e^A e^B = coef * e^{A xor B}``."""
    if not (0 <= a < sig.dim and 0 <= b < sig.dim):
        raise ValueError(f"blade mask out of range for signature {sig}")
    return int(sig.signs[a, b]), a ^ b


# ---------------------------------------------------------------------------
# Multivectors
# ---------------------------------------------------------------------------

class Multivector:
    """Immutable element of C(x)Cl(r, s).

    Arithmetic: ``+``, ``-``, ``*`` (geometric product, or scaling by a
    number), ``^`` (wedge), ``~`` (reverse).
    """

    __slots__ = ("signature", "coeffs")
    __array_ufunc__ = None  # make numpy scalars defer to our operators

    def __init__(self, signature: Signature, coeffs):
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.shape != (signature.dim,):
            raise ValueError(f"expected {signature.dim} coefficients, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Multivector is immutable")

    # constructors -------------------------------------------------------

    @classmethod
    def zero(cls, sig: Signature) -> "Multivector":
        return cls(sig, np.zeros(sig.dim))

    @classmethod
    def scalar(cls, sig: Signature, value: complex = 1.0) -> "Multivector":
        c = np.zeros(sig.dim, dtype=np.complex128)
        c[0] = value
        return cls(sig, c)

    @classmethod
    def blade(cls, sig: Signature, indices: Iterable[int] | int, coef: complex = 1.0) -> "Multivector":
        mask = indices if isinstance(indices, (int, np.integer)) else blade_mask(indices)
        c = np.zeros(sig.dim, dtype=np.complex128)
        c[mask] = coef
        return cls(sig, c)

    @classmethod
    def from_dict(cls, sig: Signature, terms: Mapping[tuple[int, ...], complex]) -> "Multivector":
        c = np.zeros(sig.dim, dtype=np.complex128)
        for indices, coef in terms.items():
            c[blade_mask(indices)] += coef
        return cls(sig, c)

    @classmethod
    def random(cls, sig: Signature, rng: np.random.Generator, *, real: bool = False,
               scale: float = 1.0) -> "Multivector":
        c = rng.standard_normal(sig.dim)
        if not real:
            c = c + 1j * rng.standard_normal(sig.dim)
        return cls(sig, scale * c)

    # algebra ------------------------------------------------------------

    def _check(self, other: "Multivector"):
        if other.signature != self.signature:
            raise SignatureError(f"signature mismatch: {self.signature} vs {other.signature}")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            return Multivector(self.signature, self.coeffs + other.coeffs)
        if isinstance(other, Number):
            return self + Multivector.scalar(self.signature, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.signature, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, (Multivector, Number)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return product(self, other)
        if isinstance(other, Number):
            return Multivector(self.signature, self.coeffs * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Multivector(self.signature, self.coeffs * other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Multivector(self.signature, self.coeffs / other)
        return NotImplemented

    def __xor__(self, other):
        return wedge(self, other)

    def __invert__(self):
        return involution(self, "reverse")

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.signature == other.signature and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.signature, self.coeffs.tobytes()))

    def grade(self, k: int) -> "Multivector":
        return grade_project(self, k)

    def even(self) -> "Multivector":
        return grade_project(self, parity="even")

    def odd(self) -> "Multivector":
        return grade_project(self, parity="odd")

    def conj(self) -> "Multivector":
        return involution(self, "complex_conjugate")

    def dagger(self) -> "Multivector":
        return hermitian_conjugate(self)

    @property
    def scalar_part(self) -> complex:
        return complex(self.coeffs[0])

    def norm(self) -> float:
        """Max-norm over blade coefficients."""
        return float(np.max(np.abs(self.coeffs)))

    def allclose(self, other: "Multivector", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= atol)

    def __repr__(self):
        return f"Multivector{self.signature}[{format_multivector(self)}]"

    def __str__(self):
        return format_multivector(self)


def product(u: Multivector, v: Multivector) -> Multivector:
    u._check(v)
    out = kernels.geometric_product(u.signature.signs, u.coeffs, v.coeffs)
    return Multivector(u.signature, out)


def wedge(u: Multivector, v: Multivector) -> Multivector:
    """Outer product: only blade pairs sharing no generator contribute."""
    u._check(v)
    sig = u.signature
    out = kernels.geometric_product(_outer_signs(sig.n, sig.r), u.coeffs, v.coeffs)
    return Multivector(sig, out)


def grade_project(u: Multivector, k: int | None = None, *, parity: str | None = None) -> Multivector:
    sig = u.signature
    grades = _grades(sig.n)
    if (k is None) == (parity is None):
        raise ValueError("give exactly one of a grade k or a parity")
    if k is not None:
        if not 0 <= k <= sig.n:
            raise ValueError(f"grade {k} out of range 0..{sig.n}")
        keep = grades == k
    elif parity in ("even", "odd"):
        keep = grades % 2 == (0 if parity == "even" else 1)
    else:
        raise ValueError(f"unknown parity {parity!r}")
    return Multivector(sig, np.where(keep, u.coeffs, 0))


def involution(u: Multivector, kind: str) -> Multivector:
    if kind == "reverse":
        return Multivector(u.signature, u.coeffs * _reverse_signs(u.signature.n))
    if kind == "complex_conjugate":
        return Multivector(u.signature, np.conj(u.coeffs))
    raise ValueError(f"unknown involution {kind!r}")


def hermitian_conjugate(u: Multivector) -> Multivector:
    """``beta * reverse(conj(U)) * beta`` with ``beta = e^1``, signature (1, n-1) only."""
    sig = u.signature
    if not sig.is_lorentzian:
        raise SignatureError(f"Hermitian conjugation needs signature (1, n-1), got {sig}")
    return Multivector(sig, np.conj(u.coeffs) * _dagger_signs(sig.n, sig.r))


def parity_mask(sig: Signature, parity: str) -> np.ndarray:
    """Boolean selector of the even or odd blade masks."""
    grades = _grades(sig.n)
    if parity == "even":
        return grades % 2 == 0
    if parity == "odd":
        return grades % 2 == 1
    raise ValueError(f"unknown parity {parity!r}")


def grades(sig: Signature) -> np.ndarray:
    return _grades(sig.n)


# ---------------------------------------------------------------------------
# Text form:  "0.5*e + 0.25i*e^23 - (1+2i)*e^{1,10}"
# ---------------------------------------------------------------------------

def _blade_text(mask: int, n: int) -> str:
    if mask == 0:
        return "e"
    idx = blade_indices(mask)
    if n <= 9:
        return "e^" + "".join(str(i) for i in idx)
    return "e^{" + ",".join(str(i) for i in idx) + "}"


def _coef_text(c: complex) -> tuple[str, str]:
    """Return (sign, magnitude text); sign is '+' or '-'."""
    re_, im = c.real, c.imag
    if im == 0:
        return ("-" if re_ < 0 else "+"), repr(abs(re_))
    if re_ == 0:
        return ("-" if im < 0 else "+"), repr(abs(im)) + "i"
    op = "-" if im < 0 else "+"
    return "+", f"({re_!r}{op}{abs(im)!r}i)"


def format_multivector(u: Multivector) -> str:
    parts = []
    for mask in np.flatnonzero(u.coeffs):
        sign, mag = _coef_text(complex(u.coeffs[mask]))
        term = f"{mag}*{_blade_text(int(mask), u.signature.n)}"
        if not parts:
            parts.append(term if sign == "+" else "-" + term)
        else:
            parts.append(f" {sign} {term}")
    return "".join(parts) if parts else "0"


_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(
    r"\s*(?P<sign>[+-])?\s*"
    r"(?:(?P<coef>\([^()]*\)|" + _NUM + r"[ij]?|[ij](?![\w^]))\s*\*?\s*)?"
    r"(?P<blade>e(?:\^(?:\{[\d,\s]*\}|\d+))?)?\s*"
)


def _parse_coef(text: str) -> complex:
    body = text.strip()
    if body.startswith("("):
        body = body[1:-1]
    body = body.replace(" ", "").replace("i", "j")
    if body in ("j", "+j", "-j"):
        body = body.replace("j", "1j")
    try:
        return complex(body)
    except ValueError as exc:
        raise ParseError(f"bad coefficient {text!r}") from exc


def _parse_blade(text: str, sig: Signature) -> Multivector:
    if text == "e":
        return Multivector.scalar(sig)
    body = text[2:]
    if body.startswith("{"):
        items = [s for s in body[1:-1].replace(" ", "").split(",") if s]
        idx = [int(s) for s in items]
    else:
        idx = [int(ch) for ch in body]
    if any(not 1 <= i <= sig.n for i in idx):
        raise ParseError(f"generator index out of range in {text!r} for n={sig.n}")
    # non-canonical orders and repeats are resolved by the product itself
    out = Multivector.scalar(sig)
    for i in idx:
        out = out * Multivector.blade(sig, (i,))
    return out


def parse_multivector(text: str, sig: Signature) -> Multivector:
    """Parse a sum of ``coef*e^{indices}`` terms.  Accepts ``i`` or ``j`` for the imaginary unit."""
    src = text.strip()
    if src in ("", "0"):
        return Multivector.zero(sig)
    total = Multivector.zero(sig)
    pos = 0
    first = True
    while pos < len(src):
        m = _TERM.match(src, pos)
        if m is None or m.end() == pos or (m.group("coef") is None and m.group("blade") is None):
            raise ParseError(f"cannot parse multivector at {src[pos:]!r}")
        if not first and m.group("sign") is None:
            raise ParseError(f"missing '+' or '-' before {src[pos:]!r}")
        coef = _parse_coef(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            coef = -coef
        blade = _parse_blade(m.group("blade"), sig) if m.group("blade") else Multivector.scalar(sig)
        total = total + coef * blade
        pos = m.end()
        first = False
    return total
