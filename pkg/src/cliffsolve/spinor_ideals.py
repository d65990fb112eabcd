"""Hermitian idempotents ``t`` and the sets I(t), K(t), L(t), G(t).

    I(t) = {U : U t = U}                 left ideal
    K(t) = {U in I(t) : t U = U}         two-sided ideal
    L(t) = {U in K(t) : U^dagger = -U}   real Lie algebra
    G(t) = {U : U^dagger U = e, U - e in K(t)}
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cliffsolve.clifford_core import Multivector, Signature, parse_multivector
from cliffsolve.errors import MembershipError, SignatureError
from cliffsolve.matrix_rep import mul_operator

IDEMPOTENT_TOL = 1e-13
MEMBERSHIP_TOL = 1e-12

# the five Hermitian idempotent types of C(x)Cl(1,3)
CANONICAL_LITERALS = {
    "t0": "0",
    "t1": "0.25*e + 0.25*e^1 + 0.25i*e^23 + 0.25i*e^123",
    "t2": "0.5*e + 0.5*e^1",
    "t3": "0.75*e + 0.25*e^1 + 0.25i*e^23 - 0.25i*e^123",
    "t4": "e",
}


@dataclass(frozen=True)
class IdempotentCheck:
    is_idempotent: bool
    square_residual: float
    hermitian_residual: float

    def __bool__(self):
        return self.is_idempotent


def is_hermitian_idempotent(t: Multivector, tol: float = IDEMPOTENT_TOL) -> IdempotentCheck:
    sq = (t * t - t).norm()
    herm = (t.dagger() - t).norm()
    return IdempotentCheck(sq <= tol and herm <= tol, sq, herm)


@dataclass(frozen=True, eq=False)
class HermitianIdempotent:
    t: Multivector
    name: str | None = None

    def __post_init__(self):
        if not self.t.signature.is_lorentzian:
            raise SignatureError(f"Hermitian idempotents need signature (1, n-1), got {self.t.signature}")
        check = is_hermitian_idempotent(self.t)
        if not check:
            raise MembershipError(
                f"not a Hermitian idempotent: |t^2-t|={check.square_residual:.3e}, "
                f"|t^dagger-t|={check.hermitian_residual:.3e}")

    @property
    def signature(self) -> Signature:
        return self.t.signature

    @cached_property
    def prime(self) -> Multivector:
        return Multivector.scalar(self.signature) - self.t

    @cached_property
    def right_op(self) -> np.ndarray:
        return mul_operator(self.t, "right")

    @cached_property
    def right_op_prime(self) -> np.ndarray:
        return mul_operator(self.prime, "right")

    @property
    def rank(self) -> int:
        """Rank of the projector in the spinor representation (= N * scalar part)."""
        n_spinor = 1 << (self.signature.n // 2)
        return int(round(n_spinor * self.t.scalar_part.real))

    def __repr__(self):
        label = self.name or str(self.t)
        return f"HermitianIdempotent({label})"


def canonical_idempotents() -> list[HermitianIdempotent]:
    """``[t0, t1, t2, t3, t4]`` for signature (1,3)."""
    sig = Signature(1, 3)
    return [HermitianIdempotent(parse_multivector(text, sig), name)
            for name, text in CANONICAL_LITERALS.items()]


def canonical(name: str) -> HermitianIdempotent:
    if name not in CANONICAL_LITERALS:
        raise KeyError(f"unknown canonical idempotent {name!r}; expected one of {sorted(CANONICAL_LITERALS)}")
    return HermitianIdempotent(parse_multivector(CANONICAL_LITERALS[name], Signature(1, 3)), name)


def dual(t: HermitianIdempotent) -> HermitianIdempotent:
    name = None
    if t.name and t.name.endswith("'"):
        name = t.name[:-1]
    elif t.name:
        name = t.name + "'"
    return HermitianIdempotent(t.prime, name)


@dataclass(frozen=True)
class Membership:
    member: bool
    residual: float

    def __bool__(self):
        return self.member


def _ideal_residual(u: Multivector, t: Multivector, which: str) -> float:
    if which == "I":
        return (u * t - u).norm()
    if which == "K":
        return max((u * t - u).norm(), (t * u - u).norm())
    if which == "L":
        return max(_ideal_residual(u, t, "K"), (u.dagger() + u).norm())
    if which == "G":
        e = Multivector.scalar(u.signature)
        return max((u.dagger() * u - e).norm(), _ideal_residual(u - e, t, "K"))
    raise ValueError(f"unknown set {which!r}; expected I, K, L or G")


def membership(u: Multivector, t: HermitianIdempotent, which: str,
               tol: float = MEMBERSHIP_TOL) -> Membership:
    """Test ``u`` against I, K, L or G of ``t``; ``tol`` is relative to ``max(1, |u|)``."""
    rel = _ideal_residual(u, t.t, which) / max(1.0, u.norm())
    return Membership(rel <= tol, rel)


def decompose(psi: Multivector, t: HermitianIdempotent) -> tuple[Multivector, Multivector]:
    """Split ``Psi = Psi t + Psi t'``."""
    phi = psi * t.t
    return phi, psi - phi


def exp_to_G(ell: Multivector, t: HermitianIdempotent, check: bool = True) -> Multivector:
    """Exponential of a Lie-algebra element, by scaling and squaring a Taylor series."""
    if check and not membership(ell, t, "L", 1e-10):
        raise MembershipError("exp_to_G needs an element of L(t)")
    sig = ell.signature
    norm = float(np.sum(np.abs(ell.coeffs)))
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    x = ell / (2.0 ** squarings)
    term = Multivector.scalar(sig)
    total = term
    for k in range(1, 40):
        term = term * x / k
        total = total + term
        if term.norm() < 1e-18:
            break
    for _ in range(squarings):
        total = total * total
    return total


def random_lie_element(t: HermitianIdempotent, rng: np.random.Generator, scale: float = 1.0) -> Multivector:
    """Sample L(t): sandwich a random element as ``t X t``, then take its anti-Hermitian part."""
    x = Multivector.random(t.signature, rng, scale=scale)
    k = t.t * x * t.t
    return 0.5 * (k - k.dagger())


def random_ideal_element(t: HermitianIdempotent, rng: np.random.Generator, scale: float = 1.0) -> Multivector:
    return Multivector.random(t.signature, rng, scale=scale) * t.t


def unitary_equivalent(t: Multivector, s: Multivector, tol: float = IDEMPOTENT_TOL) -> Multivector | None:
    """First unit blade ``U`` (``U^dagger U = e``) with ``U^dagger t U = s``, or None."""
    sig = t.signature
    e = Multivector.scalar(sig)
    # a global phase cancels in U^dagger t U, so real unit blades suffice
    for mask in range(sig.dim):
        u = Multivector.blade(sig, mask)
        if (u.dagger() * u - e).norm() > tol:
            continue
        if (u.dagger() * t * u - s).norm() <= tol:
            return u
    return None
