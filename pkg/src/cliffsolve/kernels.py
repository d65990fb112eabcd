"""Hot numeric kernels, each in an ``@njit`` and a pure-numpy flavour.

The public names at the bottom (``cayley_signs``, ``geometric_product``,
``left_matrix``, ``right_matrix``, ``system_rhs``) dispatch on
:data:`cliffsolve._backend.USE_NUMBA`.  Both flavours stay importable as
``*_numba`` / ``*_numpy`` so tests and the benchmark can compare them.
"""

from __future__ import annotations

import numpy as np

from cliffsolve._backend import USE_NUMBA, njit, prange

# Central-difference stencils: (offsets, weights) for d/dx * dx.
STENCILS = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0])),
}


# ---------------------------------------------------------------------------
# Blade sign table
# ---------------------------------------------------------------------------

@njit(cache=True)
def cayley_signs_numba(n, r):
    dim = 1 << n
    neg = ((1 << n) - 1) ^ ((1 << r) - 1)
    out = np.empty((dim, dim), dtype=np.int8)
    for a in range(dim):
        for b in range(dim):
            swaps = 0
            for j in range(n):
                if (b >> j) & 1:
                    rest = a >> (j + 1)
                    while rest:
                        swaps += rest & 1
                        rest >>= 1
            common = a & b & neg
            while common:
                swaps += common & 1
                common >>= 1
            out[a, b] = 1 - 2 * (swaps & 1)
    return out


def _popcount(x: np.ndarray, nbits: int) -> np.ndarray:
    count = np.zeros_like(x)
    for j in range(nbits):
        count += (x >> j) & 1
    return count


def cayley_signs_numpy(n: int, r: int) -> np.ndarray:
    dim = 1 << n
    a = np.arange(dim, dtype=np.int64)[:, None]
    b = np.arange(dim, dtype=np.int64)[None, :]
    neg = ((1 << n) - 1) ^ ((1 << r) - 1)
    swaps = np.zeros((dim, dim), dtype=np.int64)
    for j in range(n):
        swaps += ((b >> j) & 1) * _popcount(a >> (j + 1), n)
    swaps += _popcount(a & b & neg, n)
    return (1 - 2 * (swaps & 1)).astype(np.int8)


# ---------------------------------------------------------------------------
# Geometric product and multiplication operators
# ---------------------------------------------------------------------------

@njit(cache=True)
def geometric_product_numba(signs, u, v):
    dim = u.shape[0]
    out = np.zeros(dim, dtype=np.complex128)
    for a in range(dim):
        ua = u[a]
        if ua == 0:
            continue
        for b in range(dim):
            vb = v[b]
            if vb != 0:
                out[a ^ b] += signs[a, b] * ua * vb
    return out


def geometric_product_numpy(signs: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return left_matrix_numpy(signs, u) @ v


@njit(cache=True)
def left_matrix_numba(signs, u):
    dim = u.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    for a in range(dim):
        if u[a] == 0:
            continue
        for b in range(dim):
            out[a ^ b, b] += signs[a, b] * u[a]
    return out


@njit(cache=True)
def right_matrix_numba(signs, v):
    dim = v.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    for b in range(dim):
        if v[b] == 0:
            continue
        for a in range(dim):
            out[a ^ b, a] += signs[a, b] * v[b]
    return out


def _xor_table(dim: int) -> np.ndarray:
    idx = np.arange(dim)
    return idx[:, None] ^ idx[None, :]


def left_matrix_numpy(signs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Matrix of V -> U V.  Column b receives U[a]*sign(a,b) at row a^b."""
    dim = u.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.broadcast_to(np.arange(dim)[None, :], (dim, dim))
    # for fixed b, a -> a^b is a bijection, so no index collisions
    out[_xor_table(dim), cols] = signs * u[:, None]
    return out


def right_matrix_numpy(signs: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix of U -> U V.  Column a receives V[b]*sign(a,b) at row a^b."""
    dim = v.shape[0]
    out = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.broadcast_to(np.arange(dim)[:, None], (dim, dim))
    out[_xor_table(dim), cols] = signs * v[None, :]
    return out


# ---------------------------------------------------------------------------
# Method-of-lines right-hand side
# ---------------------------------------------------------------------------

def ell_pack(mats: np.ndarray, tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Pack a stack ``(B, D, D)`` into padded row lists ``cols, vals`` of shape ``(B, D, K)``.

    ``K`` is the largest nonzero count of any row; short rows are padded with
    column 0 and value 0.  Clifford multiplication operators have one nonzero
    per row, so this cuts the operator work by a factor of ``D``.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    nz = np.abs(mats) > tol
    k = max(int(nz.sum(axis=2).max(initial=0)), 1)
    b, d, _ = mats.shape
    cols = np.zeros((b, d, k), dtype=np.int64)
    vals = np.zeros((b, d, k), dtype=np.complex128)
    # stable sort puts the nonzero columns of each row first, in column order
    order = np.argsort(~nz, axis=2, kind="stable")[:, :, :k]
    keep = np.take_along_axis(nz, order, axis=2)
    cols[keep] = order[keep]
    vals[keep] = np.take_along_axis(mats, order, axis=2)[keep]
    return cols, vals


@njit(cache=True, parallel=True)
def system_rhs_numba(u, neighbors, weights, inv_dx, g_cols, g_vals, m_cols, m_vals, s, out):
    npts, dim = u.shape
    naxes, nsten, _ = neighbors.shape
    kg = g_cols.shape[2]
    km = m_cols.shape[2]
    m_stride = 0 if m_cols.shape[0] == 1 else 1
    s_stride = 0 if s.shape[0] == 1 else 1
    for p in prange(npts):
        pm = p * m_stride
        ps = p * s_stride
        du = np.empty((naxes, dim), dtype=np.complex128)
        for ax in range(naxes):
            for j in range(dim):
                du[ax, j] = 0j
            for o in range(nsten):
                q = neighbors[ax, o, p]
                w = weights[o] * inv_dx[ax]
                for j in range(dim):
                    du[ax, j] += w * u[q, j]
        for i in range(dim):
            acc = 0j
            for k in range(km):
                acc += m_vals[pm, i, k] * u[p, m_cols[pm, i, k]]
            for ax in range(naxes):
                for k in range(kg):
                    acc += g_vals[ax, i, k] * du[ax, g_cols[ax, i, k]]
            out[p, i] = s[ps, i] - acc


def system_rhs_numpy(u, neighbors, weights, inv_dx, g_cols, g_vals, m_cols, m_vals, s, out):
    if m_cols.shape[0] == 1:
        acc = np.einsum("pik,ik->pi", u[:, m_cols[0]], m_vals[0])
    else:
        rows = np.arange(u.shape[0])[:, None, None]
        acc = np.einsum("pik,pik->pi", u[rows, m_cols], m_vals)
    for ax in range(neighbors.shape[0]):
        deriv = np.zeros_like(u)
        for o in range(neighbors.shape[1]):
            deriv += weights[o] * u[neighbors[ax, o]]
        deriv *= inv_dx[ax]
        acc += np.einsum("pik,ik->pi", deriv[:, g_cols[ax]], g_vals[ax])
    np.subtract(s, acc, out=out)


if USE_NUMBA:
    cayley_signs = cayley_signs_numba
    geometric_product = geometric_product_numba
    left_matrix = left_matrix_numba
    right_matrix = right_matrix_numba
    system_rhs = system_rhs_numba
else:
    cayley_signs = cayley_signs_numpy
    geometric_product = geometric_product_numpy
    left_matrix = left_matrix_numpy
    right_matrix = right_matrix_numpy
    system_rhs = system_rhs_numpy
