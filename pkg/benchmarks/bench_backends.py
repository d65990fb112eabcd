"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_backends.py [--repeat 5] [--json out.json]

Each kernel is warmed up once (numba compiles on first call), then timed with
``timeit``; the best of ``--repeat`` runs is reported.  Outputs are compared
so a speedup never hides a wrong answer.
"""

from __future__ import annotations

import argparse
import json
import platform
import timeit

import numba
import numpy as np

from cliffsolve import kernels


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _signed_permutations(rng, count: int, d: int):
    # shape of a Clifford multiplication operator: one unit entry per row
    out = np.zeros((count, d, d), dtype=complex)
    for b in range(count):
        out[b, np.arange(d), rng.permutation(d)] = rng.choice([1, -1, 1j, -1j], size=d)
    return out


def _rhs_case(rng, points: int, d: int, order: int, field_m: bool, dense: bool):
    offsets, weights = kernels.STENCILS[order]
    idx = np.arange(points)
    nb = np.stack([np.roll(idx, -o) for o in offsets])[None]
    if dense:
        G = _rand(rng, 1, d, d)
        M = _rand(rng, points if field_m else 1, d, d)
    else:
        G = _signed_permutations(rng, 1, d)
        M = _signed_permutations(rng, points if field_m else 1, d)
    s = np.zeros((1, d), dtype=complex)
    u = _rand(rng, points, d)
    w = np.asarray(weights, dtype=float)
    inv_dx = np.array([points / 20.0])
    return (u, nb, w, inv_dx, *kernels.ell_pack(G), *kernels.ell_pack(M), s)


def cases(rng):
    signs4 = kernels.cayley_signs_numpy(4, 1)
    signs8 = kernels.cayley_signs_numpy(8, 1)
    u4, v4 = _rand(rng, 16), _rand(rng, 16)
    u8, v8 = _rand(rng, 256), _rand(rng, 256)
    yield "cayley_signs n=8", (8, 1), kernels.cayley_signs_numba, kernels.cayley_signs_numpy, 20
    yield "geometric_product n=4", (signs4, u4, v4), kernels.geometric_product_numba, \
        kernels.geometric_product_numpy, 2000
    yield "geometric_product n=8", (signs8, u8, v8), kernels.geometric_product_numba, \
        kernels.geometric_product_numpy, 50
    yield "left_matrix n=8", (signs8, u8), kernels.left_matrix_numba, kernels.left_matrix_numpy, 50
    yield "right_matrix n=8", (signs8, v8), kernels.right_matrix_numba, kernels.right_matrix_numpy, 50
    for points, field_m, dense in ((256, False, False), (4096, False, False), (4096, True, False),
                                   (4096, False, True)):
        args = _rhs_case(rng, points, 16, 2, field_m, dense)
        label = f"system_rhs D=16 P={points}{' M(x)' if field_m else ''}{' dense' if dense else ''}"
        yield label, args, kernels.system_rhs_numba, kernels.system_rhs_numpy, 50


def _call(fn, args):
    if fn.__name__.startswith("system_rhs"):
        out = np.empty_like(args[0])
        fn(*args, out)
        return out
    return fn(*args)


def run(repeat: int) -> list[dict]:
    rng = np.random.default_rng(0)
    rows = []
    for label, args, fast, slow, number in cases(rng):
        a, b = _call(fast, args), _call(slow, args)  # warm-up and cross-check
        if not np.allclose(a, b, atol=1e-10):
            raise AssertionError(f"{label}: numba and numpy disagree")
        t_fast = min(timeit.repeat(lambda: _call(fast, args), number=number, repeat=repeat)) / number
        t_slow = min(timeit.repeat(lambda: _call(slow, args), number=number, repeat=repeat)) / number
        rows.append({"kernel": label, "numba_s": t_fast, "numpy_s": t_slow, "speedup": t_slow / t_fast})
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write the rows to this file")
    args = p.parse_args(argv)
    rows = run(args.repeat)
    print(f"numba {numba.__version__}, numpy {np.__version__}, {platform.processor() or platform.machine()}, "
          f"{numba.get_num_threads()} threads")
    print(f"{'kernel':<34}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for r in rows:
        print(f"{r['kernel']:<34}{r['numba_s'] * 1e6:>10.1f}us{r['numpy_s'] * 1e6:>10.1f}us{r['speedup']:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
