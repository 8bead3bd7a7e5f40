"""Compare the numba and numpy kernel backends on workload-shaped inputs.

Runs each hot kernel on sizes drawn from the catalog studies (group tables
in the 10^4..10^5 range, 3x3 residue matrices, a dozen translation maps)
and prints a timing table.  The numba functions are compiled once before
timing so JIT cost is excluded; pass --include-jit to see it.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --size 200000 --repeats 7
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from specgap import _kernels_numpy as knp

try:
    from specgap import _kernels_numba as knb
except ImportError:
    knb = None


def timed(fn, *args, repeats: int):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best.append(time.perf_counter() - t0)
    return out, statistics.median(best)


def workloads(size: int, seed: int):
    rng = np.random.default_rng(seed)
    # subset-product batch: 3x3 residue matrices mod 5^3
    k = max(64, int(size**0.5))
    x = rng.integers(0, 125, size=(k, 3, 3)).astype(np.int64)
    y = rng.integers(0, 125, size=(k, 3, 3)).astype(np.int64)
    # walk step: one float per group element, one permutation per generator
    vec = rng.standard_normal(size)
    perms = np.stack([rng.permutation(size) for _ in range(8)]).astype(np.int32)
    # coverage gather: translation maps over a bool mask
    mask = (rng.random(size) < 0.05).astype(np.uint8)
    maps = rng.integers(0, size, size=(12, size)).astype(np.int32)
    return {
        "pairwise_products": ((x, y, 125), f"{k}x{k} mats 3x3 mod 125"),
        "apply_walk": ((vec, perms), f"|G|={size}, 8 perms"),
        "gather_any": ((mask, maps), f"|G|={size}, 12 maps"),
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100000, help="group-table size stand-in")
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats (median)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--include-jit", action="store_true", help="skip the warmup pass")
    args = ap.parse_args()

    loads = workloads(args.size, args.seed)
    if knb is not None and not args.include_jit:
        for name, (inputs, _) in loads.items():
            small = tuple(a[:32] if isinstance(a, np.ndarray) and a.ndim else a for a in inputs)
            try:
                getattr(knb, name)(*small)
            except Exception:
                getattr(knb, name)(*inputs)

    print(f"{'kernel':<20} {'shape':<26} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, (inputs, shape) in loads.items():
        ref, t_np = timed(getattr(knp, name), *inputs, repeats=args.repeats)
        if knb is None:
            print(f"{name:<20} {shape:<26} {t_np*1e3:>8.2f}ms {'n/a':>10} {'':>8}")
            continue
        got, t_nb = timed(getattr(knb, name), *inputs, repeats=args.repeats)
        if isinstance(ref, np.ndarray) and ref.dtype.kind in "iub":
            assert (got == ref).all(), f"{name}: backends disagree"
        else:
            assert np.allclose(got, ref, atol=1e-12), f"{name}: backends disagree"
        print(
            f"{name:<20} {shape:<26} {t_np*1e3:>8.2f}ms {t_nb*1e3:>8.2f}ms "
            f"{t_np/t_nb:>7.1f}x"
        )
    if knb is None:
        print("numba backend unavailable; showed numpy only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
