"""Compare the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once to trigger compilation, then timed; outputs of the
two paths are checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from topicsqif import _kernels


def cases(rng):
    joint = rng.random((2000, 350)) / 2000
    topk = np.sort(np.array([rng.choice(350, 5, replace=False) for _ in range(200)]), axis=1)
    u_noise = rng.random((200, 20_000))
    u_pick = rng.random((200, 20_000))
    guess = rng.integers(200, size=350)
    u = rng.random((3, 1_000_000))
    return {
        "column_max_sum 2000x350": ("column_max_sum", (joint,)),
        "topic_histogram 200 users x 2e4": ("topic_histogram", (topk, u_noise, u_pick, 0.05, 350)),
        "count_hits 1e6 trials": ("count_hits", (topk, u[0], u[1], u[2], 0.05, 350, guess)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for title, (name, call_args) in cases(rng).items():
        fast = getattr(_kernels.numba_impl, name)
        slow = getattr(_kernels.numpy_impl, name)
        a, b = fast(*call_args), slow(*call_args)
        assert np.array_equal(np.asarray(a), np.asarray(b)), title
        t_np = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        print(f"{title:36s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
