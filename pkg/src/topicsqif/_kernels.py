"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin with identical semantics.  The twin is
used when numba is missing or when ``TOPICSQIF_DISABLE_NUMBA`` is set to a
truthy value.  Both paths consume the same pre-drawn uniforms, so results are
bit-identical whichever path runs.
"""

import os
import types

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is an optional speedup
    nb = None

ENV_FLAG = "TOPICSQIF_DISABLE_NUMBA"


def _disabled_by_env():
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


# ---------------------------------------------------------------------------
# numpy reference path


def _np_column_max_sum(joint):
    if joint.shape[0] == 0 or joint.shape[1] == 0:
        return 0.0
    # left-to-right accumulation to match the compiled loop bit for bit
    total = 0.0
    for v in joint.max(axis=0).tolist():
        total += v
    return total


def _np_draw_topics(topk, rows, u_noise, u_pick, noise_p, taxonomy_size):
    k = topk.shape[1]
    pick = np.floor(u_pick * k).astype(np.int64)
    from_topk = topk[rows, pick]
    noisy = np.floor(u_pick * taxonomy_size).astype(np.int64)
    return np.where(u_noise < noise_p, noisy, from_topk)


def _np_topic_histogram(topk, u_noise, u_pick, noise_p, taxonomy_size):
    n_users, n_samples = u_noise.shape
    rows = np.repeat(np.arange(n_users), n_samples)
    topics = _np_draw_topics(
        topk, rows, u_noise.ravel(), u_pick.ravel(), noise_p, taxonomy_size
    )
    flat = rows * taxonomy_size + topics
    counts = np.bincount(flat, minlength=n_users * taxonomy_size)
    return counts.reshape(n_users, taxonomy_size).astype(np.int64)


def _np_count_hits(topk, u_user, u_noise, u_pick, noise_p, taxonomy_size, guess):
    n_users = topk.shape[0]
    users = np.floor(u_user * n_users).astype(np.int64)
    topics = _np_draw_topics(topk, users, u_noise, u_pick, noise_p, taxonomy_size)
    return int(np.count_nonzero(guess[topics] == users))


numpy_impl = types.SimpleNamespace(
    name="numpy",
    column_max_sum=_np_column_max_sum,
    topic_histogram=_np_topic_histogram,
    count_hits=_np_count_hits,
)


# ---------------------------------------------------------------------------
# numba path

numba_impl = None

if nb is not None:
    njit = nb.njit(cache=True, nogil=True)

    @njit
    def _nb_column_max_sum(joint):
        n_rows, n_cols = joint.shape
        total = 0.0
        if n_rows == 0:
            return total
        best = joint[0].copy()
        for i in range(1, n_rows):
            for j in range(n_cols):
                if joint[i, j] > best[j]:
                    best[j] = joint[i, j]
        for j in range(n_cols):
            total += best[j]
        return total

    @njit
    def _nb_draw_one(topk, row, u_noise, u_pick, noise_p, taxonomy_size):
        if u_noise < noise_p:
            return np.int64(np.floor(u_pick * taxonomy_size))
        k = topk.shape[1]
        return topk[row, np.int64(np.floor(u_pick * k))]

    @njit
    def _nb_topic_histogram(topk, u_noise, u_pick, noise_p, taxonomy_size):
        n_users, n_samples = u_noise.shape
        counts = np.zeros((n_users, taxonomy_size), dtype=np.int64)
        for i in range(n_users):
            for s in range(n_samples):
                t = _nb_draw_one(topk, i, u_noise[i, s], u_pick[i, s], noise_p, taxonomy_size)
                counts[i, t] += 1
        return counts

    @njit
    def _nb_count_hits(topk, u_user, u_noise, u_pick, noise_p, taxonomy_size, guess):
        n_users = topk.shape[0]
        hits = 0
        for s in range(u_user.shape[0]):
            user = np.int64(np.floor(u_user[s] * n_users))
            t = _nb_draw_one(topk, user, u_noise[s], u_pick[s], noise_p, taxonomy_size)
            if guess[t] == user:
                hits += 1
        return hits

    def _nb_column_max_sum_py(joint):
        return float(_nb_column_max_sum(np.ascontiguousarray(joint, dtype=np.float64)))

    def _nb_count_hits_py(topk, u_user, u_noise, u_pick, noise_p, taxonomy_size, guess):
        return int(
            _nb_count_hits(topk, u_user, u_noise, u_pick, float(noise_p), int(taxonomy_size), guess)
        )

    def _nb_topic_histogram_py(topk, u_noise, u_pick, noise_p, taxonomy_size):
        return _nb_topic_histogram(topk, u_noise, u_pick, float(noise_p), int(taxonomy_size))

    numba_impl = types.SimpleNamespace(
        name="numba",
        column_max_sum=_nb_column_max_sum_py,
        topic_histogram=_nb_topic_histogram_py,
        count_hits=_nb_count_hits_py,
    )


def active():
    """Return the kernel set selected by the environment."""
    if numba_impl is None or _disabled_by_env():
        return numpy_impl
    return numba_impl
