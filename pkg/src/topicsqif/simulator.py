"""Monte-Carlo simulation of the Topics API over synthetic populations.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``.  Every
unit of work (a user's epoch of browsing, a user's sample block, a block of
re-identification trials) gets its own stream keyed by
``(seed, stream id, unit...)``, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .core import Channel, posterior_bayes_vulnerability, uniform_prior
from .models import (
    ModelParams,
    Taxonomy,
    apply_taxonomy_noise,
    build_topics_channel,
    fraction_json,
    topics_closed_form_vulnerability,
)

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence(entropy=seed,spawn_key=(stream,unit...))"

_POPULATION, _CHANNEL, _TRIALS, _OBSERVE = 0, 1, 2, 3
TRIAL_BLOCK = 8192
VISITS_PER_EPOCH = 50
MAX_RETRIES = 32
EXACT_CELL_LIMIT = 10_000


class GenerationFailure(RuntimeError):
    pass


def make_rng(seed: int, *unit: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed) % 2**64, spawn_key=tuple(unit))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class DomainTopicMap:
    taxonomy: Taxonomy
    topics: tuple  # topics[d] is the 0-based topic index of domain d

    @property
    def domains(self) -> tuple[str, ...]:
        return tuple(f"d{i}" for i in range(1, len(self.topics) + 1))

    def as_dict(self) -> dict[str, str]:
        return {d: self.taxonomy.labels[t] for d, t in zip(self.domains, self.topics)}

    def __getitem__(self, domain: str) -> str:
        return self.taxonomy.labels[self.topics[int(domain[1:]) - 1]]


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    visit_counts: tuple  # one {domain: count} mapping per epoch
    topk: tuple  # one sorted tuple of topic labels per epoch


@dataclass
class ObservationLog:
    seed: int
    rng_algorithm: str = RNG_ALGORITHM
    records: list = field(default_factory=list)  # (user id, epoch, topic label)


def compute_top_k(visit_counts: Mapping, topic_map: Mapping, k: int) -> tuple:
    """Top ``k`` topics by aggregated visit count, ties to the smaller topic identifier.

    Labels of the form ``t<n>`` and plain integers order numerically.
    """
    totals: dict = {}
    for domain, count in visit_counts.items():
        if count > 0:
            t = topic_map[domain]
            totals[t] = totals.get(t, 0) + count
    if len(totals) < k:
        raise ValueError(f"visits span {len(totals)} topics, fewer than k={k}")
    ranked = sorted(totals, key=lambda t: (-totals[t], _topic_key(t)))
    return tuple(sorted(ranked[:k], key=_topic_key))


def _topic_key(t):
    if isinstance(t, str) and t[:1] == "t" and t[1:].isdigit():
        return (0, int(t[1:]), "")
    if isinstance(t, (int, np.integer)):
        return (0, int(t), "")
    return (1, 0, str(t))


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1)
    return w / w.sum()


def synthesize_population(
    params: ModelParams,
    n_domains: int,
    seed: int,
    visits_per_epoch: int = VISITS_PER_EPOCH,
    max_retries: int = MAX_RETRIES,
) -> tuple[DomainTopicMap, list[UserProfile]]:
    """Random domain-to-topic map and per-epoch browsing for ``params.n_users`` users.

    Each user ranks the domains by a private random permutation and visits
    them with Zipf(1) probabilities.
    """
    k = params.k
    if n_domains < k:
        raise ValueError(f"{n_domains} domains cannot reach k={k} distinct topics")
    if visits_per_epoch < k:
        raise ValueError("visits_per_epoch must be at least k")
    tax = Taxonomy(params.taxonomy_size)

    rng = make_rng(seed, _POPULATION)
    for _ in range(max_retries):
        topics = rng.integers(tax.size, size=n_domains)
        if len(np.unique(topics)) >= k:
            break
    else:
        raise GenerationFailure(
            f"domain map over {n_domains} domains never covered k={k} topics in {max_retries} tries"
        )
    dmap = DomainTopicMap(tax, tuple(int(t) for t in topics))
    labels = dmap.domains
    weights = _zipf_weights(n_domains)

    profiles = []
    for user in range(params.n_users):
        counts_by_epoch, topk_by_epoch = [], []
        for epoch in range(params.epochs):
            urng = make_rng(seed, _POPULATION, user, epoch)
            for _ in range(max_retries):
                order = urng.permutation(n_domains)
                visits = urng.multinomial(visits_per_epoch, weights)
                counts = np.zeros(n_domains, dtype=np.int64)
                counts[order] = visits
                if len(np.unique(topics[counts > 0])) >= k:
                    break
            else:
                raise GenerationFailure(
                    f"user {user}, epoch {epoch}: visits never spanned k={k} topics "
                    f"in {max_retries} tries"
                )
            vc = {labels[d]: int(c) for d, c in enumerate(counts) if c > 0}
            counts_by_epoch.append(vc)
            topk_by_epoch.append(compute_top_k(vc, dmap, k))
        profiles.append(UserProfile(user, tuple(counts_by_epoch), tuple(topk_by_epoch)))
    return dmap, profiles


def _topk_matrix(profiles: Sequence, taxonomy: Taxonomy, epoch: int = 0) -> np.ndarray:
    rows = []
    for p in profiles:
        topk = p.topk[epoch] if isinstance(p, UserProfile) else p
        rows.append(sorted(taxonomy.index(t) for t in topk))
    if not rows or not rows[0]:
        raise ValueError("empty top-k set")
    if len({len(r) for r in rows}) != 1:
        raise ValueError("top-k sets differ in size")
    return np.array(rows, dtype=np.int64)


def _profile_sets(profiles: Sequence, epoch: int = 0) -> list:
    return [p.topk[epoch] if isinstance(p, UserProfile) else tuple(p) for p in profiles]


def _float_p(p) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability must lie in [0, 1], got {p}")
    return p


def sample_observed_topic(topk: Iterable, taxonomy: Taxonomy, p_noise, rng: np.random.Generator) -> str:
    """One API answer: a uniform top-k topic, or with prob. ``p_noise`` a uniform taxonomy topic."""
    topk = list(topk)
    if not topk:
        raise ValueError("empty top-k set")
    row = _topk_matrix([topk], taxonomy)
    u_noise, u_pick = rng.random(2)
    idx = _draw_index(row, u_noise, u_pick, _float_p(p_noise), taxonomy.size)
    return taxonomy.labels[idx]


def _draw_index(row: np.ndarray, u_noise: float, u_pick: float, p: float, size: int) -> int:
    # scalar twin of the kernels' draw rule
    if u_noise < p:
        return int(math.floor(u_pick * size))
    return int(row[0, int(math.floor(u_pick * row.shape[1]))])


def estimate_empirical_channel(
    profiles: Sequence,
    taxonomy: Taxonomy,
    p_noise,
    samples_per_user: int,
    seed: int,
    epoch: int = 0,
) -> Channel:
    """Normalized histogram of simulated API answers, one row per user, taxonomy columns."""
    if samples_per_user < 1:
        raise ValueError("samples_per_user must be >= 1")
    topk = _topk_matrix(profiles, taxonomy, epoch)
    n_users = topk.shape[0]
    u_noise = np.empty((n_users, samples_per_user))
    u_pick = np.empty((n_users, samples_per_user))
    for user in range(n_users):
        rng = make_rng(seed, _CHANNEL, user, epoch)
        u_noise[user] = rng.random(samples_per_user)
        u_pick[user] = rng.random(samples_per_user)
    counts = _kernels.active().topic_histogram(topk, u_noise, u_pick, _float_p(p_noise), taxonomy.size)
    entries = counts / samples_per_user
    labels = tuple(f"x{i}" for i in range(1, n_users + 1))
    return Channel(labels, taxonomy.labels, entries)


def analytic_channel(profiles: Sequence, taxonomy: Taxonomy, p_noise, epoch: int = 0) -> Channel:
    """Topics channel over the full taxonomy, with noise mixed in when ``p_noise > 0``.

    Exact arithmetic is used when the matrix stays under ``EXACT_CELL_LIMIT`` cells.
    """
    sets = _profile_sets(profiles, epoch)
    base = build_topics_channel(sets, taxonomy)
    exact = len(sets) * taxonomy.size <= EXACT_CELL_LIMIT
    if not exact:
        base = base.to_float()
    p = _as_fraction(p_noise) if exact else float(p_noise)
    return apply_taxonomy_noise(base, taxonomy, p)


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    return Fraction(str(p))


@dataclass(frozen=True)
class ReidentificationResult:
    successes: int
    trials: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.trials)


def adversary_guesses(channel: Channel) -> np.ndarray:
    """For each column, the first user (ascending) maximizing the posterior under a uniform prior."""
    return np.argmax(channel.entries.astype(np.float64), axis=0).astype(np.int64)


def reidentification_experiment(
    profiles: Sequence,
    taxonomy: Taxonomy,
    p_noise,
    trials: int,
    seed: int,
    epoch: int = 0,
) -> ReidentificationResult:
    """Draw a user uniformly, observe one topic, guess the most likely user; count hits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    topk = _topk_matrix(profiles, taxonomy, epoch)
    guess = adversary_guesses(analytic_channel(profiles, taxonomy, p_noise, epoch))
    kern = _kernels.active()
    p = _float_p(p_noise)
    hits = 0
    for block, start in enumerate(range(0, trials, TRIAL_BLOCK)):
        n = min(TRIAL_BLOCK, trials - start)
        rng = make_rng(seed, _TRIALS, epoch, block)
        u = rng.random((3, n))
        hits += kern.count_hits(topk, u[0], u[1], u[2], p, taxonomy.size, guess)
    return ReidentificationResult(hits, trials)


def observe(profiles: Sequence[UserProfile], taxonomy: Taxonomy, p_noise, seed: int) -> ObservationLog:
    """One API answer per user per epoch for a single caller."""
    log = ObservationLog(seed=seed)
    p = _float_p(p_noise)
    for prof in profiles:
        for epoch, topk in enumerate(prof.topk):
            rng = make_rng(seed, _OBSERVE, prof.user_id, epoch)
            row = _topk_matrix([topk], taxonomy)
            u_noise, u_pick = rng.random(2)
            idx = _draw_index(row, u_noise, u_pick, p, taxonomy.size)
            log.records.append((prof.user_id, epoch, taxonomy.labels[idx]))
    return log


# ---------------------------------------------------------------------------
# config-driven runs


@dataclass(frozen=True)
class SimulationConfig:
    users: int
    domains: int
    taxonomy_size: int
    k: int
    noise_p: float
    epochs: int
    seed: int
    samples_per_user: int
    trials: int
    profiles: tuple | None = None  # explicit top-k sets (topic labels); bypasses synthesis

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimulationConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = known - set(data) - {"profiles"}
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        kw = dict(data)
        for key in known - {"profiles", "noise_p"}:
            v = kw[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValueError(f"config key {key!r} must be an integer, got {v!r}")
        if kw.get("profiles") is not None:
            kw["profiles"] = tuple(tuple(p) for p in kw["profiles"])
        cfg = cls(**kw)
        cfg.model_params()
        if cfg.samples_per_user < 1 or cfg.trials < 1:
            raise ValueError("samples_per_user and trials must be >= 1")
        if cfg.profiles is not None and len(cfg.profiles) != cfg.users:
            raise ValueError(f"{len(cfg.profiles)} profiles given for users={cfg.users}")
        return cfg

    def model_params(self) -> ModelParams:
        return ModelParams(
            n_users=self.users,
            n_contexts=self.domains,
            taxonomy_size=self.taxonomy_size,
            k=self.k,
            noise_p=self.noise_p,
            epochs=self.epochs,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        if self.profiles is None:
            d.pop("profiles")
        else:
            d["profiles"] = [list(p) for p in self.profiles]
        return d


def _round(x: float) -> float:
    return float(f"{x:.6g}")


def _population(cfg: SimulationConfig, tax: Taxonomy) -> list[UserProfile]:
    if cfg.profiles is None:
        _, profiles = synthesize_population(cfg.model_params(), cfg.domains, cfg.seed)
        return profiles
    profiles = []
    for user, topk in enumerate(cfg.profiles):
        if len(set(topk)) != cfg.k:
            raise ValueError(f"profile {user} does not have exactly k={cfg.k} topics")
        for t in topk:
            tax.index(t)
        ordered = tuple(sorted(topk, key=tax.index))
        profiles.append(UserProfile(user, tuple({} for _ in range(cfg.epochs)), (ordered,) * cfg.epochs))
    return profiles


def run_simulation(cfg: SimulationConfig) -> dict:
    """Analytic vs. empirical comparison for every epoch; returns a JSON-ready report."""
    tax = Taxonomy(cfg.taxonomy_size)
    profiles = _population(cfg, tax)
    prior = uniform_prior(cfg.users)
    epochs = []
    for epoch in range(cfg.epochs):
        sets = _profile_sets(profiles, epoch)
        m_observed = len({t for s in sets for t in s})
        channel = analytic_channel(profiles, tax, cfg.noise_p, epoch)
        post_v = posterior_bayes_vulnerability(prior if channel.exact else uniform_prior(cfg.users, exact=False), channel)
        prior_v = Fraction(1, cfg.users)
        mult = post_v / prior_v if isinstance(post_v, Fraction) else float(post_v) * cfg.users

        empirical = estimate_empirical_channel(profiles, tax, cfg.noise_p, cfg.samples_per_user, cfg.seed, epoch)
        linf = float(np.max(np.abs(empirical.entries - channel.entries.astype(np.float64))))
        reid = reidentification_experiment(profiles, tax, cfg.noise_p, cfg.trials, cfg.seed, epoch)
        deviation = abs(reid.rate - float(post_v))
        sigma = math.sqrt(float(post_v) * (1 - float(post_v)) / cfg.trials)
        epochs.append(
            {
                "epoch": epoch,
                "observed_topics": m_observed,
                "analytic": {
                    "prior_vulnerability": fraction_json(prior_v),
                    "posterior_vulnerability": fraction_json(post_v),
                    "multiplicative_leakage": fraction_json(mult),
                    "noiseless_closed_form_vulnerability": fraction_json(
                        topics_closed_form_vulnerability(cfg.users, m_observed, cfg.k)
                    ),
                },
                "empirical": {
                    "channel_linf_error": _round(linf),
                    "successes": reid.successes,
                    "trials": reid.trials,
                    "success_rate": _round(reid.rate),
                    "success_rate_stderr": _round(reid.stderr),
                    "multiplicative_leakage": _round(reid.rate * cfg.users),
                    "deviation_in_analytic_stderr": _round(deviation / sigma) if sigma > 0 else None,
                },
            }
        )
    log = observe(profiles, tax, cfg.noise_p, cfg.seed)
    return {
        "config": cfg.as_dict(),
        "rng_algorithm": RNG_ALGORITHM,
        "seed": cfg.seed,
        "profiles": [[list(t) for t in p.topk] for p in profiles],
        "observations": [list(r) for r in log.records],
        "epochs": epochs,
    }
