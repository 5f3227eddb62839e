"""Synthetic two-year citation networks with known structural events.

The prior year is a block model: journals sit in clusters arranged on a
ring, citing heavily inside their cluster, moderately into the two
neighbouring clusters and rarely elsewhere. Each cell rate is scaled by the
cited journal's prominence and the citing journal's activity (both
log-normal, mean one). Counts are Poisson draws taken by inverse CDF from
one uniform per cell; the posterior reuses those uniforms, except for a
``drift`` fraction of cells that are redrawn, so that identical rates give
identical counts and every difference traces back to a rate change or to
drift.

Also home to the brute-force information oracle used by the tests. It
normalises and sums term by term in decimal arithmetic and deliberately
shares nothing with :mod:`citeshift.entropy`.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from decimal import Decimal, localcontext
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.stats import poisson

from .ingest import CitationSnapshot


@dataclass(frozen=True)
class EmergentCluster:
    """Split ``size`` journals off cluster ``cluster`` into a new cluster.

    Ties between the split-off group and the rest of its old cluster fall
    from the within-cluster rate towards the neighbour rate as ``strength``
    grows; the lost volume is redirected inside the new group, so journal
    totals stay put. Strength 1 changes nothing.
    """

    size: int
    strength: float = 10.0
    cluster: int = 0
    kind: str = field(default="emergent_cluster", init=False)


@dataclass(frozen=True)
class Merge:
    cluster_a: int
    cluster_b: int
    kind: str = field(default="merge", init=False)


@dataclass(frozen=True)
class PreferentialGrowth:
    """Scale each journal's received citations by prominence ** exponent."""

    exponent: float = 1.0
    kind: str = field(default="preferential_growth", init=False)


Event = Union[EmergentCluster, Merge, PreferentialGrowth]
_EVENT_TYPES = {"emergent_cluster": EmergentCluster, "merge": Merge, "preferential_growth": PreferentialGrowth}


@dataclass(frozen=True)
class SynthConfig:
    n_journals: int = 200
    n_clusters: int = 20
    within_cluster_rate: float = 30.0
    between_cluster_rate: float = 0.1
    neighbor_cluster_rate: float = 10.0
    prominence_sigma: float = 0.3
    growth_factor: float = 1.0
    drift: float = 0.0
    events: tuple[Event, ...] = ()
    rng_seed: int = 0
    base_year: int = 1998

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.n_journals < 1:
            raise ValueError("n_journals must be positive")
        if not 1 <= self.n_clusters <= self.n_journals:
            raise ValueError("need 1 <= n_clusters <= n_journals")
        rates = (self.within_cluster_rate, self.between_cluster_rate, self.neighbor_cluster_rate)
        if min(rates) < 0 or self.prominence_sigma < 0:
            raise ValueError("rates and sigma must be non-negative")
        if self.growth_factor <= 0:
            raise ValueError("growth_factor must be positive")
        if not 0.0 <= self.drift <= 1.0:
            raise ValueError("drift must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthConfig":
        data = dict(data)
        events = []
        for ev in data.pop("events", []):
            ev = dict(ev)
            kind = ev.pop("kind")
            if kind not in _EVENT_TYPES:
                raise ValueError(f"unknown event kind {kind!r}")
            events.append(_EVENT_TYPES[kind](**ev))
        return cls(events=tuple(events), **data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["events"] = [asdict(ev) for ev in self.events]
        return out


@dataclass(frozen=True)
class GroundTruth:
    affected_journals: frozenset[str]
    event_kind: Mapping[str, str]
    clusters: Mapping[str, tuple[int, int]]
    """journal -> (prior cluster, posterior cluster)"""
    events: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "affected": sorted(self.affected_journals),
            "events": list(self.events),
            "event_kind": dict(sorted(self.event_kind.items())),
            "clusters": {j: list(c) for j, c in sorted(self.clusters.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def default_scenario(rng_seed: int = 6, strength: float = 10.0) -> SynthConfig:
    """200 journals, 20 clusters, one 5-journal emergent cluster."""
    return SynthConfig(
        n_journals=200,
        n_clusters=20,
        growth_factor=1.03,
        drift=0.1,
        events=(EmergentCluster(size=5, strength=strength),),
        rng_seed=rng_seed,
    )


def matthew_scenario(rng_seed: int = 6, exponent: float = 1.0) -> SynthConfig:
    """Leading journals grow fastest."""
    return SynthConfig(
        prominence_sigma=0.6,
        growth_factor=1.03,
        drift=0.1,
        events=(PreferentialGrowth(exponent),),
        rng_seed=rng_seed,
    )


def journal_ids(n: int) -> list[str]:
    width = max(2, len(str(n - 1)))
    return [f"J{i:0{width}d}" for i in range(n)]


def _cluster_of(config: SynthConfig) -> np.ndarray:
    return np.arange(config.n_journals) * config.n_clusters // config.n_journals


def _base_rates(config: SynthConfig, clusters: np.ndarray) -> np.ndarray:
    k = config.n_clusters
    ci, cj = clusters[:, None], clusters[None, :]
    gap = np.abs(ci - cj)
    ring = np.minimum(gap, k - gap)
    rates = np.full(ring.shape, config.between_cluster_rate)
    rates[ring == 1] = config.neighbor_cluster_rate
    rates[ring == 0] = config.within_cluster_rate
    return rates


def _to_snapshot(counts: np.ndarray, ids: list[str], year: int) -> CitationSnapshot:
    rows, cols = np.nonzero(counts)
    rel = {(ids[r], ids[c]): int(counts[r, c]) for r, c in zip(rows.tolist(), cols.tolist())}
    return CitationSnapshot(rel, year, frozenset(ids))


def generate_pair(config: SynthConfig) -> tuple[CitationSnapshot, CitationSnapshot, GroundTruth]:
    """Prior and posterior snapshots plus the ground truth of applied events."""
    n = config.n_journals
    rng = np.random.default_rng(config.rng_seed)
    ids = journal_ids(n)
    clusters = _cluster_of(config)

    prominence = np.exp(config.prominence_sigma * rng.standard_normal(n))
    prominence /= prominence.mean()
    activity = np.exp(config.prominence_sigma * rng.standard_normal(n))
    activity /= activity.mean()
    uniforms = rng.random((n, n))
    redraw = rng.random((n, n)) < config.drift
    fresh = rng.random((n, n))
    post_uniforms = np.where(redraw, fresh, uniforms)

    block = _base_rates(config, clusters)
    post_block = block.copy()
    row_scale = np.ones(n)
    post_clusters = clusters.copy()
    affected: dict[str, str] = {}
    next_cluster = config.n_clusters

    for ev in config.events:
        if isinstance(ev, EmergentCluster):
            members = np.flatnonzero(clusters == ev.cluster)
            if ev.size < 1 or ev.size > members.size:
                raise ValueError(f"emergent size {ev.size} does not fit cluster {ev.cluster}")
            if ev.strength < 1:
                raise ValueError("emergent strength must be >= 1")
            new, rest = members[: ev.size], members[ev.size :]
            w, nb = config.within_cluster_rate, config.neighbor_cluster_rate
            cross = nb + (w - nb) / ev.strength
            inner = w + (rest.size / new.size) * (w - cross)
            post_block[np.ix_(new, rest)] = cross
            post_block[np.ix_(rest, new)] = cross
            post_block[np.ix_(new, new)] = inner
            post_clusters[new] = next_cluster
            next_cluster += 1
            for j in new:
                affected[ids[j]] = ev.kind
        elif isinstance(ev, Merge):
            a = np.flatnonzero(clusters == ev.cluster_a)
            b = np.flatnonzero(clusters == ev.cluster_b)
            if a.size == 0 or b.size == 0 or ev.cluster_a == ev.cluster_b:
                raise ValueError(f"cannot merge clusters {ev.cluster_a} and {ev.cluster_b}")
            post_block[np.ix_(a, b)] = config.within_cluster_rate
            post_block[np.ix_(b, a)] = config.within_cluster_rate
            post_clusters[b] = ev.cluster_a
            for j in np.concatenate([a, b]):
                affected[ids[j]] = ev.kind
        elif isinstance(ev, PreferentialGrowth):
            row_scale = row_scale * prominence**ev.exponent
            for j in np.flatnonzero(prominence > 1.0):
                affected.setdefault(ids[j], ev.kind)
        else:
            raise TypeError(f"unknown event {ev!r}")

    weights = np.outer(prominence, activity)
    prior_counts = poisson.ppf(_open_unit(uniforms), block * weights)
    post_rates = post_block * weights * row_scale[:, None] * config.growth_factor
    post_counts = poisson.ppf(_open_unit(post_uniforms), post_rates)

    prior = _to_snapshot(prior_counts.astype(np.int64), ids, config.base_year)
    posterior = _to_snapshot(post_counts.astype(np.int64), ids, config.base_year + 1)
    truth = GroundTruth(
        affected_journals=frozenset(affected),
        event_kind=affected,
        clusters={ids[i]: (int(clusters[i]), int(post_clusters[i])) for i in range(n)},
        events=tuple(asdict(ev) for ev in config.events),
    )
    return prior, posterior, truth


def _open_unit(u: np.ndarray) -> np.ndarray:
    return np.clip(u, np.finfo(np.float64).tiny, 1.0 - 2.0**-53)


# -- oracle --------------------------------------------------------------

_PREC = 50


def _dlog2(x: Decimal) -> Decimal:
    return x.ln() / Decimal(2).ln()


def oracle_expected_information(p: Sequence[float], q: Sequence[float]) -> float:
    """sum q log2(q / p), term by term, at 50 significant digits."""
    p, q = list(np.asarray(p, dtype=float).ravel()), list(np.asarray(q, dtype=float).ravel())
    if len(p) != len(q):
        raise ValueError("length mismatch")
    with localcontext() as ctx:
        ctx.prec = _PREC
        total = Decimal(0)
        for pi, qi in zip(p, q):
            if qi == 0:
                continue
            if pi == 0:
                raise ValueError("q > 0 where p = 0")
            dq, dp = Decimal(qi), Decimal(pi)
            total += dq * _dlog2(dq / dp)
        return float(total)


def oracle_information(f_p: Mapping, f_q: Mapping) -> float:
    """Expected information from raw counts, without the decomposition.

    Support is the prior's positive categories; posterior counts outside it
    are dropped. Both sides are normalised over that support.
    """
    support = [k for k, v in f_p.items() if v > 0]
    if not support:
        raise ValueError("no prior support")
    with localcontext() as ctx:
        ctx.prec = _PREC
        n_p = sum(Decimal(int(f_p[k])) for k in support)
        n_q = sum(Decimal(int(f_q.get(k, 0))) for k in support)
        if n_q == 0:
            raise ValueError("no comparable support")
        total = Decimal(0)
        for k in support:
            fq = int(f_q.get(k, 0))
            if fq == 0:
                continue
            qi = Decimal(fq) / n_q
            pi = Decimal(int(f_p[k])) / n_p
            total += qi * _dlog2(qi / pi)
        return float(total)


# -- scoring ---------------------------------------------------------------


@dataclass(frozen=True)
class DetectionScore:
    k: int
    precision: float
    recall: float
    hits: tuple[str, ...]


def score_detection(ranking, truth: GroundTruth, k: int) -> DetectionScore:
    """Precision and recall at k of the affected journals.

    ``ranking`` is a ChangeReport (its vector ranking is used) or an ordered
    sequence of journal ids or of records with a ``journal`` attribute.
    """
    if hasattr(ranking, "vector_ranking"):
        ranking = ranking.vector_ranking()
    order = [r if isinstance(r, str) else r.journal for r in ranking]
    if k > len(order):
        warnings.warn(f"k={k} exceeds ranking size {len(order)}; clamped", stacklevel=2)
        k = len(order)
    top = order[:k]
    hits = tuple(j for j in top if j in truth.affected_journals)
    precision = len(hits) / k if k and truth.affected_journals else 0.0
    recall = len(hits) / len(truth.affected_journals) if truth.affected_journals else 1.0
    return DetectionScore(k, precision, recall, hits)

