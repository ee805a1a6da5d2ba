"""Seeded multi-drop experiments with paired evaluation of every scheme."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import AmcTable, RadioParams, build_channel, load_amc_table
from .noma import DEFAULT_MIN_GAP_DB
from .scheduling import DropResult
from .schemes import ALL_SCHEMES, SchemeId, prepare_drop, run_scheme
from .topology import SimRegion, kmeans_cluster, sample_topology

log = logging.getLogger(__name__)

FULL_ITERATIONS = 100_000
COUNT_KEYS = ("nc_nc", "c_c", "nc_c", "comp_oma", "nc_oma")


@dataclass(frozen=True)
class ExperimentConfig:
    lambda_u: float = 100.0
    lambda_b: float = 100.0
    avg_cluster_size: float = 5.0
    gamma_th_db: float = 0.0
    schemes: tuple[SchemeId, ...] = ALL_SCHEMES
    iterations: int = FULL_ITERATIONS
    base_seed: int = 0
    radio: RadioParams = field(default_factory=RadioParams)
    region: SimRegion = field(default_factory=SimRegion)
    min_gap_db: float = DEFAULT_MIN_GAP_DB
    amc_table_path: str | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.lambda_u < 0 or self.lambda_b < 0:
            raise ValueError("densities must be non-negative")
        if self.avg_cluster_size < 1:
            raise ValueError("avg_cluster_size must be >= 1")
        object.__setattr__(self, "schemes", tuple(SchemeId(s) for s in self.schemes))

    @property
    def gamma_th(self) -> float:
        return 10.0 ** (self.gamma_th_db / 10.0)

    def with_(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)


def drop_seed(base_seed: int, index: int) -> int:
    return int(base_seed) ^ int(index)


def sample_drop(config: ExperimentConfig, index: int, table: AmcTable | None = None):
    """Topology, channel and clusters of drop ``index``; None when the drop is empty.

    The random stream is consumed in a fixed order (BSs, users, shadowing,
    K-means seeding) that does not depend on the CoMP threshold, so drops are
    identical across threshold sweeps.
    """
    table = table or load_amc_table(config.amc_table_path)
    seed = drop_seed(config.base_seed, index)
    rng = np.random.default_rng(seed)
    topo = sample_topology(config.lambda_b, config.lambda_u, config.region, rng, seed=seed)
    if topo.num_bs == 0 or topo.num_users == 0:
        return topo, None
    channel = build_channel(topo.distances(), config.radio, rng)
    plan = kmeans_cluster(topo.bs_positions, config.avg_cluster_size, rng)
    return topo, prepare_drop(topo, channel, plan, config.radio, table, config.min_gap_db)


def coverage_of(result: DropResult) -> float:
    if result.num_users == 0:
        raise ValueError("coverage is undefined for a drop without users")
    return float(np.mean(result.covered))


@dataclass
class DropSummary:
    index: int
    num_users: int
    empty: bool
    mean_rate: dict[str, float] = field(default_factory=dict)
    coverage: dict[str, float] = field(default_factory=dict)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)


def simulate_drop(config: ExperimentConfig, index: int, table: AmcTable | None = None):
    topo, drop = sample_drop(config, index, table)
    summary = DropSummary(index=index, num_users=topo.num_users, empty=drop is None)
    if drop is None:
        return summary
    for scheme in config.schemes:
        res = run_scheme(scheme, drop, config.gamma_th)
        summary.mean_rate[scheme.value] = res.mean_rate
        summary.coverage[scheme.value] = coverage_of(res)
        summary.counts[scheme.value] = dict(res.counts)
    return summary


def _run_chunk(args):
    config, indices = args
    table = load_amc_table(config.amc_table_path)
    return [simulate_drop(config, k, table) for k in indices]


@dataclass
class SchemeStats:
    mean_throughput: float
    throughput_stderr: float
    coverage: float
    coverage_stderr: float
    mean_counts: dict[str, float]


@dataclass
class AggregateResult:
    config: ExperimentConfig
    drops: int
    empty_drops: int
    stats: dict[str, SchemeStats]
    # per-drop values aligned on drop index (NaN for empty drops), for paired tests
    per_drop_rate: dict[str, np.ndarray] = field(repr=False)
    per_drop_coverage: dict[str, np.ndarray] = field(repr=False)
    mean_users: float = 0.0
    rng_flagged: bool = False


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = x[~np.isnan(x)]
    if len(x) == 0:
        return 0.0, 0.0
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return float(np.mean(x)), se


def aggregate(config: ExperimentConfig, summaries: list[DropSummary]) -> AggregateResult:
    summaries = sorted(summaries, key=lambda s: s.index)
    n = len(summaries)
    stats, per_rate, per_cov = {}, {}, {}
    for scheme in config.schemes:
        key = scheme.value
        rate = np.array([s.mean_rate.get(key, np.nan) for s in summaries])
        cov = np.array([s.coverage.get(key, np.nan) for s in summaries])
        filled = [s.counts[key] for s in summaries if not s.empty]
        counts = {
            k: (float(np.mean([c[k] for c in filled])) if filled else 0.0) for k in COUNT_KEYS
        }
        t_mean, t_se = _mean_se(rate)
        c_mean, c_se = _mean_se(cov)
        stats[key] = SchemeStats(t_mean, t_se, c_mean, c_se, counts)
        per_rate[key], per_cov[key] = rate, cov

    users = np.array([s.num_users for s in summaries], dtype=float)
    expected = config.lambda_u * config.region.area
    mean_users = float(users.mean()) if n else 0.0
    flagged = n > 0 and abs(mean_users - expected) > 4 * math.sqrt(max(expected, 1e-12) / n)
    if flagged:
        log.warning("mean user count %.2f deviates from %.2f by more than 4 sigma", mean_users, expected)
    return AggregateResult(
        config=config,
        drops=n,
        empty_drops=sum(s.empty for s in summaries),
        stats=stats,
        per_drop_rate=per_rate,
        per_drop_coverage=per_cov,
        mean_users=mean_users,
        rng_flagged=bool(flagged),
    )


def run_experiment(config: ExperimentConfig, workers: int = 1, chunk_size: int = 50) -> AggregateResult:
    """Run ``config.iterations`` paired drops; the result does not depend on ``workers``."""
    indices = list(range(config.iterations))
    if workers <= 1:
        summaries = _run_chunk((config, indices))
    else:
        chunks = [indices[i : i + chunk_size] for i in range(0, len(indices), chunk_size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = [s for part in pool.map(_run_chunk, [(config, c) for c in chunks]) for s in part]
    return aggregate(config, summaries)
