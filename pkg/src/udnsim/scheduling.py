"""CoMP time fractions, equal-share scheduling fractions and achieved user rates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import AmcTable, RadioParams, link_rate

# an entity is one scheduling unit: an OMA user or a NOMA pair served by superposition
Entity = list[tuple[int, float]]


def _ratio(comp: int, other: int) -> float:
    total = comp + other
    return comp / total if total else 0.0


def theta_scheme_a(comp_pairs: int, comp_oma: int, nc_pairs: int) -> float:
    return _ratio(comp_pairs + comp_oma, nc_pairs)


def theta_scheme_b(ncc_pairs: int, comp_oma: int, nc_pairs: int, nc_oma: int) -> float:
    return _ratio(ncc_pairs + comp_oma, nc_pairs + nc_oma)


def theta_scheme_c(cc_pairs: int, comp_oma: int, nc_pairs: int, nc_oma: int) -> float:
    return _ratio(cc_pairs + comp_oma, nc_pairs + nc_oma)


def theta_comp_only(comp_users: int, nc_users: int) -> float:
    return _ratio(comp_users, nc_users)


def beta_fractions(num_entities: int) -> list[float]:
    """Equal time share for every entity of a phase."""
    return [1.0 / num_entities] * num_entities if num_entities else []


@dataclass
class ScheduleAllocation:
    """Per-cluster CoMP-phase entities and per-BS non-CoMP-phase entities with their fractions."""

    theta: dict[int, float] = field(default_factory=dict)
    comp_entities: dict[int, list[Entity]] = field(default_factory=dict)
    bs_entities: dict[int, list[Entity]] = field(default_factory=dict)
    cluster_of_bs: np.ndarray | None = None

    @property
    def beta_comp(self) -> dict[int, list[float]]:
        return {c: beta_fractions(len(e)) for c, e in self.comp_entities.items()}

    @property
    def beta_bs(self) -> dict[int, list[float]]:
        return {b: beta_fractions(len(e)) for b, e in self.bs_entities.items()}

    def non_comp_share(self, bs: int) -> float:
        if self.cluster_of_bs is None:
            return 1.0
        return 1.0 - self.theta.get(int(self.cluster_of_bs[bs]), 0.0)


@dataclass
class DropResult:
    scheme: str
    rate: np.ndarray
    sinr: np.ndarray
    covered: np.ndarray
    counts: dict[str, int]
    alloc: ScheduleAllocation | None = field(default=None, repr=False)
    pairs: list = field(default_factory=list, repr=False)

    @property
    def num_users(self) -> int:
        return len(self.rate)

    @property
    def mean_rate(self) -> float:
        return float(self.rate.mean())

    @property
    def coverage(self) -> float:
        return float(self.covered.mean())


def user_rates(
    alloc: ScheduleAllocation,
    num_users: int,
    params: RadioParams,
    table: AmcTable,
    scheme: str,
    counts: dict[str, int] | None = None,
    pairs: list | None = None,
) -> DropResult:
    """Rate of each user: phase fraction x entity share x link rate at its scheduled SINR.

    Both members of a NOMA pair get the whole entity share. A user that shows up
    in several entities (a CoMP user paired at several BSs) accumulates them.
    """
    time_share = np.zeros(num_users)
    sinr = np.full(num_users, np.nan)
    seen = np.zeros(num_users, dtype=bool)

    def serve(entities, phase):
        beta = beta_fractions(len(entities))
        for entity, b in zip(entities, beta):
            for user, s in entity:
                time_share[user] += phase * b
                sinr[user] = s
                seen[user] = True

    for c, entities in alloc.comp_entities.items():
        serve(entities, alloc.theta.get(c, 0.0))
    for bs, entities in alloc.bs_entities.items():
        serve(entities, alloc.non_comp_share(bs))

    if not seen.all():
        missing = np.flatnonzero(~seen)[:5].tolist()
        raise RuntimeError(f"{scheme}: users without a scheduling phase, e.g. {missing}")
    eff = table.efficiency(sinr)
    rate = time_share * link_rate(eff, params)
    return DropResult(
        scheme=scheme, rate=rate, sinr=sinr, covered=eff > 0, counts=counts or {}, alloc=alloc,
        pairs=pairs or [],
    )
