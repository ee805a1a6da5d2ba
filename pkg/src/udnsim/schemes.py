"""Per-drop evaluation of the CoMP/NOMA schemes and the three reference systems."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .association import Association, associate, comp_sinr_all
from .channel import AmcTable, ChannelState, RadioParams, oma_sinr_all, received_sinr
from .noma import (
    DEFAULT_MIN_GAP_DB,
    ZETA_GRID,
    NomaPair,
    PairKind,
    aup_match,
    aup_pair,
    nc_c_strong_sinr,
    nc_c_weak_sinr,
    weak_profile,
    zeta_for_pair,
)
from .scheduling import (
    DropResult,
    ScheduleAllocation,
    theta_comp_only,
    theta_scheme_a,
    theta_scheme_b,
    theta_scheme_c,
    user_rates,
)
from .topology import ClusterPlan, Topology


class SchemeId(str, Enum):
    SCHEME_A = "scheme_a"
    SCHEME_B = "scheme_b"
    SCHEME_C = "scheme_c"
    BENCHMARK = "benchmark"
    COMP_ONLY = "comp_only"
    NOMA_ONLY = "noma_only"

    @classmethod
    def parse(cls, name: str) -> SchemeId:
        key = name.strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {name!r} (expected one of: {valid})") from None


ALL_SCHEMES = tuple(SchemeId)
THRESHOLD_SCHEMES = (SchemeId.SCHEME_B, SchemeId.SCHEME_C, SchemeId.COMP_ONLY)


@dataclass(eq=False)
class DropState:
    """Everything the schemes share for one drop; treated as read-only."""

    topology: Topology
    channel: ChannelState
    plan: ClusterPlan
    assoc: Association
    oma: np.ndarray
    comp: np.ndarray
    params: RadioParams
    table: AmcTable
    min_gap_db: float = DEFAULT_MIN_GAP_DB

    @property
    def num_users(self) -> int:
        return len(self.oma)

    @property
    def serving(self) -> np.ndarray:
        return self.assoc.serving_bs

    @property
    def user_cluster(self) -> np.ndarray:
        return self.assoc.cluster_of_user

    def users_by_bs(self, users=None) -> dict[int, list[int]]:
        users = range(self.num_users) if users is None else users
        out = defaultdict(list)
        for u in users:
            out[int(self.serving[u])].append(int(u))
        return dict(sorted(out.items()))

    def users_by_cluster(self, users=None) -> dict[int, list[int]]:
        users = range(self.num_users) if users is None else users
        out = defaultdict(list)
        for u in users:
            out[int(self.user_cluster[u])].append(int(u))
        return dict(sorted(out.items()))


def prepare_drop(
    topology: Topology,
    channel: ChannelState,
    plan: ClusterPlan,
    params: RadioParams,
    table: AmcTable,
    min_gap_db: float = DEFAULT_MIN_GAP_DB,
) -> DropState:
    assoc = associate(channel, plan)
    return DropState(
        topology=topology,
        channel=channel,
        plan=plan,
        assoc=assoc,
        oma=oma_sinr_all(channel, assoc.serving_bs),
        comp=comp_sinr_all(channel, plan, assoc),
        params=params,
        table=table,
        min_gap_db=min_gap_db,
    )


# --- admission: pick zeta, then confirm both members keep their AMC level ----------


def _admit(drop: DropState, strong, weak, s_ref, w_ref, joint, new_mask, share=1.0, leak=0.0):
    """Return ``(zeta, strong_sinr, weak_sinr)`` or None.

    ``joint``/``share``/``leak`` describe how the weak user is served before
    this pairing; ``new_mask`` flags the BSs that will superpose the strong
    stream. The strong user's SINR is ``zeta`` times ``s_ref``'s geometry.
    """
    ch, table = drop.channel, drop.table
    # strong SINR scales with zeta; hopeless even at the largest grid share (small slack for rounding)
    if table.efficiency(ZETA_GRID[-1] * s_ref * (1 + 1e-9)) < table.efficiency(s_ref):
        return None
    p, n0 = ch.subchannel_power_w, ch.noise_power_w
    profile = weak_profile(ch.gain[weak], joint, p, n0, new_mask, share, leak)
    zeta = zeta_for_pair(s_ref, w_ref, profile, table)
    if zeta is None:
        return None
    new_share = np.where(new_mask, share - zeta, share)
    new_leak = np.where(new_mask, leak + zeta, leak)
    w_sinr = float(received_sinr(ch.gain[weak], joint, p, n0, new_share, new_leak))
    s_joint = new_mask
    s_sinr = float(received_sinr(ch.gain[strong], s_joint, p, n0, share=zeta))
    if table.efficiency(w_sinr) < table.efficiency(w_ref):
        return None
    if table.efficiency(s_sinr) < table.efficiency(s_ref):
        return None
    return zeta, s_sinr, w_sinr


def _one_hot(n, idx):
    m = np.zeros(n, dtype=bool)
    m[idx] = True
    return m


def _pair_at_bs(drop: DropState, bs: int, users: list[int]):
    """AUP among users of one BS on their OMA SINRs -> (NC-NC pairs, unpaired)."""
    joint = _one_hot(drop.channel.num_bs, bs)
    cache = {}

    def admit(s, w):
        res = _admit(drop, s, w, drop.oma[s], drop.oma[w], joint, joint)
        if res is None:
            return None
        cache[s, w] = res
        return res[0]

    raw, unpaired = aup_pair([(u, drop.oma[u]) for u in users], drop.min_gap_db, admit)
    pairs = []
    for s, w, z in raw:
        _, s_sinr, w_sinr = cache[s, w]
        pairs.append(NomaPair(s, w, PairKind.NC_NC, z, bs, s_sinr, w_sinr))
    return pairs, unpaired


def _pair_in_cluster(drop: DropState, cluster: int, users: list[int]):
    """AUP among CoMP users of one cluster on their joint SINRs -> (C-C pairs, unpaired)."""
    joint = drop.plan.cluster_of_bs == cluster
    cache = {}

    def admit(s, w):
        res = _admit(drop, s, w, drop.comp[s], drop.comp[w], joint, joint)
        if res is None:
            return None
        cache[s, w] = res
        return res[0]

    raw, unpaired = aup_pair([(u, drop.comp[u]) for u in users], drop.min_gap_db, admit)
    pairs = []
    for s, w, z in raw:
        _, s_sinr, w_sinr = cache[s, w]
        pairs.append(NomaPair(s, w, PairKind.C_C, z, cluster, s_sinr, w_sinr))
    return pairs, unpaired


def _counts(pairs, comp_oma=0, nc_oma=0):
    return {
        "nc_nc": sum(p.kind is PairKind.NC_NC for p in pairs),
        "c_c": sum(p.kind is PairKind.C_C for p in pairs),
        "nc_c": sum(p.kind is PairKind.NC_C for p in pairs),
        "comp_oma": comp_oma,
        "nc_oma": nc_oma,
    }


def _pair_entity(p: NomaPair):
    return [(p.strong, p.strong_sinr), (p.weak, p.weak_sinr)]


# --- schemes ----------------------------------------------------------------------------


def run_scheme_a(drop: DropState) -> DropResult:
    """NOMA first at every BS, then CoMP (and C-C pairing) for whoever is left unpaired."""
    alloc = ScheduleAllocation(cluster_of_bs=drop.plan.cluster_of_bs)
    all_pairs, promoted = [], []
    nc_pairs_in = defaultdict(int)
    for bs, users in drop.users_by_bs().items():
        pairs, unpaired = _pair_at_bs(drop, bs, users)
        all_pairs += pairs
        promoted += unpaired
        if pairs:
            alloc.bs_entities[bs] = [_pair_entity(p) for p in pairs]
            nc_pairs_in[int(drop.plan.cluster_of_bs[bs])] += len(pairs)

    comp_oma = 0
    for c, users in drop.users_by_cluster(promoted).items():
        pairs, unpaired = _pair_in_cluster(drop, c, users)
        all_pairs += pairs
        comp_oma += len(unpaired)
        alloc.comp_entities[c] = [_pair_entity(p) for p in pairs]
        alloc.comp_entities[c] += [[(u, drop.comp[u])] for u in unpaired]
        alloc.theta[c] = theta_scheme_a(len(pairs), len(unpaired), nc_pairs_in[c])
    for c in nc_pairs_in:
        alloc.theta.setdefault(c, theta_scheme_a(0, 0, nc_pairs_in[c]))
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.SCHEME_A.value,
        _counts(all_pairs, comp_oma=comp_oma), all_pairs,
    )


def _ncc_grouping(drop: DropState, cluster: int, comp_users, nc_by_bs):
    """Iteratively form non-CoMP/CoMP pairs in one cluster (CoMP user always weak).

    Mutates ``nc_by_bs`` by removing non-CoMP users that were paired. Returns the
    pairs and, for every paired CoMP user, the strong share used at each BS.
    """
    ch = drop.channel
    joint = drop.plan.cluster_of_bs == cluster
    bss = [int(b) for b in drop.plan.members[cluster]]
    zeta_at: dict[int, dict[int, float]] = defaultdict(dict)
    pairs: list[NomaPair] = []

    for _sweep in range(len(bss)):
        admitted = 0
        for bs in bss:
            g2 = [(u, drop.oma[u]) for u in nc_by_bs.get(bs, [])]
            if not g2:
                continue
            g2_max = max(s for _, s in g2)
            g1 = [(w, drop.comp[w]) for w in comp_users if drop.comp[w] < g2_max and bs not in zeta_at[w]]
            if not g1:
                continue
            g1_max = max(s for _, s in g1)
            g2 = [(u, s) for u, s in g2 if s > g1_max]
            new_mask = _one_hot(ch.num_bs, bs)
            cache = {}

            def admit(s, w, bs=bs, new_mask=new_mask, cache=cache):
                share = np.ones(ch.num_bs)
                leak = np.zeros(ch.num_bs)
                for b, z in zeta_at[w].items():
                    share[b] -= z
                    leak[b] += z
                res = _admit(drop, s, w, drop.oma[s], drop.comp[w], joint, new_mask, share, leak)
                if res is not None:
                    cache[s, w] = res
                    return res[0]
                return None

            raw, _ = aup_match(g2, g1, drop.min_gap_db, admit)
            for s, w, z in raw:
                zeta_at[w][bs] = z
                nc_by_bs[bs].remove(s)
                pairs.append(NomaPair(s, w, PairKind.NC_C, z, bs, cache[s, w][1]))
            admitted += len(raw)
        if not admitted:
            break

    # the weak user's final SINR reflects every BS it ended up paired at
    for p in pairs:
        p.weak_sinr = nc_c_weak_sinr(p.weak, cluster, zeta_at[p.weak], drop.plan, ch)
        p.strong_sinr = nc_c_strong_sinr(p.strong, p.entity, p.zeta, ch)
    return pairs, {w: dict(z) for w, z in zeta_at.items() if z}


def run_scheme_b(drop: DropState, gamma_th: float) -> DropResult:
    """CoMP first by SINR threshold, then non-CoMP/CoMP pairing and per-BS NC-NC pairing."""
    is_comp = drop.oma < gamma_th
    alloc = ScheduleAllocation(cluster_of_bs=drop.plan.cluster_of_bs)
    all_pairs = []
    comp_oma = nc_oma = 0
    comp_by_cluster = drop.users_by_cluster(np.flatnonzero(is_comp))
    nc_by_cluster = drop.users_by_cluster(np.flatnonzero(~is_comp))

    for c in sorted(set(comp_by_cluster) | set(nc_by_cluster)):
        comp_users = comp_by_cluster.get(c, [])
        nc_by_bs = drop.users_by_bs(nc_by_cluster.get(c, []))
        ncc_pairs, zeta_at = _ncc_grouping(drop, c, comp_users, nc_by_bs) if comp_users else ([], {})
        leftover_comp = [u for u in comp_users if u not in zeta_at]

        n_ncnc = n_ncoma = 0
        for bs, users in nc_by_bs.items():
            if not users:
                continue
            pairs, unpaired = _pair_at_bs(drop, bs, users)
            all_pairs += pairs
            alloc.bs_entities[bs] = [_pair_entity(p) for p in pairs]
            alloc.bs_entities[bs] += [[(u, drop.oma[u])] for u in unpaired]
            n_ncnc += len(pairs)
            n_ncoma += len(unpaired)

        all_pairs += ncc_pairs
        alloc.comp_entities[c] = [_pair_entity(p) for p in ncc_pairs]
        alloc.comp_entities[c] += [[(u, drop.comp[u])] for u in leftover_comp]
        alloc.theta[c] = theta_scheme_b(len(ncc_pairs), len(leftover_comp), n_ncnc, n_ncoma)
        comp_oma += len(leftover_comp)
        nc_oma += n_ncoma
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.SCHEME_B.value,
        _counts(all_pairs, comp_oma, nc_oma), all_pairs,
    )


def run_scheme_c(drop: DropState, gamma_th: float) -> DropResult:
    """Threshold CoMP with C-C pairs inside clusters and NC-NC pairs at BSs; no mixed pairs."""
    is_comp = drop.oma < gamma_th
    alloc = ScheduleAllocation(cluster_of_bs=drop.plan.cluster_of_bs)
    all_pairs = []
    comp_oma = nc_oma = 0
    nc_counts = defaultdict(lambda: [0, 0])
    for bs, users in drop.users_by_bs(np.flatnonzero(~is_comp)).items():
        pairs, unpaired = _pair_at_bs(drop, bs, users)
        all_pairs += pairs
        alloc.bs_entities[bs] = [_pair_entity(p) for p in pairs]
        alloc.bs_entities[bs] += [[(u, drop.oma[u])] for u in unpaired]
        c = int(drop.plan.cluster_of_bs[bs])
        nc_counts[c][0] += len(pairs)
        nc_counts[c][1] += len(unpaired)
        nc_oma += len(unpaired)

    comp_by_cluster = drop.users_by_cluster(np.flatnonzero(is_comp))
    for c in sorted(set(comp_by_cluster) | set(nc_counts)):
        pairs, unpaired = _pair_in_cluster(drop, c, comp_by_cluster.get(c, []))
        all_pairs += pairs
        comp_oma += len(unpaired)
        alloc.comp_entities[c] = [_pair_entity(p) for p in pairs]
        alloc.comp_entities[c] += [[(u, drop.comp[u])] for u in unpaired]
        alloc.theta[c] = theta_scheme_c(len(pairs), len(unpaired), *nc_counts[c])
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.SCHEME_C.value,
        _counts(all_pairs, comp_oma, nc_oma), all_pairs,
    )


def run_benchmark(drop: DropState) -> DropResult:
    alloc = ScheduleAllocation()
    for bs, users in drop.users_by_bs().items():
        alloc.bs_entities[bs] = [[(u, drop.oma[u])] for u in users]
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.BENCHMARK.value,
        _counts([], nc_oma=drop.num_users),
    )


def run_comp_only(drop: DropState, gamma_th: float) -> DropResult:
    is_comp = drop.oma < gamma_th
    alloc = ScheduleAllocation(cluster_of_bs=drop.plan.cluster_of_bs)
    nc_in = defaultdict(int)
    for bs, users in drop.users_by_bs(np.flatnonzero(~is_comp)).items():
        alloc.bs_entities[bs] = [[(u, drop.oma[u])] for u in users]
        nc_in[int(drop.plan.cluster_of_bs[bs])] += len(users)
    comp_by_cluster = drop.users_by_cluster(np.flatnonzero(is_comp))
    for c in sorted(set(comp_by_cluster) | set(nc_in)):
        users = comp_by_cluster.get(c, [])
        alloc.comp_entities[c] = [[(u, drop.comp[u])] for u in users]
        alloc.theta[c] = theta_comp_only(len(users), nc_in[c])
    n_comp = int(is_comp.sum())
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.COMP_ONLY.value,
        _counts([], comp_oma=n_comp, nc_oma=drop.num_users - n_comp),
    )


def run_noma_only(drop: DropState) -> DropResult:
    alloc = ScheduleAllocation()
    all_pairs, nc_oma = [], 0
    for bs, users in drop.users_by_bs().items():
        pairs, unpaired = _pair_at_bs(drop, bs, users)
        all_pairs += pairs
        nc_oma += len(unpaired)
        alloc.bs_entities[bs] = [_pair_entity(p) for p in pairs]
        alloc.bs_entities[bs] += [[(u, drop.oma[u])] for u in unpaired]
    return user_rates(
        alloc, drop.num_users, drop.params, drop.table, SchemeId.NOMA_ONLY.value,
        _counts(all_pairs, nc_oma=nc_oma), all_pairs,
    )


def run_baseline(scheme: SchemeId, drop: DropState, gamma_th: float = 1.0) -> DropResult:
    scheme = SchemeId(scheme)
    if scheme is SchemeId.BENCHMARK:
        return run_benchmark(drop)
    if scheme is SchemeId.COMP_ONLY:
        return run_comp_only(drop, gamma_th)
    if scheme is SchemeId.NOMA_ONLY:
        return run_noma_only(drop)
    raise ValueError(f"{scheme.value} is not a baseline system")


def run_scheme(scheme: SchemeId, drop: DropState, gamma_th: float) -> DropResult:
    """Evaluate one system on a prepared drop; ``gamma_th`` is linear."""
    scheme = SchemeId(scheme)
    if scheme is SchemeId.SCHEME_A:
        return run_scheme_a(drop)
    if scheme is SchemeId.SCHEME_B:
        return run_scheme_b(drop, gamma_th)
    if scheme is SchemeId.SCHEME_C:
        return run_scheme_c(drop, gamma_th)
    return run_baseline(scheme, drop, gamma_th)
