"""Two-user power-domain NOMA: adaptive pairing, power split and pair SINRs.

Every pair SINR is expressed through :func:`udnsim.channel.received_sinr` by
choosing which BSs carry the user's signal (``joint``), the share of their
power that is the user's own stream and the share that leaks in as
co-scheduled interference. The strong user always decodes with perfect SIC, so
nothing leaks for it.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import AmcTable, ChannelState, received_sinr
from .topology import ClusterPlan

ZETA_GRID = np.round(np.arange(1, 50) / 100.0, 2)
DEFAULT_MIN_GAP_DB = 10.0


class PairingError(ValueError):
    pass


class PairKind(str, Enum):
    NC_NC = "NC-NC"
    C_C = "C-C"
    NC_C = "NC-C"


@dataclass
class NomaPair:
    strong: int
    weak: int
    kind: PairKind
    zeta: float
    # BS index for NC-NC and NC-C (the strong user's BS), cluster index for C-C
    entity: int
    strong_sinr: float = float("nan")
    weak_sinr: float = float("nan")


@dataclass
class PairingPlan:
    pairs: list[NomaPair]
    oma_users: list[int]

    def count(self, kind: PairKind) -> int:
        return sum(p.kind is kind for p in self.pairs)


@dataclass(frozen=True)
class WeakProfile:
    """Weak-user SINR as a function of the strong share ``z`` at the BSs being paired.

    ``sinr(z) = (signal - z * paired) / (interference + z * paired)`` where
    ``signal`` is the weak user's current useful power, ``paired`` the power it
    receives from the BSs that will superpose the strong stream, and
    ``interference`` everything else including noise.
    """

    signal: float
    paired: float
    interference: float

    def sinr(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        return (self.signal - zeta * self.paired) / (self.interference + zeta * self.paired)


def weak_profile(gains, joint, power, noise, new_mask, share=1.0, leak=0.0) -> WeakProfile:
    g = np.asarray(gains, dtype=float)
    signal = power * np.sum(np.where(joint, share * g, 0.0))
    interference = power * np.sum(np.where(joint, leak * g, g)) + noise
    paired = power * np.sum(np.where(new_mask, g, 0.0))
    return WeakProfile(float(signal), float(paired), float(interference))


def zeta_for_pair(
    strong_sinr: float, weak_sinr: float, profile: WeakProfile, table: AmcTable
) -> float | None:
    """Largest strong-user share on the 0.01..0.49 grid that keeps the weak user's AMC level.

    ``weak_sinr`` is the weak user's reference SINR without this pairing.
    Returns ``None`` when even the smallest share drops the weak user to a lower
    efficiency.
    """
    if not strong_sinr > weak_sinr:
        raise PairingError("strong user must have the larger pre-pairing SINR")
    ref = table.efficiency(weak_sinr)
    ok = table.efficiency(profile.sinr(ZETA_GRID)) >= ref
    if not ok.any():
        return None
    return float(ZETA_GRID[np.flatnonzero(ok)[-1]])


def _db(x):
    return 10.0 * math.log10(x)


def aup_match(
    strong_group: Sequence[tuple[int, float]],
    weak_group: Sequence[tuple[int, float]],
    min_gap_db: float = DEFAULT_MIN_GAP_DB,
    admit: Callable[[int, int], float | None] | None = None,
):
    """Match the k-th strongest of ``strong_group`` with the k-th strongest of ``weak_group``.

    A match needs an SINR gap of at least ``min_gap_db`` and, when ``admit`` is
    given, a non-None power fraction from ``admit(strong, weak)``. Returns
    ``(pairs, unpaired)`` with pairs as ``(strong, weak, zeta)`` triples.
    """
    strong = sorted(strong_group, key=lambda c: (-c[1], c[0]))
    weak = sorted(weak_group, key=lambda c: (-c[1], c[0]))
    pairs, unpaired = [], []
    n = min(len(strong), len(weak))
    for (s, s_sinr), (w, w_sinr) in zip(strong[:n], weak[:n]):
        zeta = None
        if s_sinr > w_sinr and _db(s_sinr) - _db(w_sinr) >= min_gap_db:
            zeta = 0.5 if admit is None else admit(s, w)
        if zeta is None:
            unpaired.extend((s, w))
        else:
            pairs.append((s, w, zeta))
    unpaired.extend(u for u, _ in strong[n:])
    unpaired.extend(u for u, _ in weak[n:])
    return pairs, unpaired


def aup_pair(
    candidates: Sequence[tuple[int, float]],
    min_gap_db: float = DEFAULT_MIN_GAP_DB,
    admit: Callable[[int, int], float | None] | None = None,
):
    """Sorted half-split pairing of one candidate pool.

    The pool is sorted by descending SINR; the top half forms the strong side
    and the bottom half the weak side. With an odd count the median user is
    left out.
    """
    if len(candidates) < 2:
        return [], [u for u, _ in candidates]
    ordered = sorted(candidates, key=lambda c: (-c[1], c[0]))
    half = len(ordered) // 2
    strong = ordered[:half]
    weak = ordered[len(ordered) - half :]
    pairs, unpaired = aup_match(strong, weak, min_gap_db, admit)
    if len(ordered) % 2:
        unpaired.append(ordered[half][0])
    return pairs, unpaired


def _one_hot(n: int, idx) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask


def nc_nc_sinr(pair: NomaPair, state: ChannelState, serving_bs=None):
    """(strong, weak) SINRs of two users superposed by one BS."""
    if serving_bs is not None and serving_bs[pair.strong] != serving_bs[pair.weak]:
        raise PairingError("NC-NC pair members are served by different BSs")
    joint = _one_hot(state.num_bs, pair.entity)
    p, n0, z = state.subchannel_power_w, state.noise_power_w, pair.zeta
    strong = received_sinr(state.gain[pair.strong], joint, p, n0, share=z)
    weak = received_sinr(state.gain[pair.weak], joint, p, n0, share=1.0 - z, leak=z)
    return float(strong), float(weak)


def cc_sinr(pair: NomaPair, plan: ClusterPlan, state: ChannelState, cluster_of_user=None):
    """(strong, weak) SINRs of two CoMP users superposed by every BS of their cluster.

    All cluster BSs use the same strong share ``pair.zeta``.
    """
    if cluster_of_user is not None and not (
        cluster_of_user[pair.strong] == cluster_of_user[pair.weak] == pair.entity
    ):
        raise PairingError("C-C pair members belong to different clusters")
    joint = plan.cluster_of_bs == pair.entity
    p, n0, z = state.subchannel_power_w, state.noise_power_w, pair.zeta
    strong = received_sinr(state.gain[pair.strong], joint, p, n0, share=z)
    weak = received_sinr(state.gain[pair.weak], joint, p, n0, share=1.0 - z, leak=z)
    return float(strong), float(weak)


def nc_c_weak_sinr(weak: int, cluster: int, zeta_at: dict[int, float], plan, state) -> float:
    """SINR of a CoMP user superposed under non-CoMP partners at the BSs in ``zeta_at``.

    Cluster BSs without a partner send the CoMP user's stream at full power.
    """
    joint = plan.cluster_of_bs == cluster
    share = np.ones(state.num_bs)
    leak = np.zeros(state.num_bs)
    for bs, z in zeta_at.items():
        if not joint[bs]:
            raise PairingError(f"BS {bs} is not in cluster {cluster}")
        share[bs] = 1.0 - z
        leak[bs] = z
    sinr = received_sinr(
        state.gain[weak], joint, state.subchannel_power_w, state.noise_power_w, share, leak
    )
    return float(sinr)


def nc_c_strong_sinr(strong: int, bs: int, zeta: float, state: ChannelState) -> float:
    joint = _one_hot(state.num_bs, bs)
    sinr = received_sinr(
        state.gain[strong], joint, state.subchannel_power_w, state.noise_power_w, share=zeta
    )
    return float(sinr)


def nc_c_sinr(pair: NomaPair, cluster: int, zeta_at: dict[int, float], plan, state):
    """(strong, weak) SINRs of a non-CoMP/CoMP pair.

    ``zeta_at`` maps every cluster BS at which the weak CoMP user is currently
    paired to that BS's strong share; it must include ``pair.entity``.
    """
    if plan.cluster_of_bs[pair.entity] != cluster:
        raise PairingError(f"strong user's BS {pair.entity} is not in cluster {cluster}")
    strong = nc_c_strong_sinr(pair.strong, pair.entity, pair.zeta, state)
    weak = nc_c_weak_sinr(pair.weak, cluster, zeta_at, plan, state)
    return strong, weak
