"""Max-received-power association, CoMP/non-CoMP classification and joint-reception SINR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, oma_sinr_all, received_sinr
from .topology import ClusterPlan, TopologyError


@dataclass(frozen=True, eq=False)
class Association:
    serving_bs: np.ndarray
    cluster_of_user: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class UserClassification:
    is_comp: np.ndarray
    oma_sinr: np.ndarray
    comp_sinr: np.ndarray

    @property
    def comp_users(self) -> np.ndarray:
        return np.flatnonzero(self.is_comp)

    @property
    def non_comp_users(self) -> np.ndarray:
        return np.flatnonzero(~self.is_comp)


def associate(state: ChannelState, plan: ClusterPlan | None = None) -> Association:
    """Serve each user from the BS with the largest received power (lowest index on ties)."""
    if state.num_bs == 0:
        raise TopologyError("association needs at least one base station")
    # equal per-subchannel power at every BS, so the argmax over gains is the argmax over P*g
    serving = np.argmax(state.subchannel_power_w * state.gain, axis=1)
    cluster = None if plan is None else plan.cluster_of_bs[serving]
    return Association(serving_bs=serving, cluster_of_user=cluster)


def cluster_mask(plan: ClusterPlan, cluster: int) -> np.ndarray:
    return plan.cluster_of_bs == cluster


def comp_sinr(user: int, cluster: int, plan: ClusterPlan, state: ChannelState) -> float:
    """Joint-transmission SINR with all BSs of ``cluster`` carrying the user's signal."""
    mask = cluster_mask(plan, cluster)
    if not mask.any():
        raise RuntimeError(f"cluster {cluster} has no base stations")
    return float(
        received_sinr(state.gain[user], mask, state.subchannel_power_w, state.noise_power_w)
    )


def comp_sinr_all(state: ChannelState, plan: ClusterPlan, assoc: Association) -> np.ndarray:
    """Joint-transmission SINR of every user from the cluster of its serving BS."""
    clusters = plan.cluster_of_bs[assoc.serving_bs]
    joint = plan.cluster_of_bs[None, :] == clusters[:, None]
    return received_sinr(state.gain, joint, state.subchannel_power_w, state.noise_power_w)


def classify_users(
    assoc: Association,
    state: ChannelState,
    gamma_th: float,
    plan: ClusterPlan | None = None,
    oma: np.ndarray | None = None,
    comp: np.ndarray | None = None,
) -> UserClassification:
    """Flag users with OMA SINR strictly below ``gamma_th`` (linear) as CoMP users."""
    if oma is None:
        oma = oma_sinr_all(state, assoc.serving_bs)
    if comp is None:
        comp = comp_sinr_all(state, plan, assoc) if plan is not None else np.full_like(oma, np.nan)
    return UserClassification(is_comp=oma < gamma_th, oma_sinr=oma, comp_sinr=comp)
