"""Link-level quantities: path gain, noise, SINR, AMC efficiency and link rate."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

MIN_DISTANCE_KM = 1e-3


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    total_power_dbm: float = 24.0
    num_subchannels: int = 100
    subchannel_bandwidth_hz: float = 180e3
    noise_psd_dbm_per_hz: float = -174.0
    tx_gain_db: float = 0.0
    rx_gain_db: float = 0.0
    shadowing_sigma_db: float = 8.0
    penetration_loss_db: float = 0.0
    carrier_freq_ghz: float = 2.0
    subcarriers_per_subchannel: int = 12
    symbols_per_subframe: int = 14
    subframe_duration_s: float = 1e-3
    # pl(d) = pathloss_intercept_db + pathloss_slope_db * log10(d_km)
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6

    def __post_init__(self):
        if self.num_subchannels < 1:
            raise ConfigurationError("num_subchannels must be >= 1")
        if not self.subchannel_bandwidth_hz > 0:
            raise ConfigurationError("subchannel_bandwidth_hz must be positive")
        if not self.subframe_duration_s > 0:
            raise ConfigurationError("subframe_duration_s must be positive")
        if self.shadowing_sigma_db < 0:
            raise ConfigurationError("shadowing_sigma_db must be non-negative")

    @property
    def total_power_w(self) -> float:
        return 10 ** (self.total_power_dbm / 10) / 1000

    @property
    def subchannel_power_w(self) -> float:
        """Per-subchannel transmit power P^b / M."""
        return self.total_power_w / self.num_subchannels


@dataclass(frozen=True, eq=False)
class ChannelState:
    """Linear link gains (users x BSs), flat across subchannels."""

    gain: np.ndarray
    noise_power_w: float
    subchannel_power_w: float

    @property
    def num_users(self) -> int:
        return self.gain.shape[0]

    @property
    def num_bs(self) -> int:
        return self.gain.shape[1]


def path_loss_db(distance_km, params: RadioParams):
    d = np.maximum(np.asarray(distance_km, dtype=float), MIN_DISTANCE_KM)
    return params.pathloss_intercept_db + params.pathloss_slope_db * np.log10(d)


def channel_gain(distance_km, params: RadioParams, shadowing_db=0.0, path_loss=None):
    """Linear gain 10^((-pl + g_t + g_r - f_s - v) / 10).

    ``path_loss`` overrides the distance-based model when given (in dB).
    """
    pl = path_loss_db(distance_km, params) if path_loss is None else np.asarray(path_loss, float)
    exponent_db = (
        -pl + params.tx_gain_db + params.rx_gain_db - shadowing_db - params.penetration_loss_db
    )
    return 10.0 ** (exponent_db / 10.0)


def draw_shadowing(rng: np.random.Generator, shape, params: RadioParams) -> np.ndarray:
    return rng.normal(0.0, params.shadowing_sigma_db, size=shape)


def noise_power(params: RadioParams) -> float:
    """Thermal noise per subchannel in watts."""
    dbm = params.noise_psd_dbm_per_hz + 10 * np.log10(params.subchannel_bandwidth_hz)
    return 10 ** (dbm / 10) / 1000


def build_channel(distances_km: np.ndarray, params: RadioParams, rng: np.random.Generator):
    shadow = draw_shadowing(rng, distances_km.shape, params)
    gain = channel_gain(distances_km, params, shadow)
    return ChannelState(
        gain=gain, noise_power_w=noise_power(params), subchannel_power_w=params.subchannel_power_w
    )


def received_sinr(gains, joint, power, noise, share=1.0, leak=0.0):
    """SINR of a user served jointly by the BSs flagged in ``joint``.

    Every BS transmits ``power`` on the subchannel. Of a joint BS's power, the
    fraction ``share`` carries this user's signal and the fraction ``leak``
    reaches the user as residual co-scheduled interference (the superposed
    partner signal when no SIC is done). Non-joint BSs interfere at full power.
    All arguments broadcast over leading axes; the BS axis is last.
    """
    g = np.asarray(gains, dtype=float)
    signal = power * np.sum(np.where(joint, share * g, 0.0), axis=-1)
    interference = power * np.sum(np.where(joint, leak * g, g), axis=-1) + noise
    return signal / interference


def oma_sinr(user: int, bs: int, state: ChannelState) -> float:
    """Single-BS downlink SINR with every other BS interfering."""
    n_users, n_bs = state.gain.shape
    if not (0 <= user < n_users and 0 <= bs < n_bs):
        raise IndexError(f"user {user} / bs {bs} out of range for {n_users}x{n_bs} gain matrix")
    joint = np.zeros(n_bs, dtype=bool)
    joint[bs] = True
    return float(
        received_sinr(state.gain[user], joint, state.subchannel_power_w, state.noise_power_w)
    )


def oma_sinr_all(state: ChannelState, serving_bs: np.ndarray) -> np.ndarray:
    joint = np.zeros(state.gain.shape, dtype=bool)
    joint[np.arange(state.num_users), serving_bs] = True
    return received_sinr(state.gain, joint, state.subchannel_power_w, state.noise_power_w)


@dataclass(frozen=True, eq=False)
class AmcTable:
    thresholds_db: np.ndarray
    efficiencies: np.ndarray

    def __post_init__(self):
        thr = np.asarray(self.thresholds_db, dtype=float)
        eff = np.asarray(self.efficiencies, dtype=float)
        if thr.size == 0:
            raise ConfigurationError("AMC table is empty")
        if thr.shape != eff.shape:
            raise ConfigurationError("AMC thresholds and efficiencies differ in length")
        if np.any(np.diff(thr) <= 0):
            raise ConfigurationError("AMC thresholds must be strictly increasing")
        if np.any(np.diff(eff) < 0) or np.any(eff < 0):
            raise ConfigurationError("AMC efficiencies must be non-negative and non-decreasing")
        object.__setattr__(self, "thresholds_db", thr)
        object.__setattr__(self, "efficiencies", eff)
        object.__setattr__(self, "_thresholds_lin", 10.0 ** (thr / 10.0))
        object.__setattr__(self, "_lookup", np.concatenate([[0.0], eff]))

    @property
    def thresholds_linear(self) -> np.ndarray:
        return self._thresholds_lin

    @property
    def min_sinr(self) -> float:
        return float(self._thresholds_lin[0])

    def efficiency(self, sinr):
        """Bits/symbol for a linear SINR (scalar or array); thresholds are inclusive."""
        idx = np.searchsorted(self._thresholds_lin, sinr, side="right")
        out = self._lookup[idx]
        return float(out) if np.ndim(out) == 0 else out


def load_amc_table(path: str | Path | None = None) -> AmcTable:
    """Read ``threshold_db efficiency`` rows; ``#`` starts a comment."""
    if path is None:
        text = resources.files("udnsim").joinpath("data/amc_table.txt").read_text()
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigurationError(f"AMC table line {lineno}: expected 2 columns, got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise ConfigurationError("AMC table is empty")
    thr, eff = zip(*rows)
    return AmcTable(np.array(thr), np.array(eff))


def spectral_efficiency(sinr, table: AmcTable):
    if np.any(np.asarray(sinr) < 0):
        raise ValueError("SINR must be non-negative")
    return table.efficiency(sinr)


def link_rate(efficiency, params: RadioParams):
    """Bits/s when all M subchannels carry ``efficiency`` bits/symbol."""
    return (
        np.asarray(efficiency, dtype=float)
        * params.subcarriers_per_subchannel
        * params.symbols_per_subframe
        * params.num_subchannels
        / params.subframe_duration_s
    )
