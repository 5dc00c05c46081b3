"""
Rate, power and secrecy-energy-efficiency kernels.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.channel import ChannelRealization, Link, SystemParams
from .state import BeamformingState, Protocol

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)


def _log2_1p(x: float) -> float:
    return float(np.log1p(max(x, 0.0)) / LN2)


def _columns(W) -> np.ndarray:
    if W is None:
        return np.zeros((0, 0), dtype=complex)
    if isinstance(W, (list, tuple)):
        if not W:
            return np.zeros((0, 0), dtype=complex)
        return np.stack([np.asarray(w, dtype=complex).ravel() for w in W], axis=1)
    return np.asarray(W, dtype=complex)


def combined_channel(h: np.ndarray, G: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Combined row channel h^H + u^H G.

    Args:
        h: direct channel, length N
        G: cascaded channel, M×N
        u: passive vector, length M

    Returns:
        Length-N array holding the row vector
    """
    h = np.asarray(h, dtype=complex).ravel()
    G = np.asarray(G, dtype=complex)
    u = np.asarray(u, dtype=complex).ravel()
    if G.shape != (u.size, h.size):
        raise ValueError(f"Combined channel needs G of shape ({u.size}, {h.size}), got {G.shape}")
    return h.conj() + u.conj() @ G


def _sinr(hbar: np.ndarray, w_target: np.ndarray, W_interf, noise: float) -> float:
    signal = abs(np.dot(hbar, w_target)) ** 2
    W = _columns(W_interf)
    interference = float(np.sum(np.abs(hbar @ W) ** 2)) if W.size else 0.0
    return signal / (interference + noise)


def decode_rate(hbar: np.ndarray, w_target: np.ndarray, W_interf, noise: float) -> float:
    """log2(1 + |h̄w|² / (Σ|h̄w_i|² + σ²)) in bits/s/Hz."""
    if noise <= 0:
        raise ValueError(f"Noise power must be positive, got {noise}")
    return _log2_1p(_sinr(np.asarray(hbar).ravel(), np.asarray(w_target).ravel(), W_interf, noise))


# Eves run the same SIC receiver as Bobs
eve_rate = decode_rate


def ts_decode_rate(hbar: np.ndarray, w_target: np.ndarray, W_interf, noise: float, tau: float) -> float:
    """
    Time-switching rate τ·log2(1 + |h̄w|² / (Σ|h̄w_i|² + τσ²)).

    Args:
        hbar: combined row channel
        w_target: beam of the decoded stream
        W_interf: TS interference beams (no other-space beam)
        noise: σ²
        tau: time fraction of the serving period, in (0, 1]
    """
    if not 0 < tau <= 1:
        raise ValueError(f"Time fraction must lie in (0, 1], got {tau}")
    return tau * decode_rate(hbar, w_target, W_interf, tau * noise)


def achievable_rate(rates: Sequence[float]) -> float:
    """Rate at which every SIC stage decodes the stream: the minimum over decoders."""
    if len(rates) == 0:
        raise ValueError("achievable_rate needs at least one decoder rate")
    return float(min(rates))


def total_power(state: BeamformingState, params: SystemParams) -> float:
    """ϱ·Σ‖f_k‖² + P_B + J·P_U + M·P_r(b)."""
    transmit = sum(float(np.linalg.norm(f) ** 2) for f in state.f)
    return params.amplifier_efficiency * transmit + params.static_power


def eve_passive(state: BeamformingState, e: int, k: int) -> np.ndarray:
    """
    Passive vector seen by Eve e while stream k is on air.

    Each Eve sees the surface of its own space; under time switching an Eve
    outside the served space sees no surface contribution.
    """
    if state.protocol is Protocol.TS:
        return state.u[k] if e == k else np.zeros_like(state.u[k])
    return state.u[e]


def _channels(link: Link, truth: bool) -> Tuple[np.ndarray, np.ndarray]:
    return (link.h, link.G) if truth else (link.h_hat, link.G_hat)


@dataclass
class SecrecyReport:
    ssr: float
    see: float
    power: float
    rates: Dict[Tuple[int, int], float] = field(default_factory=dict)
    leakage: Dict[Tuple[int, int, int], float] = field(default_factory=dict)
    secrecy: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def min_rate_margin(self, params: SystemParams) -> float:
        return min((r - params.min_rate for r in self.rates.values()), default=np.inf)

    def max_leakage_excess(self, params: SystemParams) -> float:
        return max((r - params.max_leakage for r in self.leakage.values()), default=-np.inf)


def stream_rates(state: BeamformingState, channels: ChannelRealization, params: SystemParams,
                 truth: bool = False) -> Tuple[Dict, Dict]:
    """
    Achievable and eavesdropping rates of every stream.

    Returns:
        (rates keyed by (k, j), leakage keyed by (k, j, e))
    """
    ts = state.protocol is Protocol.TS
    noise = params.noise_power
    rates, leakage = {}, {}
    for k in range(2):
        tau = state.tau[k] if ts else 1.0
        for j in range(state.users(k)):
            w = state.w(k, j)
            W = state.interference(k, j, ts=ts)
            if ts and tau <= 0:
                rates[(k, j)] = 0.0
                for e in range(len(channels.eves)):
                    leakage[(k, j, e)] = 0.0
                continue
            per_decoder = []
            for l in range(j + 1):
                h, G = _channels(channels.bob(k, l), truth)
                hbar = combined_channel(h, G, state.u[k])
                per_decoder.append(ts_decode_rate(hbar, w, W, noise, tau) if ts else decode_rate(hbar, w, W, noise))
            rates[(k, j)] = achievable_rate(per_decoder)
            for e, eve in enumerate(channels.eves):
                h, G = _channels(eve, truth)
                hbar = combined_channel(h, G, eve_passive(state, e, k))
                leakage[(k, j, e)] = ts_decode_rate(hbar, w, W, noise, tau) if ts else eve_rate(hbar, w, W, noise)
    return rates, leakage


def secrecy_energy_efficiency(state: BeamformingState, channels: ChannelRealization, params: SystemParams,
                              truth: bool = False) -> SecrecyReport:
    """
    Sum secrecy rate, total power and SEE of a state.

    Args:
        state: beamforming decision
        channels: realization in physical units
        params: system constants
        truth: evaluate on the true channels instead of the estimates

    Returns:
        SecrecyReport with per-stream rates, leakage and clamped secrecy rates
    """
    rates, leakage = stream_rates(state, channels, params, truth)
    secrecy = {}
    for (k, j), r in rates.items():
        leaked = sum(v for (kk, jj, _), v in leakage.items() if (kk, jj) == (k, j))
        secrecy[(k, j)] = max(r - leaked, 0.0)
    ssr = float(sum(secrecy.values()))
    power = total_power(state, params)
    return SecrecyReport(ssr, ssr / power, power, rates, leakage, secrecy)


def decoding_order_ok(state: BeamformingState, channels: ChannelRealization,
                      truth: bool = False) -> Tuple[bool, List[float]]:
    """
    Check |h̄_{k,j} w_{k,j}|² ≥ |h̄_{k,j+1} w_{k,j+1}|² for consecutive Bobs.

    Returns:
        (holds, margins) with one margin per consecutive pair, both spaces
    """
    margins = []
    for k in range(2):
        gains = []
        for j in range(state.users(k)):
            h, G = _channels(channels.bob(k, j), truth)
            gains.append(abs(np.dot(combined_channel(h, G, state.u[k]), state.w(k, j))) ** 2)
        margins.extend(gains[j] - gains[j + 1] for j in range(len(gains) - 1))
    return all(m >= 0 for m in margins), margins
