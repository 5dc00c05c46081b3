"""
Iterate of the auxiliary variables that the subproblems linearize around.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np

from src.channel import ChannelRealization, SystemParams
from src.metrics import BeamformingState, Protocol, combined_channel, eve_passive, total_power

Key2 = Tuple[int, int]
Key3 = Tuple[int, int, int]


def slot_noise(state: BeamformingState, k: int) -> float:
    """Normalized noise power in the period serving space k."""
    if state.protocol is Protocol.TS:
        return float(state.tau[k])
    return 1.0


def slot_weight(state: BeamformingState, k: int) -> float:
    return float(state.tau[k]) if state.protocol is Protocol.TS else 1.0


@dataclass
class Workspace:
    """
    Values of ψ, ρ, t and the rate/interference slacks.

    eta[(k, j, l)] and r[(k, j)] belong to Bob l decoding s_{k,j};
    eta_eve/r_eve are keyed by (k, j, e); sigma[(k, j)] bounds the gap
    between consecutive Bobs j and j+1.
    """
    psi: float
    rho: float
    t: float
    r: Dict[Key2, float] = field(default_factory=dict)
    eta: Dict[Key3, float] = field(default_factory=dict)
    r_eve: Dict[Key3, float] = field(default_factory=dict)
    eta_eve: Dict[Key3, float] = field(default_factory=dict)
    sigma: Dict[Key2, float] = field(default_factory=dict)

    def refresh_t(self, psi_floor: float = 1e-6) -> None:
        self.t = self.rho / max(self.psi, psi_floor)

    def copy(self) -> "Workspace":
        return replace(self, r=dict(self.r), eta=dict(self.eta), r_eve=dict(self.r_eve),
                       eta_eve=dict(self.eta_eve), sigma=dict(self.sigma))


def nominal_workspace(state: BeamformingState, channels: ChannelRealization, params: SystemParams,
                      psi_floor: float = 1e-6) -> Workspace:
    """
    Workspace read off the estimated channels at a fixed state.

    Args:
        state: current decision
        channels: noise-normalized realization
        params: system constants
        psi_floor: lower clamp for ψ

    Returns:
        Workspace whose ψ is half the nominal surrogate SEE
    """
    ws = Workspace(psi=0.0, rho=total_power(state, params), t=1.0)
    ts = state.protocol is Protocol.TS
    total = 0.0
    for k in range(2):
        noise = slot_noise(state, k)
        gains = []
        for j in range(state.users(k)):
            w = state.w(k, j)
            W = state.interference(k, j, ts=ts)
            rates = []
            for l in range(j + 1):
                link = channels.bob(k, l)
                hbar = combined_channel(link.h_hat, link.G_hat, state.u[k])
                eta = float(np.sum(np.abs(hbar @ W) ** 2)) + noise
                ws.eta[(k, j, l)] = eta
                rates.append(np.log2(1 + abs(hbar @ w) ** 2 / eta))
                if l == j:
                    gains.append(abs(hbar @ w) ** 2)
            ws.r[(k, j)] = float(min(rates))
            leak = 0.0
            for e, eve in enumerate(channels.eves):
                hbar = combined_channel(eve.h_hat, eve.G_hat, eve_passive(state, e, k))
                eta = float(np.sum(np.abs(hbar @ W) ** 2)) + noise
                ws.eta_eve[(k, j, e)] = eta
                ws.r_eve[(k, j, e)] = float(np.log2(1 + abs(hbar @ w) ** 2 / eta))
                leak += ws.r_eve[(k, j, e)]
            total += slot_weight(state, k) * (ws.r[(k, j)] - leak)
        for j in range(len(gains) - 1):
            ws.sigma[(k, j)] = 0.5 * (gains[j] + gains[j + 1])
    ws.psi = max(0.5 * total / ws.rho, psi_floor)
    ws.refresh_t(psi_floor)
    return ws
