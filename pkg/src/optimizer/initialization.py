"""
Starting points, certification and feasibility restoration.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from src.channel import ChannelRealization, SystemParams
from src.metrics import BeamformingState, Protocol, combined_channel, secrecy_energy_efficiency
from .settings import AOConfig
from .subproblems import BlockKind, passive_mask, solve_subproblem
from .workspace import Workspace, nominal_workspace

logger = logging.getLogger(__name__)


class InfeasibleInstanceError(RuntimeError):
    """No state meeting the QoS and leakage thresholds was found."""


def _passive_start(protocol: Protocol, m: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    phases = rng.uniform(0, 2 * np.pi, size=(2, m))
    if protocol in (Protocol.ES, Protocol.MS):
        amps = (np.full(m, np.sqrt(0.5)), np.full(m, np.sqrt(0.5)))
    else:
        amps = tuple(passive_mask(protocol, k, m).astype(float) for k in range(2))
    return tuple(a * np.exp(1j * p) for a, p in zip(amps, phases))


def init_state(protocol: Protocol, channels: ChannelRealization, params: SystemParams, seed=None,
               tau: Optional[Tuple[float, float]] = None) -> BeamformingState:
    """
    Heuristic starting point.

    α_{k,j} = 1/√J_k, random surface phases (amplitude √½ for ES/MS, unit
    modulus on the active elements for TS/SF) and f_k matched to the
    strongest Bob of space k. P_max is split evenly over the occupied spaces.

    Args:
        protocol: operating protocol
        channels: realization (scale does not matter)
        params: system constants
        seed: integer seed or Generator for the phases
        tau: TS time split, defaults to (0.5, 0.5)
    """
    rng = np.random.default_rng(seed)
    u = _passive_start(protocol, channels.M, rng)
    occupied = [k for k in range(2) if params.users(k) > 0]
    alpha, f = [], []
    for k in range(2):
        J = params.users(k)
        alpha.append(np.full(J, 1 / np.sqrt(J)) if J else np.zeros(0))
        if not J:
            f.append(np.zeros(channels.N, dtype=complex))
            continue
        link = channels.bob(k, 0)
        hbar = combined_channel(link.h_hat, link.G_hat, u[k])
        norm = np.linalg.norm(hbar)
        beam = hbar.conj() / norm if norm > 0 else np.ones(channels.N) / np.sqrt(channels.N)
        f.append(beam * np.sqrt(params.p_max / len(occupied)))
    if protocol is Protocol.TS and tau is None:
        tau = (0.5, 0.5)
    return BeamformingState(protocol, tuple(alpha), tuple(f), u, tau if protocol is Protocol.TS else None)


def certify(state: BeamformingState, channels: ChannelRealization, params: SystemParams,
            cfg: AOConfig) -> Optional[Workspace]:
    """Workspace certificate of a fixed state, or None when the state fails the robust constraints."""
    ws = nominal_workspace(state, channels, params, cfg.psi_floor)
    result = solve_subproblem(BlockKind.CERTIFY, state, ws, channels, params, cfg)
    if not result.ok:
        logger.debug(f"Certification failed: {result.status}")
        return None
    return result.workspace


def zero_forcing_beams(state: BeamformingState, channels: ChannelRealization) -> BeamformingState:
    """
    Point f_k at the strongest Bob of space k inside the null space of the other space's Bobs.

    Beam norms are kept. A space whose target lies in the span of the other
    space's Bobs keeps its matched beam. TS serves the spaces in separate
    periods, so its beams are returned unchanged.
    """
    if state.protocol is Protocol.TS:
        return state
    f = []
    for k in range(2):
        beam = state.f[k]
        norm = np.linalg.norm(beam)
        if not state.users(k) or norm == 0:
            f.append(beam)
            continue
        target = combined_channel(channels.bob(k, 0).h_hat, channels.bob(k, 0).G_hat, state.u[k]).conj()
        other = 1 - k
        rows = [combined_channel(channels.bob(other, j).h_hat, channels.bob(other, j).G_hat, state.u[other])
                for j in range(state.users(other))]
        if rows:
            basis = scipy.linalg.orth(np.stack(rows).conj().T)
            target = target - basis @ (basis.conj().T @ target)
        length = np.linalg.norm(target)
        f.append(target / length * norm if length > 1e-9 * norm else beam)
    return state.with_(f=tuple(f))


def _margin(state: BeamformingState, channels: ChannelRealization, params: SystemParams) -> float:
    report = secrecy_energy_efficiency(state, channels, params.model_copy(update={'noise_power': 1.0}))
    return min(report.min_rate_margin(params), -report.max_leakage_excess(params))


def backoff(state: BeamformingState, channels: ChannelRealization, params: SystemParams,
            cfg: AOConfig) -> Tuple[BeamformingState, Optional[Workspace]]:
    """
    Power back-off over zero-forcing beams.

    Scales the transmit power down in cfg.backoff_db steps and certifies each
    candidate. At the full budget the leakage bounds toward the Eves are
    violated, so the first certified scale usually sits well below P_max.

    Returns:
        (state, workspace) of the first certified scale, or the candidate with
        the best nominal margin and None
    """
    pointed = zero_forcing_beams(state, channels)
    best, best_margin = pointed, -np.inf
    for step in range(cfg.backoff_steps + 1):
        scale = 10 ** (-cfg.backoff_db * step / 20)
        candidate = pointed.with_(f=tuple(beam * scale for beam in pointed.f))
        ws = certify(candidate, channels, params, cfg)
        if ws is not None:
            logger.debug(f"Certified starting point at {-cfg.backoff_db * step:.1f} dB back-off")
            return candidate, ws
        margin = _margin(candidate, channels, params)
        if margin > best_margin:
            best, best_margin = candidate, margin
    return best, None


def restore(state: BeamformingState, channels: ChannelRealization, params: SystemParams, cfg: AOConfig,
            rng: Optional[np.random.Generator] = None) -> Tuple[BeamformingState, Workspace]:
    """
    Feasibility restoration over the active beamformers.

    Each pass maximizes the smallest QoS/leakage slack around the current
    iterate. Once the slack is nonpositive the state is certified; restarts
    redraw the surface phases.

    Raises:
        InfeasibleInstanceError: when every restart fails
    """
    rng = rng or np.random.default_rng(cfg.seed)
    for restart in range(cfg.restoration_restarts):
        current = state
        for it in range(cfg.restoration_iterations):
            ws = nominal_workspace(current, channels, params, cfg.psi_floor)
            result = solve_subproblem(BlockKind.RESTORE, current, ws, channels, params, cfg)
            if not result.ok:
                logger.debug(f"Restoration pass {it}: {result.status}")
                break
            current = result.state
            logger.debug(f"Restoration pass {it}: slack {result.slack:.4g}")
            if result.slack <= cfg.feasibility:
                certified = certify(current, channels, params, cfg)
                if certified is not None:
                    logger.info(f"Restored feasibility after {restart} restarts")
                    return current, certified
        logger.warning(f"Restoration restart {restart + 1}/{cfg.restoration_restarts} failed, redrawing phases")
        state = state.with_(u=_passive_start(state.protocol, channels.M, rng))
    raise InfeasibleInstanceError(
        f"No {state.protocol.value} state meets the rate thresholds after {cfg.restoration_restarts} restarts")


def initialize(protocol: Protocol, channels: ChannelRealization, params: SystemParams, cfg: AOConfig,
               tau: Optional[Tuple[float, float]] = None) -> Tuple[BeamformingState, Workspace]:
    """
    Certified starting point for the AO loop.

    Args:
        protocol: operating protocol
        channels: noise-normalized realization
        params: system constants
        cfg: driver settings
        tau: TS time split

    Returns:
        (state, workspace) with the workspace certifying the state
    """
    rng = np.random.default_rng(cfg.seed)
    state = init_state(protocol, channels, params, rng, tau)
    ws = certify(state, channels, params, cfg)
    if ws is not None:
        return state, ws
    state, ws = backoff(state, channels, params, cfg)
    if ws is not None:
        return state, ws
    logger.info(f"{protocol.value} starting point violates the thresholds, restoring feasibility")
    return restore(state, channels, params, cfg, rng)
