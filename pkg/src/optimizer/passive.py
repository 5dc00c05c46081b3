"""
Passive beamforming by the penalty convex-concave procedure.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.channel import ChannelRealization, SystemParams
from src.metrics import BeamformingState, Protocol
from .settings import AOConfig
from .subproblems import BlockKind, PassiveOptions, passive_mask, solve_subproblem
from .workspace import Workspace

logger = logging.getLogger(__name__)

BINARY_TOL = 1e-3


def ms_target(b: np.ndarray) -> np.ndarray:
    """First-order optimal d for fixed b: (b + b²) / (1 + b²)."""
    b = np.asarray(b, dtype=float)
    return (b + b ** 2) / (1 + b ** 2)


def project_passive(state: BeamformingState, amplitudes: Optional[Tuple[np.ndarray, np.ndarray]] = None
                    ) -> BeamformingState:
    """
    Map a relaxed passive iterate onto the protocol's feasible set.

    ES takes β_r = b_r / (b_r + b_t); MS rounds that to {0, 1}; TS and SF
    put unit modulus on the active elements. Phases are kept.
    """
    protocol = state.protocol
    m = state.u[0].size
    phases = tuple(np.angle(u) for u in state.u)
    if protocol in (Protocol.ES, Protocol.MS):
        if amplitudes is None:
            amplitudes = state.beta
        b_r, b_t = (np.clip(np.asarray(a, dtype=float), 0.0, None) for a in amplitudes)
        beta_r = np.where(b_r + b_t > 0, b_r / np.maximum(b_r + b_t, 1e-300), 0.5)
        if protocol is Protocol.MS:
            beta_r = (beta_r >= 0.5).astype(float)
        amps = (np.sqrt(beta_r), np.sqrt(1 - beta_r))
    else:
        amps = tuple(passive_mask(protocol, k, m).astype(float) for k in range(2))
    u = tuple(a * np.exp(1j * p) for a, p in zip(amps, phases))
    return state.with_(u=u)


@dataclass
class PassiveOutcome:
    state: Optional[BeamformingState]
    workspace: Optional[Workspace]
    penalty: float = float("nan")
    ms_penalty: float = float("nan")
    iterations: int = 0
    restarts: int = 0
    converged: bool = False
    status: str = "optimal"

    @property
    def ok(self) -> bool:
        return self.state is not None


def _random_phases(state: BeamformingState, rng: np.random.Generator) -> BeamformingState:
    u = tuple(np.abs(uk) * np.exp(1j * rng.uniform(0, 2 * np.pi, uk.size)) for uk in state.u)
    return state.with_(u=u)


def pccp_passive(state: BeamformingState, workspace: Workspace, channels: ChannelRealization,
                 params: SystemParams, cfg: AOConfig, rng: Optional[np.random.Generator] = None) -> PassiveOutcome:
    """
    Passive block for every protocol.

    ES optimizes continuous amplitudes, MS adds the binarizing penalty with
    the closed-form d update, TS and SF keep unit modulus on the active
    elements. λ grows by the scaling factor each iteration up to λ_max; a run
    that exceeds T_max iterations restarts from random phases.

    Args:
        state: iterate with α and F fixed
        workspace: slack iterate
        channels: noise-normalized realization
        params: system constants
        cfg: driver settings, including the PCCP schedule
        rng: generator for restart phases

    Returns:
        PassiveOutcome holding the projected state, or state None when the
        first solve fails
    """
    pc = cfg.pccp
    rng = rng or np.random.default_rng(cfg.seed)
    ms = state.protocol is Protocol.MS
    current, ws = state, workspace
    last = None
    iterations = 0
    for restart in range(pc.max_restarts + 1):
        lam = pc.lambda0
        d = tuple(ms_target(b) for b in current.beta) if ms else None
        for _ in range(pc.t_max):
            iterations += 1
            result = solve_subproblem(BlockKind.PASSIVE, current, ws, channels, params, cfg,
                                      PassiveOptions(lam, lam if ms else 0.0, d))
            if not result.ok:
                logger.debug(f"PCCP solve {iterations}: {result.status}")
                break
            step = sum(float(np.sum(np.abs(a - b))) for a, b in zip(result.state.u, current.u))
            current, ws = result.state, result.workspace
            last = result
            if ms:
                d = tuple(ms_target(b) for b in result.amplitudes)
            lam = min(pc.scaling * lam, pc.lambda_max)
            binary = not ms or max(float(np.max(np.minimum(b, 1 - b))) for b in result.amplitudes) <= BINARY_TOL
            if step <= pc.eps1 and result.penalty <= pc.eps2 and binary:
                return PassiveOutcome(project_passive(current, result.amplitudes), ws, result.penalty,
                                      result.ms_penalty, iterations, restart, True, result.status)
        if last is None:
            return PassiveOutcome(None, None, iterations=iterations, restarts=restart, status=result.status)
        if restart < pc.max_restarts:
            logger.warning(f"PCCP did not converge in {pc.t_max} iterations, restarting from random phases")
            current = _random_phases(last.state, rng)
    logger.warning(f"PCCP exhausted {pc.max_restarts} restarts, returning the last feasible iterate")
    return PassiveOutcome(project_passive(last.state, last.amplitudes), last.workspace, last.penalty,
                          last.ms_penalty, iterations, pc.max_restarts, False, last.status)


def pccp_passive_es(state, workspace, channels, params, cfg, rng=None) -> PassiveOutcome:
    if state.protocol is not Protocol.ES:
        raise ValueError(f"pccp_passive_es needs an ES state, got {state.protocol.value}")
    return pccp_passive(state, workspace, channels, params, cfg, rng)


def ms_passive_step(state, workspace, channels, params, cfg, rng=None) -> PassiveOutcome:
    if state.protocol is not Protocol.MS:
        raise ValueError(f"ms_passive_step needs an MS state, got {state.protocol.value}")
    return pccp_passive(state, workspace, channels, params, cfg, rng)
