"""
Alternating optimization driver.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.channel import ChannelRealization, SystemParams
from src.metrics import BeamformingState, Protocol, SecrecyReport, secrecy_energy_efficiency
from .initialization import certify, initialize
from .passive import pccp_passive, project_passive
from .settings import AOConfig
from .subproblems import active_subproblem, power_subproblem
from .workspace import Workspace

logger = logging.getLogger(__name__)


@dataclass
class TraceRecord:
    """One accepted AO iteration; iteration 0 is the certified starting point."""
    iteration: int
    psi: float
    see: float
    penalty: float = float("nan")
    ms_penalty: float = float("nan")
    statuses: Dict[str, str] = field(default_factory=dict)
    millis: float = 0.0

    def line(self) -> str:
        statuses = ",".join(f"{k}={v}" for k, v in self.statuses.items()) or "-"
        return (f"{self.iteration} {self.psi:.10g} {self.see:.10g} {self.penalty:.6g} "
                f"{self.ms_penalty:.6g} {statuses} {self.millis:.1f}")


@dataclass
class AOResult:
    state: BeamformingState
    workspace: Workspace
    report: SecrecyReport
    trace: List[TraceRecord]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    @property
    def see(self) -> float:
        return self.report.see


def normalize_channels(channels: ChannelRealization, params: SystemParams) -> ChannelRealization:
    """Scale every channel by 1/σ so the optimizer sees unit noise power."""
    return channels.scaled(1.0 / np.sqrt(params.noise_power))


class AlternatingOptimizer:
    """
    Cycles power allocation, active and passive beamforming until ψ settles.

    A block result is accepted only when it solves to optimality and does not
    lower ψ beyond the monotonicity slack; otherwise the previous block value
    is kept and the trace records the rejection.

    Args:
        protocol: operating protocol
        channels: realization in physical units
        params: system constants
        cfg: driver settings
        tau: TS time split
    """

    def __init__(self, protocol: Protocol, channels: ChannelRealization, params: SystemParams,
                 cfg: Optional[AOConfig] = None, tau: Optional[Tuple[float, float]] = None):
        self.logger = logging.getLogger(__name__)
        self.protocol = Protocol(protocol)
        self.channels = channels
        self.scaled = normalize_channels(channels, params)
        self.params = params
        self.cfg = cfg or AOConfig()
        self.tau = tau
        self.rng = np.random.default_rng(self.cfg.seed)

    def _accept(self, ws: Workspace, candidate: Optional[Workspace]) -> bool:
        return candidate is not None and candidate.psi >= ws.psi - self.cfg.monotonicity_slack

    def _see(self, state: BeamformingState) -> float:
        return secrecy_energy_efficiency(state, self.channels, self.params).see

    def power_step(self, state: BeamformingState, ws: Workspace) -> Tuple[BeamformingState, Workspace, str]:
        if all(state.users(k) <= 1 for k in range(2)):
            return state, ws, "skipped"
        result = power_subproblem(state, ws, self.scaled, self.params, self.cfg)
        if not result.ok:
            return state, ws, result.status
        alpha = []
        for a in result.state.alpha:
            norm = np.linalg.norm(a)
            if a.size and norm <= 0:
                return state, ws, "degenerate"
            alpha.append(a / norm if a.size else a)
        candidate = result.state.with_(alpha=tuple(alpha))
        cert = certify(candidate, self.scaled, self.params, self.cfg)
        if not self._accept(ws, cert):
            return state, ws, "rejected"
        return candidate, cert, result.status

    def active_step(self, state: BeamformingState, ws: Workspace) -> Tuple[BeamformingState, Workspace, str]:
        result = active_subproblem(state, ws, self.scaled, self.params, self.cfg)
        if not result.ok:
            return state, ws, result.status
        cert = certify(result.state, self.scaled, self.params, self.cfg)
        if not self._accept(ws, cert):
            return state, ws, "rejected"
        return result.state, cert, result.status

    def passive_step(self, state: BeamformingState, ws: Workspace):
        outcome = pccp_passive(state, ws, self.scaled, self.params, self.cfg, self.rng)
        if not outcome.ok:
            return state, ws, outcome.status, outcome
        cert = certify(outcome.state, self.scaled, self.params, self.cfg)
        if not self._accept(ws, cert):
            return state, ws, "rejected", outcome
        return outcome.state, cert, outcome.status, outcome

    def _finalize_ms(self, state: BeamformingState, ws: Workspace) -> Tuple[BeamformingState, Workspace, bool]:
        """Round the MS amplitudes to {0, 1}; the flag reports whether the rounded state is certified."""
        beta_r = state.beta[0]
        if np.max(np.minimum(beta_r, 1 - beta_r)) <= self.cfg.ms_binary_tol:
            return state, ws, True
        rounded = project_passive(state)
        cert = certify(rounded, self.scaled, self.params, self.cfg)
        if cert is None:
            self.logger.warning("Rounded MS amplitudes are not certified, reporting the run as not converged")
            return rounded, ws, False
        return rounded, cert, True

    def run(self) -> AOResult:
        cfg = self.cfg
        state, ws = initialize(self.protocol, self.scaled, self.params, cfg, self.tau)
        trace = [TraceRecord(0, ws.psi, self._see(state), statuses={"init": "optimal"})]
        converged = False
        for it in range(1, cfg.max_iterations + 1):
            start = time.perf_counter()
            psi_prev = ws.psi
            ws.refresh_t(cfg.psi_floor)
            statuses = {}
            state, ws, statuses["power"] = self.power_step(state, ws)
            state, ws, statuses["active"] = self.active_step(state, ws)
            state, ws, statuses["passive"], outcome = self.passive_step(state, ws)
            record = TraceRecord(it, ws.psi, self._see(state), outcome.penalty, outcome.ms_penalty, statuses,
                                 1e3 * (time.perf_counter() - start))
            trace.append(record)
            self.logger.debug(f"AO {self.protocol.value} iteration {it}: psi {ws.psi:.6g}, SEE {record.see:.6g}")
            if any(s not in ("optimal", "skipped") for s in statuses.values()):
                self.logger.warning(f"AO iteration {it} kept previous blocks: {statuses}")
            if abs(ws.psi - psi_prev) <= cfg.tolerance:
                converged = True
                break
        if self.protocol is Protocol.MS:
            state, ws, certified = self._finalize_ms(state, ws)
            converged = converged and certified
        report = secrecy_energy_efficiency(state, self.channels, self.params)
        self.logger.info(f"AO {self.protocol.value} finished after {len(trace) - 1} iterations, "
                         f"SEE {report.see:.6g}, converged={converged}")
        return AOResult(state, ws, report, trace, converged)


def ao_run(protocol: Protocol, channels: ChannelRealization, params: SystemParams,
           cfg: Optional[AOConfig] = None, tau: Optional[Tuple[float, float]] = None) -> AOResult:
    """
    Run the AO loop for one protocol on one realization.

    Args:
        protocol: ES, MS, TS (at a fixed time split) or SF
        channels: realization in physical units
        params: system constants
        cfg: driver settings
        tau: TS time split

    Returns:
        AOResult with the final state, its report on the estimated channels and the trace

    Raises:
        InfeasibleInstanceError: when no feasible starting point exists
    """
    return AlternatingOptimizer(protocol, channels, params, cfg, tau).run()


def export_trace(trace: List[TraceRecord], path: str) -> None:
    """Write one record per iteration: iteration ψ SEE C C̃ statuses millis."""
    try:
        with open(path, "w") as fh:
            fh.write("iteration psi see penalty ms_penalty statuses millis\n")
            for record in trace:
                fh.write(record.line() + "\n")
    except OSError as e:
        logger.error(f"Failed to write trace to {path}: {e}")
        raise
