"""
Assembly of the per-block convex subproblems.

Every subproblem shares one set of robust constraints; the block kind decides
which quantities are decision variables:

    POWER    α (spaces with more than one Bob)
    ACTIVE   f_k
    PASSIVE  u_k plus the PCCP amplitude slacks
    CERTIFY  workspace slacks only, at a fixed state
    RESTORE  f_k, maximizing the smallest QoS slack
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.channel import ChannelRealization, SystemParams
from src.conic import Affine, ConicModel, ConicProgram, ConicSolution, SolverTolerances, real_stack, scalar_product, solve
from src.metrics import BeamformingState, Protocol, sf_mask
from src.robust import (
    bilinear_soc,
    robust_interference_lower_lmi,
    robust_signal_lmi,
    robust_upper_lmi,
    sca_eta_bound,
    soc_power_constraint,
)
from .settings import AOConfig
from .workspace import Workspace, slot_noise, slot_weight

logger = logging.getLogger(__name__)

Operand = Union[Affine, np.ndarray]

FAMILIES = ("bob_signal", "bob_interference", "eve_signal", "eve_interference", "order_lower", "order_upper")
ETA_FLOOR = 1e-9


class BlockKind(str, Enum):
    POWER = "power"
    ACTIVE = "active"
    PASSIVE = "passive"
    CERTIFY = "certify"
    RESTORE = "restore"


@dataclass
class PassiveOptions:
    """PCCP penalties for one passive solve; d holds the MS targets."""
    penalty: float
    ms_penalty: float = 0.0
    d: Optional[Tuple[np.ndarray, np.ndarray]] = None


@dataclass
class Handles:
    psi: Optional[Affine] = None
    rho: Optional[Affine] = None
    slack: Optional[Affine] = None
    r: Dict = field(default_factory=dict)
    eta: Dict = field(default_factory=dict)
    r_eve: Dict = field(default_factory=dict)
    eta_eve: Dict = field(default_factory=dict)
    sigma: Dict = field(default_factory=dict)
    alpha: Dict = field(default_factory=dict)
    f: Dict = field(default_factory=dict)
    u: Dict = field(default_factory=dict)
    b: Dict = field(default_factory=dict)
    c: Dict = field(default_factory=dict)
    c_hat: Dict = field(default_factory=dict)
    ms_epigraph: Optional[Affine] = None


@dataclass
class SubproblemResult:
    kind: BlockKind
    solution: ConicSolution
    program: ConicProgram
    state: Optional[BeamformingState] = None
    workspace: Optional[Workspace] = None
    amplitudes: Optional[Tuple[np.ndarray, np.ndarray]] = None
    penalty: float = 0.0
    ms_penalty: float = 0.0
    slack: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.solution.ok

    @property
    def status(self) -> str:
        return self.solution.status.value


def _scalar(expr: Affine, x: np.ndarray) -> float:
    return float(np.real(expr.value(x)).ravel()[0])


def passive_mask(protocol: Protocol, k: int, m: int) -> np.ndarray:
    """Elements whose passive coefficient is a decision variable in space k."""
    if protocol is Protocol.SF:
        mask = sf_mask(m)
        return mask if k == 0 else ~mask
    return np.ones(m, dtype=bool)


class SubproblemBuilder:
    """
    Builds one subproblem around a fixed iterate.

    Args:
        kind: which block is optimized
        state: current iterate
        workspace: current slack values (linearization points)
        channels: noise-normalized realization
        params: system constants
        passive: penalty settings, PASSIVE only
    """

    def __init__(self, kind: BlockKind, state: BeamformingState, workspace: Workspace,
                 channels: ChannelRealization, params: SystemParams, passive: Optional[PassiveOptions] = None):
        self.logger = logging.getLogger(__name__)
        self.kind = kind
        self.state = state
        self.ws = workspace
        self.ch = channels
        self.params = params
        self.passive = passive
        self.ts = state.protocol is Protocol.TS
        self.N = channels.N
        self.M = channels.M
        self.model = ConicModel(f"{kind.value}-{state.protocol.value}")
        self.h = Handles()
        if kind is BlockKind.PASSIVE and passive is None:
            raise ValueError("PASSIVE subproblems need PassiveOptions")

    # decision views

    def _nonneg(self, name: str, shape: Tuple[int, int] = (1, 1)) -> Affine:
        var = self.model.real(name, shape)
        self.model.add_nonneg(var, f"{name}>=0")
        return var

    def _multiplier(self, prefix: str):
        return lambda tag: self._nonneg(f"{prefix}.{tag}")

    def _declare_decisions(self) -> None:
        s = self.state
        for k in range(2):
            J = s.users(k)
            if self.kind is BlockKind.POWER and J > 1:
                alpha = self._nonneg(f"alpha[{k}]", (J, 1))
                self.model.add_soc(1.0, alpha, f"alpha_norm[{k}]")
                for j in range(J):
                    self.h.alpha[(k, j)] = alpha[j, 0]
            else:
                for j in range(J):
                    self.h.alpha[(k, j)] = Affine.constant(s.alpha[k][j])

            if self.kind in (BlockKind.ACTIVE, BlockKind.RESTORE) and J > 0:
                self.h.f[k] = self.model.complex(f"f[{k}]", (self.N, 1))
            else:
                self.h.f[k] = Affine.constant(np.asarray(s.f[k]).reshape(-1, 1))

            if self.kind is BlockKind.PASSIVE:
                mask = passive_mask(s.protocol, k, self.M)
                z = self.model.complex(f"u[{k}]", (int(mask.sum()), 1))
                self.h.u[k] = z if mask.all() else np.eye(self.M)[:, mask] @ z
            else:
                self.h.u[k] = Affine.constant(np.asarray(s.u[k]).reshape(-1, 1))

        if self.kind in (BlockKind.ACTIVE, BlockKind.RESTORE):
            beams = Affine.vstack([real_stack(self.h.f[k]) for k in range(2)])
            self.model.add_soc(np.sqrt(self.params.p_max), beams, "max_power")

    def w(self, k: int, j: int) -> Affine:
        return scalar_product(self.h.alpha[(k, j)], self.h.f[k])

    def W(self, k: int, j: int) -> Optional[Affine]:
        cols = [self.w(k, i) for i in range(j)]
        other = 1 - k
        if not self.ts and self.state.users(other) > 0:
            cols.append(self.h.f[other])
        return Affine.hstack(cols) if cols else None

    def _eve_u(self, e: int, k: int) -> Tuple[Optional[Operand], Optional[np.ndarray]]:
        if self.ts and e != k:
            return None, None
        space = k if self.ts else e
        return self.h.u[space], np.asarray(self.state.u[space])

    def _u_norm2(self, space: int) -> Optional[float]:
        # Passive blocks freeze F^H F at the iterate norm of u; the new point
        # is re-certified with the exact norm before it is accepted.
        if self.kind is BlockKind.PASSIVE:
            return float(np.linalg.norm(self.state.u[space]) ** 2)
        return None

    # constraint families

    def _workspace_variables(self) -> None:
        s = self.state
        for k in range(2):
            for j in range(s.users(k)):
                self.h.r[(k, j)] = self._nonneg(f"r[{k},{j}]")
                for l in range(j + 1):
                    self.h.eta[(k, j, l)] = self._nonneg(f"eta[{k},{j},{l}]")
                for e in range(len(self.ch.eves)):
                    self.h.r_eve[(k, j, e)] = self._nonneg(f"r_eve[{k},{j},{e}]")
                    self.h.eta_eve[(k, j, e)] = self._nonneg(f"eta_eve[{k},{j},{e}]")
            for j in range(s.users(k) - 1):
                self.h.sigma[(k, j)] = self._nonneg(f"sigma[{k},{j}]")

    def _rate_thresholds(self) -> None:
        p = self.params
        slack = self.h.slack if self.h.slack is not None else 0.0
        for (k, j), r in self.h.r.items():
            tau = slot_weight(self.state, k)
            self.model.add_nonneg(r - p.min_rate / tau + slack, f"min_rate[{k},{j}]")
        for (k, j, e), re in self.h.r_eve.items():
            tau = slot_weight(self.state, k)
            self.model.add_nonneg(p.max_leakage / tau - re + slack, f"max_leakage[{k},{j},{e}]")

    def _bob_constraints(self) -> None:
        s, ws = self.state, self.ws
        for k in range(2):
            noise = slot_noise(s, k)
            u = self.h.u[k]
            u0 = np.asarray(s.u[k])
            for j in range(s.users(k)):
                w = self.w(k, j)
                W = self.W(k, j)
                r = self.h.r[(k, j)]
                for l in range(j + 1):
                    link = self.ch.bob(k, l)
                    eta = self.h.eta[(k, j, l)]
                    tag = f"[{k},{j},{l}]"
                    rhs = sca_eta_bound(eta, r, max(ws.eta[(k, j, l)], ETA_FLOOR), ws.r[(k, j)]) - eta
                    robust_signal_lmi(f"bob_signal{tag}", link.h_hat, link.G_hat, link.xi, link.zeta, w, u,
                                      s.w(k, j), u0, rhs, self._multiplier(f"ups{tag}")).add_to(self.model)
                    if W is None:
                        self.model.add_nonneg(eta - noise, f"bob_noise{tag}")
                        continue
                    robust_upper_lmi(f"bob_interference{tag}", W, u, link.h_hat, link.G_hat, eta - noise,
                                     link.xi, link.zeta, self._multiplier(f"varpi{tag}"),
                                     self._u_norm2(k)).add_to(self.model)

    def _eve_constraints(self) -> None:
        s, ws = self.state, self.ws
        for k in range(2):
            noise = slot_noise(s, k)
            for j in range(s.users(k)):
                w = self.w(k, j)
                W = self.W(k, j)
                W0 = s.interference(k, j, ts=self.ts)
                for e, eve in enumerate(self.ch.eves):
                    tag = f"[{k},{j},{e}]"
                    u, u0 = self._eve_u(e, k)
                    space = k if self.ts else e
                    # frozen at the iterate under PASSIVE; certify re-checks the exact norm
                    u_norm2 = self._u_norm2(space) if u is not None else None
                    eta, re = self.h.eta_eve[(k, j, e)], self.h.r_eve[(k, j, e)]
                    T = sca_eta_bound(eta, re, max(ws.eta_eve[(k, j, e)], ETA_FLOOR), ws.r_eve[(k, j, e)]) - eta
                    robust_upper_lmi(f"eve_signal{tag}", w, u, eve.h_hat, eve.G_hat, T, eve.xi, eve.zeta,
                                     self._multiplier(f"omega{tag}"), u_norm2).add_to(self.model)
                    if W is None:
                        self.model.add_nonneg(noise - eta, f"eve_noise{tag}")
                        continue
                    robust_interference_lower_lmi(f"eve_interference{tag}", W, u, W0, u0, eve.h_hat, eve.G_hat,
                                                  eta - noise, eve.xi, eve.zeta,
                                                  self._multiplier(f"omega_tilde{tag}"),
                                                  u_norm2).add_to(self.model)

    def _order_constraints(self) -> None:
        s = self.state
        for k in range(2):
            u = self.h.u[k]
            u0 = np.asarray(s.u[k])
            for j in range(s.users(k) - 1):
                tag = f"[{k},{j}]"
                sigma = self.h.sigma[(k, j)]
                lower, upper = self.ch.bob(k, j), self.ch.bob(k, j + 1)
                robust_signal_lmi(f"order_lower{tag}", lower.h_hat, lower.G_hat, lower.xi, lower.zeta,
                                  self.w(k, j), u, s.w(k, j), u0, sigma,
                                  self._multiplier(f"ups_order{tag}")).add_to(self.model)
                robust_upper_lmi(f"order_upper{tag}", self.w(k, j + 1), u, upper.h_hat, upper.G_hat, sigma,
                                 upper.xi, upper.zeta, self._multiplier(f"varpi_order{tag}"),
                                 self._u_norm2(k)).add_to(self.model)
            for j in range(s.users(k) - 2):
                self.model.add_nonneg(self.h.sigma[(k, j)] - self.h.sigma[(k, j + 1)], f"order_chain[{k},{j}]")

    def _objective_epigraph(self) -> None:
        p = self.params
        self.h.psi = self.model.real("psi")
        self.h.rho = self.model.real("rho")
        total = Affine.zeros((1, 1))
        for (k, j), r in self.h.r.items():
            leak = Affine.zeros((1, 1))
            for e in range(len(self.ch.eves)):
                leak = leak + self.h.r_eve[(k, j, e)]
            total = total + (r - leak) * slot_weight(self.state, k)
        head, tail = bilinear_soc(self.h.psi, self.h.rho, total, self.ws.t)
        self.model.add_soc(head, tail, "see_epigraph")
        head, tail = soc_power_constraint(self.h.rho, [self.h.f[0], self.h.f[1]], p.amplifier_efficiency,
                                          p.static_power)
        self.model.add_soc(head, tail, "power_epigraph")

    def _pccp_constraints(self) -> Affine:
        """Amplitude coupling of PASSIVE blocks; returns the penalty sum Σ(c + ĉ)."""
        s = self.state
        continuous = s.protocol in (Protocol.ES, Protocol.MS)
        penalty = Affine.zeros((1, 1))
        b_all = []
        for k in range(2):
            u = self.h.u[k]
            u0 = np.asarray(s.u[k]).reshape(-1, 1)
            mask = passive_mask(s.protocol, k, self.M)
            c = self._nonneg(f"c[{k}]", (self.M, 1))
            c_hat = self._nonneg(f"c_hat[{k}]", (self.M, 1))
            if continuous:
                b = self._nonneg(f"b[{k}]", (self.M, 1))
                b_all.append(b)
            else:
                b = Affine.constant(mask.astype(float).reshape(-1, 1))
            self.h.b[k], self.h.c[k], self.h.c_hat[k] = b, c, c_hat
            for m in np.flatnonzero(mask):
                um = u[m, 0]
                level = b[m, 0] + c[m, 0]
                tail = Affine.vstack([um.real() * 2.0, um.imag() * 2.0, level - 1.0])
                self.model.add_soc(level + 1.0, tail, f"modulus[{k},{m}]")
            keep = np.flatnonzero(mask)
            fts = (u * u0.conj()).real() * 2.0 - np.abs(u0) ** 2 - b + c_hat
            self.model.add_nonneg(fts.rows(keep), f"modulus_fts[{k}]")
            penalty = penalty + c.rows(keep).sum() + c_hat.rows(keep).sum()
        if continuous:
            self.model.add_zero(b_all[0] + b_all[1] - 1.0, "amplitude_split")
        return penalty

    def _ms_epigraph(self) -> Affine:
        d_r, d_t = self.passive.d
        parts = []
        for k, d in enumerate((d_r, d_t)):
            d = np.asarray(d, dtype=float).reshape(-1, 1)
            b = self.h.b[k]
            parts.extend([b - d, b * (1.0 - d)])
        z = Affine.vstack(parts)
        epi = self._nonneg("ms_epigraph")
        self.model.add_soc(epi + 1.0, Affine.vstack([z * 2.0, epi - 1.0]), "ms_penalty")
        self.h.ms_epigraph = epi
        return epi

    # assembly

    def build(self) -> Tuple[ConicProgram, Handles]:
        self._declare_decisions()
        if self.kind is BlockKind.RESTORE:
            self.h.slack = self.model.real("slack")
        self._workspace_variables()
        self._rate_thresholds()
        self._bob_constraints()
        self._eve_constraints()
        self._order_constraints()

        if self.kind is BlockKind.RESTORE:
            self.model.maximize(-self.h.slack)
            return self.model.build(), self.h

        self._objective_epigraph()
        objective = self.h.psi
        if self.kind is BlockKind.PASSIVE:
            objective = objective - self._pccp_constraints() * self.passive.penalty
            if self.state.protocol is Protocol.MS and self.passive.d is not None:
                objective = objective - self._ms_epigraph() * self.passive.ms_penalty
        self.model.maximize(objective)
        return self.model.build(), self.h


def _extract(kind: BlockKind, state: BeamformingState, ws: Workspace, h: Handles, x: np.ndarray
             ) -> Tuple[BeamformingState, Workspace]:
    new_ws = ws.copy()
    for name in ("r", "eta", "r_eve", "eta_eve", "sigma"):
        target = getattr(new_ws, name)
        for key, expr in getattr(h, name).items():
            target[key] = _scalar(expr, x)
    if h.psi is not None:
        new_ws.psi = _scalar(h.psi, x)
        new_ws.rho = _scalar(h.rho, x)

    if kind is BlockKind.POWER:
        alpha = tuple(np.array([_scalar(h.alpha[(k, j)], x) for j in range(state.users(k))]) for k in range(2))
        return state.with_(alpha=alpha), new_ws
    if kind in (BlockKind.ACTIVE, BlockKind.RESTORE):
        f = tuple(np.asarray(h.f[k].value(x)).ravel() for k in range(2))
        return state.with_(f=f), new_ws
    if kind is BlockKind.PASSIVE:
        u = tuple(np.asarray(Affine.lift(h.u[k]).value(x)).ravel() for k in range(2))
        return state.with_(u=u), new_ws
    return state, new_ws


def solve_subproblem(kind: BlockKind, state: BeamformingState, workspace: Workspace,
                     channels: ChannelRealization, params: SystemParams, cfg: AOConfig,
                     passive: Optional[PassiveOptions] = None) -> SubproblemResult:
    """
    Build, solve and read back one subproblem.

    Args:
        kind: block to optimize
        state: iterate (its beams and passive vectors are the linearization points)
        workspace: slack iterate
        channels: noise-normalized realization
        params: system constants
        cfg: driver settings (solver name and feasibility tolerance)
        passive: penalty settings for PASSIVE blocks

    Returns:
        SubproblemResult; on a non-optimal status state and workspace are None
    """
    program, handles = SubproblemBuilder(kind, state, workspace, channels, params, passive).build()
    tol = SolverTolerances(feasibility=cfg.feasibility)
    solution = solve(program, tol, cfg.solver)
    result = SubproblemResult(kind, solution, program)
    if not solution.ok:
        logger.debug(f"{program.name}: {solution.status.value}")
        return result
    x = solution.primal
    result.state, result.workspace = _extract(kind, state, workspace, handles, x)
    if handles.slack is not None:
        result.slack = _scalar(handles.slack, x)
    if kind is BlockKind.PASSIVE:
        result.amplitudes = tuple(np.real(handles.b[k].value(x)).ravel() for k in range(2))
        penalty = 0.0
        for k in range(2):
            keep = passive_mask(state.protocol, k, channels.M)
            penalty += np.sum(np.real(handles.c[k].value(x)).ravel()[keep])
            penalty += np.sum(np.real(handles.c_hat[k].value(x)).ravel()[keep])
        result.penalty = float(penalty)
        if handles.ms_epigraph is not None and passive.d is not None:
            result.ms_penalty = ms_penalty_value(result.amplitudes, passive.d)
    return result


def power_subproblem(state: BeamformingState, workspace: Workspace, channels: ChannelRealization,
                     params: SystemParams, cfg: AOConfig) -> SubproblemResult:
    """Power split α with F and u fixed."""
    return solve_subproblem(BlockKind.POWER, state, workspace, channels, params, cfg)


def active_subproblem(state: BeamformingState, workspace: Workspace, channels: ChannelRealization,
                      params: SystemParams, cfg: AOConfig) -> SubproblemResult:
    """Beams F with α and u fixed."""
    return solve_subproblem(BlockKind.ACTIVE, state, workspace, channels, params, cfg)


def ms_penalty_value(amplitudes: Tuple[np.ndarray, np.ndarray], d: Tuple[np.ndarray, np.ndarray]) -> float:
    """C̃ = ΣΣ (b − d)² + (b(1 − d))²."""
    return float(sum(np.sum((b - dk) ** 2 + (b * (1 - dk)) ** 2) for b, dk in zip(amplitudes, d)))
