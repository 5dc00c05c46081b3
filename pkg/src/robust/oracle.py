"""
Sampling audits of the semi-infinite inequalities behind each certificate.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.channel import sample_uncertainty_ball
from .forms import ErrorLayout, QuadraticForm

logger = logging.getLogger(__name__)

# margin(dh, dG) >= 0 when the inequality holds for that error
Check = Callable[[np.ndarray, np.ndarray], float]


@dataclass
class ViolationReport:
    samples: int
    violations: int
    worst_violation: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _true_row(h_hat, G_hat, u, dh, dG) -> np.ndarray:
    h = np.asarray(h_hat, dtype=complex).ravel() + dh
    row = h.conj()
    if u is not None:
        row = row + np.asarray(u, dtype=complex).ravel().conj() @ (np.asarray(G_hat, dtype=complex) + dG)
    return row


def signal_lower_check(h_hat, G_hat, u, w, bound: float) -> Check:
    """|h̄w|² ≥ bound."""
    w = np.asarray(w, dtype=complex).ravel()
    return lambda dh, dG: abs(_true_row(h_hat, G_hat, u, dh, dG) @ w) ** 2 - bound


def power_upper_check(h_hat, G_hat, u, W, bound: float) -> Check:
    """‖h̄W‖² ≤ bound."""
    W = np.asarray(W, dtype=complex).reshape(np.size(h_hat), -1)
    return lambda dh, dG: bound - float(np.sum(np.abs(_true_row(h_hat, G_hat, u, dh, dG) @ W) ** 2))


def power_lower_check(h_hat, G_hat, u, W, bound: float) -> Check:
    """‖h̄W‖² ≥ bound."""
    W = np.asarray(W, dtype=complex).reshape(np.size(h_hat), -1)
    return lambda dh, dG: float(np.sum(np.abs(_true_row(h_hat, G_hat, u, dh, dG) @ W) ** 2)) - bound


def form_lower_check(form: QuadraticForm, layout: ErrorLayout, rhs: float,
                     assignment: Optional[np.ndarray] = None) -> Check:
    """x^H A x + 2Re(a^H x) + a0 ≥ rhs on the stacked error."""
    return lambda dh, dG: form.evaluate(layout.stack(dh, dG), assignment) - rhs


def _to_sphere(draws: np.ndarray, radius: float) -> None:
    """Push draws onto the ball boundary in place, where affine checks are tightest."""
    if radius == 0 or draws.shape[0] == 0:
        return
    axes = tuple(range(1, draws.ndim))
    norms = np.sqrt(np.sum(np.abs(draws) ** 2, axis=axes, keepdims=True))
    draws *= radius / np.maximum(norms, 1e-300)


def implication_oracle(check: Check, xi: float, zeta: float, N: int, M: int, samples: int = 10_000,
                       seed: Optional[int] = None, tol: float = 1e-6) -> ViolationReport:
    """
    Sample errors in both balls and count where the inequality fails.

    Args:
        check: margin function of (Δh, ΔG)
        xi, zeta: radii of the Δh and ΔG balls
        N, M: antenna and element counts
        samples: number of draws; zero radii collapse to one deterministic check
        seed: random seed
        tol: violations up to tol are ignored

    Returns:
        ViolationReport with the count and the largest shortfall
    """
    if xi == 0 and zeta == 0:
        samples = 1
    rng = np.random.default_rng(seed)
    dhs = sample_uncertainty_ball(xi, (N,), rng, size=samples)
    dGs = sample_uncertainty_ball(zeta, (M, N), rng, size=samples)
    _to_sphere(dhs[: samples // 4], xi)
    _to_sphere(dGs[: samples // 4], zeta)
    worst, count = 0.0, 0
    for dh, dG in zip(dhs, dGs):
        margin = check(dh, dG)
        if margin < -tol:
            count += 1
        worst = max(worst, -margin)
    if count:
        logger.debug(f"Oracle: {count}/{samples} violations, worst {worst:.3e}")
    return ViolationReport(samples, count, worst)
