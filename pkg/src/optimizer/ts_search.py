"""
Two-layer time-switching optimization: a 1-D search over τ_r around the AO loop.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from src.channel import ChannelRealization, SystemParams
from src.metrics import Protocol
from .ao import AOResult, ao_run
from .initialization import InfeasibleInstanceError
from .settings import AOConfig

logger = logging.getLogger(__name__)


def bounded_max(f, a: float, b: float, tol: float) -> float:
    """
    Maximizer of a unimodal f on [a, b] by bounded Brent search.

    Returns:
        The abscissa of the maximum, within tol
    """
    a, b = min(a, b), max(a, b)
    if b - a <= tol:
        return 0.5 * (a + b)
    res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method='bounded', options={'xatol': tol})
    if not res.success:
        logger.warning(f"Bounded search on [{a:.4g}, {b:.4g}] stopped early: {res.message}")
    return float(res.x)


def is_unimodal(values) -> bool:
    """True when the sequence never rises again after it has fallen."""
    fallen = False
    for prev, cur in zip(values, values[1:]):
        if cur < prev:
            fallen = True
        elif cur > prev and fallen:
            return False
    return True


@dataclass
class TsResult:
    tau_r: float
    result: AOResult
    evaluations: Dict[float, float] = field(default_factory=dict)
    fallback: bool = False

    @property
    def see(self) -> float:
        return self.result.see


class TimeSwitchingSearch:
    """
    Outer search over the reflection time fraction τ_r.

    Each evaluation runs the TS AO loop at (τ_r, 1 − τ_r); results are cached
    and an infeasible split scores zero.
    """

    def __init__(self, channels: ChannelRealization, params: SystemParams, cfg: Optional[AOConfig] = None):
        self.logger = logging.getLogger(__name__)
        self.channels = channels
        self.params = params
        self.cfg = cfg or AOConfig()
        self.results: Dict[float, Optional[AOResult]] = {}

    def evaluate(self, tau_r: float) -> float:
        key = round(float(tau_r), 6)
        if key not in self.results:
            try:
                self.results[key] = ao_run(Protocol.TS, self.channels, self.params, self.cfg, (key, 1.0 - key))
            except InfeasibleInstanceError as e:
                self.logger.info(f"TS split tau_r={key} is infeasible: {e}")
                self.results[key] = None
        result = self.results[key]
        return result.see if result is not None else 0.0

    def run(self) -> TsResult:
        ts = self.cfg.ts
        lo, hi = ts.floor, 1.0 - ts.floor
        grid = np.linspace(lo, hi, ts.grid_points)
        values = [self.evaluate(t) for t in grid]
        fallback = not is_unimodal(values)
        if fallback:
            self.logger.warning(f"TS objective is not unimodal on {np.round(grid, 3).tolist()}, "
                                f"falling back to a {ts.fallback_resolution} grid")
            for t in np.arange(lo, hi + 1e-12, ts.fallback_resolution):
                self.evaluate(t)
        else:
            i = int(np.argmax(values))
            self.evaluate(bounded_max(self.evaluate, grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)],
                                      ts.tolerance))
        feasible = {t: r for t, r in self.results.items() if r is not None}
        if not feasible:
            raise InfeasibleInstanceError("No time split admits a feasible TS state")
        best = max(feasible, key=lambda t: feasible[t].see)
        evaluations = {t: (r.see if r is not None else 0.0) for t, r in sorted(self.results.items())}
        self.logger.info(f"TS search picked tau_r={best:.4f} with SEE {feasible[best].see:.6g} "
                         f"after {len(self.results)} evaluations")
        return TsResult(best, feasible[best], evaluations, fallback)


def ts_two_layer(channels: ChannelRealization, params: SystemParams, cfg: Optional[AOConfig] = None) -> TsResult:
    """
    Best time split and TS state for one realization.

    Raises:
        InfeasibleInstanceError: when every evaluated split is infeasible
    """
    return TimeSwitchingSearch(channels, params, cfg).run()
