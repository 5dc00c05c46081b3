"""
OMA baseline: every Bob is served alone in an equal time slot.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from src.channel import ChannelRealization, SystemParams
from src.metrics import Protocol
from .ao import AOResult, ao_run
from .initialization import InfeasibleInstanceError
from .settings import AOConfig

logger = logging.getLogger(__name__)


@dataclass
class SlotResult:
    space: int
    index: int
    result: Optional[AOResult] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class OmaResult:
    protocol: Protocol
    slots: List[SlotResult] = field(default_factory=list)
    ssr: float = 0.0
    power: float = 0.0

    @property
    def see(self) -> float:
        return self.ssr / self.power if self.power > 0 else 0.0

    @property
    def converged(self) -> bool:
        return all(s.ok and s.result.converged for s in self.slots)

    @property
    def iterations(self) -> int:
        return sum(s.result.iterations for s in self.slots if s.ok)


def slot_instance(channels: ChannelRealization, params: SystemParams, k: int, j: int):
    """Single-Bob parameters and realization for the slot of Bob j in space k."""
    link = channels.bob(k, j)
    bobs = ((link,), ()) if k == 0 else ((), (link,))
    slot_params = params.model_copy(update={'J_r': int(k == 0), 'J_t': int(k == 1)})
    return slot_params, replace(channels, bobs=bobs)


def oma_baseline(protocol: Protocol, channels: ChannelRealization, params: SystemParams,
                 cfg: Optional[AOConfig] = None) -> OmaResult:
    """
    Serve the J Bobs in J equal slots with the same robust AO machinery.

    Slot rates are weighted by 1/J. The reported power charges the full
    static power once and averages the transmit power over the slots. A TS
    slot keeps the whole surface in the served Bob's mode.

    Args:
        protocol: surface protocol used inside every slot
        channels: realization in physical units
        params: system constants of the full network
        cfg: driver settings

    Returns:
        OmaResult; infeasible slots are recorded with their error and contribute nothing
    """
    protocol = Protocol(protocol)
    out = OmaResult(protocol)
    J = params.J
    transmit = 0.0
    ssr = 0.0
    for k in range(2):
        for j in range(params.users(k)):
            slot_params, slot_channels = slot_instance(channels, params, k, j)
            tau = ((1.0, 0.0) if k == 0 else (0.0, 1.0)) if protocol is Protocol.TS else None
            try:
                result = ao_run(protocol, slot_channels, slot_params, cfg, tau)
            except InfeasibleInstanceError as e:
                logger.warning(f"OMA-{protocol.value} slot for Bob ({k}, {j}) is infeasible: {e}")
                out.slots.append(SlotResult(k, j, error=str(e)))
                continue
            out.slots.append(SlotResult(k, j, result))
            ssr += result.report.ssr
            transmit += sum(float(np.linalg.norm(f) ** 2) for f in result.state.f)
    out.ssr = ssr / J
    out.power = params.amplifier_efficiency * transmit / J + params.static_power
    return out
