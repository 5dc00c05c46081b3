from .rates import (
    SecrecyReport,
    achievable_rate,
    combined_channel,
    decode_rate,
    decoding_order_ok,
    eve_passive,
    eve_rate,
    secrecy_energy_efficiency,
    stream_rates,
    total_power,
    ts_decode_rate,
)
from .state import BeamformingState, Protocol, sf_mask, state_from_amplitudes

__all__ = [
    'SecrecyReport', 'achievable_rate', 'combined_channel', 'decode_rate', 'decoding_order_ok',
    'eve_passive', 'eve_rate', 'secrecy_energy_efficiency', 'stream_rates', 'total_power',
    'ts_decode_rate', 'BeamformingState', 'Protocol', 'sf_mask', 'state_from_amplitudes',
]
