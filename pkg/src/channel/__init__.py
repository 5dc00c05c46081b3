from .params import NUM_EVES, SPACES, Geometry, SystemParams, UncertaintyConfig
from .realization import (
    ChannelRealization,
    Link,
    cascaded_channel,
    dump_channels,
    generate_realization,
    path_loss,
    sample_uncertainty_ball,
)
from .units import parse_power, parse_ratio, to_db

__all__ = [
    'NUM_EVES', 'SPACES', 'Geometry', 'SystemParams', 'UncertaintyConfig',
    'ChannelRealization', 'Link', 'cascaded_channel', 'dump_channels', 'generate_realization',
    'path_loss', 'sample_uncertainty_ball', 'parse_power', 'parse_ratio', 'to_db',
]
