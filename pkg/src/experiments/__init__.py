from .campaign import ResultRow, campaign_tasks, row_key, run_campaign, run_point
from .config_loader import (SCHEMES, SWEEP_AXES, CampaignConfig, ConfigError, ExperimentConfig, load_config,
                            normalize_scheme, parse_config, split_scheme)
from .summary import amplitude_table, summarize, summary_table
