from .ao import AlternatingOptimizer, AOResult, TraceRecord, ao_run, export_trace, normalize_channels
from .complexity import (ComplexityEstimate, block_inventory, closed_form_families, complexity_estimate, cross_check,
                         family_mismatches, program_inventory)
from .initialization import (InfeasibleInstanceError, backoff, certify, init_state, initialize, restore,
                             zero_forcing_beams)
from .oma import OmaResult, SlotResult, oma_baseline, slot_instance
from .passive import PassiveOutcome, ms_passive_step, ms_target, pccp_passive, pccp_passive_es, project_passive
from .settings import AOConfig, PccpConfig, TsSearchConfig
from .subproblems import (FAMILIES, BlockKind, PassiveOptions, SubproblemBuilder, SubproblemResult,
                          active_subproblem, ms_penalty_value, passive_mask, power_subproblem,
                          solve_subproblem)
from .ts_search import TimeSwitchingSearch, TsResult, bounded_max, is_unimodal, ts_two_layer
from .workspace import Workspace, nominal_workspace, slot_noise, slot_weight
