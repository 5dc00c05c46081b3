from .forms import (
    ErrorLayout,
    LinearizationCoefficients,
    QuadraticForm,
    combined_column,
    tangent_coefficients,
    linearize_signal_power,
    error_coupling_vector,
)
from .lmi import (
    LmiBlock,
    Perturbation,
    SchurForm,
    ball_constraints,
    robust_interference_lower_lmi,
    robust_lower_lmi,
    robust_signal_lmi,
    robust_upper_lmi,
    s_procedure_assemble,
    schur_core,
    schur_expand,
    sign_definiteness_assemble,
)
from .oracle import (
    ViolationReport,
    form_lower_check,
    implication_oracle,
    power_lower_check,
    power_upper_check,
    signal_lower_check,
)
from .surrogates import bilinear_soc, bilinear_upper_bound, sca_eta_bound, soc_holds, soc_power_constraint
