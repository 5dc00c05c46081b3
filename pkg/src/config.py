import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Project root directory
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Output paths
RESULTS_DIR = os.getenv("STARSEC_RESULTS_DIR", os.path.join(PROJECT_ROOT, "results"))
CONFIG_DIR = os.path.join(PROJECT_ROOT, "configs")

# Solver settings
SOLVER = os.getenv("STARSEC_SOLVER", "CLARABEL").upper()
WORKERS = int(os.getenv("STARSEC_WORKERS", str(os.cpu_count() or 1)))
LOG_LEVEL = os.getenv("STARSEC_LOG_LEVEL", "INFO").upper()

# Simulation defaults. Strings carry their units and are
# converted by the config models.
SYSTEM_DEFAULTS = {
    'noise_power': '-80 dBm',
    'p_max': '40 dBm',
    'amplifier_efficiency': 1.0,
    'p_bs': '10 dBW',
    'p_user': '10 dBm',
    'p_element': '10 mW',
    'min_rate': 1.5,  # bits/s/Hz
    'max_leakage': 0.6,  # bits/s/Hz
    'reference_path_loss': '-30 dB',
    'exponent_bs_ris': 2.2,
    'exponent_direct': 3.2,
    'exponent_ris_user': 2.6,
    'rician_bs_ris': '3 dB',
    'rician_direct': '3 dB',
    'rician_ris_user': '3 dB',
}

GEOMETRY_DEFAULTS = {
    'bs': (0.0, 0.0, 10.0),
    'ris': (0.0, 30.0, 20.0),
    'bob_center_r': (-12.0, 25.0, 0.0),
    'eve_center_r': (180.0, 25.0, 0.0),
    'bob_center_t': (10.0, 35.0, 0.0),
    'eve_center_t': (180.0, 35.0, 0.0),
    'cluster_radius': 4.0,  # meters
}

# Normalized estimation error, kappa^2 = 0.1
DEFAULT_KAPPA = 0.1 ** 0.5

# Scale profiles selectable from the command line
PROFILES = {
    'desk': {'system': {'N': 3, 'M': 8, 'J_r': 1, 'J_t': 1}, 'seeds': 5},
    'paper': {'system': {'N': 5, 'M': 20, 'J_r': 2, 'J_t': 2}, 'seeds': 5},
}

# Column order of campaign CSV files
RESULT_COLUMNS = [
    'scheme', 'sweep', 'value', 'seed', 'see', 'ssr', 'power',
    'iterations', 'converged', 'status', 'mean_beta_r', 'mean_beta_t',
    'beta_r', 'beta_t',
]
TIMING_COLUMNS = ['scheme', 'value', 'seed', 'wall_ms']
