from pathlib import Path

CONFIG_DIR = Path(__file__).parent

# =============================================
# Data Files
# =============================================
FUNCTIONS_FILE = CONFIG_DIR / 'functions.json'
SIMULATION_FILE = CONFIG_DIR / 'simulation.json'

# =============================================
# Numerical Tolerances
# =============================================
POLE_EPSILON = 1e-14
DEGENERATE_EPSILON = 1e-14
RANK_EPSILON = 1e-10
HOMOGRAPHY_SCALE_EPSILON = 1e-12
KNOT_TOLERANCE = 1e-12

NEWTON_TOLERANCE = 1e-12
NEWTON_MAX_ITERATIONS = 100
BRACKET_SCALE = 4.0

FIXED_POINT_TOLERANCE = 1e-12
FIXED_POINT_MAX_ITERATIONS = 100

# =============================================
# Optimizer Defaults
# =============================================
MAX_ITERATIONS = 120
TOLERANCE_X = 1e-5
TOLERANCE_FUN = 1e-5
JACOBIAN_STEP = 1e-7
POLE_PENALTY = 1e6

INITIAL_DAMPING = 1e-3
DAMPING_UP = 10.0
DAMPING_DOWN = 0.1
DAMPING_MIN = 1e-12
MAX_DAMPING_TRIALS = 10
GRADIENT_EPSILON = 1e-14

# =============================================
# Comparison and Curves
# =============================================
MAX_CATALOG_COEFFICIENTS = 3
BASELINE_COEFFICIENTS = 6
ENVELOPE_TOLERANCE = 0.05
DEFAULT_CURVE_SAMPLES = 101
DEFAULT_TRACE_RADIUS = 1.0
DEFAULT_TRACE_SAMPLES = 360

# =============================================
# Plotting
# =============================================
PLOT_WIDTH = 640
PLOT_HEIGHT = 480
PLOT_MARGIN = 48
PLOT_BG = '#ffffff'
AXIS_COLOR = '#444444'
CURVE_COLORS = ('#1f4e9c', '#c0392b', '#2e8b57')
LINE_WIDTH = 2

# =============================================
# File Formats
# =============================================
DATASET_FORMAT = 'planar-dataset/1'
REPORT_FORMAT = 'calibration-report/1'
TRUTH_FORMAT = 'simulation-truth/1'
CSV_COLUMNS = ('id', 'X', 'Y', 'u', 'v')
ERROR_MARKER = 'ERR'

# =============================================
# Exit Codes
# =============================================
EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2
