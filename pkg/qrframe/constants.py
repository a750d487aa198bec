'''numerical constants, tolerances and defaults shared by the whole package.
'''

import math

VERSION = '0.1.0'

# natural units; every public entry point accepts an override
HBAR = 1.0

STATE_SCHEMA = 'qrf-state/1'
REPORT_SCHEMA = 'qrf-report/1'
MANIFEST_SCHEMA = 'qrf-manifest/1'
RUN_SCHEMA = 'qrf-run/1'
MANIFEST_NAME = 'qrf-manifest.json'

# core-state
GRID_NORM_TOL = 1e-10
RENORM_TOL = 1e-8
CLEARANCE_WIDTHS = 6.0
DEFAULT_AXIS_WIDTHS = 8.0
DEFAULT_AXIS_POINTS = 64

# canonical-transforms
SYMPLECTIC_TOL = 1e-12
SUPPORT_CLIP_TOL = 1e-8
RESAMPLE_DRIFT_TOL = 1e-6
INTERPOLATION_ORDER = 3

# density matrices
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_TOL = 1e-8
EIGENVALUE_DOWNSAMPLE = 64
MAX_RETAINED_AXIS_POINTS = 512
PURE_STATE_TOL = 1e-8

# gaussian-analytics
ENTANGLEMENT_CLAMP = 0.5 * (1.0 - 1e-12)
SEPARABILITY_RTOL = 1e-12

# phase-probe
ACCESSIBILITY_RTOL = 1e-12
OPERATIONAL_ACCESSIBILITY_RTOL = 1e-4
RECONSTRUCTION_TOL = 1e-12

# uncertainty
BOUND_MARGIN = 1e-9

# dynamics-engine
STABILITY_BUDGET = 0.5
EDGE_BAND_FRACTION = 0.05
EDGE_MASS_TOL = 1e-8
MIN_TRAJECTORY_SAMPLES = 5
STEP_NORM_TOL = 1e-10

# scenario-harness
SHARP_WIDTH_RATIO = 1e-3
THIRD_PARTICLE_WIDTH_RATIO = 5e-3
HEAVY_MASS_FACTOR = 1e6
MAX_WIDTH_TO_SEPARATION = 1.0 / 20.0
DEFAULT_BRANCH_PHASE = math.pi / 2.0
# decimals kept in scenario report json
REPORT_DECIMALS = 12

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
THREADS_ENV = 'QRF_THREADS'
