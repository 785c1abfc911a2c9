# --- TORUS ---
# The torus is T x (1/lambda)T with lambda = sqrt(LAMBDA_SQUARED). Exact code only
# ever sees LAMBDA_SQUARED; the float value is taken at the grid boundary.
PELL_ELL = 7
LAMBDA_SQUARED = 5 * PELL_ELL
HYPERBOLA_RHS = -3

# --- ADMISSIBILITY ---
ADMISSIBILITY_CONDITION = "n^2 + n + 1 = 7 * n1^2"

# --- SNAPSHOTS ---
SNAPSHOT_MAGIC = b"KP5LAB1"

# --- SOLVER DEFAULTS ---
DEFAULT_DT_MAX = 1e-3
TRANSPORT_CFL = 0.5
MIN_GRID_POINTS = 8

DEFAULT_TOLERANCES = {
    "l2_drift": 1e-8,  # relative L2 drift accepted by conserve_check
    "hamiltonian_drift": 1e-6,  # relative Hamiltonian drift reported as a pass
    "invariant": 1e-10,  # Hermitian / D0' defect that rejects a step
    "constraint": 1e-12,  # m = 0 energy fraction accepted by norms()
    "blowup_factor": 10.0,  # norm growth that aborts an evolution
    "phase_budget": 1e-8,  # worst phase rounding (rad) accepted for a time frequency
}

# --- EXPERIMENTS ---
CSV_INTERVAL = 0.01
SEPARATION_WINDOW = (0.2, 1.0)
ENVELOPE_WINDOW = (0.1, 1.0)
RESIDUAL_TIMES = (0.25, 0.5, 0.75)

# --- EXIT CODES ---
EXIT_PARAMETER_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

# --- CORRECTORS ---
CORRECTORS = {
    "matched": "theta/2-weighted corrector minus the free wave it starts from (R(0) = 0).",
    "scaled": "theta/2-weighted corrector.",
    "literal": "Corrector exactly as written, amplitude independent of theta.",
    "none": "No corrector (ablation).",
}
