//! Tolerances shared by the library, the test suites and the CLI reports.

/// Relative tolerance of hull predicates (scaled by the bounding-box diagonal).
pub const HULL_REL_TOL: f64 = 1e-9;

/// Relative tolerance for exact-path identities and convexity scans.
pub const EXACT_REL_TOL: f64 = 1e-9;

/// Relative tolerance for the finite-difference `V_p` oracle.
pub const ORACLE_REL_TOL: f64 = 1e-3;

/// Step used by the finite-difference `V_p` oracle.
pub const ORACLE_EPS: f64 = 1e-4;

/// Direction count used by the finite-difference `V_p` oracle.
pub const ORACLE_DIRS: usize = 2048;

/// Multiple of the standard error used for every Monte-Carlo inequality.
pub const SIGMA_MULTIPLIER: f64 = 3.0;

/// Largest admissible standard error, relative to the estimate, for the
/// projection-inequality Monte-Carlo runs.
pub const MC_MAX_REL_STDERR: f64 = 0.02;

/// Multiple of the measured grid bias allowed in p-sum convexity scans.
pub const GRID_BIAS_FACTOR: f64 = 10.0;

/// Hausdorff target, relative to the diameter, for symmetrization flows.
pub const FLOW_REL_HAUSDORFF: f64 = 0.05;

/// Vertex count of the regular polygon standing in for the disk `B_K`.
pub const BALL_POLYGON_VERTICES: usize = 64;

/// Point count of the Fibonacci sphere standing in for the 3-ball `B_K`.
pub const BALL_SPHERE_POINTS: usize = 400;
