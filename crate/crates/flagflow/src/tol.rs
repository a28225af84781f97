//! Default numerical tolerances. Each operation that depends on one also
//! has a `_with` variant taking an explicit value.

/// Algebraic identities (reconstruction, commutators, group properties).
pub const EPS_NUM: f64 = 1e-9;

/// Finite-difference comparisons.
pub const EPS_FD: f64 = 1e-6;

/// Eigenvalue clustering threshold (relative to the spectral scale).
pub const EPS_CLUSTER: f64 = 1e-8;

/// Fixed-point membership: principal-angle and invariance tolerance.
pub const EPS_FIX: f64 = 1e-7;

/// Rank decisions (smallest accepted singular value).
pub const EPS_RANK: f64 = 1e-7;

/// Relaxed classification tolerance for trajectory limits.
pub const EPS_LIMIT: f64 = 1e-4;

/// Flag equality: largest allowed operator-norm gap between step projectors.
pub const EPS_FLAG_EQ: f64 = 1e-8;
