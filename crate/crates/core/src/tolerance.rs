//! Numerical tolerances. Each can be overridden through an environment
//! variable read once at first use.

use std::sync::OnceLock;

fn env_or(name: &str, default: f64) -> f64 {
    std::env::var(name)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(default)
}

macro_rules! tol {
    ($fn:ident, $var:literal, $default:expr) => {
        pub fn $fn() -> f64 {
            static CELL: OnceLock<f64> = OnceLock::new();
            *CELL.get_or_init(|| env_or($var, $default))
        }
    };
}

// Relative distance from the model quadric accepted for input points.
tol!(quadric, "POLYFLEX_QUADRIC_TOL", 1e-9);
// |<v,v>| / |v|^2 below which a Minkowski vector counts as lightlike.
tol!(lightlike, "POLYFLEX_LIGHTLIKE_TOL", 1e-10);
// Singular values below rank * sigma_max are treated as zero.
tol!(rank, "POLYFLEX_RANK_TOL", 1e-8);
// Residual accepted for constraint solves (inverse angle map, projections).
tol!(constraint, "POLYFLEX_CONSTRAINT_TOL", 1e-8);
