use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every layer of the solver stack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Maximum constraint or bound violation accepted for an optimal LP point.
    pub feasibility: f64,
    /// Maximum relative primal/dual objective mismatch for an optimal LP.
    pub duality_gap: f64,
    /// Distance from the nearest integer below which a value counts as integral.
    pub integrality: f64,
    /// Smallest pivot element the simplex accepts.
    pub pivot: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Basis updates between refactorizations.
    pub refactor_interval: usize,
    /// Hard cap on simplex iterations for one LP solve.
    pub max_iterations: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            duality_gap: 1e-7,
            integrality: 1e-6,
            pivot: 1e-9,
            bland_after: 1000,
            refactor_interval: 100,
            max_iterations: 1_000_000,
        }
    }
}
