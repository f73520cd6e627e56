//! Fully discrete coupled time steppers: the per-step block systems, CQ
//! history right-hand sides, exterior recovery, and solution monitors.

pub mod coupled3d;
pub mod onedim;

pub use coupled3d::{
    advance_step, precompute_operator_weights, recover_exterior, run_coupled, CoupledStepSystem,
    ExactRef3d, ExteriorRecovery, OperatorWeights, Run3d, TimeHistory, WeightFamily,
};
pub use onedim::{solve_1d, BoundaryClosure, ExactRef1d, Run1d};

/// Per-step norms, energies and (optionally) errors against a reference
/// solution.
#[derive(Debug, Clone, Default)]
pub struct Monitors {
    /// L2(Omega) norm of u^n.
    pub l2: Vec<f64>,
    /// H1(Omega) norm of u^n.
    pub h1: Vec<f64>,
    /// Discrete energy |grad u|^2 + <V u, u>.
    pub energy: Vec<f64>,
    /// L2 errors vs the reference, empty when no reference was supplied.
    pub l2_error: Vec<f64>,
    /// H1 errors vs the reference.
    pub h1_error: Vec<f64>,
}

impl Monitors {
    pub fn max_l2_error(&self) -> Option<f64> {
        self.l2_error.iter().copied().reduce(f64::max)
    }

    pub fn max_h1_error(&self) -> Option<f64> {
        self.h1_error.iter().copied().reduce(f64::max)
    }

    /// ||u^n|| <= ||u^0|| (1 + tol) for every step.
    pub fn is_non_expansive(&self, tol: f64) -> bool {
        match self.l2.first() {
            None => true,
            Some(&l0) => self
                .l2
                .iter()
                .all(|&l| l <= l0 * (1.0 + tol) + f64::MIN_POSITIVE),
        }
    }

    /// Largest relative deviation of ||u^n|| from ||u^0||.
    pub fn max_mass_deviation(&self) -> f64 {
        match self.l2.first() {
            None | Some(&0.0) => 0.0,
            Some(&l0) => self
                .l2
                .iter()
                .map(|&l| (l - l0).abs() / l0)
                .fold(0.0, f64::max),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.l2
            .iter()
            .chain(&self.h1)
            .chain(&self.energy)
            .chain(&self.l2_error)
            .chain(&self.h1_error)
            .all(|v| v.is_finite())
    }
}
