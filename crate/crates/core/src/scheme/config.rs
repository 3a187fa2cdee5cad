use serde::{Deserialize, Serialize};

use crate::constitutive::Model;
use crate::error::{Error, Result};

/// Backtracking parameters of the damped Newton iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Damping {
    /// Step reduction factor per backtrack.
    pub factor: f64,
    /// Smallest step length tried before declaring line-search failure.
    pub min_step: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Damping {
            factor: 0.5,
            min_step: 2f64.powi(-20),
            armijo: 1e-4,
        }
    }
}

/// Time step, regularization strengths and nonlinear-solver controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub tau: f64,
    /// Lower-order regularization.
    pub eps: f64,
    /// Higher-order regularization.
    pub delta: f64,
    /// Tolerance on the max-norm of the volume-scaled residual.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub damping: Damping,
    /// Continuation ladder in `sigma`, from 0 to 1.
    pub homotopy_steps: Vec<f64>,
    /// Number of times a failed homotopy increment may be halved.
    pub homotopy_halvings: usize,
    pub picard_max: usize,
    /// Initial relaxation of the Picard update.
    pub picard_relaxation: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            tau: 0.01,
            eps: 0.01,
            delta: 0.0,
            newton_tol: 1e-10,
            max_newton: 40,
            damping: Damping::default(),
            homotopy_steps: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            homotopy_halvings: 6,
            picard_max: 200,
            picard_relaxation: 1.0,
        }
    }
}

impl SchemeConfig {
    /// Checks the parameter ranges, including the saturation-floor bound
    /// `eps < f^-1(p_at / lambda_0)` of the model.
    pub fn validate(&self, model: &Model) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.eps >= 0.0) || !(self.delta >= 0.0) {
            return bad("eps and delta must be nonnegative");
        }
        if !(self.newton_tol > 0.0) || self.max_newton == 0 {
            return bad("newton_tol must be positive and max_newton at least 1");
        }
        let d = &self.damping;
        if !(d.factor > 0.0 && d.factor < 1.0) || !(d.min_step > 0.0 && d.min_step <= 1.0) {
            return bad("damping factor must lie in (0, 1) and min_step in (0, 1]");
        }
        let h = &self.homotopy_steps;
        if h.len() < 2
            || h[0] != 0.0
            || *h.last().unwrap() != 1.0
            || h.windows(2).any(|w| !(w[1] > w[0]))
        {
            return bad("homotopy_steps must increase strictly from 0 to 1");
        }
        if !(self.picard_relaxation > 0.0 && self.picard_relaxation <= 1.0) {
            return bad("picard_relaxation must lie in (0, 1]");
        }
        if self.eps > 0.0 {
            match model.saturation_floor_limit() {
                Some(lim) if self.eps < lim => {}
                Some(lim) => {
                    return Err(Error::Config(format!(
                        "eps = {} must stay below f^-1(p_at / lambda_0) = {lim:.6}",
                        self.eps
                    )))
                }
                None => {
                    return bad("saturation floor bound f^-1(p_at / lambda_0) is undefined for this closure set")
                }
            }
        }
        Ok(())
    }
}
