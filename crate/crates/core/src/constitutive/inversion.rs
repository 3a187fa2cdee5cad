//! Recovery of the species densities from the entropy variables
//! `z = mu / T` and `w = ln T`.
//!
//! Dividing the chemical potentials by `T` gives, for every species,
//!
//! ```text
//! ln rho_i + (gamma rho^(gamma-1) + eps K1 rho^(K1-1)) / T = z_i + c_w w - 1
//! ```
//!
//! The left-hand correction depends on the total density only, so
//! `rho_i = rho * softmax(z)_i` and the total `rho = e^x` solves the scalar
//! equation
//!
//! ```text
//! h(x) = x + e^-w (gamma e^((gamma-1)x) + eps K1 e^((K1-1)x)) - Lambda = 0,
//! Lambda = ln sum_i e^(z_i) + c_w w - 1,
//! ```
//!
//! which is strictly increasing and convex in `x`.

use super::{Model, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

const MAX_ITER: usize = 400;

struct Inner {
    gamma: f64,
    k1: f64,
    eps: f64,
    inv_t: f64,
    lambda: f64,
}

impl Inner {
    /// Correction term `Q(x) = gamma e^((gamma-1)x) + eps K1 e^((K1-1)x)` and its slope.
    fn q(&self, x: f64) -> (f64, f64) {
        let a = (self.gamma - 1.0) * x;
        let mut q = self.gamma * a.exp();
        let mut dq = self.gamma * (self.gamma - 1.0) * a.exp();
        if self.eps != 0.0 {
            let b = (self.k1 - 1.0) * x;
            q += self.eps * self.k1 * b.exp();
            dq += self.eps * self.k1 * (self.k1 - 1.0) * b.exp();
        }
        (q, dq)
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (q, dq) = self.q(x);
        let h = x + self.inv_t * q - self.lambda;
        let scale = 1.0 + x.abs() + self.inv_t * q + self.lambda.abs();
        (h, 1.0 + self.inv_t * dq, scale)
    }
}

/// Solve `h(x) = 0` by Newton's method, safeguarded by a bisection bracket
/// grown geometrically below `x = Lambda`.
fn solve_log_density(inner: &Inner) -> Result<f64> {
    let lam = inner.lambda;
    if !lam.is_finite() || !inner.inv_t.is_finite() {
        return Err(Error::RootFinding(format!(
            "non-finite inversion data (Lambda = {lam}, 1/T = {})",
            inner.inv_t
        )));
    }
    // h(Lambda) >= 0 since the correction is nonnegative. A positive root
    // also satisfies c e^(m x) <= T Lambda for each term of the correction,
    // which keeps Newton from crawling down from a large Lambda.
    let mut hi = lam;
    if lam > 0.0 {
        let t_lam = lam / inner.inv_t;
        let mut bound = (t_lam / inner.gamma).ln() / (inner.gamma - 1.0);
        if inner.eps > 0.0 {
            bound = bound.min((t_lam / (inner.eps * inner.k1)).ln() / (inner.k1 - 1.0));
        }
        hi = hi.min(bound.max(0.0));
    }
    let mut step = 1.0;
    let mut lo = lam - step;
    let mut grow = 0;
    while inner.eval(lo).0 >= 0.0 {
        step *= 2.0;
        lo = lam - step;
        grow += 1;
        if grow > 200 {
            return Err(Error::RootFinding("no lower bracket for the total density".into()));
        }
    }
    let mut x = hi;
    for _ in 0..MAX_ITER {
        let (h, dh, scale) = inner.eval(x);
        if h.is_finite() && h.abs() <= 1e-14 * scale {
            return Ok(x);
        }
        if h.is_finite() && h < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = x - h / dh;
        x = if h.is_finite() && dh.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::RootFinding(format!(
        "density inversion did not converge (Lambda = {lam})"
    )))
}

/// Generic inversion: returns `(rho_i, rho)` with exact first derivatives
/// when evaluated with jets (implicit function theorem on `h`).
pub fn densities<S: Scalar>(p: &ModelParams, z: &[S], w: &S, eps: f64) -> Result<(Vec<S>, S)> {
    let lse = log_sum_exp(z);
    let lambda = lse.clone() + w.clone() * p.c_w - 1.0;
    let inv_t = (-w.clone()).exp();
    let inner = Inner {
        gamma: p.gamma,
        k1: p.k1,
        eps,
        inv_t: inv_t.value(),
        lambda: lambda.value(),
    };
    let x0 = solve_log_density(&inner)?;
    let (q0, _) = inner.q(x0);
    let (_, hx, _) = inner.eval(x0);
    // x = x0 - h(x0; z, w) / h_x with x0 frozen.
    let h_frozen = inv_t * q0 - lambda + x0;
    let x = w.lift(x0) - h_frozen / hx;
    let rho_total = x.exp();
    let rho = z
        .iter()
        .map(|zi| (x.clone() + zi.clone() - lse.clone()).exp())
        .collect();
    Ok((rho, rho_total))
}

impl Model {
    /// Species densities from entropy variables `z = mu / T`, `w = ln T`.
    pub fn densities_from_entropy_vars(&self, z: &[f64], w: f64, eps: f64) -> Result<Vec<f64>> {
        if z.len() != self.params.species {
            return Err(Error::Dimension {
                expected: self.params.species,
                found: z.len(),
            });
        }
        Ok(densities(&self.params, z, &w, eps)?.0)
    }
}
