use std::time::{Duration, Instant};

use super::{EntropyState, PreviousLevel, Scheme};
use crate::error::{Error, Result};

/// Outcome of one accepted time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Newton iterations summed over every solve of the step.
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub homotopy_path_used: bool,
    pub picard_used: bool,
    pub wallclock: Duration,
}

/// A converged nonlinear solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Max-norm of the scaled residual after every iteration, starting with
    /// the initial guess.
    pub history: Vec<f64>,
}

/// Passed to the observer of [`Scheme::run_simulation`] once for the
/// initial state and once per accepted step.
pub struct StepEvent<'a> {
    pub step: usize,
    pub time: f64,
    pub previous: Option<&'a EntropyState>,
    pub current: &'a EntropyState,
    pub report: Option<&'a StepReport>,
}

impl Scheme {
    /// `(max |R| / vol, |R / vol|^2 / 2)`.
    fn norms(&self, r: &[f64]) -> (f64, f64) {
        let vol = self.grid.cell_volume();
        r.iter().fold((0.0f64, 0.0f64), |(m, s), v| {
            let x = v / vol;
            (m.max(x.abs()), s + 0.5 * x * x)
        })
    }

    pub fn scaled_residual_norm(&self, r: &[f64]) -> f64 {
        self.norms(r).0
    }

    pub fn previous_level(&self, state: &EntropyState) -> Result<PreviousLevel> {
        let ph = state.physical(&self.model, self.config.eps)?;
        Ok(PreviousLevel {
            s: state.s.clone(),
            rho: ph.rho,
            ef: ph.ef,
            es: ph.es,
        })
    }

    /// Damped Newton iteration at fixed `sigma`.
    pub fn newton_solve(&self, x0: &[f64], prev: &PreviousLevel, sigma: f64) -> Result<Solution> {
        let d = &self.config.damping;
        let mut x = x0.to_vec();
        let mut r = self.residual(&x, prev, sigma)?;
        let (mut inf, mut phi) = self.norms(&r);
        let mut history = vec![inf];
        for it in 0..self.config.max_newton {
            if inf <= self.config.newton_tol {
                return Ok(Solution { x, iterations: it, residual: inf, history });
            }
            let jac = self.jacobian(&x, prev, sigma, false)?;
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = jac.solve(&rhs)?;
            // Round-off floor: the full step no longer changes the iterate.
            let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dx_inf = dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dx_inf <= 64.0 * f64::EPSILON * (1.0 + x_inf) && inf <= 1e3 * self.config.newton_tol {
                return Ok(Solution { x, iterations: it, residual: inf, history });
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t >= d.min_step {
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
                if let Ok(rt) = self.residual(&xt, prev, sigma) {
                    let (it_inf, it_phi) = self.norms(&rt);
                    if it_phi.is_finite() && it_phi <= (1.0 - 2.0 * d.armijo * t) * phi {
                        x = xt;
                        r = rt;
                        inf = it_inf;
                        phi = it_phi;
                        accepted = true;
                        break;
                    }
                }
                t *= d.factor;
            }
            if !accepted {
                return Err(Error::LineSearch { iterations: it, residual: inf });
            }
            history.push(inf);
        }
        if inf <= self.config.newton_tol {
            let iterations = self.config.max_newton;
            return Ok(Solution { x, iterations, residual: inf, history });
        }
        Err(Error::LineSearch {
            iterations: self.config.max_newton,
            residual: inf,
        })
    }

    /// Continuation from the trivial solution `z = 0, w = 0` of the
    /// `sigma = 0` problem to `sigma = 1`, halving failed increments.
    pub fn homotopy_solve(&self, prev: &PreviousLevel) -> Result<Solution> {
        if self.config.eps <= 0.0 {
            return Err(Error::NonConvergence {
                step: 0,
                reason: "homotopy needs eps > 0 for a unique sigma = 0 solution".into(),
            });
        }
        let len = self.grid.num_cells() * self.block();
        let mut x = vec![0.0; len];
        let r0 = self.residual(&x, prev, 0.0)?;
        let r0 = self.scaled_residual_norm(&r0);
        if r0 > self.config.newton_tol {
            return Err(Error::Invariant {
                step: 0,
                what: format!("zero state is not the sigma = 0 solution (residual {r0:.3e})"),
            });
        }
        let mut sigma = 0.0;
        let mut iterations = 0;
        let mut last = Solution { x: x.clone(), iterations: 0, residual: r0, history: vec![r0] };
        for &target in &self.config.homotopy_steps[1..] {
            let mut next = target;
            let mut halvings = 0;
            while sigma < target {
                match self.newton_solve(&x, prev, next) {
                    Ok(sol) => {
                        iterations += sol.iterations;
                        x = sol.x.clone();
                        sigma = next;
                        next = target;
                        last = sol;
                    }
                    Err(e) => {
                        halvings += 1;
                        if halvings > self.config.homotopy_halvings {
                            return Err(Error::NonConvergence {
                                step: 0,
                                reason: format!("homotopy stalled at sigma = {sigma}: {e}"),
                            });
                        }
                        next = sigma + 0.5 * (next - sigma);
                    }
                }
            }
        }
        last.iterations = iterations;
        Ok(last)
    }

    /// Relaxed fixed-point sweeps with frozen transport coefficients.
    /// Returns the best iterate found, converged or not.
    pub fn picard_solve(&self, x0: &[f64], prev: &PreviousLevel) -> Result<Solution> {
        let mut x = x0.to_vec();
        let mut r = self.residual(&x, prev, 1.0)?;
        let (mut inf, mut phi) = self.norms(&r);
        let mut history = vec![inf];
        for it in 0..self.config.picard_max {
            if inf <= self.config.newton_tol {
                return Ok(Solution { x, iterations: it, residual: inf, history });
            }
            let a = self.jacobian(&x, prev, 1.0, true)?;
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = a.solve(&rhs)?;
            let mut theta = self.config.picard_relaxation;
            let mut accepted = false;
            while theta >= 1.0 / 1024.0 {
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + theta * b).collect();
                if let Ok(rt) = self.residual(&xt, prev, 1.0) {
                    let (ti, tp) = self.norms(&rt);
                    if tp.is_finite() && tp < phi {
                        x = xt;
                        r = rt;
                        inf = ti;
                        phi = tp;
                        accepted = true;
                        break;
                    }
                }
                theta *= 0.5;
            }
            history.push(inf);
            if !accepted {
                break;
            }
        }
        let iterations = history.len() - 1;
        Ok(Solution { x, iterations, residual: inf, history })
    }

    /// One implicit Euler step: Newton from the previous state, then the
    /// homotopy ladder, then Picard sweeps followed by Newton.
    pub fn time_step(&self, prev_state: &EntropyState, step: usize) -> Result<(EntropyState, StepReport)> {
        let start = Instant::now();
        let prev = self.previous_level(prev_state)?;
        let x0 = prev_state.unknowns();
        let mut report = StepReport {
            newton_iterations: 0,
            final_residual: f64::NAN,
            homotopy_path_used: false,
            picard_used: false,
            wallclock: Duration::ZERO,
        };
        let sol = match self.newton_solve(&x0, &prev, 1.0) {
            Ok(sol) => sol,
            Err(first) => {
                report.homotopy_path_used = true;
                match self.homotopy_solve(&prev) {
                    Ok(sol) => sol,
                    Err(second) => {
                        report.picard_used = true;
                        let pic = self.picard_solve(&x0, &prev)?;
                        report.newton_iterations += pic.iterations;
                        self.newton_solve(&pic.x, &prev, 1.0).map_err(|third| Error::NonConvergence {
                            step,
                            reason: format!("newton: {first}; homotopy: {second}; picard + newton: {third}"),
                        })?
                    }
                }
            }
        };
        report.newton_iterations += sol.iterations;
        report.final_residual = sol.residual;
        let eval = self.evaluate(&sol.x, &prev, 1.0)?;
        let mut next = prev_state.clone();
        next.set_unknowns(&sol.x);
        next.s = eval.cells.iter().map(|q| q.s).collect();
        self.check_invariants(&next, step)?;
        report.wallclock = start.elapsed();
        Ok((next, report))
    }

    /// Positivity of densities and temperature, and the saturation floor
    /// `S >= eps` when `eps` lies below the floor bound.
    pub fn check_invariants(&self, state: &EntropyState, step: usize) -> Result<()> {
        let eps = self.config.eps;
        let ph = state.physical(&self.model, eps)?;
        for c in 0..state.num_cells() {
            if !(ph.t[c] > 0.0 && ph.t[c].is_finite()) {
                return Err(Error::Invariant { step, what: format!("temperature {} in cell {c}", ph.t[c]) });
            }
            if let Some(r) = ph.rho[c].iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                return Err(Error::Invariant { step, what: format!("density {r} in cell {c}") });
            }
            let s = state.s[c];
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Invariant { step, what: format!("saturation {s} in cell {c}") });
            }
        }
        if eps > 0.0 && self.floor_applies {
            let min = state.s.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < eps {
                return Err(Error::Invariant {
                    step,
                    what: format!("saturation floor violated: min S = {min} < eps = {eps}"),
                });
            }
        }
        Ok(())
    }

    /// Advances `round(horizon / tau)` steps from `initial`, whose
    /// saturation is first truncated to `[eps, 1 - eps]`.
    pub fn run_simulation<F>(&self, initial: &EntropyState, horizon: f64, mut observer: F) -> Result<EntropyState>
    where
        F: FnMut(StepEvent<'_>) -> Result<()>,
    {
        if !(horizon >= 0.0) {
            return Err(Error::Config(format!("negative horizon {horizon}")));
        }
        let steps = (horizon / self.config.tau).round() as usize;
        let mut state = initial.clone();
        state.truncate_saturation(self.config.eps);
        self.check_invariants(&state, 0)?;
        observer(StepEvent { step: 0, time: 0.0, previous: None, current: &state, report: None })?;
        for k in 1..=steps {
            let (next, report) = self.time_step(&state, k)?;
            observer(StepEvent {
                step: k,
                time: k as f64 * self.config.tau,
                previous: Some(&state),
                current: &next,
                report: Some(&report),
            })?;
            state = next;
        }
        Ok(state)
    }
}
