//! Implicit Euler time stepping of the regularized system in entropy
//! variables.

mod assembly;
mod config;
mod solver;
mod state;

pub use assembly::{CellQuantities, Evaluation, FaceFluxes, PreviousLevel};
pub use config::{Damping, SchemeConfig};
pub use solver::{Solution, StepEvent, StepReport};
pub use state::{EntropyState, PhysicalFields};

use crate::constitutive::Model;
use crate::discretization::Grid;
use crate::error::{Error, Result};

/// A model on a grid with fixed scheme parameters.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub model: Model,
    pub grid: Grid,
    pub config: SchemeConfig,
    porosity: Vec<f64>,
    b: Vec<Vec<f64>>,
    z0: Vec<f64>,
    /// Rows of the Neumann Laplacian as `(column, coefficient)`.
    laplacian: Vec<Vec<(usize, f64)>>,
    floor_applies: bool,
}

impl Scheme {
    pub fn new(model: Model, grid: Grid, config: SchemeConfig) -> Result<Self> {
        config.validate(&model)?;
        let n = model.params.species;
        if n == 0 {
            return Err(Error::Config("at least one species is required".into()));
        }
        if !model.params.mu0.is_empty() && model.params.mu0.len() != n {
            return Err(Error::Dimension { expected: n, found: model.params.mu0.len() });
        }
        let b = model.boundary_matrix();
        if b.len() != n || b.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("boundary matrix must be {n} x {n}")));
        }
        let porosity: Vec<f64> = (0..grid.num_cells()).map(|c| model.porosity(grid.normalized_x(c))).collect();
        if porosity.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::Config("porosity must lie in (0, 1)".into()));
        }
        let vol = grid.cell_volume();
        let mut laplacian = vec![Vec::new(); grid.num_cells()];
        for f in grid.faces() {
            let a = f.area / (f.dist * vol);
            laplacian[f.left].push((f.left, -a));
            laplacian[f.left].push((f.right, a));
            laplacian[f.right].push((f.right, -a));
            laplacian[f.right].push((f.left, a));
        }
        let floor_applies = model.saturation_floor_limit().is_some_and(|lim| config.eps < lim);
        Ok(Scheme {
            z0: model.params.boundary_potentials(),
            b,
            porosity,
            laplacian,
            floor_applies,
            model,
            grid,
            config,
        })
    }

    /// Unknowns per cell.
    pub fn block(&self) -> usize {
        self.model.params.species + 1
    }

    pub fn porosity_field(&self) -> &[f64] {
        &self.porosity
    }

    /// Saturation in local capillary equilibrium with pressure `p`,
    /// `P_c,eps(S) + p = 0`, if it exists.
    pub fn equilibrium_saturation(&self, p: f64) -> Option<f64> {
        let m = &self.model;
        let eps = self.config.eps;
        let g = |s: f64| m.capillary_pressure_reg(&s, eps) + p;
        let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        if !(g(lo) > 0.0 && g(hi) < 0.0) {
            return None;
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests;
