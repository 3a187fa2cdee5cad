use crate::constitutive::{entropy, skeleton_energy, skeleton_entropy, Model};
use crate::error::{Error, Result};

/// Primal unknowns per cell: `z = mu / T`, `w = ln T`, and the saturation.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyState {
    pub z: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub s: Vec<f64>,
}

/// Fields derived from an [`EntropyState`] at a given regularization.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalFields {
    pub rho: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub rhoe: Vec<f64>,
    pub rhoeta: Vec<f64>,
    /// Regularized fluid energy `E_f,eps`.
    pub ef: Vec<f64>,
    /// Regularized skeleton energy and entropy.
    pub es: Vec<f64>,
    pub etas: Vec<f64>,
}

impl EntropyState {
    pub fn num_cells(&self) -> usize {
        self.w.len()
    }

    pub fn species(&self) -> usize {
        self.z.first().map_or(0, |z| z.len())
    }

    /// Spatially uniform state.
    pub fn uniform(cells: usize, z: &[f64], w: f64, s: f64) -> Self {
        EntropyState {
            z: vec![z.to_vec(); cells],
            w: vec![w; cells],
            s: vec![s; cells],
        }
    }

    /// Converts densities, temperatures and saturations; `z_i = mu_i,eps / T`.
    pub fn from_physical(
        model: &Model,
        rho: &[Vec<f64>],
        t: &[f64],
        s: &[f64],
        eps: f64,
    ) -> Result<Self> {
        let n = rho.len();
        if t.len() != n || s.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if t.len() != n { t.len() } else { s.len() },
            });
        }
        let mut z = Vec::with_capacity(n);
        for c in 0..n {
            if rho[c].len() != model.params.species {
                return Err(Error::Dimension {
                    expected: model.params.species,
                    found: rho[c].len(),
                });
            }
            let mu = model.chemical_potentials(&rho[c], t[c], eps)?;
            z.push(mu.iter().map(|m| m / t[c]).collect());
        }
        Ok(EntropyState {
            z,
            w: t.iter().map(|x| x.ln()).collect(),
            s: s.to_vec(),
        })
    }

    /// Flat unknown vector, cell-major: `(z_1, ..., z_N, w)` per cell.
    pub fn unknowns(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.num_cells() * (self.species() + 1));
        for (z, w) in self.z.iter().zip(&self.w) {
            x.extend_from_slice(z);
            x.push(*w);
        }
        x
    }

    pub fn set_unknowns(&mut self, x: &[f64]) {
        let nb = self.species() + 1;
        for c in 0..self.num_cells() {
            let blk = &x[c * nb..(c + 1) * nb];
            self.z[c].copy_from_slice(&blk[..nb - 1]);
            self.w[c] = blk[nb - 1];
        }
    }

    /// Clamps the saturation into `[eps, 1 - eps]`.
    pub fn truncate_saturation(&mut self, eps: f64) {
        let lo = eps.max(f64::MIN_POSITIVE);
        let hi = (1.0 - eps).min(1.0 - f64::EPSILON);
        for s in &mut self.s {
            *s = s.clamp(lo, hi);
        }
    }

    pub fn physical(&self, model: &Model, eps: f64) -> Result<PhysicalFields> {
        let p = &model.params;
        let n = self.num_cells();
        let mut out = PhysicalFields {
            rho: Vec::with_capacity(n),
            t: Vec::with_capacity(n),
            s: self.s.clone(),
            p: Vec::with_capacity(n),
            mu: Vec::with_capacity(n),
            rhoe: Vec::with_capacity(n),
            rhoeta: Vec::with_capacity(n),
            ef: Vec::with_capacity(n),
            es: Vec::with_capacity(n),
            etas: Vec::with_capacity(n),
        };
        for c in 0..n {
            let t = self.w[c].exp();
            let rho = model.densities_from_entropy_vars(&self.z[c], self.w[c], eps)?;
            let rhoe = crate::constitutive::internal_energy(p, &rho, &t, eps);
            out.p.push(crate::constitutive::pressure(p, &rho, &t, eps));
            out.mu.push(self.z[c].iter().map(|z| z * t).collect());
            out.rhoeta.push(entropy(p, &rho, &t));
            out.ef.push(model.fluid_energy(&rhoe, &self.s[c], eps));
            out.es.push(skeleton_energy(p, &t, eps));
            out.etas.push(skeleton_entropy(p, &t, eps));
            out.rhoe.push(rhoe);
            out.rho.push(rho);
            out.t.push(t);
        }
        Ok(out)
    }
}
