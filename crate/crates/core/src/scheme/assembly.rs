//! Residual and Jacobian of one implicit Euler step.
//!
//! Rows are integrated over cells: for species `i` of cell `c`,
//!
//! ```text
//! vol [sigma (Phi (S rho_i - S' rho_i') / tau - r_i,eps) + eps z_i]
//!   + sum_faces area [sigma (rho_i v + J_i) - eps D z_i]
//!   + sigma sum_boundary area b (z - z0) + delta vol (L L z_i),
//! ```
//!
//! and for the energy row
//!
//! ```text
//! vol [sigma (Phi dE_f + (1 - Phi) dE_s) / tau + eps (1 + T^-K3) w]
//!   + sum_faces area [sigma ((rho e + p) v + q)
//!                     - eps ((1 + T) D w + T^-K3 |D w|^(K3-1) D w)
//!                     - delta (1 + T) |D w|^2 D w]
//!   + sigma sum_boundary area alpha (T - T0) + delta vol L((1 + T) L w).
//! ```
//!
//! The saturation is eliminated per cell through
//! `f(S) - f(S') + tau sigma (P_c,eps(S) + p) = 0`. The Darcy velocity is
//! `v = -K lambda G` with the face pressure gradient
//! `G = T [sum rho_i D z_i - (rho e + p) D(1/T)]` built from arithmetic
//! face means, which makes the advective entropy production of every face
//! exactly `K lambda G^2 / T`.

use super::Scheme;
use crate::constitutive::{densities, internal_energy, pressure, signed_power, skeleton_energy};
use crate::discretization::{BoundaryFace, Face};
use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::scalar::{sum, Jet, Scalar};

/// New-time-level quantities of one cell.
#[derive(Clone, Debug)]
pub struct CellQuantities<S> {
    pub rho: Vec<S>,
    pub t: S,
    pub inv_t: S,
    pub p: S,
    pub rhoe: S,
    pub s: S,
    pub ef: S,
    pub es: S,
    pub mobility: S,
}

impl CellQuantities<Jet> {
    fn embed(&self, total: usize, offset: usize) -> Self {
        let e = |x: &Jet| x.embed(total, offset);
        CellQuantities {
            rho: self.rho.iter().map(e).collect(),
            t: e(&self.t),
            inv_t: e(&self.inv_t),
            p: e(&self.p),
            rhoe: e(&self.rhoe),
            s: e(&self.s),
            ef: e(&self.ef),
            es: e(&self.es),
            mobility: e(&self.mobility),
        }
    }
}

/// Data of the previous time level entering the time differences.
#[derive(Clone, Debug)]
pub struct PreviousLevel {
    pub s: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub ef: Vec<f64>,
    pub es: Vec<f64>,
}

/// Fluxes through one interior face in the direction `left -> right`.
#[derive(Clone, Debug)]
pub struct FaceFluxes<S> {
    /// `G`, the face approximation of the pressure gradient.
    pub darcy_gradient: S,
    pub mobility: S,
    pub t_hat: S,
    pub velocity: S,
    /// Species diffusion fluxes `J_i`.
    pub diffusion: Vec<S>,
    /// Heat flux `q`.
    pub heat: S,
    /// `sum L_ij D z_i D z_j + L_00 |D(1/T)|^2`.
    pub onsager_form: S,
    /// Area-weighted totals entering the species rows.
    pub mass: Vec<S>,
    /// Area-weighted total entering the energy row.
    pub energy: S,
}

/// Cell quantities, face fluxes and residual at one iterate.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub cells: Vec<CellQuantities<f64>>,
    pub faces: Vec<FaceFluxes<f64>>,
    pub residual: Vec<f64>,
}

impl Scheme {
    /// Unique root of `f(s) - f(S') + tau sigma (P_c,eps(s) + p) = 0` in `(0, 1)`.
    pub fn saturation_update(&self, s_prev: f64, p: f64, sigma: f64) -> Result<f64> {
        let m = &self.model;
        let eps = self.config.eps;
        let ts = self.config.tau * sigma;
        if ts == 0.0 {
            return Ok(s_prev);
        }
        if !(s_prev > 0.0 && s_prev < 1.0) || !p.is_finite() {
            return Err(Error::SaturationBracket(format!(
                "previous saturation {s_prev} or pressure {p} out of range"
            )));
        }
        let f_prev = m.dynamic_potential(&s_prev);
        let g = |s: f64| {
            let pc = m.capillary_pressure_reg(&s, eps);
            let f = m.dynamic_potential(&s);
            let val = f - f_prev + ts * (pc + p);
            let scale = f.abs() + f_prev.abs() + ts * (pc.abs() + p.abs());
            (val, scale)
        };
        let dg = |s: f64| m.dynamic_potential_slope(s) + ts * m.capillary_pressure_reg_slope(s, eps);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut s = s_prev;
        for _ in 0..600 {
            let (val, scale) = g(s);
            if !val.is_finite() {
                return Err(Error::SaturationBracket(format!("non-finite residual at s = {s}")));
            }
            if val.abs() <= 1e-15 * scale {
                return Ok(s);
            }
            // g is strictly decreasing.
            if val > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            if hi - lo <= 4.0 * f64::EPSILON * s {
                return Ok(0.5 * (lo + hi));
            }
            if hi < 1e-300 {
                break;
            }
            let newton = s - val / dg(s);
            s = if newton > lo && newton < hi {
                newton
            } else if lo <= 0.0 {
                0.5 * hi
            } else if hi >= 1.0 {
                1.0 - 0.5 * (1.0 - lo)
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::SaturationBracket(format!(
            "no root in (0, 1) for S' = {s_prev}, p = {p}"
        )))
    }

    fn saturation<S: Scalar>(&self, s_prev: f64, p: &S, sigma: f64) -> Result<S> {
        let pv = p.value();
        let s = self.saturation_update(s_prev, pv, sigma)?;
        let ts = self.config.tau * sigma;
        if ts == 0.0 {
            return Ok(p.lift(s));
        }
        let m = &self.model;
        let slope = m.dynamic_potential_slope(s) + ts * m.capillary_pressure_reg_slope(s, self.config.eps);
        let c = -ts / slope;
        Ok(p.clone() * c + (s - pv * c))
    }

    pub fn cell_quantities<S: Scalar>(
        &self,
        c: usize,
        z: &[S],
        w: &S,
        prev: &PreviousLevel,
        sigma: f64,
    ) -> Result<CellQuantities<S>> {
        let eps = self.config.eps;
        let params = &self.model.params;
        let (rho, _) = densities(params, z, w, eps)?;
        let t = w.exp();
        let p = pressure(params, &rho, &t, eps);
        let rhoe = internal_energy(params, &rho, &t, eps);
        let s = self.saturation(prev.s[c], &p, sigma)?;
        let ef = self.model.fluid_energy(&rhoe, &s, eps);
        let es = skeleton_energy(params, &t, eps);
        let mobility = self.model.mobility(&s, &t);
        Ok(CellQuantities {
            inv_t: (-w.clone()).exp(),
            rho,
            t,
            p,
            rhoe,
            s,
            ef,
            es,
            mobility,
        })
    }

    fn cell_residual<S: Scalar>(
        &self,
        c: usize,
        q: &CellQuantities<S>,
        z: &[S],
        w: &S,
        prev: &PreviousLevel,
        sigma: f64,
    ) -> Vec<S> {
        let k3 = self.model.params.k3;
        let vol = self.grid.cell_volume();
        let phi = self.porosity[c];
        let tau = self.config.tau;
        let eps = self.config.eps;
        let r = self.model.reaction_terms(z, eps);
        let mut out = Vec::with_capacity(z.len() + 1);
        for i in 0..z.len() {
            let acc = (q.s.clone() * q.rho[i].clone() - prev.s[c] * prev.rho[c][i]) * (phi / tau);
            out.push(((acc - r[i].clone()) * sigma + z[i].clone() * eps) * vol);
        }
        let acc = (q.ef.clone() - prev.ef[c]) * (phi / tau) + (q.es.clone() - prev.es[c]) * ((1.0 - phi) / tau);
        let reg = (q.t.powf(-k3) + 1.0) * w.clone() * eps;
        out.push((acc * sigma + reg) * vol);
        out
    }

    fn boundary_residual<S: Scalar>(
        &self,
        bf: &BoundaryFace,
        q: &CellQuantities<S>,
        z: &[S],
        sigma: f64,
    ) -> Vec<S> {
        let params = &self.model.params;
        let n = z.len();
        let a = bf.area * sigma;
        let mut out: Vec<S> = (0..n)
            .map(|i| sum((0..n).map(|k| (z[k].clone() - self.z0[k]) * self.b[i][k])) * a)
            .collect();
        out.push((q.t.clone() - params.t0) * (a * params.alpha));
        out
    }

    #[allow(clippy::too_many_arguments)]
    pub fn face_fluxes<S: Scalar>(
        &self,
        f: &Face,
        qa: &CellQuantities<S>,
        qb: &CellQuantities<S>,
        za: &[S],
        zb: &[S],
        wa: &S,
        wb: &S,
        sigma: f64,
        frozen: bool,
    ) -> FaceFluxes<S> {
        let params = &self.model.params;
        let (eps, delta) = (self.config.eps, self.config.delta);
        let n = za.len();
        let fr = |x: S| if frozen { x.lift(x.value()) } else { x };
        let mean = |x: S, y: S| (x + y) * 0.5;
        let rho_hat: Vec<S> = (0..n)
            .map(|i| fr(mean(qa.rho[i].clone(), qb.rho[i].clone())))
            .collect();
        let h_hat = fr(mean(qa.rhoe.clone() + qa.p.clone(), qb.rhoe.clone() + qb.p.clone()));
        let t_hat = fr(mean(qa.t.clone(), qb.t.clone()));
        let lam = fr(mean(qa.mobility.clone(), qb.mobility.clone()));
        let d = f.dist;
        let dz: Vec<S> = (0..n).map(|i| (zb[i].clone() - za[i].clone()) / d).collect();
        let dinv = (qb.inv_t.clone() - qa.inv_t.clone()) / d;
        let dw = (wb.clone() - wa.clone()) / d;

        let g = t_hat.clone()
            * (sum(rho_hat.iter().zip(&dz).map(|(r, g)| r.clone() * g.clone()))
                - h_hat.clone() * dinv.clone());
        let v = -(lam.clone() * g.clone()) * params.permeability;

        let om = self.model.onsager(&rho_hat, &t_hat);
        let diffusion: Vec<S> = (0..n)
            .map(|i| {
                (0..n).fold(om.l0[i].clone() * dinv.clone(), |j, k| {
                    j - om.l[i][k].clone() * dz[k].clone()
                })
            })
            .collect();
        let heat = (0..n).fold(om.l00.clone() * dinv.clone(), |q, i| {
            q + om.l0[i].clone() * dz[i].clone()
        });
        let mut onsager_form = om.l00.clone() * dinv.square();
        for i in 0..n {
            for k in 0..n {
                onsager_form = onsager_form + om.l[i][k].clone() * dz[i].clone() * dz[k].clone();
            }
        }

        let mass = (0..n)
            .map(|i| {
                ((rho_hat[i].clone() * v.clone() + diffusion[i].clone()) * sigma - dz[i].clone() * eps)
                    * f.area
            })
            .collect();

        let one_t = t_hat.clone() + 1.0;
        let tk3 = fr(mean(qa.t.powf(-params.k3), qb.t.powf(-params.k3)));
        let k3_term = if frozen {
            tk3 * dw.value().abs().powf(params.k3 - 1.0) * dw.clone()
        } else {
            tk3 * signed_power(&dw, params.k3)
        };
        let mut energy = (h_hat * v.clone() + heat.clone()) * sigma
            - (one_t.clone() * dw.clone() + k3_term) * eps;
        if delta != 0.0 {
            energy = energy - one_t * signed_power(&dw, 3.0) * delta;
        }

        FaceFluxes {
            darcy_gradient: g,
            mobility: lam,
            t_hat,
            velocity: v,
            diffusion,
            heat,
            onsager_form,
            mass,
            energy: energy * f.area,
        }
    }

    fn split(&self, x: &[f64], c: usize) -> (Vec<f64>, f64) {
        let nb = self.block();
        (x[c * nb..c * nb + nb - 1].to_vec(), x[c * nb + nb - 1])
    }

    /// Evaluates every cell and face at the iterate `x`.
    pub fn evaluate(&self, x: &[f64], prev: &PreviousLevel, sigma: f64) -> Result<Evaluation> {
        let nb = self.block();
        let nc = self.grid.num_cells();
        if x.len() != nb * nc {
            return Err(Error::Dimension {
                expected: nb * nc,
                found: x.len(),
            });
        }
        let mut residual = vec![0.0; nb * nc];
        let mut cells = Vec::with_capacity(nc);
        for c in 0..nc {
            let (z, w) = self.split(x, c);
            let q = self.cell_quantities(c, &z, &w, prev, sigma)?;
            for (k, v) in self.cell_residual(c, &q, &z, &w, prev, sigma).into_iter().enumerate() {
                residual[c * nb + k] += v;
            }
            cells.push(q);
        }
        for bf in self.grid.boundary_faces() {
            let (z, _) = self.split(x, bf.cell);
            for (k, v) in self.boundary_residual(bf, &cells[bf.cell], &z, sigma).into_iter().enumerate() {
                residual[bf.cell * nb + k] += v;
            }
        }
        let mut faces = Vec::with_capacity(self.grid.faces().len());
        for f in self.grid.faces() {
            let (za, wa) = self.split(x, f.left);
            let (zb, wb) = self.split(x, f.right);
            let ff = self.face_fluxes(f, &cells[f.left], &cells[f.right], &za, &zb, &wa, &wb, sigma, false);
            for k in 0..nb {
                let v = if k + 1 < nb { ff.mass[k] } else { ff.energy };
                residual[f.left * nb + k] += v;
                residual[f.right * nb + k] -= v;
            }
            faces.push(ff);
        }
        if self.config.delta != 0.0 {
            self.add_higher_order(x, &mut residual, None);
        }
        Ok(Evaluation {
            cells,
            faces,
            residual,
        })
    }

    pub fn residual(&self, x: &[f64], prev: &PreviousLevel, sigma: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(x, prev, sigma)?.residual)
    }

    /// Half-bandwidth of the Jacobian in unknowns.
    pub fn bandwidth(&self) -> usize {
        let reach = self.grid.face_bandwidth() * if self.config.delta != 0.0 { 2 } else { 1 };
        (reach + 1) * self.block() - 1
    }

    /// Exact Jacobian of [`Scheme::residual`]. With `frozen`, the transport
    /// coefficients of every face are held at their current values, which
    /// gives the operator of the linearized Picard problem.
    pub fn jacobian(&self, x: &[f64], prev: &PreviousLevel, sigma: f64, frozen: bool) -> Result<BandMatrix> {
        let nb = self.block();
        let n = nb - 1;
        let nc = self.grid.num_cells();
        let bw = self.bandwidth();
        let mut jac = BandMatrix::zeros(nb * nc, bw, bw);
        let mut cells = Vec::with_capacity(nc);
        let mut zs = Vec::with_capacity(nc);
        let mut ws = Vec::with_capacity(nc);
        for c in 0..nc {
            let z: Vec<Jet> = (0..n).map(|i| Jet::variable(x[c * nb + i], nb, i)).collect();
            let w = Jet::variable(x[c * nb + n], nb, n);
            let q = self.cell_quantities(c, &z, &w, prev, sigma)?;
            for (k, r) in self.cell_residual(c, &q, &z, &w, prev, sigma).iter().enumerate() {
                for (m, d) in r.d.iter().enumerate() {
                    jac.add(c * nb + k, c * nb + m, *d);
                }
            }
            cells.push(q);
            zs.push(z);
            ws.push(w);
        }
        for bf in self.grid.boundary_faces() {
            let c = bf.cell;
            for (k, r) in self.boundary_residual(bf, &cells[c], &zs[c], sigma).iter().enumerate() {
                for (m, d) in r.d.iter().enumerate() {
                    jac.add(c * nb + k, c * nb + m, *d);
                }
            }
        }
        let two = 2 * nb;
        for f in self.grid.faces() {
            let (l, r) = (f.left, f.right);
            let qa = cells[l].embed(two, 0);
            let qb = cells[r].embed(two, nb);
            let za: Vec<Jet> = zs[l].iter().map(|v| v.embed(two, 0)).collect();
            let zb: Vec<Jet> = zs[r].iter().map(|v| v.embed(two, nb)).collect();
            let wa = ws[l].embed(two, 0);
            let wb = ws[r].embed(two, nb);
            let ff = self.face_fluxes(f, &qa, &qb, &za, &zb, &wa, &wb, sigma, frozen);
            for k in 0..nb {
                let row = if k < n { &ff.mass[k] } else { &ff.energy };
                for (m, d) in row.d.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let col = if m < nb { l * nb + m } else { r * nb + m - nb };
                    jac.add(l * nb + k, col, *d);
                    jac.add(r * nb + k, col, -*d);
                }
            }
        }
        if self.config.delta != 0.0 {
            let mut dummy = vec![0.0; nb * nc];
            self.add_higher_order(x, &mut dummy, Some(&mut jac));
        }
        Ok(jac)
    }

    fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.laplacian
            .iter()
            .map(|row| row.iter().map(|(j, a)| a * u[*j]).sum())
            .collect()
    }

    /// Bi-Laplacian terms `delta vol L L z_i` and `delta vol L((1 + T) L w)`,
    /// with their hand-assembled Jacobian blocks.
    fn add_higher_order(&self, x: &[f64], residual: &mut [f64], jac: Option<&mut BandMatrix>) {
        let nb = self.block();
        let n = nb - 1;
        let nc = self.grid.num_cells();
        let scale = self.config.delta * self.grid.cell_volume();
        for i in 0..n {
            let zi: Vec<f64> = (0..nc).map(|c| x[c * nb + i]).collect();
            let y = self.apply_laplacian(&self.apply_laplacian(&zi));
            for c in 0..nc {
                residual[c * nb + i] += scale * y[c];
            }
        }
        let w: Vec<f64> = (0..nc).map(|c| x[c * nb + n]).collect();
        let t: Vec<f64> = w.iter().map(|v| v.exp()).collect();
        let lw = self.apply_laplacian(&w);
        let g: Vec<f64> = lw.iter().zip(&t).map(|(l, t)| (1.0 + t) * l).collect();
        let y = self.apply_laplacian(&g);
        for c in 0..nc {
            residual[c * nb + n] += scale * y[c];
        }
        if let Some(jac) = jac {
            for c in 0..nc {
                let mut l2: Vec<(usize, f64, f64)> = Vec::new();
                for &(k, a) in &self.laplacian[c] {
                    // d/dw_k of (1 + T_k)(L w)_k contributes T_k (L w)_k.
                    l2.push((k, 0.0, a * t[k] * lw[k]));
                    for &(j, b) in &self.laplacian[k] {
                        l2.push((j, a * b, a * (1.0 + t[k]) * b));
                    }
                }
                for (j, zz, ww) in l2 {
                    for i in 0..n {
                        if zz != 0.0 {
                            jac.add(c * nb + i, j * nb + i, scale * zz);
                        }
                    }
                    jac.add(c * nb + n, j * nb + n, scale * ww);
                }
            }
        }
    }

    /// Dense central-difference Jacobian, for verification.
    pub fn fd_jacobian(&self, x: &[f64], prev: &PreviousLevel, sigma: f64) -> Result<Vec<Vec<f64>>> {
        let len = x.len();
        let mut cols = Vec::with_capacity(len);
        let mut xp = x.to_vec();
        for j in 0..len {
            let h = 1e-6 * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            let rp = self.residual(&xp, prev, sigma)?;
            xp[j] = x[j] - h;
            let rm = self.residual(&xp, prev, sigma)?;
            xp[j] = x[j];
            cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
        }
        Ok((0..len).map(|i| (0..len).map(|j| cols[j][i]).collect()).collect())
    }
}
