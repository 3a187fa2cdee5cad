use super::Model;
use crate::error::{Error, Result};

/// Diffusion and heat fluxes at one point, with the entropy production
/// they generate.
#[derive(Clone, Debug)]
pub struct OnsagerFluxes {
    /// `J_i`, one spatial vector per species.
    pub j: Vec<Vec<f64>>,
    /// Heat flux.
    pub q: Vec<f64>,
    /// `-sum_i grad(z_i) . J_i + grad(1/T) . q`, by direct expansion.
    pub production: f64,
    /// `sum_ij L_ij grad z_i . grad z_j + L_00 |grad(1/T)|^2`.
    pub quadratic_form: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Model {
    /// `J_i = L_i0 grad(1/T) - sum_j L_ij grad(z_j)` and
    /// `q = L_00 grad(1/T) + sum_j L_0j grad(z_j)`, where `L_00 grad(1/T)`
    /// equals Fourier's `-kappa grad T`.
    pub fn onsager_fluxes(
        &self,
        rho: &[f64],
        t: f64,
        grad_zeta: &[Vec<f64>],
        grad_inv_t: &[f64],
    ) -> Result<OnsagerFluxes> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("nonpositive temperature {t}")));
        }
        let n = rho.len();
        if grad_zeta.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: grad_zeta.len(),
            });
        }
        let dim = grad_inv_t.len();
        let om = self.onsager(rho, &t);
        let mut j = vec![vec![0.0; dim]; n];
        let mut q = vec![0.0; dim];
        for k in 0..dim {
            q[k] = om.l00 * grad_inv_t[k];
            for i in 0..n {
                let mut ji = om.l0[i] * grad_inv_t[k];
                for jj in 0..n {
                    ji -= om.l[i][jj] * grad_zeta[jj][k];
                }
                j[i][k] = ji;
                q[k] += om.l0[i] * grad_zeta[i][k];
            }
        }
        let production =
            -(0..n).map(|i| dot(&grad_zeta[i], &j[i])).sum::<f64>() + dot(grad_inv_t, &q);
        let mut quadratic_form = om.l00 * dot(grad_inv_t, grad_inv_t);
        for i in 0..n {
            for jj in 0..n {
                quadratic_form += om.l[i][jj] * dot(&grad_zeta[i], &grad_zeta[jj]);
            }
        }
        Ok(OnsagerFluxes {
            j,
            q,
            production,
            quadratic_form,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_give_zero_fluxes() {
        let m = Model::default();
        let f = m
            .onsager_fluxes(&[0.3, 0.4], 1.2, &[vec![0.0, 0.0], vec![0.0, 0.0]], &[0.0, 0.0])
            .unwrap();
        assert!(f.j.iter().flatten().all(|x| *x == 0.0));
        assert!(f.q.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn projector_kills_uniform_species_gradient() {
        let m = Model::default();
        let g = vec![vec![0.7], vec![0.7]];
        let f = m.onsager_fluxes(&[0.3, 0.4], 1.2, &g, &[0.0]).unwrap();
        assert!(f.j.iter().flatten().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn species_fluxes_sum_to_zero_without_cross_terms() {
        let m = Model::default();
        let g = vec![vec![0.7, -0.1], vec![-0.3, 0.5]];
        let f = m.onsager_fluxes(&[0.3, 0.4], 1.2, &g, &[0.2, 0.1]).unwrap();
        for k in 0..2 {
            assert!((f.j[0][k] + f.j[1][k]).abs() < 1e-15);
        }
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        let m = Model::default();
        assert!(m.onsager_fluxes(&[0.3], 0.0, &[vec![0.0]], &[0.0]).is_err());
    }
}
