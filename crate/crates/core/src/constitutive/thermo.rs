//! Helmholtz free energy of the water mixture and the skeleton, with the
//! lower-order regularization `eps`, and every quantity derived from it.
//!
//! The generic functions assume positive densities and temperature; the
//! checked `f64` entry points on [`Model`] validate the domain first.

use super::{Model, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

fn total<S: Scalar>(rho: &[S]) -> S {
    sum(rho.iter().cloned())
}

/// `(rho Psi)_w,eps = T sum rho_i ln rho_i + rho^gamma - c_w rho T ln T + p_at + eps rho^K1`.
pub fn free_energy<S: Scalar>(p: &ModelParams, rho: &[S], t: &S, eps: f64) -> S {
    let r = total(rho);
    let mix = sum(rho.iter().map(|ri| ri.clone() * ri.ln()));
    t.clone() * mix + r.powf(p.gamma) - r.clone() * t.clone() * t.ln() * p.c_w
        + p.p_at
        + r.powf(p.k1) * eps
}

/// `mu_i = T (ln rho_i + 1) + gamma rho^(gamma-1) - c_w T ln T + eps K1 rho^(K1-1)`.
pub fn chemical_potentials<S: Scalar>(p: &ModelParams, rho: &[S], t: &S, eps: f64) -> Vec<S> {
    let r = total(rho);
    let common = r.powf(p.gamma - 1.0) * p.gamma - t.clone() * t.ln() * p.c_w
        + r.powf(p.k1 - 1.0) * (eps * p.k1);
    rho.iter()
        .map(|ri| t.clone() * (ri.ln() + 1.0) + common.clone())
        .collect()
}

/// `p = T rho + (gamma - 1) rho^gamma - p_at + eps (K1 - 1) rho^K1`.
pub fn pressure<S: Scalar>(p: &ModelParams, rho: &[S], t: &S, eps: f64) -> S {
    let r = total(rho);
    t.clone() * r.clone() + r.powf(p.gamma) * (p.gamma - 1.0) - p.p_at
        + r.powf(p.k1) * (eps * (p.k1 - 1.0))
}

/// `(rho e)_eps = rho^gamma + c_w rho T + p_at + eps rho^K1`.
pub fn internal_energy<S: Scalar>(p: &ModelParams, rho: &[S], t: &S, eps: f64) -> S {
    let r = total(rho);
    r.powf(p.gamma) + r.clone() * t.clone() * p.c_w + p.p_at + r.powf(p.k1) * eps
}

/// `(rho eta) = -sum rho_i ln rho_i + c_w rho (ln T + 1)`; unaffected by `eps`.
pub fn entropy<S: Scalar>(p: &ModelParams, rho: &[S], t: &S) -> S {
    let r = total(rho);
    -sum(rho.iter().map(|ri| ri.clone() * ri.ln())) + r * (t.ln() + 1.0) * p.c_w
}

/// `(rho eta)_s,eps = c_s - 1 + c_s ln T + eps K2 T^(K2-1)`.
pub fn skeleton_entropy<S: Scalar>(p: &ModelParams, t: &S, eps: f64) -> S {
    t.ln() * p.c_s + (p.c_s - 1.0) + t.powf(p.k2 - 1.0) * (eps * p.k2)
}

/// `E_s,eps = c_s T + eps (K2 - 1) T^K2`.
pub fn skeleton_energy<S: Scalar>(p: &ModelParams, t: &S, eps: f64) -> S {
    t.clone() * p.c_s + t.powf(p.k2) * (eps * (p.k2 - 1.0))
}

/// Thermodynamic state at one point with all derived quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoPoint {
    pub rho: Vec<f64>,
    pub t: f64,
    pub mu: Vec<f64>,
    pub p: f64,
    pub rhoe: f64,
    pub rhoeta: f64,
}

impl ThermoPoint {
    /// Residual of `p + rho e - sum rho_i mu_i - T rho eta`, relative to the
    /// largest term.
    pub fn euler_residual(&self) -> f64 {
        let rm: f64 = self.rho.iter().zip(&self.mu).map(|(r, m)| r * m).sum();
        let ts = self.t * self.rhoeta;
        let scale = [self.p, self.rhoe, rm, ts]
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        (self.p + self.rhoe - rm - ts).abs() / scale.max(f64::MIN_POSITIVE)
    }
}

fn check_point(rho: &[f64], t: f64) -> Result<()> {
    if rho.is_empty() {
        return Err(Error::Domain("empty density vector".into()));
    }
    if let Some(r) = rho.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::Domain(format!("nonpositive density {r}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("nonpositive temperature {t}")));
    }
    Ok(())
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("nonpositive temperature {t}")));
    }
    Ok(())
}

impl Model {
    pub fn free_energy_water(&self, rho: &[f64], t: f64, eps: f64) -> Result<f64> {
        check_point(rho, t)?;
        Ok(free_energy(&self.params, rho, &t, eps))
    }

    pub fn chemical_potentials(&self, rho: &[f64], t: f64, eps: f64) -> Result<Vec<f64>> {
        check_point(rho, t)?;
        Ok(chemical_potentials(&self.params, rho, &t, eps))
    }

    pub fn pressure(&self, rho: &[f64], t: f64, eps: f64) -> Result<f64> {
        check_point(rho, t)?;
        Ok(pressure(&self.params, rho, &t, eps))
    }

    /// Internal energy density. Zero densities are admitted here (vacuum
    /// limit `p_at`), since no logarithm of `rho` enters.
    pub fn internal_energy(&self, rho: &[f64], t: f64, eps: f64) -> Result<f64> {
        check_temperature(t)?;
        if let Some(r) = rho.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::Domain(format!("negative density {r}")));
        }
        Ok(internal_energy(&self.params, rho, &t, eps))
    }

    pub fn water_entropy(&self, rho: &[f64], t: f64) -> Result<f64> {
        check_point(rho, t)?;
        Ok(entropy(&self.params, rho, &t))
    }

    /// `((rho eta)_s,eps, E_s,eps)`.
    pub fn skeleton_entropy_energy(&self, t: f64, eps: f64) -> Result<(f64, f64)> {
        check_temperature(t)?;
        Ok((
            skeleton_entropy(&self.params, &t, eps),
            skeleton_energy(&self.params, &t, eps),
        ))
    }

    pub fn thermo_point(&self, rho: &[f64], t: f64, eps: f64) -> Result<ThermoPoint> {
        check_point(rho, t)?;
        let p = &self.params;
        Ok(ThermoPoint {
            rho: rho.to_vec(),
            t,
            mu: chemical_potentials(p, rho, &t, eps),
            p: pressure(p, rho, &t, eps),
            rhoe: internal_energy(p, rho, &t, eps),
            rhoeta: entropy(p, rho, &t),
        })
    }

    /// Interfacial energy `E_int(S) = int_S^1 P_c` and the regularized fluid
    /// energy `E_f,eps = (rho e)_eps S - int_{1/2}^S P_c,eps`, both by adaptive
    /// quadrature.
    pub fn interfacial_and_fluid_energy(
        &self,
        rho: &[f64],
        t: f64,
        s: f64,
        eps: f64,
    ) -> Result<(f64, f64)> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("saturation {s} outside (0, 1)")));
        }
        let rhoe = self.internal_energy(rho, t, eps)?;
        let e_int = super::quadrature::integrate(|x| self.capillary_pressure(&x), s, 1.0, 1e-10);
        let anchored =
            super::quadrature::integrate(|x| self.capillary_pressure_reg(&x, eps), 0.5, s, 1e-10);
        Ok((e_int, rhoe * s - anchored))
    }

    /// `E_f,eps` with the closed-form capillary integral, as used by the scheme.
    pub fn fluid_energy<S: Scalar>(&self, rhoe: &S, s: &S, eps: f64) -> S {
        let half = self.capillary_primitive(&0.5, eps);
        rhoe.clone() * s.clone() - (self.capillary_primitive(s, eps) - half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn model(p_at: f64) -> Model {
        let mut m = Model::default();
        m.params.p_at = p_at;
        m.params.gamma = 3.0;
        m.params.c_w = 1.0;
        m
    }

    #[test]
    fn free_energy_examples() {
        let m = model(1.0);
        assert!((m.free_energy_water(&[1.0], 1.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let v = m.free_energy_water(&[E], 1.0, 0.0).unwrap();
        assert!((v - (E + E.powi(3) + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn free_energy_two_species_reference() {
        // 0.5 ln 0.5 * 2 * T + 1 - 2 ln 2 + 1 + 0.1, evaluated symbolically:
        // T sum rho_i ln rho_i = 2 * (2 * 0.5 ln 0.5) = -2 ln 2
        // rho^3 = 1, -c_w rho T ln T = -2 ln 2, p_at = 1, eps rho^5 = 0.1
        let m = model(1.0);
        let v = m.free_energy_water(&[0.5, 0.5], 2.0, 0.1).unwrap();
        let expected = -4.0 * 2f64.ln() + 2.1;
        assert!((v - expected).abs() < 1e-14, "{v} vs {expected}");
    }

    #[test]
    fn chemical_potential_examples() {
        let m = model(1.0);
        assert!((m.chemical_potentials(&[1.0], 1.0, 0.0).unwrap()[0] - 4.0).abs() < 1e-15);
        let mu = m.chemical_potentials(&[1.0, 1.0], 1.0, 0.0).unwrap();
        assert!(mu.iter().all(|x| (x - 13.0).abs() < 1e-14));
    }

    #[test]
    fn pressure_examples() {
        let m = model(1.0);
        assert!((m.pressure(&[1.0], 2.0, 0.0).unwrap() - 3.0).abs() < 1e-15);
        let vac = m.pressure(&[1e-300], 3.0, 0.0).unwrap();
        assert!((vac + 1.0).abs() < 1e-12);
    }

    #[test]
    fn internal_energy_examples() {
        let m = model(1.0);
        assert!((m.internal_energy(&[1.0], 1.0, 0.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(m.internal_energy(&[0.0], 4.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn entropy_examples() {
        let m = model(1.0);
        assert!((m.water_entropy(&[1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.water_entropy(&[1.0, 1.0], 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn skeleton_examples() {
        let m = model(1.0);
        let (eta, e) = m.skeleton_entropy_energy(1.0, 0.0).unwrap();
        assert_eq!((eta, e), (0.0, 1.0));
        let (eta, e) = m.skeleton_entropy_energy(1.0, 0.1).unwrap();
        assert!((eta - 0.6).abs() < 1e-15 && (e - 1.5).abs() < 1e-15);
    }

    #[test]
    fn skeleton_entropy_concave_in_energy() {
        let m = model(1.0);
        for eps in [0.0, 0.1, 1.0] {
            let pts: Vec<(f64, f64)> = (1..400)
                .map(|i| {
                    let t = 0.01 * i as f64;
                    let (eta, e) = m.skeleton_entropy_energy(t, eps).unwrap();
                    (e, eta)
                })
                .collect();
            for w in pts.windows(3) {
                let (e0, h0) = w[0];
                let (e1, h1) = w[1];
                let (e2, h2) = w[2];
                let s01 = (h1 - h0) / (e1 - e0);
                let s12 = (h2 - h1) / (e2 - e1);
                assert!(s12 <= s01 * (1.0 + 1e-12), "eps={eps} e={e1}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        let m = model(1.0);
        assert!(m.free_energy_water(&[0.0], 1.0, 0.0).is_err());
        assert!(m.chemical_potentials(&[1.0], -1.0, 0.0).is_err());
        assert!(m.pressure(&[-1.0], 1.0, 0.0).is_err());
        assert!(m.skeleton_entropy_energy(0.0, 0.0).is_err());
        assert!(m.interfacial_and_fluid_energy(&[1.0], 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fluid_energy_examples() {
        let m = model(1.0);
        let rhoe = m.internal_energy(&[0.7], 1.3, 0.01).unwrap();
        let (_, ef) = m.interfacial_and_fluid_energy(&[0.7], 1.3, 0.5, 0.01).unwrap();
        assert!((ef - rhoe / 2.0).abs() < 1e-12);
        // int_{1/2}^{1/4} s^-2 ds = -2
        let (_, ef) = m.interfacial_and_fluid_energy(&[0.7], 1.3, 0.25, 0.01).unwrap();
        assert!((ef - (rhoe / 4.0 + 2.0)).abs() < 1e-10);
        assert!((m.fluid_energy(&rhoe, &0.25, 0.01) - (rhoe / 4.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn interfacial_energy_derivative_is_minus_capillary_pressure() {
        let m = model(1.0);
        for &s in &[0.2, 0.5, 0.9] {
            let h = 1e-6 * s;
            let (ep, _) = m.interfacial_and_fluid_energy(&[1.0], 1.0, s + h, 0.0).unwrap();
            let (em, _) = m.interfacial_and_fluid_energy(&[1.0], 1.0, s - h, 0.0).unwrap();
            let d = (ep - em) / (2.0 * h);
            let pc = m.capillary_pressure(&s);
            assert!((d + pc).abs() < 1e-5 * pc, "s={s}: {d} vs {pc}");
        }
    }
}
