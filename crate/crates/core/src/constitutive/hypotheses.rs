//! Sampled verification of the structural hypotheses on parameters and
//! closures.
//!
//! Each check evaluates its inequality on a deterministic grid and on a
//! fixed-seed random sample, and records the worst value seen. Constants
//! that the theory only asserts to exist (`c_f`, `c_f'`, `lambda_0`, ...)
//! are reported as computed infima / suprema.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::closures::projector;
use super::Model;

/// Upper end of the interval `(0, s0)` on which `lambda_0 = inf P_c / f` is taken.
pub const S0: f64 = 0.5;

const SEED: u64 = 0x5eed_1e55;

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    /// Short label, e.g. `"hp.kr"`.
    pub name: &'static str,
    pub passed: bool,
    /// Worst-case witness or computed constant.
    pub witness: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn failed(&self, name: &str) -> bool {
        self.checks.iter().any(|c| c.name == name && !c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, witness: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            name,
            passed,
            witness: witness.into(),
        });
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<14} {}", c.name, c.witness)?;
        }
        Ok(())
    }
}

/// Log-spaced grid on `(lo, hi)` plus a uniform grid, sorted.
fn saturation_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .chain((1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64))
        .filter(|s| *s > 0.0 && *s < 1.0)
        .collect();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

fn strictly_decreasing(values: &[(f64, f64)]) -> Option<f64> {
    values
        .windows(2)
        .find(|w| !(w[1].1 < w[0].1))
        .map(|w| w[1].0)
}

fn is_symmetric_psd(m: &[Vec<f64>]) -> (bool, f64, f64) {
    let n = m.len();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[i][j] - m[j][i]).abs());
        }
    }
    // Cholesky of m + tiny shift decides PSD.
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let shift = 1e-12 * scale;
    let mut l = vec![vec![0.0; n]; n];
    let mut min_pivot = f64::INFINITY;
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                min_pivot = min_pivot.min(s);
                if s <= 0.0 {
                    return (false, asym, s);
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    (asym <= 1e-12 * scale, asym, min_pivot)
}

impl Model {
    /// `lambda_0 = inf_{s in (0, s0)} P_c(s) / f(s)`, sampled; `None` if `f`
    /// is not positive on `(0, s0)`.
    pub fn lambda0(&self) -> Option<f64> {
        let mut inf = f64::INFINITY;
        for s in saturation_grid(1e-9, S0, 2000).into_iter().chain([S0]) {
            let f = self.dynamic_potential(&s);
            if !(f > 0.0) {
                return None;
            }
            inf = inf.min(self.capillary_pressure(&s) / f);
        }
        Some(inf)
    }

    /// `f^-1(p_at / lambda_0)`: the regularization must stay below this
    /// value for the saturation floor `S >= eps` to be guaranteed.
    pub fn saturation_floor_limit(&self) -> Option<f64> {
        let l0 = self.lambda0()?;
        if !(l0 > 0.0) {
            return None;
        }
        let s = self.dynamic_potential_inverse(self.params.p_at / l0);
        (s > 0.0 && s < 1.0).then_some(s)
    }

    pub fn validate_hypotheses(&self) -> HypothesisReport {
        let p = &self.params;
        let c = &self.closures;
        let n = p.species;
        let mut r = HypothesisReport::default();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let grid = saturation_grid(1e-8, 1.0 - 1e-8, 400);
        let low = saturation_grid(1e-8, 0.5, 400);

        r.push(
            "species",
            n >= 1 && (p.mu0.is_empty() || p.mu0.len() == n),
            format!("N = {n}, |mu0| = {}", p.mu0.len()),
        );

        r.push("gamma", p.gamma > 2.0, format!("gamma = {}, requires gamma > 2", p.gamma));

        r.push(
            "constants",
            p.c_w > 0.0 && p.c_s > 0.0 && p.p_at > 0.0 && p.permeability > 0.0
                && p.alpha >= 0.0 && p.t0 > 0.0,
            format!(
                "c_w = {}, c_s = {}, p_at = {}, K = {}, alpha = {}, T0 = {}",
                p.c_w, p.c_s, p.p_at, p.permeability, p.alpha, p.t0
            ),
        );

        // Relative permeability.
        {
            let lo = 2.0 / p.gamma;
            let hi = 14.0 / 3.0;
            let in_range = p.alpha_r > lo && p.alpha_r < hi;
            let mut prev = 0.0f64;
            let mut monotone = true;
            let mut bounded = true;
            for &s in &grid {
                let k = self.relative_permeability(&s);
                monotone &= k >= prev;
                bounded &= (0.0..=1.0).contains(&k);
                prev = k;
            }
            let ends = self.relative_permeability(&0.0) == 0.0
                && self.relative_permeability(&-1.0) == 0.0
                && self.relative_permeability(&1.0) == 1.0
                && self.relative_permeability(&2.0) == 1.0;
            let s = 1e-7;
            let k_star = self.relative_permeability(&s) / s.powf(p.alpha_r);
            r.push(
                "hp.kr",
                in_range && monotone && bounded && ends && k_star > 0.0 && k_star.is_finite(),
                format!("alpha_r = {} in ({lo:.4}, {hi:.4})? {in_range}; k_r* ~ {k_star:.4}", p.alpha_r),
            );
        }

        r.push(
            "viscosity",
            c.viscosity > 0.0 && c.viscosity.is_finite(),
            format!("mu = {}", c.viscosity),
        );

        // Capillary pressure and dynamic potential.
        {
            let pc: Vec<(f64, f64)> = grid.iter().map(|&s| (s, self.capillary_pressure(&s))).collect();
            let f: Vec<(f64, f64)> = grid.iter().map(|&s| (s, self.dynamic_potential(&s))).collect();
            let pc_bad = strictly_decreasing(&pc);
            let f_bad = strictly_decreasing(&f);
            let q_ok = p.q >= p.gamma / (p.gamma - 1.0) && p.q < 2.0;
            let expo = p.q / (2.0 * (p.q - 1.0));
            let c_f = low
                .iter()
                .map(|&s| {
                    self.capillary_pressure_slope(s).abs()
                        * self.relative_permeability(&s).powf(expo)
                        / self.dynamic_potential_slope(s).abs()
                })
                .fold(f64::INFINITY, f64::min);
            r.push(
                "hp.Pcf",
                pc_bad.is_none() && f_bad.is_none() && q_ok && c_f > 1e-6,
                format!(
                    "P_c decreasing: {}, f decreasing: {}, q = {} ok: {q_ok}, c_f ~ {c_f:.3e}",
                    pc_bad.map_or("yes".to_string(), |s| format!("no (s = {s:.3e})")),
                    f_bad.map_or("yes".to_string(), |s| format!("no (s = {s:.3e})")),
                    p.q
                ),
            );
        }
        {
            let f_end = self.dynamic_potential(&(1.0 - 1e-14));
            let blows = f_end < self.dynamic_potential(&(1.0 - 1e-7)) - 5.0 && f_end < -10.0;
            let c_f2 = grid
                .iter()
                .map(|&s| {
                    let h = 1e-6 * s.min(1.0 - s);
                    let d = (self.relative_permeability(&(s + h)).sqrt()
                        - self.relative_permeability(&(s - h)).sqrt())
                        / (2.0 * h);
                    d.abs() / self.dynamic_potential_slope(s).abs()
                })
                .fold(0.0f64, f64::max);
            r.push(
                "hp.krf",
                blows && c_f2.is_finite() && c_f2 < 1e6,
                format!("f(1-) -> -inf: {blows}; c_f' ~ {c_f2:.3e}"),
            );
        }
        {
            let f0 = self.dynamic_potential(&0.0);
            let pc_pos = grid.iter().all(|&s| self.capillary_pressure(&s) > 0.0);
            let l0 = self.lambda0();
            let ok = f0 > 0.0 && pc_pos && l0.is_some_and(|l| l > p.p_at / f0);
            r.push(
                "hp.Pcf2",
                ok,
                format!(
                    "f(0) = {f0:.4}, P_c > 0: {pc_pos}, lambda_0 (s0 = {S0}) = {}, p_at/f(0) = {:.4}",
                    l0.map_or("undefined".to_string(), |l| format!("{l:.4}")),
                    p.p_at / f0
                ),
            );
        }
        {
            let lim = |s: f64| s.powf(p.k_p) * self.capillary_pressure(&s);
            let a = lim(1e-6);
            let b = lim(1e-9);
            let ok = p.k_p >= 0.0 && p.c_p > 0.0 && (a - b).abs() <= 1e-6 * b.abs() && b > 0.0;
            r.push(
                "hp.Pc.bound",
                ok,
                format!("k_p = {}, s^k_p P_c(s) -> {b:.4e}", p.k_p),
            );
        }
        {
            let inf_df = grid
                .iter()
                .map(|&s| self.dynamic_potential_slope(s).abs())
                .fold(f64::INFINITY, f64::min);
            let integral = |lo: f64| {
                super::quadrature::integrate(
                    |u| self.dynamic_potential_slope(u).abs() * u.ln().abs(),
                    lo,
                    0.5,
                    1e-10,
                )
            };
            let i1 = integral(1e-8);
            let i2 = integral(1e-12);
            let finite = i2.is_finite() && (i2 - i1).abs() < 1e-4 * (1.0 + i1.abs());
            r.push(
                "lb.dfeps",
                inf_df > 0.0 && finite,
                format!("inf |f'| = {inf_df:.4}, int |f'||ln u| = {i2:.6}"),
            );
        }

        // Heat conductivity.
        {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for k in -40..=40 {
                let t = 10f64.powf(k as f64 / 10.0);
                let ratio = self.heat_conductivity(&t) / (1.0 + t.powf(p.beta));
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            r.push(
                "kappa",
                lo > 0.0 && hi.is_finite(),
                format!("kappa_1 ~ {lo:.4}, kappa_2 ~ {hi:.4}"),
            );
        }
        {
            let b1 = p.q / (2.0 - p.q);
            let b2 = p.gamma / (p.gamma - 2.0);
            let ok = p.beta >= b1 && p.beta > b2 && p.beta >= 4.0 / 3.0;
            r.push(
                "hp.beta",
                ok,
                format!("beta = {} vs q/(2-q) = {b1:.4}, gamma/(gamma-2) = {b2:.4}, 4/3", p.beta),
            );
        }

        // Onsager matrix.
        let samples: Vec<(Vec<f64>, f64)> = (0..200)
            .map(|_| {
                let rho: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-4.0..2.0))).collect();
                let t = 10f64.powf(rng.gen_range(-3.0..3.0));
                (rho, t)
            })
            .collect();
        {
            let mut sup = 0.0f64;
            for (rho, t) in &samples {
                let om = self.onsager(rho, t);
                for i in 0..n {
                    for j in 0..n {
                        sup = sup.max(om.l[i][j].abs() + om.l0[i].abs() / t);
                    }
                }
            }
            r.push(
                "hp.Ltilde",
                sup.is_finite() && sup < 1e8,
                format!("sup |L_ij| + |L_i0|/T ~ {sup:.4e}"),
            );
        }
        {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            let mut structure = true;
            for (rho, t) in &samples {
                let om = self.onsager(rho, t);
                let (sym_psd, _, _) = is_symmetric_psd(&om.l);
                structure &= sym_psd;
                let l00_ok = om.l00 >= 0.0;
                structure &= l00_ok;
                let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let pu = projector(&u);
                let pn: f64 = pu.iter().map(|x| x * x).sum();
                if pn > 1e-12 {
                    let mut form = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            form += om.l[i][j] * u[i] * u[j];
                        }
                    }
                    lo = lo.min(form / pn);
                    hi = hi.max(form / pn);
                }
            }
            if n == 1 {
                lo = 1.0;
                hi = 1.0;
            }
            r.push(
                "Ass.L",
                structure && lo > 0.0 && hi.is_finite(),
                format!("symmetric PSD: {structure}, C ~ {lo:.4e}, C' ~ {hi:.4e}"),
            );
        }

        // Boundary exchange matrix.
        {
            let b = self.boundary_matrix();
            let shape_ok = b.len() == n && b.iter().all(|row| row.len() == n);
            let (sym_psd, _, _) = if shape_ok { is_symmetric_psd(&b) } else { (false, 0.0, 0.0) };
            let col = if shape_ok {
                (0..n)
                    .map(|j| (0..n).map(|i| b[i][j]).sum::<f64>().abs())
                    .fold(0.0f64, f64::max)
            } else {
                f64::INFINITY
            };
            r.push(
                "hp.b",
                shape_ok && sym_psd && col <= 1e-12,
                format!("shape ok: {shape_ok}, symmetric PSD: {sym_psd}, max |column sum| = {col:.3e}"),
            );
        }

        // Reactions.
        {
            let zetas: Vec<Vec<f64>> = (0..300)
                .map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let a = p.reaction_exponent;
            let c1 = c.reaction_rate;
            let mut sum_max = 0.0f64;
            let mut gap_max = f64::NEG_INFINITY;
            let mut growth_ok = true;
            let mut convex_ok = true;
            for (k, z) in zetas.iter().enumerate() {
                let rt = self.reaction_closure(z);
                sum_max = sum_max.max(rt.iter().sum::<f64>().abs());
                let pz = projector(z);
                let pn = pz.iter().map(|x| x * x).sum::<f64>().sqrt();
                let work: f64 = rt.iter().zip(z).map(|(r, z)| r * z).sum();
                // sum r zeta <= C0 - C1 |Pi zeta|^a with C0 = 0, C1 = c1
                gap_max = gap_max.max(work + c1 * pn.powf(a) * (1.0 - 1e-9));
                let abs_sum: f64 = rt.iter().map(|x| x.abs()).sum();
                growth_ok &= abs_sum <= (n as f64).sqrt() * c1.abs() * (1.0 + pn.powf(a - 1.0)) + 1e-9;
                let other = &zetas[(k + 1) % zetas.len()];
                let mid: Vec<f64> = z.iter().zip(other).map(|(x, y)| 0.5 * (x + y)).collect();
                let phi = |v: &[f64]| -> f64 {
                    -self.reaction_closure(v).iter().zip(v).map(|(r, z)| r * z).sum::<f64>()
                };
                convex_ok &= phi(&mid) <= 0.5 * (phi(z) + phi(other)) + 1e-9;
            }
            r.push("hp.r", sum_max <= 1e-12, format!("max |sum r_j| = {sum_max:.3e}"));
            r.push(
                "hp.r.2",
                a > 2.0 && c1 > 0.0 && gap_max <= 1e-9 && growth_ok,
                format!("a = {a}, C1 = {c1}, max(sum r zeta + C1 |Pi zeta|^a) = {gap_max:.3e}, growth bound: {growth_ok}"),
            );
            r.push("hp.r.3", convex_ok, format!("midpoint convexity: {convex_ok}"));
        }

        // Regularization exponents.
        {
            let g = p.gamma;
            let k1_lo = 1.2 * g;
            let k1_ok = if p.alpha_r <= 4.0 / 3.0 {
                p.k1 > k1_lo
            } else {
                p.k1 > k1_lo && p.k1 < (3.0 * p.alpha_r - 2.0) / (3.0 * p.alpha_r - 4.0) * g
            };
            let k2_ok = p.k2 > 3.0 && p.k2 < 3.0 * p.beta;
            let k3_lo = (5.0 * p.k1 + 6.0 * g) / (5.0 * p.k1 - 6.0 * g);
            let k3_ok = p.k1 > k1_lo && p.k3 > k3_lo;
            r.push(
                "hp.K123",
                k1_ok && k2_ok && k3_ok,
                format!(
                    "K1 = {} ok: {k1_ok}, K2 = {} ok: {k2_ok}, K3 = {} > {k3_lo:.4}: {k3_ok}",
                    p.k1, p.k2, p.k3
                ),
            );
        }

        // Porosity.
        {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..=1000 {
                let v = self.porosity(k as f64 / 1000.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            r.push(
                "Phi.pos",
                lo > 0.0 && hi < 1.0,
                format!("inf Phi = {lo}, sup Phi = {hi}"),
            );
        }

        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::closures::{BoundaryMatrix, Porosity};

    #[test]
    fn defaults_pass() {
        let m = Model::default();
        let rep = m.validate_hypotheses();
        assert!(rep.all_passed(), "{rep}");
    }

    #[test]
    fn alpha_r_five_fails_kr() {
        let mut m = Model::default();
        m.params.alpha_r = 5.0;
        let rep = m.validate_hypotheses();
        assert!(rep.failed("hp.kr"), "{rep}");
    }

    #[test]
    fn identity_boundary_matrix_fails_hp_b() {
        let mut m = Model::default();
        m.closures.boundary_matrix = BoundaryMatrix::Explicit {
            rows: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let rep = m.validate_hypotheses();
        assert!(rep.failed("hp.b"), "{rep}");
    }

    #[test]
    fn unit_porosity_fails() {
        let mut m = Model::default();
        m.closures.porosity = Porosity::Constant { value: 1.0 };
        assert!(m.validate_hypotheses().failed("Phi.pos"));
    }

    #[test]
    fn floor_limit_for_defaults() {
        let m = Model::default();
        let l0 = m.lambda0().unwrap();
        // P_c / f decreasing on (0, 1/2): infimum at s = 1/2.
        let expected = 4.0 / (4.0 + 0.5f64.ln());
        assert!((l0 - expected).abs() < 1e-12, "{l0} vs {expected}");
        let lim = m.saturation_floor_limit().unwrap();
        assert!(lim > 0.01);
    }
}
