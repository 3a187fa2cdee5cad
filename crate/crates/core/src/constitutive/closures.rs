use serde::{Deserialize, Serialize};

use super::Model;
use crate::scalar::Scalar;

/// Matrix `b` of the species boundary exchange law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryMatrix {
    /// `b = scale * Pi^N`.
    Projector { scale: f64 },
    /// Explicit `N x N` matrix, row-major.
    Explicit { rows: Vec<Vec<f64>> },
}

/// Porosity field over the domain, parametrized by the normalized
/// coordinate `xi in [0, 1]` along the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Porosity {
    Constant { value: f64 },
    Linear { left: f64, right: f64 },
}

impl Porosity {
    pub fn at(&self, xi: f64) -> f64 {
        match *self {
            Porosity::Constant { value } => value,
            Porosity::Linear { left, right } => left + (right - left) * xi,
        }
    }
}

/// Closure functions of the model.
///
/// The functional families are fixed; the exponents they use (`alpha_r`,
/// `k_p`, `c_p`, `beta`, `reaction_exponent`) come from
/// [`ModelParams`](super::ModelParams):
///
/// * `k_r(s) = clamp(s, 0, 1)^alpha_r`
/// * `P_c(s) = c_p s^(-k_p)`
/// * `f(s) = f_offset + f_slope * ln(1 - s)`
/// * `mu(T) = viscosity`
/// * `kappa(T) = kappa1 (1 + T^beta)`
/// * `L~ = diffusivity * Pi^N`, `L~_i0 = thermodiffusion * T rho_i / (1 + rho)`
/// * `r~_i = -reaction_rate |Pi z|^(a-2) (Pi z)_i`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosureSet {
    pub f_offset: f64,
    pub f_slope: f64,
    pub viscosity: f64,
    pub kappa1: f64,
    pub diffusivity: f64,
    pub thermodiffusion: f64,
    pub reaction_rate: f64,
    pub boundary_matrix: BoundaryMatrix,
    pub porosity: Porosity,
}

impl Default for ClosureSet {
    fn default() -> Self {
        ClosureSet {
            f_offset: 4.0,
            f_slope: 1.0,
            viscosity: 1.0,
            kappa1: 1.0,
            diffusivity: 1.0,
            thermodiffusion: 0.0,
            reaction_rate: 1.0,
            boundary_matrix: BoundaryMatrix::Projector { scale: 0.0 },
            porosity: Porosity::Constant { value: 0.3 },
        }
    }
}

/// Onsager coefficients at one point: `L~_ij`, `L~_i0` and `L_00 = kappa T^2`.
#[derive(Clone, Debug)]
pub struct OnsagerMatrix<S> {
    pub l: Vec<Vec<S>>,
    pub l0: Vec<S>,
    pub l00: S,
}

/// Orthogonal projector onto the complement of `span{(1, ..., 1)}`.
pub fn projector<S: Scalar>(u: &[S]) -> Vec<S> {
    let n = u.len() as f64;
    let mean = crate::scalar::sum(u.iter().cloned()) / n;
    u.iter().map(|x| x.clone() - mean.clone()).collect()
}

/// Entries of `Pi^N` as a dense matrix.
pub fn projector_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64)
                .collect()
        })
        .collect()
}

impl Model {
    pub fn relative_permeability<S: Scalar>(&self, s: &S) -> S {
        let v = s.value();
        if v <= 0.0 {
            s.lift(0.0)
        } else if v >= 1.0 {
            s.lift(1.0)
        } else {
            s.powf(self.params.alpha_r)
        }
    }

    /// `lambda(S, T) = k_r(S) / mu(T)`.
    pub fn mobility<S: Scalar>(&self, s: &S, _t: &S) -> S {
        self.relative_permeability(s) / self.closures.viscosity
    }

    pub fn capillary_pressure<S: Scalar>(&self, s: &S) -> S {
        s.powf(-self.params.k_p) * self.params.c_p
    }

    pub fn capillary_pressure_slope(&self, s: f64) -> f64 {
        let k = self.params.k_p;
        if k == 0.0 {
            0.0
        } else {
            -k * self.params.c_p * s.powf(-k - 1.0)
        }
    }

    /// `P_c,eps`: adds `-eps ln s` only when `k_p = 0`.
    pub fn capillary_pressure_reg<S: Scalar>(&self, s: &S, eps: f64) -> S {
        let pc = self.capillary_pressure(s);
        if self.params.k_p > 0.0 {
            pc
        } else {
            pc - s.ln() * eps
        }
    }

    pub fn capillary_pressure_reg_slope(&self, s: f64, eps: f64) -> f64 {
        let d = self.capillary_pressure_slope(s);
        if self.params.k_p > 0.0 {
            d
        } else {
            d - eps / s
        }
    }

    /// Antiderivative of `P_c,eps` (any additive constant).
    pub fn capillary_primitive<S: Scalar>(&self, s: &S, eps: f64) -> S {
        let k = self.params.k_p;
        let cp = self.params.c_p;
        let base = if (k - 1.0).abs() < 1e-15 {
            s.ln() * cp
        } else {
            s.powf(1.0 - k) * (cp / (1.0 - k))
        };
        if k > 0.0 {
            base
        } else {
            // d/ds (s ln s - s) = ln s
            base - (s.clone() * s.ln() - s.clone()) * eps
        }
    }

    /// Closed-form `int_a^b P_c,eps(xi) dxi`.
    pub fn capillary_integral(&self, a: f64, b: f64, eps: f64) -> f64 {
        self.capillary_primitive(&b, eps) - self.capillary_primitive(&a, eps)
    }

    /// Dynamic capillary potential `f`.
    pub fn dynamic_potential<S: Scalar>(&self, s: &S) -> S {
        (-s.clone() + 1.0).ln() * self.closures.f_slope + self.closures.f_offset
    }

    pub fn dynamic_potential_slope(&self, s: f64) -> f64 {
        -self.closures.f_slope / (1.0 - s)
    }

    pub fn dynamic_potential_inverse(&self, y: f64) -> f64 {
        1.0 - ((y - self.closures.f_offset) / self.closures.f_slope).exp()
    }

    pub fn viscosity<S: Scalar>(&self, t: &S) -> S {
        t.lift(self.closures.viscosity)
    }

    pub fn heat_conductivity<S: Scalar>(&self, t: &S) -> S {
        (t.powf(self.params.beta) + 1.0) * self.closures.kappa1
    }

    pub fn onsager<S: Scalar>(&self, rho: &[S], t: &S) -> OnsagerMatrix<S> {
        let n = rho.len();
        let pm = projector_matrix(n);
        let l = pm
            .iter()
            .map(|row| row.iter().map(|&x| t.lift(self.closures.diffusivity * x)).collect())
            .collect();
        let c0 = self.closures.thermodiffusion;
        let l0 = if c0 == 0.0 {
            vec![t.lift(0.0); n]
        } else {
            let total = crate::scalar::sum(rho.iter().cloned());
            rho.iter()
                .map(|r| t.clone() * r.clone() * c0 / (total.clone() + 1.0))
                .collect()
        };
        let l00 = self.heat_conductivity(t) * t.square();
        OnsagerMatrix { l, l0, l00 }
    }

    /// `r~_i(rho, T, Pi zeta)` of the default closure; independent of `rho` and `T`.
    pub fn reaction_closure<S: Scalar>(&self, zeta: &[S]) -> Vec<S> {
        let c1 = self.closures.reaction_rate;
        let a = self.params.reaction_exponent;
        let y = projector(zeta);
        let norm2 = crate::scalar::sum(y.iter().map(|v| v.square()));
        if norm2.value() == 0.0 || c1 == 0.0 {
            return y.iter().map(|v| v.lift(0.0)).collect();
        }
        let factor = norm2.powf(0.5 * (a - 2.0)) * (-c1);
        y.into_iter().map(|v| factor.clone() * v).collect()
    }

    /// `r_i,eps = r~_i - eps |zeta_i|^(a-2) zeta_i`.
    pub fn reaction_terms<S: Scalar>(&self, zeta: &[S], eps: f64) -> Vec<S> {
        let a = self.params.reaction_exponent;
        let mut r = self.reaction_closure(zeta);
        if eps != 0.0 {
            for (ri, z) in r.iter_mut().zip(zeta) {
                *ri = ri.clone() - signed_power(z, a - 1.0) * eps;
            }
        }
        r
    }

    pub fn boundary_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.params.species;
        match &self.closures.boundary_matrix {
            BoundaryMatrix::Projector { scale } => projector_matrix(n)
                .into_iter()
                .map(|row| row.into_iter().map(|x| x * scale).collect())
                .collect(),
            BoundaryMatrix::Explicit { rows } => rows.clone(),
        }
    }

    pub fn porosity(&self, xi: f64) -> f64 {
        self.closures.porosity.at(xi)
    }
}

/// `|x|^(p-1) x`, smooth through zero for `p > 1`.
pub fn signed_power<S: Scalar>(x: &S, p: f64) -> S {
    let v = x.value();
    if v == 0.0 {
        return x.lift(0.0) + x.clone() * 0.0;
    }
    let mag = if v > 0.0 { x.clone() } else { -x.clone() };
    let m = mag.powf(p);
    if v > 0.0 {
        m
    } else {
        -m
    }
}
