//! Scalar abstraction shared by plain `f64` evaluation and forward-mode
//! differentiation.
//!
//! Every constitutive formula is written once, generically over [`Scalar`].
//! Evaluating it with `f64` gives values; evaluating it with [`Jet`] gives
//! values together with exact first derivatives with respect to the local
//! unknowns of a cell or face stencil.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant with the same derivative layout as `self`.
    fn lift(&self, v: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn sqrt(&self) -> Self;
    /// Re-express the derivative part in a larger space of `total` unknowns,
    /// starting at `offset`.
    fn embed(&self, total: usize, offset: usize) -> Self;

    fn recip(&self) -> Self {
        self.lift(1.0) / self.clone()
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn embed(&self, _total: usize, _offset: usize) -> Self {
        *self
    }
}

/// Value plus gradient with respect to a fixed, small set of unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, n: usize) -> Self {
        Jet { v, d: vec![0.0; n] }
    }

    /// The `i`-th independent variable out of `n`.
    pub fn variable(v: f64, n: usize, i: usize) -> Self {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        Jet { v, d }
    }

    /// Chain rule for a scalar function with value `f` and slope `df` at `self.v`.
    fn chain(&self, f: f64, df: f64) -> Self {
        Jet {
            v: f,
            d: self.d.iter().map(|x| x * df).collect(),
        }
    }

    fn zip(&self, other: &Jet, v: f64, a: f64, b: f64) -> Jet {
        debug_assert_eq!(self.d.len(), other.d.len());
        Jet {
            v,
            d: self
                .d
                .iter()
                .zip(&other.d)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.v
    }
    fn lift(&self, v: f64) -> Self {
        Jet::constant(v, self.d.len())
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return self.lift(1.0);
        }
        let f = self.v.powf(p);
        let df = if p == 1.0 { 1.0 } else { p * self.v.powf(p - 1.0) };
        self.chain(f, df)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn embed(&self, total: usize, offset: usize) -> Self {
        let mut d = vec![0.0; total];
        d[offset..offset + self.d.len()].copy_from_slice(&self.d);
        Jet { v: self.v, d }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.zip(&o, self.v + o.v, 1.0, 1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.zip(&o, self.v - o.v, 1.0, -1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        self.zip(&o, self.v * o.v, o.v, self.v)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        self.zip(&o, q, 1.0 / o.v, -q / o.v)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.chain(-self.v, -1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.chain(self.v * c, c)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, c: f64) -> Jet {
        self.chain(self.v / c, 1.0 / c)
    }
}

/// Sum of a non-empty sequence of scalars.
pub fn sum<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    let mut it = items.into_iter();
    let first = it.next().expect("sum of an empty sequence");
    it.fold(first, |acc, x| acc + x)
}

/// Numerically stable `ln(sum(exp(x_i)))`.
pub fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let m = xs.iter().map(|x| x.value()).fold(f64::NEG_INFINITY, f64::max);
    let s = sum(xs.iter().map(|x| (x.clone() - m).exp()));
    s.ln() + m
}
