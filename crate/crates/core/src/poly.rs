//! Dense univariate polynomials with complex coefficients.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::elliptic::C;
use crate::error::{LameError, Result};

/// Polynomial in the spectral variable `E`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EnergyPolynomial {
    pub coeffs: Vec<C>,
}

fn zero() -> C {
    C::new(0.0, 0.0)
}

impl EnergyPolynomial {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(zero());
        }
        EnergyPolynomial { coeffs }
    }

    pub fn constant(c: C) -> Self {
        Self::new(vec![c])
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    /// The monomial `E`.
    pub fn var() -> Self {
        Self::new(vec![zero(), C::new(1.0, 0.0)])
    }

    pub fn from_roots(roots: &[C]) -> Self {
        let mut p = Self::constant(C::new(1.0, 0.0));
        for r in roots {
            p = p.mul(&Self::new(vec![-r, C::new(1.0, 0.0)]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == zero())
    }

    pub fn leading(&self) -> C {
        *self.coeffs.last().unwrap()
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).copied().unwrap_or_else(zero)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, e: C) -> C {
        self.coeffs.iter().rev().fold(zero(), |acc, c| acc * e + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn scale(&self, s: C) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Multiply by `E`.
    pub fn shift(&self) -> Self {
        let mut c = vec![zero()];
        c.extend_from_slice(&self.coeffs);
        Self::new(c)
    }

    /// Drop trailing coefficients smaller than `rel * max|coeff|`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let tol = rel * self.max_abs();
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().unwrap().norm() <= tol {
            c.pop();
        }
        Self::new(c)
    }

    pub fn monic(&self) -> Self {
        let l = self.leading();
        self.scale(C::new(1.0, 0.0) / l)
    }

    /// Exact division by `(E - r)`; returns the quotient and remainder.
    pub fn deflate(&self, r: C) -> (Self, C) {
        let d = self.degree();
        if d == 0 {
            return (Self::zero(), self.coeffs[0]);
        }
        let mut q = vec![zero(); d];
        let mut acc = self.coeffs[d];
        for k in (0..d).rev() {
            q[k] = acc;
            acc = self.coeffs[k] + acc * r;
        }
        (Self::new(q), acc)
    }

    /// All complex roots: companion-matrix eigenvalues refined by Newton.
    pub fn roots(&self) -> Result<Vec<C>> {
        let d = self.degree();
        if d == 0 {
            return Ok(vec![]);
        }
        let lead = self.leading();
        if lead.norm() == 0.0 {
            return Err(LameError::Consistency("zero leading coefficient".into()));
        }
        let mut m = DMatrix::<C>::zeros(d, d);
        for k in 0..d {
            m[(0, k)] = -self.coeffs[d - 1 - k] / lead;
        }
        for k in 1..d {
            m[(k, k - 1)] = C::new(1.0, 0.0);
        }
        let eig = m
            .clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| LameError::NoConvergence {
                what: "companion eigenvalues".into(),
                residual: f64::NAN,
            })?;
        let dp = self.derivative();
        let mut roots: Vec<C> = eig.iter().map(|&z| self.polish(&dp, z)).collect();
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    fn polish(&self, dp: &Self, mut z: C) -> C {
        let mut best = (self.eval(z).norm(), z);
        for _ in 0..30 {
            let f = self.eval(z);
            let d = dp.eval(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = f / d;
            z -= step;
            let r = self.eval(z).norm();
            if r < best.0 {
                best = (r, z);
            } else if step.norm() < 1e-14 * (1.0 + z.norm()) {
                break;
            }
            if step.norm() < 1e-17 * (1.0 + z.norm()) {
                break;
            }
        }
        best.1
    }
}
