//! Expansion of the eigenvalues `E_m(p)` of `H = -d^2/dx^2 + n(n+1) wp(x)` on
//! `(0, 1)` in powers of `p^2`, starting from the trigonometric limit
//! `H_T = -d^2/dx^2 + n(n+1) pi^2 / sin^2(pi x)` with eigenfunctions
//! `v_m = c_m C^(n+1)_m(cos pi x) sin^(n+1)(pi x)`.
//!
//! Everything is computed in units of `pi^2`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::elliptic::C;
use crate::error::{LameError, Result};

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Gegenbauer polynomials `C^(lambda)_m(z)`, `m = 0..=m_max`.
pub fn gegenbauer(lambda: f64, m_max: usize, z: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(m_max + 1);
    c.push(1.0);
    if m_max >= 1 {
        c.push(2.0 * lambda * z);
    }
    for m in 2..=m_max {
        let mf = m as f64;
        let v = (2.0 * z * (mf + lambda - 1.0) * c[m - 1] - (mf + 2.0 * lambda - 2.0) * c[m - 2]) / mf;
        c.push(v);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigBasis {
    pub n: usize,
    pub m_max: usize,
    pub norm_constants: Vec<f64>,
    /// `pi^2 (m + n + 1)^2`.
    pub eigenvalues: Vec<f64>,
}

pub fn build_basis(n: usize, m_max: usize) -> Result<TrigBasis> {
    if n == 0 {
        return Err(LameError::Domain("n must be positive".into()));
    }
    let nf = n as f64;
    let norm_constants = (0..=m_max)
        .map(|m| {
            let ln = (2.0 * nf + 1.0) * 2f64.ln() + ((m + n + 1) as f64).ln() + ln_factorial(m) + 2.0 * ln_factorial(n)
                - ln_factorial(m + 2 * n + 1);
            (0.5 * ln).exp()
        })
        .collect();
    let eigenvalues = (0..=m_max).map(|m| PI * PI * ((m + n + 1) as f64).powi(2)).collect();
    Ok(TrigBasis { n, m_max, norm_constants, eigenvalues })
}

impl TrigBasis {
    /// `v_m(x)` for every `m`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let z = (PI * x).cos();
        let w = (PI * x).sin().powi(self.n as i32 + 1);
        gegenbauer(self.n as f64 + 1.0, self.m_max, z)
            .iter()
            .zip(&self.norm_constants)
            .map(|(c, k)| k * c * w)
            .collect()
    }

    pub fn eval(&self, m: usize, x: f64) -> f64 {
        self.eval_all(x)[m]
    }

    /// `(v_m, v_m'')` at `x` from the derivative rules of Gegenbauer polynomials.
    pub fn eval_with_second_derivative(&self, m: usize, x: f64) -> (f64, f64) {
        let lam = self.n as f64 + 1.0;
        let z = (PI * x).cos();
        let s = (PI * x).sin();
        let c0 = gegenbauer(lam, m, z)[m];
        let c1 = if m >= 1 { 2.0 * lam * gegenbauer(lam + 1.0, m - 1, z)[m - 1] } else { 0.0 };
        let c2 = if m >= 2 { 4.0 * lam * (lam + 1.0) * gegenbauer(lam + 2.0, m - 2, z)[m - 2] } else { 0.0 };
        let p2 = PI * PI;
        let u = c0;
        let du = -PI * s * c1;
        let d2u = p2 * s * s * c2 - p2 * z * c1;
        let k = (self.n + 1) as f64;
        let w = s.powi(self.n as i32 + 1);
        let dw = k * PI * s.powi(self.n as i32) * z;
        let d2w = k * p2 * (self.n as f64 * s.powi(self.n as i32 - 1) * z * z - s.powi(self.n as i32 + 1));
        let c = self.norm_constants[m];
        (c * u * w, c * (d2u * w + 2.0 * du * dw + u * d2w))
    }

    /// Relative residual of `H_T v_m = pi^2 (m + n + 1)^2 v_m` at `x`.
    pub fn ht_residual(&self, m: usize, x: f64) -> f64 {
        let (v, d2) = self.eval_with_second_derivative(m, x);
        let nn = (self.n * (self.n + 1)) as f64;
        let s = (PI * x).sin();
        let lhs = -d2 + nn * PI * PI / (s * s) * v;
        let rhs = self.eigenvalues[m] * v;
        (lhs - rhs).abs() / (d2.abs() + rhs.abs()).max(f64::MIN_POSITIVE)
    }

    /// Midpoint nodes on `(0, 1)`; exact for trigonometric polynomials in
    /// `pi x` of degree below `2 count`.
    fn nodes(count: usize) -> Vec<f64> {
        (0..count).map(|j| (j as f64 + 0.5) / count as f64).collect()
    }

    /// Gram matrix on the quadrature grid (should be the identity).
    pub fn gram(&self) -> DMatrix<f64> {
        let count = self.m_max + self.n + 4;
        let nodes = Self::nodes(count);
        let vals: Vec<Vec<f64>> = nodes.iter().map(|&x| self.eval_all(x)).collect();
        let dim = self.m_max + 1;
        DMatrix::from_fn(dim, dim, |i, j| vals.iter().map(|v| v[i] * v[j]).sum::<f64>() / count as f64)
    }
}

/// Matrix elements of the elliptic correction
/// `V_p = n(n+1)(wp(x) + pi^2/3 - pi^2/sin^2(pi x)) = sum_s p^(2s) V_s`,
/// with `V_s = 8 pi^2 n(n+1) sum_{k | s} k (1 - cos 2 pi k x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationMatrix {
    pub n: usize,
    pub m_max: usize,
    pub k_max: usize,
    /// `<v_m | cos 2 pi k x | v_m'>` for `k = 1..=k_max` (index `k - 1`).
    pub cos_elements: Vec<DMatrix<f64>>,
    /// `V_s / pi^2` for `s = 1..=k_max` (index `s - 1`).
    pub orders: Vec<DMatrix<f64>>,
}

impl PerturbationMatrix {
    /// `<v_m | V_s | v_m'>` (with the `pi^2`).
    pub fn element(&self, m: usize, mp: usize, s: usize) -> f64 {
        if s == 0 || s > self.k_max {
            return 0.0;
        }
        PI * PI * self.orders[s - 1][(m, mp)]
    }
}

pub fn matrix_elements(basis: &TrigBasis, k_max: usize) -> Result<PerturbationMatrix> {
    if k_max == 0 {
        return Err(LameError::Domain("k_max must be at least 1".into()));
    }
    let dim = basis.m_max + 1;
    let count = basis.m_max + basis.n + k_max + 4;
    let nodes = TrigBasis::nodes(count);
    let vals: Vec<Vec<f64>> = nodes.iter().map(|&x| basis.eval_all(x)).collect();
    let w = 1.0 / count as f64;
    let mut cos_elements = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let cs: Vec<f64> = nodes.iter().map(|&x| (2.0 * PI * k as f64 * x).cos()).collect();
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            // parity and band structure: only even offsets up to 2k
            let lo = i.saturating_sub(2 * k);
            for j in (lo..=i).filter(|j| (i - j) % 2 == 0) {
                let v: f64 = vals.iter().zip(&cs).map(|(v, c)| v[i] * v[j] * c).sum::<f64>() * w;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        cos_elements.push(m);
    }
    let nn = (basis.n * (basis.n + 1)) as f64;
    let mut orders = Vec::with_capacity(k_max);
    for s in 1..=k_max {
        let mut v = DMatrix::<f64>::zeros(dim, dim);
        for k in (1..=s).filter(|k| s % k == 0) {
            v += (DMatrix::<f64>::identity(dim, dim) - &cos_elements[k - 1]) * (8.0 * nn * k as f64);
        }
        orders.push(v);
    }
    Ok(PerturbationMatrix { n: basis.n, m_max: basis.m_max, k_max, cos_elements, orders })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    /// Estimated radius of convergence in `p`.
    pub radius: f64,
    /// `"mercer-roberts"` or `"domb-sykes"`.
    pub method: String,
    /// Raw sequence whose limit is `1/R` in `p^2` (Domb-Sykes ratios or
    /// Mercer-Roberts `B_k`).
    pub ratios: Vec<f64>,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSeries {
    pub n: usize,
    pub m: usize,
    /// `E_m^{2k}`, `k = 0..=K`.
    pub coeffs: Vec<f64>,
    /// `E_m^{2k} / pi^2` as a reduced fraction when one with a small
    /// denominator matches to a few ulps.
    pub rational_over_pi2: Vec<Option<(i64, i64)>>,
    pub radius: Option<RadiusEstimate>,
}

impl PerturbationSeries {
    /// Partial sum at `p`.
    pub fn sum(&self, p: f64) -> f64 {
        let l = p * p;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * l + c)
    }

    pub fn sum_complex(&self, p: C) -> C {
        let l = p * p;
        self.coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * l + c)
    }
}

/// Best rational `a/b` with `b <= max_den` by continued fractions, accepted
/// when within `4e-15 |x|`.
pub fn detect_rational(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 4e-15 * x.abs().max(1e-300) {
            return Some((h1 as i64, k1 as i64));
        }
        let frac = r - a;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    if x == 0.0 {
        return Some((0, 1));
    }
    None
}

/// Rayleigh-Schroedinger coefficients of level `m` through `p^(2K)`.
///
/// The correction of order `p^(2s)` couples `v_m` only to `v_(m +- 2k)` with
/// `k <= s`, so a basis with `m_max >= m + 2K` gives the coefficients exactly.
pub fn series_coefficients(mat: &PerturbationMatrix, m: usize, order: usize) -> Result<PerturbationSeries> {
    let n = mat.n;
    if m + 2 * order > mat.m_max {
        return Err(LameError::Domain(format!(
            "basis too small: need m_max >= {} for level {m} to order {order}",
            m + 2 * order
        )));
    }
    if order > mat.k_max {
        return Err(LameError::Domain(format!("matrix only carries orders up to {}", mat.k_max)));
    }
    let dim = mat.m_max + 1;
    let nn = (n * (n + 1)) as f64;
    let eps: Vec<f64> = (0..dim).map(|l| ((l + n + 1) as f64).powi(2) - nn / 3.0).collect();
    let mut psi: Vec<DVector<f64>> = vec![DVector::from_fn(dim, |l, _| if l == m { 1.0 } else { 0.0 })];
    let mut e = vec![eps[m]];
    for k in 1..=order {
        let mut rhs = DVector::<f64>::zeros(dim);
        for s in 1..=k {
            rhs -= &mat.orders[s - 1] * &psi[k - s];
        }
        let ek = -rhs[m];
        e.push(ek);
        for j in 1..k {
            rhs += &psi[k - j] * e[j];
        }
        let mut next = DVector::<f64>::zeros(dim);
        for l in 0..dim {
            if l == m {
                continue;
            }
            let gap = eps[l] - eps[m];
            if gap.abs() < 1e-12 {
                return Err(LameError::Degenerate(format!("levels {l} and {m} coincide")));
            }
            next[l] = rhs[l] / gap;
        }
        psi.push(next);
    }
    let coeffs: Vec<f64> = e.iter().map(|v| v * PI * PI).collect();
    let rational_over_pi2 = e.iter().map(|v| detect_rational(*v, 1_000_000_000_000)).collect();
    let mut series = PerturbationSeries { n, m, coeffs, rational_over_pi2, radius: None };
    if order >= 8 {
        series.radius = Some(radius_estimate(&series)?);
    }
    Ok(series)
}

/// Intercept at `1/k = 0` of the least-squares line through `(1/k, b_k)`.
fn intercept(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return my;
    }
    my - sxy / sxx * mx
}

/// Richardson extrapolation of the last three points of `(1/k, b_k)`,
/// eliminating `1/k` and `1/k^2` corrections.
fn richardson(pts: &[(f64, f64)]) -> f64 {
    let l = pts.len();
    let [(h0, b0), (h1, b1), (h2, b2)] = [pts[l - 3], pts[l - 2], pts[l - 1]];
    // Lagrange interpolation at h = 0
    b0 * h1 * h2 / ((h0 - h1) * (h0 - h2)) + b1 * h0 * h2 / ((h1 - h0) * (h1 - h2)) + b2 * h0 * h1 / ((h2 - h0) * (h2 - h1))
}

/// Radius of convergence in `p` from the coefficient tail.
///
/// Three estimators are tried in order:
/// Domb-Sykes ratios `a_k / a_(k-1)` with Richardson extrapolation when the
/// ratio tail is monotone; Mercer-Roberts
/// `B_k^2 = (a_(k+1) a_(k-1) - a_k^2)/(a_k a_(k-2) - a_(k-1)^2)` when a single
/// complex-conjugate pair dominates (stable `B_k` tail); otherwise the
/// root test `(|a_k| k^(3/2))^(-1/k)`, blockwise medians extrapolated in
/// `1/k`, which is flagged low confidence.
pub fn radius_estimate(series: &PerturbationSeries) -> Result<RadiusEstimate> {
    let a = &series.coeffs;
    let kk = a.len() - 1;
    if kk < 8 {
        return Err(LameError::Domain("radius estimation needs at least 8 orders".into()));
    }
    let ratios: Vec<f64> = (1..=kk).map(|k| a[k] / a[k - 1]).collect();
    let tail = &ratios[ratios.len() / 2..];
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = tail.iter().all(|r| *r > 0.0) && diffs.iter().all(|d| d.signum() == diffs[0].signum());
    if monotone {
        let pts: Vec<(f64, f64)> = (1..=kk).map(|k| (1.0 / k as f64, ratios[k - 1])).collect();
        let inv_r = richardson(&pts);
        return Ok(RadiusEstimate {
            radius: (1.0 / inv_r).sqrt(),
            method: "domb-sykes".into(),
            ratios,
            low_confidence: !(inv_r > 0.0),
        });
    }

    let b: Vec<(f64, f64)> = (3..kk)
        .map(|k| {
            let num = a[k + 1] * a[k - 1] - a[k] * a[k];
            let den = a[k] * a[k - 2] - a[k - 1] * a[k - 1];
            (1.0 / k as f64, (num / den).abs().sqrt())
        })
        .collect();
    let window = &b[b.len() - b.len() / 4..];
    let mean = window.iter().map(|v| v.1).sum::<f64>() / window.len() as f64;
    let spread = window.iter().map(|v| (v.1 - mean).abs()).fold(0.0, f64::max);
    if spread.is_finite() && spread < 0.02 * mean {
        let inv_r = intercept(window);
        return Ok(RadiusEstimate {
            radius: (1.0 / inv_r).sqrt(),
            method: "mercer-roberts".into(),
            ratios: b.iter().map(|v| v.1).collect(),
            low_confidence: !(inv_r > 0.0),
        });
    }

    let roots: Vec<f64> = (1..=kk)
        .map(|k| {
            let kf = k as f64;
            (a[k].abs() * kf.powf(1.5)).powf(-1.0 / kf)
        })
        .collect();
    // blockwise medians of the upper half, extrapolated linearly in 1/k
    let lo = kk / 2;
    let block = ((kk - lo) / 4).max(1);
    let mut pts = Vec::new();
    for start in (lo..kk).step_by(block) {
        let end = (start + block).min(kk);
        let mut vals: Vec<f64> = (start + 1..=end).map(|k| roots[k - 1]).filter(|v| v.is_finite() && *v > 0.0).collect();
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(|x, y| x.total_cmp(y));
        let centre = 0.5 * (start + 1 + end) as f64;
        pts.push((1.0 / centre, vals[vals.len() / 2].ln()));
    }
    let radius = if pts.len() >= 2 { intercept(&pts).exp().sqrt() } else { f64::NAN };
    Ok(RadiusEstimate { radius, method: "root-test".into(), ratios: roots, low_confidence: true })
}

/// Eigenvalues of the truncated matrix of `H` at real `p` in the basis
/// `v_0..v_(size-1)`, using the exact coefficients
/// `c_k = 8 pi^2 k p^(2k) / (1 - p^(2k))`, `k <= k_max`.
pub fn direct_eigenvalues(mat: &PerturbationMatrix, p: f64, size: usize) -> Result<Vec<f64>> {
    if size == 0 || size > mat.m_max + 1 {
        return Err(LameError::Domain(format!("size must be in 1..={}", mat.m_max + 1)));
    }
    if !(p.abs() < 1.0) {
        return Err(LameError::Domain("|p| must be below 1".into()));
    }
    let n = mat.n;
    let nn = (n * (n + 1)) as f64;
    let mut h = DMatrix::<f64>::zeros(size, size);
    for l in 0..size {
        h[(l, l)] = ((l + n + 1) as f64).powi(2) - nn / 3.0;
    }
    for k in 1..=mat.k_max {
        let q = p.powi(2 * k as i32);
        let ck = 8.0 * k as f64 * q / (1.0 - q);
        let ident = DMatrix::<f64>::identity(size, size);
        let cosk = mat.cos_elements[k - 1].view((0, 0), (size, size));
        h += (ident - cosk) * (nn * ck);
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().map(|v| v * PI * PI).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}
