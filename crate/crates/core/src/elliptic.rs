//! Weierstrass elliptic functions for the period lattice `Z + tau Z`.
//!
//! Everything is evaluated through the Jacobi theta function `theta_1` in
//! the nome `p = exp(i pi tau)`:
//!
//! ```text
//! zeta(x)  = 2 eta1 x + pi theta1'(pi x) / theta1(pi x)
//! wp(x)    = -zeta'(x)
//! sigma(x) = exp(eta1 x^2) theta1(pi x) / (pi theta1'(0))
//! ```
//!
//! Arguments are first reduced to the centred cell `{s + t tau : s, t in
//! [-1/2, 1/2)}` so that every series term is bounded by `|p|^(k^2 - 1/4)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LameError, Result};

pub type C = Complex64;

pub(crate) const I: C = C::new(0.0, 1.0);

/// Nome magnitude above which contexts are refused.
pub const MAX_NOME: f64 = 0.95;

/// Default cap on the number of theta-series terms.
pub const DEFAULT_TERMS: usize = 64;

const SERIES_EPS: f64 = 1e-18;

/// Lattice data for periods `(1, tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticContext {
    pub tau: C,
    pub p: C,
    pub truncation_terms: usize,
    pub e1: C,
    pub e2: C,
    pub e3: C,
    pub g2: C,
    pub g3: C,
    pub eta1: C,
    pub eta3: C,
    /// Number of theta-series terms actually summed.
    pub terms_used: usize,
    theta1_prime0: C,
}

/// Which Weierstrass function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeierFn {
    Wp,
    WpPrime,
    Zeta,
    Sigma,
}

/// `x = reduced + m + n tau` with `reduced` in the centred fundamental cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub x: C,
    pub reduced: C,
    pub m: i64,
    pub n: i64,
}

/// All four functions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierValues {
    pub wp: C,
    pub wp_prime: C,
    pub zeta: C,
    pub sigma: C,
}

/// Which of `+alpha`, `-alpha` to return from [`EllipticContext::invert_wp`].
///
/// `Plus` selects the point where `wp'(alpha)` equals the principal square
/// root of `4 xi^3 - g2 xi - g3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignHint {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
struct Theta1 {
    val: C,
    d1: C,
    d2: C,
    d3: C,
}

impl EllipticContext {
    pub fn new(tau: C) -> Result<Self> {
        Self::with_terms(tau, DEFAULT_TERMS)
    }

    /// Build the context for periods `(1, tau)`.
    ///
    /// Fails with [`LameError::Precision`] when the theta series would need
    /// more than `truncation_terms` terms, or when `|p| > 0.95`.
    pub fn with_terms(tau: C, truncation_terms: usize) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(LameError::Domain(format!("Im(tau) must be positive, got {tau}")));
        }
        if truncation_terms < 8 {
            return Err(LameError::Domain(format!(
                "truncation_terms must be at least 8, got {truncation_terms}"
            )));
        }
        let p = (I * PI * tau).exp();
        let q = p.norm();
        let bound = |k: usize| {
            let kf = k as f64;
            (2.0 * kf + 1.0).powi(3) * q.powf(kf * kf - 0.5)
        };
        if q > MAX_NOME {
            return Err(LameError::Precision { achieved: bound(truncation_terms) });
        }
        let mut terms = 2;
        while bound(terms) > SERIES_EPS {
            terms += 1;
            if terms > truncation_terms {
                return Err(LameError::Precision { achieved: bound(truncation_terms) });
            }
        }

        let mut ctx = EllipticContext {
            tau,
            p,
            truncation_terms,
            e1: C::new(0.0, 0.0),
            e2: C::new(0.0, 0.0),
            e3: C::new(0.0, 0.0),
            g2: C::new(0.0, 0.0),
            g3: C::new(0.0, 0.0),
            eta1: C::new(0.0, 0.0),
            eta3: C::new(0.0, 0.0),
            terms_used: terms,
            theta1_prime0: C::new(0.0, 0.0),
        };

        let (th2, th3, th4) = ctx.theta_constants();
        let t0 = ctx.theta1(C::new(0.0, 0.0));
        ctx.theta1_prime0 = t0.d1;
        ctx.eta1 = -PI * PI * t0.d3 / (6.0 * t0.d1);

        let f = PI * PI / 3.0;
        let (a, b) = (th2.powi(4), th4.powi(4));
        ctx.e1 = f * (a + 2.0 * b);
        ctx.e2 = f * (a - b);
        ctx.e3 = -f * (2.0 * a + b);
        ctx.g2 = -4.0 * (ctx.e1 * ctx.e2 + ctx.e2 * ctx.e3 + ctx.e3 * ctx.e1);
        ctx.g3 = 4.0 * ctx.e1 * ctx.e2 * ctx.e3;
        let _ = th3;

        let th = ctx.theta1(PI * tau / 2.0);
        ctx.eta3 = tau * ctx.eta1 + PI * th.d1 / th.val;
        Ok(ctx)
    }

    /// Build a context from the nome `p` (any `0 < |p| <= 0.95`).
    ///
    /// The lattice only depends on `p` up to sign, so the principal
    /// logarithm is used.
    pub fn from_nome(p: C) -> Result<Self> {
        let r = p.norm();
        if !(r > 0.0 && r < 1.0) {
            return Err(LameError::Domain(format!("nome must satisfy 0 < |p| < 1, got {p}")));
        }
        let tau = p.ln() / (I * PI);
        Self::new(tau)
    }

    /// `[omega0, omega1, omega2, omega3] = [0, 1/2, -(tau+1)/2, tau/2]`.
    pub fn half_periods(&self) -> [C; 4] {
        [
            C::new(0.0, 0.0),
            C::new(0.5, 0.0),
            -(self.tau + 1.0) / 2.0,
            self.tau / 2.0,
        ]
    }

    pub fn e(&self) -> [C; 3] {
        [self.e1, self.e2, self.e3]
    }

    /// Residual of `eta1 tau/2 - eta3/2 - pi i/2`.
    pub fn legendre_residual(&self) -> f64 {
        (self.eta1 * self.tau / 2.0 - self.eta3 / 2.0 - I * PI / 2.0).norm()
    }

    /// Quasi-period increment `zeta(x + m + n tau) - zeta(x) = 2 m eta1 + 2 n eta3`.
    pub fn quasi_period(&self, m: i64, n: i64) -> C {
        2.0 * (m as f64) * self.eta1 + 2.0 * (n as f64) * self.eta3
    }

    fn theta_constants(&self) -> (C, C, C) {
        let mut th2 = C::new(0.0, 0.0);
        let mut th3 = C::new(1.0, 0.0);
        let mut th4 = C::new(1.0, 0.0);
        for k in 0..=self.terms_used {
            let kf = k as f64;
            th2 += 2.0 * (I * PI * self.tau * (kf + 0.5).powi(2)).exp();
            if k >= 1 {
                let t = 2.0 * (I * PI * self.tau * kf * kf).exp();
                th3 += t;
                th4 += if k % 2 == 0 { t } else { -t };
            }
        }
        (th2, th3, th4)
    }

    fn theta1(&self, v: C) -> Theta1 {
        let mut out = Theta1 {
            val: C::new(0.0, 0.0),
            d1: C::new(0.0, 0.0),
            d2: C::new(0.0, 0.0),
            d3: C::new(0.0, 0.0),
        };
        for k in 0..=self.terms_used {
            let kf = k as f64;
            let w = 2.0 * kf + 1.0;
            let base = I * PI * self.tau * (kf + 0.5).powi(2);
            let ep = (base + I * w * v).exp();
            let em = (base - I * w * v).exp();
            let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
            let s = (ep - em) / (2.0 * I);
            let c = (ep + em) / 2.0;
            out.val += sign * s;
            out.d1 += sign * w * c;
            out.d2 -= sign * w * w * s;
            out.d3 -= sign * w * w * w * c;
        }
        out
    }

    /// Reduce `x` to the centred cell `s, t in [-1/2, 1/2)`.
    pub fn reduce(&self, x: C) -> LatticePoint {
        let (s, t) = self.cell_coords(x);
        let n = (t + 0.5).floor();
        let m = (s + 0.5).floor();
        let reduced = x - m - n * self.tau;
        LatticePoint { x, reduced, m: m as i64, n: n as i64 }
    }

    /// Reduce `x` to the cell `s, t in [0, 1)`.
    pub fn reduce_to_cell(&self, x: C) -> LatticePoint {
        let (s, t) = self.cell_coords(x);
        let n = t.floor();
        let m = s.floor();
        let mut reduced = x - m - n * self.tau;
        let (rs, rt) = self.cell_coords(reduced);
        // guard against rounding pushing a coordinate to exactly 1
        let (mut m, mut n) = (m as i64, n as i64);
        if rs >= 1.0 {
            reduced -= 1.0;
            m += 1;
        }
        if rt >= 1.0 {
            reduced -= self.tau;
            n += 1;
        }
        LatticePoint { x, reduced, m, n }
    }

    /// Real coordinates `(s, t)` with `x = s + t tau`.
    pub fn cell_coords(&self, x: C) -> (f64, f64) {
        let t = x.im / self.tau.im;
        let s = x.re - t * self.tau.re;
        (s, t)
    }

    /// Nearest lattice vector `m + n tau` to `d`, and the distance to it.
    pub fn nearest_lattice(&self, d: C) -> (i64, i64, f64) {
        let (s, t) = self.cell_coords(d);
        let mut best = (0, 0, f64::INFINITY);
        for dn in -1..=1 {
            for dm in -1..=1 {
                let n = t.round() as i64 + dn;
                let m = (s.round() as i64) + dm;
                let r = (d - (m as f64) - (n as f64) * self.tau).norm();
                if r < best.2 {
                    best = (m, n, r);
                }
            }
        }
        best
    }

    /// Distance from `x` to the nearest lattice point.
    pub fn lattice_distance(&self, x: C) -> f64 {
        self.nearest_lattice(x).2
    }

    pub fn eval_all(&self, x: C) -> Result<WeierValues> {
        let lp = self.reduce(x);
        let r = lp.reduced;
        if r.norm() < 1e-15 {
            return Err(LameError::Pole { point: x - r });
        }
        let mut vals = self.eval_reduced(r);
        let shift = C::new(lp.m as f64, 0.0) + (lp.n as f64) * self.tau;
        let eta = self.quasi_period(lp.m, lp.n);
        vals.zeta += eta;
        let parity = (lp.m + lp.n + lp.m * lp.n).rem_euclid(2);
        let sgn = if parity == 0 { 1.0 } else { -1.0 };
        vals.sigma *= sgn * (eta * (r + shift / 2.0)).exp();
        Ok(vals)
    }

    fn eval_reduced(&self, r: C) -> WeierValues {
        let th = self.theta1(PI * r);
        let l1 = th.d1 / th.val;
        let l2 = th.d2 / th.val;
        let l3 = th.d3 / th.val;
        let zeta = 2.0 * self.eta1 * r + PI * l1;
        let wp = -2.0 * self.eta1 - PI * PI * (l2 - l1 * l1);
        let wp_prime = -PI.powi(3) * (l3 - 3.0 * l1 * l2 + 2.0 * l1 * l1 * l1);
        let sigma = (self.eta1 * r * r).exp() * th.val / (PI * self.theta1_prime0);
        WeierValues { wp, wp_prime, zeta, sigma }
    }

    /// Evaluate one Weierstrass function.  `sigma` is entire; the others
    /// fail with [`LameError::Pole`] on the lattice.
    pub fn weier_eval(&self, x: C, which: WeierFn) -> Result<C> {
        if which == WeierFn::Sigma {
            let lp = self.reduce(x);
            if lp.reduced.norm() < 1e-15 {
                // sigma vanishes on the lattice
                return Ok(C::new(0.0, 0.0));
            }
        }
        let v = self.eval_all(x)?;
        Ok(match which {
            WeierFn::Wp => v.wp,
            WeierFn::WpPrime => v.wp_prime,
            WeierFn::Zeta => v.zeta,
            WeierFn::Sigma => v.sigma,
        })
    }

    pub fn wp(&self, x: C) -> Result<C> {
        self.weier_eval(x, WeierFn::Wp)
    }

    pub fn wp_prime(&self, x: C) -> Result<C> {
        self.weier_eval(x, WeierFn::WpPrime)
    }

    pub fn zeta(&self, x: C) -> Result<C> {
        self.weier_eval(x, WeierFn::Zeta)
    }

    pub fn sigma(&self, x: C) -> Result<C> {
        self.weier_eval(x, WeierFn::Sigma)
    }

    /// `4 xi^3 - g2 xi - g3`.
    pub fn cubic(&self, xi: C) -> C {
        4.0 * xi * xi * xi - self.g2 * xi - self.g3
    }

    /// Solve `wp(alpha) = xi`, returning `(alpha, zeta(alpha))` with `alpha`
    /// in the cell `s, t in [0, 1)`.
    pub fn invert_wp(&self, xi: C, sign: SignHint) -> Result<(C, C)> {
        let alpha = self.solve_wp(xi)?;
        let target = self.cubic(xi).sqrt();
        let d = self.wp_prime(alpha)?;
        let flip = match sign {
            SignHint::Plus => (d - target).norm() > (d + target).norm(),
            SignHint::Minus => (d + target).norm() > (d - target).norm(),
        };
        let alpha = if flip { -alpha } else { alpha };
        let alpha = self.reduce_to_cell(alpha).reduced;
        let z = self.zeta(alpha)?;
        Ok((alpha, z))
    }

    /// Solve `wp(alpha) = xi` and pick the root whose `wp'` is closest to
    /// `derivative`.
    pub fn invert_wp_matching(&self, xi: C, derivative: C) -> Result<C> {
        let alpha = self.solve_wp(xi)?;
        let d = self.wp_prime(alpha)?;
        let alpha = if (d - derivative).norm() <= (d + derivative).norm() { alpha } else { -alpha };
        Ok(self.reduce_to_cell(alpha).reduced)
    }

    /// Any solution of `wp(alpha) = xi` (Newton from the best of several seeds).
    pub fn solve_wp(&self, xi: C) -> Result<C> {
        let scale = 1.0 + xi.norm();
        let mut seeds: Vec<C> = Vec::new();
        if xi.norm() > 1e-300 {
            let s = C::new(1.0, 0.0) / xi.sqrt();
            if s.norm() < 0.25 * self.tau.norm().min(1.0) {
                seeds.push(s);
            }
        }
        let half = self.half_periods();
        for (k, ek) in self.e().iter().enumerate() {
            let w = half[k + 1];
            let curv = 6.0 * ek * ek - self.g2 / 2.0;
            if curv.norm() > 1e-12 {
                let h = (2.0 * (xi - ek) / curv).sqrt();
                seeds.push(w + h);
            } else {
                seeds.push(w);
            }
        }
        let grid = 12;
        let mut scored: Vec<(f64, C)> = Vec::with_capacity(grid * grid);
        for i in 0..grid {
            for j in 0..grid {
                let s = (i as f64 + 0.5) / grid as f64 - 0.5;
                let t = (j as f64 + 0.5) / grid as f64 - 0.5;
                let z = s + t * self.tau;
                if let Ok(v) = self.wp(z) {
                    scored.push(((v - xi).norm(), z));
                }
            }
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        seeds.extend(scored.iter().take(4).map(|s| s.1));

        let mut best = (f64::INFINITY, C::new(0.0, 0.0));
        for seed in seeds {
            if let Some((res, z)) = self.newton_wp(xi, seed) {
                if res < best.0 {
                    best = (res, z);
                }
                if res <= 1e-14 * scale {
                    break;
                }
            }
        }
        if best.0 > 1e-10 * scale {
            return Err(LameError::NoConvergence {
                what: format!("inversion of wp at {xi}"),
                residual: best.0,
            });
        }
        Ok(best.1)
    }

    fn newton_wp(&self, xi: C, seed: C) -> Option<(f64, C)> {
        let max_step = 0.2 * self.tau.norm().min(1.0);
        let mut z = seed;
        let mut best = (f64::INFINITY, z);
        for _ in 0..80 {
            let v = self.eval_all(z).ok()?;
            let f = v.wp - xi;
            let res = f.norm();
            if res < best.0 {
                best = (res, z);
            }
            if res <= 1e-15 * (1.0 + xi.norm()) {
                break;
            }
            if v.wp_prime.norm() < 1e-300 {
                break;
            }
            let mut step = f / v.wp_prime;
            if step.norm() > max_step {
                step *= max_step / step.norm();
            }
            z -= step;
            if step.norm() < 1e-16 * (1.0 + z.norm()) {
                let v = self.eval_all(z).ok()?;
                let res = (v.wp - xi).norm();
                if res < best.0 {
                    best = (res, z);
                }
                break;
            }
        }
        Some(best)
    }

    /// Coefficients `c_k(p)`, `k = 1..=k_max`, of
    /// `wp(x) = -pi^2/3 + pi^2/sin^2(pi x) + sum_k c_k (1 - cos 2 pi k x)`.
    pub fn wp_trig_expansion(&self, k_max: usize) -> Result<Vec<C>> {
        if k_max == 0 {
            return Err(LameError::Domain("k_max must be at least 1".into()));
        }
        Ok((1..=k_max)
            .map(|k| {
                let q2k = self.p.powu(2 * k as u32);
                8.0 * PI * PI * (k as f64) * q2k / (1.0 - q2k)
            })
            .collect())
    }
}

/// Evaluate a truncated trigonometric expansion produced by
/// [`EllipticContext::wp_trig_expansion`].
pub fn eval_trig_expansion(coeffs: &[C], x: C) -> C {
    let s = (PI * x).sin();
    let mut v = C::new(-PI * PI / 3.0, 0.0) + PI * PI / (s * s);
    for (k, ck) in coeffs.iter().enumerate() {
        let kf = (k + 1) as f64;
        v += ck * (1.0 - (2.0 * PI * kf * x).cos());
    }
    v
}

/// Laurent coefficients `c_k` of `wp(x) = x^-2 + sum_{k>=1} c_k x^(2k)`.
pub fn wp_laurent(g2: C, g3: C, count: usize) -> Vec<C> {
    let mut c = vec![C::new(0.0, 0.0); count + 1];
    if count >= 1 {
        c[1] = g2 / 20.0;
    }
    if count >= 2 {
        c[2] = g3 / 28.0;
    }
    for k in 3..=count {
        let mut s = C::new(0.0, 0.0);
        for m in 1..=(k - 2) {
            s += c[m] * c[k - 1 - m];
        }
        c[k] = 3.0 * s / (((2 * k + 3) * (k - 2)) as f64);
    }
    c.remove(0);
    c
}
