//! The commuting operator
//! `A = sum_j { a~_j(x + tau/2) d/dx - a~_j'(x + tau/2)/2 } H^(n-j)` of the
//! shifted Lame operator `H = -d^2/dx^2 + n(n+1) wp(x + tau/2)`, on a periodic
//! grid with Fourier differentiation, and the band structure for imaginary `tau`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, C};
use crate::error::{LameError, Result};
use crate::monodromy::classify_energy;
use crate::spectral::{compute_q, compute_xi, eval_wp_poly, SpectralCurve, XiData};

/// Uniform periodic grid on `[0, period)` carrying the coefficient
/// functions of `A` and the shifted potential.
pub struct Grid {
    pub size: usize,
    pub period: f64,
    n: usize,
    potential: Vec<C>,
    /// `(a~_j, a~_j')` sampled on the grid.
    coeffs: Vec<(Vec<C>, Vec<C>)>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

fn require_imaginary_tau(ctx: &EllipticContext) -> Result<()> {
    if ctx.tau.re.abs() > 1e-12 {
        return Err(LameError::Domain(format!("tau must be purely imaginary, got {}", ctx.tau)));
    }
    Ok(())
}

impl Grid {
    /// `period` must be a positive integer (the potential has period 1).
    pub fn new(xi: &XiData, size: usize, period: f64) -> Result<Self> {
        let ctx = &xi.ctx;
        require_imaginary_tau(ctx)?;
        if size < 8 || !size.is_multiple_of(2) {
            return Err(LameError::Domain("grid size must be even and at least 8".into()));
        }
        if period < 1.0 || period.fract() != 0.0 {
            return Err(LameError::Domain("period must be a positive integer".into()));
        }
        let n = xi.n;
        let nn = (n * (n + 1)) as f64;
        let shift = ctx.tau / 2.0;
        let mut potential = Vec::with_capacity(size);
        let mut wps = Vec::with_capacity(size);
        for k in 0..size {
            let x = C::new(period * k as f64 / size as f64, 0.0) + shift;
            let v = ctx.eval_all(x)?;
            potential.push(nn * v.wp);
            wps.push((v.wp, v.wp_prime));
        }
        let coeffs = xi
            .a_tilde
            .iter()
            .map(|poly| {
                let d: Vec<C> = poly.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
                let val = wps.iter().map(|(w, _)| eval_wp_poly(poly, *w)).collect();
                let der = wps.iter().map(|(w, wpr)| wpr * eval_wp_poly(&d, *w)).collect();
                (val, der)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let grid = Grid {
            size,
            period,
            n,
            potential,
            coeffs,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        };
        grid.check_resolved(&grid.potential)?;
        Ok(grid)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|k| self.period * k as f64 / self.size as f64).collect()
    }

    /// Sample `f` on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> C) -> Vec<C> {
        self.points().into_iter().map(f).collect()
    }

    fn wavenumber(&self, k: usize) -> f64 {
        let s = if k <= self.size / 2 { k as f64 } else { k as f64 - self.size as f64 };
        2.0 * PI * s / self.period
    }

    fn spectrum(&self, f: &[C]) -> Vec<C> {
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    /// Largest Fourier coefficient in the upper quarter of the spectrum,
    /// relative to the largest overall.
    pub fn spectral_tail(&self, f: &[C]) -> f64 {
        let s = self.spectrum(f);
        let max = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let q = self.size / 4;
        let tail = s
            .iter()
            .enumerate()
            .filter(|(k, _)| *k > q && *k < self.size - q)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        tail / max
    }

    fn check_resolved(&self, f: &[C]) -> Result<()> {
        let tail = self.spectral_tail(f);
        if tail > 1e-11 {
            return Err(LameError::Resolution { tail });
        }
        Ok(())
    }

    /// `(d/dx)^order f`.  Modes at the roundoff floor are dropped first;
    /// repeated differentiation would otherwise amplify them like `k^order`.
    pub fn derivative(&self, f: &[C], order: u32) -> Vec<C> {
        let mut s = self.spectrum(f);
        let nyq = self.size / 2;
        let floor = NOISE_FLOOR * s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (k, v) in s.iter_mut().enumerate() {
            if v.norm() <= floor || (k == nyq && order % 2 == 1) {
                *v = C::new(0.0, 0.0);
                continue;
            }
            *v *= C::new(0.0, self.wavenumber(k)).powu(order);
        }
        self.inv.process(&mut s);
        let scale = 1.0 / self.size as f64;
        s.iter().map(|v| v * scale).collect()
    }

    pub fn apply_h(&self, f: &[C]) -> Vec<C> {
        let d2 = self.derivative(f, 2);
        d2.iter().zip(f).zip(&self.potential).map(|((d, v), p)| -d + p * v).collect()
    }

    /// `A f`; fails with a resolution error if `f` is not resolved.
    pub fn apply_a(&self, f: &[C]) -> Result<Vec<C>> {
        self.check_resolved(f)?;
        Ok(self.apply_a_unchecked(f))
    }

    fn apply_a_unchecked(&self, f: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.size];
        let mut hf = f.to_vec();
        // walk j = n, n-1, ..., 0 so that hf = H^(n-j) f
        for j in (0..=self.n).rev() {
            let (val, der) = &self.coeffs[j];
            let d = self.derivative(&hf, 1);
            for k in 0..self.size {
                out[k] += val[k] * d[k] - 0.5 * der[k] * hf[k];
            }
            if j > 0 {
                hf = self.apply_h(&hf);
            }
        }
        out
    }

    /// `Q(H) f` by Horner's rule.
    pub fn apply_q(&self, curve: &SpectralCurve, f: &[C]) -> Vec<C> {
        let c = &curve.q_poly.coeffs;
        let mut acc = vec![C::new(0.0, 0.0); self.size];
        for q in c.iter().rev() {
            let h = self.apply_h(&acc);
            acc = h.iter().zip(f).map(|(a, v)| a + q * v).collect();
        }
        acc
    }
}

fn max_norm(f: &[C]) -> f64 {
    f.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `max_f |(A H - H A) f| / |A H f|` over the test set.
pub fn commutator_check(grid: &Grid, tests: &[Vec<C>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in tests {
        grid.check_resolved(f)?;
        let ah = grid.apply_a_unchecked(&grid.apply_h(f));
        let ha = grid.apply_h(&grid.apply_a_unchecked(f));
        let r: Vec<C> = ah.iter().zip(&ha).map(|(a, b)| a - b).collect();
        worst = worst.max(max_norm(&r) / max_norm(&ah).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// `max_f |(A^2 + Q(H)) f| / max(|A^2 f|, |Q(H) f|)` over the test set.
pub fn algrel_check(grid: &Grid, curve: &SpectralCurve, tests: &[Vec<C>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in tests {
        grid.check_resolved(f)?;
        let a2 = grid.apply_a_unchecked(&grid.apply_a_unchecked(f));
        let q = grid.apply_q(curve, f);
        let r: Vec<C> = a2.iter().zip(&q).map(|(a, b)| a + b).collect();
        worst = worst.max(max_norm(&r) / max_norm(&a2).max(max_norm(&q)).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Sample `sum_k (a_k cos 2 pi k x + b_k sin 2 pi k x)`.
pub fn trig_polynomial(grid: &Grid, cos: &[f64], sin: &[f64]) -> Vec<C> {
    grid.sample(|x| {
        let mut v = 0.0;
        for (k, a) in cos.iter().enumerate() {
            v += a * (2.0 * PI * k as f64 * x).cos();
        }
        for (k, b) in sin.iter().enumerate() {
            v += b * (2.0 * PI * k as f64 * x).sin();
        }
        C::new(v, 0.0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub n: usize,
    pub tau: C,
    /// `E_0 < E_1 < ... < E_2n`.
    pub edges: Vec<f64>,
    /// `(-inf, E_0), (E_1, E_2), ...`; the first lower end is `-inf`.
    pub gaps: Vec<(f64, f64)>,
    /// Interior samples where the boundedness of solutions disagreed with
    /// the sign of `Q`.
    pub mismatches: Vec<f64>,
}

impl BandStructure {
    /// Bands `[E_0, E_1], [E_2, E_3], ..., [E_2n, +inf)`.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.edges.chunks(2).map(|c| (c[0], *c.get(1).unwrap_or(&f64::INFINITY))).collect();
        if out.is_empty() {
            out.push((f64::NEG_INFINITY, f64::INFINITY));
        }
        out
    }

    /// `count` interior points of each band and gap; the unbounded ends
    /// are truncated at one edge spacing beyond the extreme edges.
    pub fn interior_samples(&self, count: usize) -> Vec<(f64, bool)> {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        let span = (hi - lo).max(1.0);
        let mut cuts = vec![lo - span];
        cuts.extend(&self.edges);
        cuts.push(hi + span);
        let mut out = Vec::new();
        for (i, w) in cuts.windows(2).enumerate() {
            let is_band = i % 2 == 1;
            for k in 1..=count {
                out.push((w[0] + (w[1] - w[0]) * k as f64 / (count + 1) as f64, is_band));
            }
        }
        out
    }
}

/// Band edges from the real roots of `Q`, checked against the
/// boundedness of solutions at `samples` points inside every band and gap.
pub fn band_scan(ctx: &EllipticContext, n: usize, samples: usize) -> Result<BandStructure> {
    require_imaginary_tau(ctx)?;
    let xi = compute_xi(ctx, n)?;
    let curve = compute_q(&xi)?;
    let scale = curve.scale();
    let mut edges = Vec::with_capacity(curve.roots.len());
    for r in &curve.roots {
        if r.im.abs() > 1e-8 * scale {
            return Err(LameError::Consistency(format!("unexpected complex root {r} of Q for imaginary tau")));
        }
        edges.push(r.re);
    }
    edges.sort_by(|a, b| a.total_cmp(b));
    let mut gaps = vec![(f64::NEG_INFINITY, edges[0])];
    for k in 0..n {
        gaps.push((edges[2 * k + 1], edges[2 * k + 2]));
    }
    let mut bs = BandStructure { n, tau: ctx.tau, edges, gaps, mismatches: vec![] };
    for (e, is_band) in bs.interior_samples(samples) {
        let q = curve.q(C::new(e, 0.0)).re;
        let cls = classify_energy(&xi, &curve, e)?;
        if (q > 0.0) != is_band || cls.bounded_all_solutions != is_band {
            bs.mismatches.push(e);
        }
    }
    Ok(bs)
}
