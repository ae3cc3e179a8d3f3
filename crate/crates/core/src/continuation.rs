//! Analytic continuation of the `n = 1` eigenvalues `E_m(p)` in the nome.
//!
//! Along a path in `p` the eigenvalue is `E = -wp(t0)` where `t0` solves
//! `F(t0) = -zeta(t0) + 2 eta1 t0 - m' pi i = 0` for an integer `m'` fixed
//! by continuity from `p -> 0`, where `t0 -> i artanh(1/m') / pi` and
//! `E -> pi^2 (m'^2 - 2/3)`, i.e. `m' = m + 2`.
//! Branch points are where two roots collide: `F = 0` and
//! `dF/dt0 = wp(t0) + 2 eta1 = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, C, MAX_NOME};
use crate::error::{LameError, Result};
use crate::perturbation::{build_basis, matrix_elements, series_coefficients};

const I: C = C::new(0.0, 1.0);

/// Relative Newton tolerance on `|F|`.
const NEWTON_TOL: f64 = 1e-12;

/// Accepted samples must satisfy the conditions to this residual.
pub const TRACK_RESIDUAL: f64 = 1e-10;

/// One point on a continuation track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub p: C,
    pub t0: C,
    #[serde(rename = "E")]
    pub e: C,
}

/// `(t0, E)` for level `m` at nome `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub m: usize,
    pub m_prime: i64,
    pub p: C,
    pub t0: C,
    #[serde(rename = "E")]
    pub e: C,
    /// Perturbation-series value of `E_m(p)`.
    pub series_e: C,
}

/// `m'` for level `m`.
pub fn quantum_number(m: usize) -> i64 {
    m as i64 + 2
}

/// `t0` in the trigonometric limit.
pub fn trigonometric_t0(m_prime: i64) -> C {
    I * (1.0 / m_prime as f64).atanh() / PI
}

/// `(F, dF/dt0, E)` at `t`.
pub fn condition(ctx: &EllipticContext, t: C, m_prime: i64) -> Result<(C, C, C)> {
    let v = ctx.eval_all(t)?;
    let f = -v.zeta + 2.0 * ctx.eta1 * t - (m_prime as f64) * PI * I;
    Ok((f, v.wp + 2.0 * ctx.eta1, -v.wp))
}

/// Newton on `F(t0) = 0`; returns `(t0, iterations, |F|)`.
///
/// Converged when `|F|` is below `NEWTON_TOL` relative to the size of the
/// terms of `F`, or when the Newton step drops to round-off.
pub fn newton_t0(ctx: &EllipticContext, guess: C, m_prime: i64, max_iter: usize) -> Result<(C, usize, f64)> {
    let mut t = guess;
    let mut best = f64::INFINITY;
    for it in 0..=max_iter {
        let v = ctx.eval_all(t)?;
        let f = -v.zeta + 2.0 * ctx.eta1 * t - (m_prime as f64) * PI * I;
        let df = v.wp + 2.0 * ctx.eta1;
        let scale = 1.0 + v.zeta.norm() + (2.0 * ctx.eta1 * t).norm() + (m_prime as f64).abs() * PI;
        let r = f.norm();
        best = best.min(r);
        if r < NEWTON_TOL * scale {
            // one more step costs a single evaluation and lands at round-off
            let polished = t - f / df;
            if let Ok((fp, _, _)) = condition(ctx, polished, m_prime) {
                if fp.norm() < r {
                    return Ok((polished, it, fp.norm()));
                }
            }
            return Ok((t, it, r));
        }
        if it == max_iter || df.norm() < 1e-300 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        t -= step;
        if step.norm() < 1e-13 * (1.0 + t.norm()) {
            let (f, _, _) = condition(ctx, t, m_prime)?;
            return Ok((t, it + 1, f.norm()));
        }
    }
    Err(LameError::NoConvergence { what: "continuation condition".into(), residual: best })
}

fn context(p: C) -> Result<EllipticContext> {
    if p.norm() > MAX_NOME {
        return Err(LameError::Domain(format!("|p| = {} exceeds {MAX_NOME}", p.norm())));
    }
    EllipticContext::from_nome(p)
}

/// Outcome of following a root along a parametrised path.
struct Followed {
    t0: C,
    samples: Vec<TrackSample>,
    residuals: Vec<f64>,
}

/// Follow the root of `F` along `path(s)`, `s in [0, 1]`, starting from a
/// converged `t0` at `path(0)`.
fn follow(path: &dyn Fn(f64) -> C, t_start: C, m_prime: i64, steps: usize, record: bool) -> Result<Followed> {
    let h_max = 1.0 / steps.max(1) as f64;
    let mut h = h_max;
    let mut s = 0.0;
    let mut t = t_start;
    let mut prev: Option<(f64, C)> = None;
    let mut out = Followed { t0: t, samples: Vec::new(), residuals: Vec::new() };
    if record {
        let ctx = context(path(0.0))?;
        let (f, _, e) = condition(&ctx, t, m_prime)?;
        out.samples.push(TrackSample { p: path(0.0), t0: t, e });
        out.residuals.push(f.norm());
    }
    while s < 1.0 {
        let s_next = (s + h).min(1.0);
        let pred = match prev {
            Some((sp, tp)) => t + (t - tp) * ((s_next - s) / (s - sp)),
            None => t,
        };
        let p_next = path(s_next);
        let attempt = context(p_next).and_then(|ctx| {
            let (tn, iters, res) = newton_t0(&ctx, pred, m_prime, 8)?;
            let (_, _, e) = condition(&ctx, tn, m_prime)?;
            Ok((tn, iters, res, e))
        });
        let accepted = match &attempt {
            Ok((tn, iters, _, _)) => {
                let scale = (pred - t).norm();
                *iters <= 4 && (prev.is_none() && (tn - t).norm() < 0.05 || (tn - pred).norm() <= 0.3 * scale + 1e-9)
            }
            Err(_) => false,
        };
        if accepted {
            let (tn, iters, res, e) = attempt.unwrap();
            prev = Some((s, t));
            s = s_next;
            t = tn;
            if record {
                out.samples.push(TrackSample { p: p_next, t0: tn, e });
                out.residuals.push(res);
            }
            if iters <= 2 {
                h = (h * 1.5).min(h_max);
            }
        } else {
            h *= 0.5;
            if h < 1e-10 {
                return Err(LameError::BranchCollision { at: path(s) });
            }
        }
    }
    out.t0 = t;
    Ok(out)
}

fn segment(a: C, b: C) -> impl Fn(f64) -> C {
    move |s| a + (b - a) * s
}

/// Root for level `m` at `p` by continuation from the trigonometric limit
/// along the ray through `p`, without any series check.
pub fn root_at(p: C, m: usize) -> Result<(C, C)> {
    let mp = quantum_number(m);
    let start = if p.norm() > 0.02 { p * (0.02 / p.norm()) } else { p };
    let ctx = context(start)?;
    let (t, _, _) = newton_t0(&ctx, trigonometric_t0(mp), mp, 30)?;
    let t = if start == p { t } else { follow(&segment(start, p), t, mp, 40, false)?.t0 };
    let (_, _, e) = condition(&context(p)?, t, mp)?;
    Ok((t, e))
}

/// Seed level `m` at small `p` and confirm it against the perturbation series.
pub fn seed_eigenvalue(p: C, m: usize) -> Result<Seed> {
    if !(p.norm() > 0.0 && p.norm() <= 0.3) {
        return Err(LameError::Domain(format!("seeding needs 0 < |p| <= 0.3, got {p}")));
    }
    let (t0, e) = root_at(p, m)?;
    let order = 30;
    let basis = build_basis(1, m + 2 * order)?;
    let mat = matrix_elements(&basis, order)?;
    let series = series_coefficients(&mat, m, order)?;
    let series_e = series.sum_complex(p);
    if (e - series_e).norm() > 1e-6 * PI * PI {
        return Err(LameError::Labeling(format!(
            "level {m} at p = {p}: condition gives {e}, series gives {series_e}"
        )));
    }
    Ok(Seed { m, m_prime: quantum_number(m), p, t0, e, series_e })
}

/// The cycle `C_a`: from `Re a` vertically up to `a - i r`, once (or
/// `turns` times) around `a` on the circle of radius `r`, and back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub a: C,
    pub steps: usize,
    pub radius: f64,
    pub turns: u32,
    pub clockwise: bool,
}

impl CycleSpec {
    pub fn new(a: C) -> Self {
        CycleSpec { a, steps: 200, radius: 0.02, turns: 1, clockwise: false }
    }

    /// Radius `min(0.02, gap / 3)` given other branch points to avoid.
    pub fn with_neighbours(a: C, others: &[C]) -> Self {
        let gap = others.iter().filter(|b| (**b - a).norm() > 1e-9).map(|b| (b - a).norm()).fold(f64::INFINITY, f64::min);
        CycleSpec { radius: 0.02f64.min(gap / 3.0), ..Self::new(a) }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.a;
        if !(a.re >= 0.01 && a.im >= 0.0) {
            return Err(LameError::Domain(format!("cycle centre must have Re a >= 0.01, Im a >= 0, got {a}")));
        }
        if !(self.radius > 0.0) || a.im < self.radius {
            return Err(LameError::Domain(format!("loop radius {} does not fit below {a}", self.radius)));
        }
        if a.norm() + self.radius >= MAX_NOME {
            return Err(LameError::Domain(format!("cycle around {a} leaves |p| < {MAX_NOME}")));
        }
        if self.steps == 0 || self.turns == 0 {
            return Err(LameError::Domain("steps and turns must be positive".into()));
        }
        Ok(())
    }

    pub fn base(&self) -> C {
        C::new(self.a.re, 0.0)
    }

    fn bottom(&self) -> C {
        self.a - I * self.radius
    }

    fn circle(&self) -> impl Fn(f64) -> C + '_ {
        let dir = if self.clockwise { -1.0 } else { 1.0 };
        let turns = self.turns as f64;
        move |s| self.a - I * self.radius * (I * dir * 2.0 * PI * turns * s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    pub spec: CycleSpec,
    pub label: usize,
    pub m_prime: i64,
    pub track: Vec<TrackSample>,
    pub final_label: usize,
    pub residual_history: Vec<f64>,
}

impl ContinuationPath {
    pub fn max_residual(&self) -> f64 {
        self.residual_history.iter().copied().fold(0.0, f64::max)
    }
}

/// Real-axis energies of the levels `0..=max_label` of one parity at `p`.
fn reference_energies(p: C, parity: usize, max_label: usize) -> Result<Vec<(usize, C)>> {
    (parity..=max_label).step_by(2).map(|m| root_at(p, m).map(|(_, e)| (m, e))).collect()
}

fn identify(e: C, refs: &[(usize, C)]) -> Result<usize> {
    let (m, d) = refs
        .iter()
        .map(|(m, r)| (*m, (e - r).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| LameError::Labeling("no reference levels".into()))?;
    if d > 1e-6 * (1.0 + e.norm()) {
        return Err(LameError::Labeling(format!("returned energy {e} matches no level (closest E_{m}, distance {d:.3e})")));
    }
    Ok(m)
}

fn track_with_refs(spec: &CycleSpec, label: usize, refs: &[(usize, C)]) -> Result<ContinuationPath> {
    spec.validate()?;
    let mp = quantum_number(label);
    let base = spec.base();
    let (t_base, _) = root_at(base, label)?;
    let legs: [(Box<dyn Fn(f64) -> C + '_>, usize); 3] = [
        (Box::new(segment(base, spec.bottom())), spec.steps / 4 + 1),
        (Box::new(spec.circle()), spec.steps * spec.turns as usize),
        (Box::new(segment(spec.bottom(), base)), spec.steps / 4 + 1),
    ];
    let mut t = t_base;
    let mut track = Vec::new();
    let mut residuals = Vec::new();
    for (i, (leg, steps)) in legs.iter().enumerate() {
        let f = follow(leg.as_ref(), t, mp, *steps, true)?;
        let skip = if i == 0 { 0 } else { 1 };
        track.extend_from_slice(&f.samples[skip..]);
        residuals.extend_from_slice(&f.residuals[skip..]);
        t = f.t0;
    }
    let e_end = track.last().map(|s| s.e).unwrap_or_default();
    let final_label = identify(e_end, refs)?;
    Ok(ContinuationPath { spec: spec.clone(), label, m_prime: mp, track, final_label, residual_history: residuals })
}

/// Continue `E_label` once around the cycle and identify the returned level.
pub fn track_cycle(spec: &CycleSpec, label: usize) -> Result<ContinuationPath> {
    spec.validate()?;
    let refs = reference_energies(spec.base(), label % 2, label + 8)?;
    track_with_refs(spec, label, &refs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub a: C,
    pub labels: Vec<usize>,
    pub images: Vec<usize>,
    pub paths: Vec<ContinuationPath>,
}

impl PermutationReport {
    pub fn is_bijection(&self) -> bool {
        let mut sorted = self.images.clone();
        sorted.sort_unstable();
        let mut labels = self.labels.clone();
        labels.sort_unstable();
        sorted == labels
    }

    /// `"0<->2, 4 fixed, 6 fixed"`.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        let mut seen = vec![false; self.labels.len()];
        for (i, (&l, &img)) in self.labels.iter().zip(&self.images).enumerate() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            if l == img {
                parts.push(format!("{l} fixed"));
                continue;
            }
            let mut cycle = vec![l];
            let mut cur = img;
            while cur != l {
                cycle.push(cur);
                match self.labels.iter().position(|&x| x == cur) {
                    Some(j) => {
                        seen[j] = true;
                        cur = self.images[j];
                    }
                    None => break,
                }
            }
            if cycle.len() == 2 {
                parts.push(format!("{}<->{}", cycle[0], cycle[1]));
            } else {
                parts.push(cycle.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("->") + &format!("->{l}"));
            }
        }
        parts.join(", ")
    }
}

/// Track every label around the cycle.
pub fn permutation(spec: &CycleSpec, labels: &[usize]) -> Result<PermutationReport> {
    spec.validate()?;
    if labels.is_empty() {
        return Err(LameError::Domain("no labels given".into()));
    }
    let max = labels.iter().copied().max().unwrap_or(0) + 8;
    let even = reference_energies(spec.base(), 0, max)?;
    let odd = reference_energies(spec.base(), 1, max)?;
    let paths = labels
        .iter()
        .map(|&l| track_with_refs(spec, l, if l % 2 == 0 { &even } else { &odd }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PermutationReport { a: spec.a, labels: labels.to_vec(), images: paths.iter().map(|p| p.final_label).collect(), paths })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub p: C,
    pub t0: C,
    #[serde(rename = "E")]
    pub e: C,
    /// `m'` of the first track that reached the point (`t0` is the matching
    /// root; other tracks see a lattice translate with `m'` shifted by 2).
    pub m_prime: i64,
    /// Levels whose radial continuation led to this point.
    pub found_on: Vec<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub rmax: f64,
    pub labels: Vec<usize>,
    pub rays: usize,
    pub radial_step: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { rmax: 0.9, labels: (0..8).collect(), rays: 90, radial_step: 0.005 }
    }
}

/// `(G1, G2)` with `G1 = F`, `G2 = wp(t) + 2 eta1`, plus the `t`-column of the
/// Jacobian.
fn branch_system(p: C, t: C, mp: i64) -> Result<([C; 2], [C; 2])> {
    let ctx = context(p)?;
    let v = ctx.eval_all(t)?;
    let g1 = -v.zeta + 2.0 * ctx.eta1 * t - (mp as f64) * PI * I;
    let g2 = v.wp + 2.0 * ctx.eta1;
    Ok(([g1, g2], [g2, v.wp_prime]))
}

/// Two-variable Newton on `F = 0`, `wp(t0) + 2 eta1 = 0`.
pub fn refine_branch_point(p0: C, t0: C, mp: i64) -> Result<(C, C, f64)> {
    let (mut p, mut t) = (p0, t0);
    let h = 1e-6;
    let mut best = f64::INFINITY;
    for _ in 0..40 {
        let (g, dt) = branch_system(p, t, mp)?;
        let r = g[0].norm() + g[1].norm();
        best = best.min(r);
        if r < 1e-11 {
            return Ok((p, t, r));
        }
        let (gp, _) = branch_system(p + h, t, mp)?;
        let (gm, _) = branch_system(p - h, t, mp)?;
        let dp = [(gp[0] - gm[0]) / (2.0 * h), (gp[1] - gm[1]) / (2.0 * h)];
        let det = dt[0] * dp[1] - dp[0] * dt[1];
        if det.norm() < 1e-300 {
            break;
        }
        let step_t = (g[0] * dp[1] - dp[0] * g[1]) / det;
        let step_p = (dt[0] * g[1] - g[0] * dt[1]) / det;
        let damp = if step_p.norm() > 0.05 { 0.05 / step_p.norm() } else { 1.0 };
        t -= step_t * damp;
        p -= step_p * damp;
        if !(p.norm() < MAX_NOME) {
            break;
        }
    }
    Err(LameError::NoConvergence { what: "branch point".into(), residual: best })
}

/// Scan rays `arg p in (0, pi/2)` out to `rmax`, follow each level
/// radially, and refine the local minima of `|wp(t0) + 2 eta1|`.
pub fn locate_branch_points(opts: &ScanOptions) -> Result<Vec<BranchPoint>> {
    if !(opts.rmax > 0.1 && opts.rmax < MAX_NOME) {
        return Err(LameError::Domain(format!("rmax must lie in (0.1, {MAX_NOME})")));
    }
    if opts.rays == 0 || !(opts.radial_step > 0.0) {
        return Err(LameError::Domain("rays and radial_step must be positive".into()));
    }
    let r0 = 0.1;
    let nsteps = ((opts.rmax - r0) / opts.radial_step).ceil() as usize;
    let mut found: Vec<BranchPoint> = Vec::new();
    for j in 0..opts.rays {
        let theta = (j as f64 + 0.5) / opts.rays as f64 * PI / 2.0;
        let dir = C::from_polar(1.0, theta);
        for &m in &opts.labels {
            let mp = quantum_number(m);
            let (mut t, _) = match root_at(dir * r0, m) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let mut hist: Vec<(C, C, f64)> = Vec::with_capacity(nsteps + 1);
            let ctx = context(dir * r0)?;
            hist.push((dir * r0, t, condition(&ctx, t, mp)?.1.norm()));
            for k in 0..nsteps {
                let a = dir * (r0 + k as f64 * opts.radial_step);
                let b = dir * (r0 + (k + 1) as f64 * opts.radial_step).min(opts.rmax);
                match follow(&segment(a, b), t, mp, 1, false) {
                    Ok(f) => t = f.t0,
                    Err(_) => break,
                }
                let ctx = context(b)?;
                hist.push((b, t, condition(&ctx, t, mp)?.1.norm()));
            }
            for w in hist.windows(3) {
                if !(w[1].2 < w[0].2 && w[1].2 <= w[2].2) {
                    continue;
                }
                let Ok((p, tb, res)) = refine_branch_point(w[1].0, w[1].1, mp) else { continue };
                if !(p.norm() <= opts.rmax && p.re >= -1e-9 && p.im >= -1e-9) {
                    continue;
                }
                // t0 at a half period collides with its mirror -t0 + lattice,
                // which carries the same energy: no branching of E there
                let ctx = context(p)?;
                if ctx.lattice_distance(2.0 * tb) < 1e-4 {
                    continue;
                }
                if let Some(bp) = found.iter_mut().find(|b| (b.p - p).norm() < 1e-6) {
                    if !bp.found_on.contains(&m) {
                        bp.found_on.push(m);
                        bp.found_on.sort_unstable();
                    }
                    continue;
                }
                let e = -ctx.wp(tb)?;
                found.push(BranchPoint { p, t0: tb, e, m_prime: mp, found_on: vec![m], residual: res });
            }
        }
    }
    found.sort_by(|a, b| a.p.norm().total_cmp(&b.p.norm()));
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusComparison {
    pub m: usize,
    pub nearest: Option<C>,
    pub nearest_abs: Option<f64>,
    pub inferred: f64,
    pub disagreement: Option<f64>,
    pub flagged: bool,
}

/// Compare the nearest branch point reached from level `m` with the
/// radius inferred from its perturbation series.
pub fn radius_vs_branch(m: usize, branch_points: &[BranchPoint], inferred: f64) -> RadiusComparison {
    let nearest = branch_points
        .iter()
        .filter(|b| b.found_on.contains(&m))
        .min_by(|a, b| a.p.norm().total_cmp(&b.p.norm()))
        .map(|b| b.p);
    let nearest_abs = nearest.map(|p| p.norm());
    let disagreement = nearest_abs.map(|r| (r - inferred).abs());
    RadiusComparison { m, nearest, nearest_abs, inferred, disagreement, flagged: disagreement.is_none_or(|d| d > 0.02) }
}
