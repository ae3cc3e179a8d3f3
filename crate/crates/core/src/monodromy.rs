//! Monodromy multipliers of the Lame solution under `x -> x + 1` and
//! `x -> x + tau`, sign data at band edges, and real-energy classification.

use serde::{Deserialize, Serialize};

use crate::elliptic::{wp_laurent, EllipticContext, C};
use crate::error::{LameError, Result};
use crate::ode::{self, det, eigenvalues, mat_vec, propagate, transfer_matrix, DirectMonodromy, Mat2};
use crate::poly::EnergyPolynomial;
use crate::quadrature::{integrate_path, BranchPoly, EPath};
use crate::spectral::{generic_points, SpectralCurve, XiData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hyperelliptic,
    HermiteKrichever,
    DirectOde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    #[serde(rename = "E")]
    pub e: C,
    pub rho1: C,
    pub rho_tau: C,
    pub q1: u8,
    pub q3: u8,
    pub base_root: C,
    pub method: Method,
}

/// Base point `E'` (a root of `Q`) for the hyperelliptic formula.
pub fn choose_base_root(ctx: &EllipticContext, curve: &SpectralCurve) -> C {
    let target = match curve.n {
        1 => Some(-ctx.e1),
        2 => Some((3.0 * ctx.g2).sqrt()),
        3 => Some(C::new(0.0, 0.0)),
        _ => None,
    };
    match target {
        Some(t) => curve.roots[curve.nearest_root(t).0],
        None => {
            let mut best = (f64::NEG_INFINITY, curve.roots[0]);
            for r in &curve.roots {
                let d = curve
                    .roots
                    .iter()
                    .filter(|s| *s != r)
                    .map(|s| (s - r).norm())
                    .fold(f64::INFINITY, f64::min);
                if d > best.0 {
                    best = (d, *r);
                }
            }
            best.1
        }
    }
}

/// Continue `sqrt(Xi(x, E'))` along `x0 -> x0 + step` and return the sign
/// relating the two ends, together with the smallest relative `|Xi|` seen.
fn sqrt_xi_sign(xi: &XiData, e: C, x0: C, step: C) -> Result<(u8, f64)> {
    let steps = 4000;
    let mut prev: Option<C> = None;
    let mut first = C::new(0.0, 0.0);
    let mut vmin = f64::INFINITY;
    let mut vmax: f64 = 0.0;
    for k in 0..=steps {
        let x = x0 + step * (k as f64 / steps as f64);
        let v = xi.value(x, e)?;
        vmin = vmin.min(v.norm());
        vmax = vmax.max(v.norm());
        let s = v.sqrt();
        let s = match prev {
            None => {
                first = s;
                s
            }
            Some(p) => {
                if (s - p).norm() <= (s + p).norm() {
                    s
                } else {
                    -s
                }
            }
        };
        prev = Some(s);
    }
    if vmax == 0.0 {
        return Err(LameError::Degenerate("Xi vanishes along the test segment".into()));
    }
    let last = prev.unwrap();
    let q = if (last - first).norm() <= (last + first).norm() { 0 } else { 1 };
    Ok((q, vmin / vmax))
}

/// Signs `(q1, q3)` with `Lambda(x + 1, E') = (-1)^q1 Lambda(x, E')` and
/// `Lambda(x + tau, E') = (-1)^q3 Lambda(x, E')`.
pub fn determine_signs(xi: &XiData, curve: &SpectralCurve, base_root: C) -> Result<(u8, u8)> {
    let ctx = &xi.ctx;
    let qv = curve.q(base_root).norm();
    let dq = curve.q_poly.derivative().eval(base_root).norm();
    if qv > 1e-8 * dq.max(1.0) * (1.0 + base_root.norm()) {
        return Err(LameError::Domain(format!("{base_root} is not a root of Q")));
    }
    let mut best: Option<(f64, (u8, u8))> = None;
    for x0 in generic_points(ctx, 6) {
        if ode::segment_lattice_distance(ctx, x0, x0 + 1.0) < 0.1
            || ode::segment_lattice_distance(ctx, x0, x0 + ctx.tau) < 0.1
        {
            continue;
        }
        let (q1, m1) = sqrt_xi_sign(xi, base_root, x0, C::new(1.0, 0.0))?;
        let (q3, m3) = sqrt_xi_sign(xi, base_root, x0, ctx.tau)?;
        let quality = m1.min(m3);
        if best.map(|b| quality > b.0).unwrap_or(true) {
            best = Some((quality, (q1, q3)));
        }
        if quality > 1e-3 {
            break;
        }
    }
    match best {
        Some((q, signs)) if q > 0.0 => Ok(signs),
        _ => Err(LameError::Degenerate("no usable test segment for the sign of sqrt(Xi)".into())),
    }
}

/// Hyperelliptic integrals `(int c/w, int a0/w)` from `E'` to `E` along the
/// straight segment, `w = sqrt(-Q)` equal to the principal root at `E`.
pub fn hyperelliptic_pair(xi: &XiData, curve: &SpectralCurve, base_root: C, e: C) -> Result<(C, C)> {
    if (e - base_root).norm() == 0.0 {
        return Ok((C::new(0.0, 0.0), C::new(0.0, 0.0)));
    }
    let g = BranchPoly::minus_q(curve);
    let weights: [EnergyPolynomial; 2] = [xi.c.clone(), xi.a[0].clone()];
    let seed = (-curve.q(e)).sqrt();
    let path = EPath::straight(base_root, e, seed);
    let v = integrate_path(&g, &weights, &path)?.values;
    Ok((v[0], v[1]))
}

/// Multipliers from the hyperelliptic integrals.
pub fn multipliers_hyperelliptic(xi: &XiData, curve: &SpectralCurve, e: C) -> Result<MonodromyResult> {
    let ctx = &xi.ctx;
    let base = choose_base_root(ctx, curve);
    let (q1, q3) = determine_signs(xi, curve, base)?;
    let (ic, ia) = hyperelliptic_pair(xi, curve, base, e)?;
    let s1 = if q1 == 0 { 1.0 } else { -1.0 };
    let s3 = if q3 == 0 { 1.0 } else { -1.0 };
    let rho1 = s1 * (-0.5 * (ic - 2.0 * ctx.eta1 * ia)).exp();
    let rho_tau = s3 * (-0.5 * (ctx.tau * ic - 2.0 * ctx.eta3 * ia)).exp();
    Ok(MonodromyResult { e, rho1, rho_tau, q1, q3, base_root: base, method: Method::Hyperelliptic })
}

/// Direct-ODE multipliers: the joint pair closest to `hint`, or the pair
/// with `|rho1| >= 1` when no hint is given.
pub fn multipliers_direct(
    ctx: &EllipticContext,
    curve: &SpectralCurve,
    e: C,
    hint: Option<(C, C)>,
) -> Result<(MonodromyResult, DirectMonodromy)> {
    let dm = ode::direct_monodromy(ctx, curve.n, e)?;
    let (rho1, rho_tau) = match hint {
        Some((a, b)) => dm.closest(a, b),
        None => dm.pairs[0],
    };
    let base = choose_base_root(ctx, curve);
    let r = MonodromyResult { e, rho1, rho_tau, q1: 0, q3: 0, base_root: base, method: Method::DirectOde };
    Ok((r, dm))
}

/// Membership of a real energy in the spectra of the Lame operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyClassification {
    #[serde(rename = "E")]
    pub e: f64,
    pub in_sigma_d: bool,
    pub in_sigma_s: bool,
    pub in_sigma_int: bool,
    pub bounded_all_solutions: bool,
    /// `tr M_1` of the shift-by-one transfer matrix.
    pub trace: f64,
}

/// Frobenius coefficients `a_k` of the solution `x^(n+1) sum a_k x^(2k)`.
pub fn recessive_series(ctx: &EllipticContext, n: usize, e: C, terms: usize) -> Vec<C> {
    let big_n = (n * (n + 1)) as f64;
    let c = wp_laurent(ctx.g2, ctx.g3, terms);
    let mut a = vec![C::new(1.0, 0.0)];
    for k in 1..terms {
        let mut s = -e * a[k - 1];
        for j in 1..k {
            s += big_n * c[j - 1] * a[k - 1 - j];
        }
        let kf = k as f64;
        a.push(s / (2.0 * kf * (2.0 * n as f64 + 2.0 * kf + 1.0)));
    }
    a
}

/// `(f, f')` at `x = 1/2` of the solution that behaves like `x^(n+1)` at 0,
/// normalised to unit length.
pub fn recessive_at_half(ctx: &EllipticContext, n: usize, e: C) -> Result<[C; 2]> {
    let x0: f64 = 1e-3;
    let a = recessive_series(ctx, n, e, 8);
    let mut f = C::new(0.0, 0.0);
    let mut df = C::new(0.0, 0.0);
    for (k, ak) in a.iter().enumerate() {
        let p = (n + 1 + 2 * k) as i32;
        f += ak * x0.powi(p);
        df += ak * (p as f64) * x0.powi(p - 1);
    }
    let nrm = (f.norm_sqr() + df.norm_sqr()).sqrt();
    let init = [[f / nrm, df / nrm], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let out = propagate(ctx, n, e, &[C::new(x0, 0.0), C::new(0.5, 0.0)], init, 0.0)?;
    let v = out[0];
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    Ok([v[0] / nv, v[1] / nv])
}

/// Shift-by-one transfer matrix based at `x = 1/2`, passing above the pole at 1.
pub fn transfer_one_at_half(ctx: &EllipticContext, n: usize, e: C) -> Result<Mat2> {
    let h = ctx.tau / 2.0;
    let nodes = [C::new(0.5, 0.0), C::new(0.5, 0.0) + h, C::new(1.5, 0.0) + h, C::new(1.5, 0.0)];
    transfer_matrix(ctx, n, e, &nodes)
}

fn require_imaginary_tau(ctx: &EllipticContext) -> Result<()> {
    if ctx.tau.re.abs() > 1e-12 {
        return Err(LameError::Domain(format!(
            "classification is only defined for purely imaginary tau (unclassified at {})",
            ctx.tau
        )));
    }
    Ok(())
}

/// Classify a real energy for `tau` on the imaginary axis.
pub fn classify_energy(xi: &XiData, curve: &SpectralCurve, e: f64) -> Result<EnergyClassification> {
    let ctx = &xi.ctx;
    require_imaginary_tau(ctx)?;
    if !e.is_finite() {
        return Err(LameError::Domain("energy must be a finite real number".into()));
    }
    let n = xi.n;
    let ec = C::new(e, 0.0);
    let q = curve.q(ec);
    let dq = curve.q_poly.derivative().eval(ec);
    let in_sigma_d = q.norm() <= 1e-8 * dq.norm() * (1.0 + e.abs());

    let m = transfer_one_at_half(ctx, n, ec)?;
    let tr = (m[0][0] + m[1][1]).re;
    let tol = 1e-7 * (1.0 + tr.abs());
    let in_sigma_s = in_sigma_d || (tr.abs() - 2.0).abs() <= tol;

    let mut in_sigma_int = false;
    if in_sigma_s {
        let v = recessive_at_half(ctx, n, ec)?;
        let w = mat_vec(&m, v);
        let scale = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        let wr = (v[0] * w[1] - v[1] * w[0]).norm() / scale;
        in_sigma_int = wr <= 1e-6;
    }
    let bounded_all_solutions = !in_sigma_d && tr.abs() < 2.0 - tol;
    Ok(EnergyClassification { e, in_sigma_d, in_sigma_s, in_sigma_int, bounded_all_solutions, trace: tr })
}

/// Energies in `[lo, hi]` with an eigenfunction recessive at both ends of
/// `(0, 1)`, found by a sign scan of the matching Wronskian and bisection.
pub fn sigma_int_eigenvalues(ctx: &EllipticContext, n: usize, lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>> {
    require_imaginary_tau(ctx)?;
    // f(x) recessive at 0; f(1 - x) recessive at 1 (wp is even about 1/2)
    let w = |e: f64| -> Result<f64> {
        let v = recessive_at_half(ctx, n, C::new(e, 0.0))?;
        // at x = 1/2 the reflected solution has (f, -f')
        Ok((v[0] * (-v[1]) - v[1] * v[0]).re)
    };
    let mut out = Vec::new();
    let xs: Vec<f64> = (0..=samples).map(|k| lo + (hi - lo) * k as f64 / samples as f64).collect();
    let mut prev = (xs[0], w(xs[0])?);
    for &x in &xs[1..] {
        let cur = (x, w(x)?);
        if prev.1 == 0.0 {
            out.push(prev.0);
        } else if prev.1.signum() != cur.1.signum() {
            let (mut a, mut b) = (prev, cur);
            for _ in 0..80 {
                let mid = 0.5 * (a.0 + b.0);
                let fm = w(mid)?;
                if fm == 0.0 || (b.0 - a.0).abs() < 1e-13 * (1.0 + mid.abs()) {
                    a = (mid, fm);
                    break;
                }
                if fm.signum() == a.1.signum() {
                    a = (mid, fm);
                } else {
                    b = (mid, fm);
                }
            }
            out.push(a.0);
        }
        prev = cur;
    }
    Ok(out)
}

/// Helper for tests and reports: `|det M - 1|` and the eigenvalues of `M`.
pub fn transfer_summary(m: &Mat2) -> (f64, [C; 2]) {
    ((det(m) - 1.0).norm(), eigenvalues(m))
}
