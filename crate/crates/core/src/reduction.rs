//! Numerical checks of the hyperelliptic-to-elliptic reduction identities
//!
//! ```text
//! -1/2 int_inf^E a0/sqrt(-Q) = int_inf^xi dxi/sqrt(4xi^3 - g2 xi - g3)
//!  1/2 int_E'^E  c /sqrt(-Q) = -kappa + int_xi'^xi xi dxi/sqrt(...)
//! ```
//!
//! and of Hermite's genus-two formulas.

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, C};
use crate::error::{LameError, Result};
use crate::hk::{closed_form_polys, hk_closed_form};
use crate::poly::EnergyPolynomial;
use crate::quadrature::{
    elliptic_integral_weierstrass, integral_from_infinity_seeded, integrate_path, track_integrate, BranchPoly, EPath,
    EllipticKind, Endpoint,
};
use crate::spectral::{SpectralCurve, XiData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    #[serde(rename = "E")]
    pub e: C,
    pub lhs: C,
    pub rhs: C,
    /// `|lhs - rhs|` after removing the best period (or quasi-period) shift.
    pub residual: f64,
    /// `(m, k)` of the removed shift `m + k tau` (or `2 m eta1 + 2 k eta3`).
    pub shift: (i64, i64),
}

fn best_shift(ctx: &EllipticContext, d: C, periods: (C, C)) -> ((i64, i64), f64) {
    // solve d = m w1 + k w2 in real coordinates, then search nearby integers
    let (w1, w2) = periods;
    let det = w1.re * w2.im - w1.im * w2.re;
    let m0 = (d.re * w2.im - d.im * w2.re) / det;
    let k0 = (w1.re * d.im - w1.im * d.re) / det;
    let _ = ctx;
    let mut best = ((0, 0), f64::INFINITY);
    for dm in -1..=1 {
        for dk in -1..=1 {
            let m = m0.round() as i64 + dm;
            let k = k0.round() as i64 + dk;
            let r = (d - (m as f64) * w1 - (k as f64) * w2).norm();
            if r < best.1 {
                best = ((m, k), r);
            }
        }
    }
    best
}

/// Second-kind base point: the root of `Q` with `xi(E') = e1` nearest to the
/// classical choice (`E' = -e1`, `3 e1`, or a root of
/// `E^2 + 6 e1 E + 45 e1^2 - 15 g2`).
pub fn second_kind_base(ctx: &EllipticContext, curve: &SpectralCurve) -> Result<C> {
    let target = match curve.n {
        1 => -ctx.e1,
        2 => 3.0 * ctx.e1,
        3 => {
            let f = EnergyPolynomial::new(vec![45.0 * ctx.e1 * ctx.e1 - 15.0 * ctx.g2, 6.0 * ctx.e1, C::new(1.0, 0.0)]);
            f.roots()?[0]
        }
        n => return Err(LameError::Domain(format!("reduction identities are implemented for n <= 3, not {n}"))),
    };
    Ok(curve.roots[curve.nearest_root(target).0])
}

fn sqrt_minus_q(curve: &SpectralCurve, e: C) -> C {
    (-curve.q(e)).sqrt()
}

/// First-kind identity at `E`, contours from infinity along the rays through
/// `E` and `xi(E)`, residual modulo the period lattice.
pub fn verify_first_kind(xi_data: &XiData, curve: &SpectralCurve, e: C) -> Result<ReductionReport> {
    let ctx = &xi_data.ctx;
    let hk = hk_closed_form(ctx, curve, e)?;
    let g = BranchPoly::minus_q(curve);
    let w = sqrt_minus_q(curve, e);
    let lhs = -0.5 * integral_from_infinity_seeded(&g, std::slice::from_ref(&xi_data.a[0]), e, w)?[0];
    let seed = ctx.wp_prime(hk.alpha)?;
    let rhs = elliptic_integral_weierstrass(ctx, EllipticKind::First, Endpoint::Infinity, hk.xi, seed)?;
    let (shift, residual) = best_shift(ctx, lhs - rhs, (C::new(1.0, 0.0), ctx.tau));
    Ok(ReductionReport { e, lhs, rhs, residual, shift })
}

/// Second-kind identity at `E` with the contour `E' -> E` straight.
///
/// The elliptic side is evaluated as `zeta(alpha') - zeta(alpha' + A)` where
/// `A = -1/2 int_E'^E a0/sqrt(-Q)` along the same contour, so the
/// quasi-period follows the first-kind lattice choice.  The reported
/// residual additionally allows a quasi-period shift.
pub fn verify_second_kind(xi_data: &XiData, curve: &SpectralCurve, e: C) -> Result<ReductionReport> {
    let ctx = &xi_data.ctx;
    let n = curve.n;
    let base = second_kind_base(ctx, curve)?;
    let [_, _, p3, p4] = closed_form_polys(ctx, n)?;
    let w = sqrt_minus_q(curve, e);
    let kappa = if n == 1 || e == base { C::new(0.0, 0.0) } else { p3.eval(e) / p4.eval(e) * w };
    let (ic, ia) = if (e - base).norm() == 0.0 {
        (C::new(0.0, 0.0), C::new(0.0, 0.0))
    } else {
        let g = BranchPoly::minus_q(curve);
        let v = integrate_path(&g, &[xi_data.c.clone(), xi_data.a[0].clone()], &EPath::straight(base, e, w))?.values;
        (v[0], v[1])
    };
    let lhs = 0.5 * ic;
    let half = C::new(0.5, 0.0);
    let a_shift = -0.5 * ia;
    let rhs = -kappa + ctx.zeta(half)? - ctx.zeta(half + a_shift)?;
    let (shift, residual) = best_shift(ctx, lhs - rhs, (2.0 * ctx.eta1, 2.0 * ctx.eta3));
    Ok(ReductionReport { e, lhs, rhs, residual, shift })
}

/// Second-kind identity with the elliptic integral taken by quadrature
/// along the straight segment `e1 -> xi(E)` (branch seeded by `wp'(alpha)`).
pub fn verify_second_kind_quadrature(xi_data: &XiData, curve: &SpectralCurve, e: C) -> Result<ReductionReport> {
    let ctx = &xi_data.ctx;
    let base = second_kind_base(ctx, curve)?;
    let hk = hk_closed_form(ctx, curve, e)?;
    let w = sqrt_minus_q(curve, e);
    let lhs = if (e - base).norm() == 0.0 {
        C::new(0.0, 0.0)
    } else {
        let g = BranchPoly::minus_q(curve);
        0.5 * integrate_path(&g, std::slice::from_ref(&xi_data.c), &EPath::straight(base, e, w))?.values[0]
    };
    let seed = ctx.wp_prime(hk.alpha)?;
    let ell = elliptic_integral_weierstrass(ctx, EllipticKind::Second, Endpoint::Finite(ctx.e1), hk.xi, seed)?;
    let rhs = -hk.kappa + ell;
    let (shift, residual) = best_shift(ctx, lhs - rhs, (2.0 * ctx.eta1, 2.0 * ctx.eta3));
    Ok(ReductionReport { e, lhs, rhs, residual, shift })
}

/// Relative residuals of the `E`-derivatives of both identities:
///
/// ```text
/// -a0/(2w)  = xi'/wp'(alpha)
///   c/(2w)  = -kappa' + xi xi'/wp'(alpha)
/// ```
pub fn differentiated_residuals(xi_data: &XiData, curve: &SpectralCurve, e: C) -> Result<(f64, f64)> {
    let ctx = &xi_data.ctx;
    let n = curve.n;
    let hk = hk_closed_form(ctx, curve, e)?;
    let [p1, p2, p3, p4] = closed_form_polys(ctx, n)?;
    let w = sqrt_minus_q(curve, e);
    let dw = curve.q_poly.derivative().eval(e) / (-2.0 * w);
    let p2e = p2.eval(e);
    let dxi = (p1.derivative().eval(e) * p2e - p1.eval(e) * p2.derivative().eval(e)) / (p2e * p2e);
    let wpp = ctx.wp_prime(hk.alpha)?;

    let l1 = -0.5 * xi_data.a[0].eval(e) / w;
    let r1 = dxi / wpp;
    let first = (l1 - r1).norm() / (l1.norm() + r1.norm()).max(f64::MIN_POSITIVE);

    let p4e = p4.eval(e);
    let ratio = p3.eval(e) / p4e;
    let dratio = (p3.derivative().eval(e) * p4e - p3.eval(e) * p4.derivative().eval(e)) / (p4e * p4e);
    let dkappa = if n == 1 { C::new(0.0, 0.0) } else { dratio * w + ratio * dw };
    let l2 = 0.5 * xi_data.c.eval(e) / w;
    let t = hk.xi * dxi / wpp;
    let second = (l2 + dkappa - t).norm() / (l2.norm() + dkappa.norm() + t.norm()).max(f64::MIN_POSITIVE);
    Ok((first, second))
}

/// Both sides of Hermite's formulas along the straight segment
/// `z_from -> z_to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteReport {
    pub first_lhs: C,
    pub first_rhs: C,
    pub first_residual: f64,
    pub second_lhs: C,
    pub second_rhs: C,
    pub second_residual: f64,
}

fn quintic(a: C, b: C, z: C) -> C {
    (z * z - a) * (8.0 * z * z * z - 6.0 * a * z - b)
}

fn hermite_y(a: C, b: C, z: C) -> (C, C) {
    let d = z * z - a;
    let nn = 2.0 * z * z * z - b;
    let y = nn / (3.0 * d);
    let dy = (6.0 * z * z * d - 2.0 * z * nn) / (3.0 * d * d);
    (y, dy)
}

fn hermite_cubic(a: C, b: C, y: C) -> C {
    y * y * y - 3.0 * a * y + b
}

/// `|27 D^3 (y^3 - 3ay + b) - (8z^3 - 6az - b)(z^3 - 3az + b)^2|`, relative.
pub fn hermite_substitution_residual(a: C, b: C, z: C) -> f64 {
    let d = z * z - a;
    let (y, _) = hermite_y(a, b, z);
    let lhs = 27.0 * d * d * d * hermite_cubic(a, b, y);
    let k = z * z * z - 3.0 * a * z + b;
    let rhs = (8.0 * z * z * z - 6.0 * a * z - b) * k * k;
    (lhs - rhs).norm() / (lhs.norm() + rhs.norm()).max(f64::MIN_POSITIVE)
}

/// Check Hermite's two genus-two reduction formulas on a segment.  The
/// square root of the cubic is continued along the image contour and its
/// sign at `z_from` is aligned with the quintic side.
pub fn hermite_formula(a: C, b: C, z_from: C, z_to: C) -> Result<HermiteReport> {
    let check = |z: C| -> Result<()> {
        let scale = 1.0 + z.norm().powi(5) + a.norm().powf(2.5) + b.norm().powf(5.0 / 3.0);
        if quintic(a, b, z).norm() < 1e-12 * scale {
            return Err(LameError::BranchCollision { at: z });
        }
        Ok(())
    };
    check(z_from)?;
    check(z_to)?;
    let dz = z_to - z_from;
    let zf = |u: f64| z_from + dz * u;
    let sq0 = quintic(a, b, z_from).sqrt();
    let c3 = 2.0 * 3f64.sqrt();
    let t_q = |u: f64| quintic(a, b, zf(u));
    let fq = |u: f64, s: C| {
        let z = zf(u);
        vec![z / s * dz, (2.0 * z * z - a) / s * dz]
    };
    let at = |u: f64| zf(u);
    let (lq, sq1) = track_integrate(&t_q, sq0, &fq, 2, &at)?;

    // align the cubic branch with the quintic integrand at the start
    let (y0, dy0) = hermite_y(a, b, z_from);
    let mut sc0 = hermite_cubic(a, b, y0).sqrt();
    let want = z_from / sq0;
    let got = dy0 / (c3 * sc0);
    if (got - want).norm() > (got + want).norm() {
        sc0 = -sc0;
    }
    let t_c = |u: f64| {
        let (y, _) = hermite_y(a, b, zf(u));
        hermite_cubic(a, b, y)
    };
    let fc = |u: f64, s: C| {
        let (y, dy) = hermite_y(a, b, zf(u));
        vec![dy / (c3 * s) * dz, y * dy / (c3 * s) * dz]
    };
    let (lc, _) = track_integrate(&t_c, sc0, &fc, 2, &at)?;

    let boundary = |z: C, s: C| -(1.0 / 3.0) * s / (z * z - a);
    let second_lhs = lq[1] + boundary(z_to, sq1) - boundary(z_from, sq0);
    let rel = |x: C, y: C| (x - y).norm() / (1.0 + x.norm().max(y.norm()));
    Ok(HermiteReport {
        first_lhs: lq[0],
        first_rhs: lc[0],
        first_residual: rel(lq[0], lc[0]),
        second_lhs,
        second_rhs: lc[1],
        second_residual: rel(second_lhs, lc[1]),
    })
}
