//! Contour integrals of `w(E) / sqrt(G(E))` for a polynomial `G` with known
//! simple roots, with the square-root branch carried along the contour.
//!
//! The branch is continued by ratios: on a sub-interval where
//! `|G(u)/G(u_l) - 1| < 1/2` the principal root of the ratio is continuous,
//! so `sqrt(G(u)) = sqrt(G(u_l)) * sqrt(G(u)/G(u_l))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, C};
use crate::error::{LameError, Result};
use crate::poly::EnergyPolynomial;
use crate::spectral::SpectralCurve;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const REL_TOL: f64 = 1e-13;
const MAX_DEPTH: usize = 48;
/// Panels per adaptive call; once spent, remaining panels are accepted as
/// they stand (a roundoff-limited error estimate would otherwise split forever).
const MAX_PANELS: usize = 4000;

/// Waypoints of an integration contour in the `E`-plane.
///
/// `branch_seed` is `sqrt(G)` at the first node, or at the second node when
/// the first node is a root of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EPath {
    pub nodes: Vec<C>,
    pub branch_seed: C,
}

impl EPath {
    pub fn straight(from: C, to: C, branch_seed: C) -> Self {
        EPath { nodes: vec![from, to], branch_seed }
    }

    pub fn reversed(&self, seed_at_end: C) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        EPath { nodes, branch_seed: seed_at_end }
    }
}

/// A polynomial `G` together with its roots.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoly {
    pub poly: EnergyPolynomial,
    pub roots: Vec<C>,
}

impl BranchPoly {
    pub fn new(poly: EnergyPolynomial, roots: Vec<C>) -> Self {
        BranchPoly { poly, roots }
    }

    /// `-Q(E)` for a spectral curve.
    pub fn minus_q(curve: &SpectralCurve) -> Self {
        BranchPoly {
            poly: curve.q_poly.scale(C::new(-1.0, 0.0)),
            roots: curve.roots.clone(),
        }
    }

    /// `4 xi^3 - g2 xi - g3`.
    pub fn weierstrass_cubic(ctx: &EllipticContext) -> Self {
        let poly = EnergyPolynomial::new(vec![-ctx.g3, -ctx.g2, C::new(0.0, 0.0), C::new(4.0, 0.0)]);
        BranchPoly { poly, roots: ctx.e().to_vec() }
    }

    pub fn eval(&self, e: C) -> C {
        self.poly.eval(e)
    }

    /// Spread of the root set (at least 1).
    pub fn scale(&self) -> f64 {
        let mut s: f64 = 1.0;
        for a in &self.roots {
            for b in &self.roots {
                s = s.max((a - b).norm());
            }
        }
        s
    }

    fn root_at(&self, e: C) -> Option<C> {
        self.roots
            .iter()
            .copied()
            .find(|r| (r - e).norm() <= 1e-12 * (1.0 + r.norm()))
    }

    fn min_spacing(&self, r: C) -> f64 {
        self.roots
            .iter()
            .filter(|s| (*s - r).norm() > 0.0)
            .map(|s| (s - r).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of a path integral: one value per weight and the transported
/// square root at the final node.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIntegral {
    pub values: Vec<C>,
    pub end_sqrt: C,
}

fn add_into(acc: &mut [C], v: &[C], sign: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += sign * b;
    }
}

fn gk15(f: &mut dyn FnMut(f64) -> Vec<C>, a: f64, b: f64, m: usize) -> (Vec<C>, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk: Vec<C> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut rg: Vec<C> = fc.iter().map(|v| v * WG[3]).collect();
    let mut mag: f64 = fc.iter().map(|v| v.norm()).fold(0.0, f64::max) * WGK[7];
    for j in 0..7 {
        let f1 = f(c - h * XGK[j]);
        let f2 = f(c + h * XGK[j]);
        for k in 0..m {
            let s = f1[k] + f2[k];
            rk[k] += s * WGK[j];
            if j % 2 == 1 {
                rg[k] += s * WG[j / 2];
            }
        }
        let fm = f1.iter().chain(f2.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        mag += 2.0 * fm * WGK[j];
    }
    let err = rk.iter().zip(&rg).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) * h.abs();
    for v in rk.iter_mut() {
        *v *= h;
    }
    (rk, err, mag * h.abs())
}

/// Adaptive Gauss-Kronrod on `[a, b]` for a vector-valued integrand.
pub fn adaptive_gk(f: &mut dyn FnMut(f64) -> Vec<C>, a: f64, b: f64, m: usize) -> Vec<C> {
    let mut total = vec![C::new(0.0, 0.0); m];
    let mut stack = vec![(a, b, 0usize)];
    let mut panels = 0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err, mag) = gk15(f, lo, hi, m);
        panels += 1;
        let scale = mag.max(val.iter().map(|v| v.norm()).fold(0.0, f64::max));
        if err <= REL_TOL * scale || err < 1e-300 || depth >= MAX_DEPTH || panels >= MAX_PANELS || (hi - lo).abs() < 1e-15 {
            add_into(&mut total, &val, 1.0);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}

/// Integrate `f(u, sqrt(T(u)))` over `u in [0, 1]`, continuing `sqrt(T)`
/// from `s0 = sqrt(T(0))`.  Returns the integrals and `sqrt(T(1))`.
pub fn track_integrate(
    t_of: &dyn Fn(f64) -> C,
    s0: C,
    f: &dyn Fn(f64, C) -> Vec<C>,
    m: usize,
    at: &dyn Fn(f64) -> C,
) -> Result<(Vec<C>, C)> {
    let mut total = vec![C::new(0.0, 0.0); m];
    let mut u = 0.0;
    let mut h: f64 = 0.125;
    let mut s_l = s0;
    let mut t_l = t_of(0.0);
    while u < 1.0 {
        h = h.min(1.0 - u);
        let ok = (1..=4).all(|k| {
            let r = t_of(u + h * k as f64 / 4.0) / t_l;
            (r - 1.0).norm() < 0.5
        });
        if !ok {
            h *= 0.5;
            if h < 1e-13 {
                return Err(LameError::BranchCollision { at: at(u) });
            }
            continue;
        }
        let (lo, hi) = (u, (u + h).min(1.0));
        let (sl, tl) = (s_l, t_l);
        let mut g = |v: f64| f(v, sl * (t_of(v) / tl).sqrt());
        let part = adaptive_gk(&mut g, lo, hi, m);
        add_into(&mut total, &part, 1.0);
        let t_r = t_of(hi);
        s_l = sl * (t_r / tl).sqrt();
        t_l = t_r;
        u = hi;
        h *= 2.0;
    }
    Ok((total, s_l))
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line { a: C, b: C },
    Arc { center: C, rho: f64, theta0: f64, delta: f64 },
}

impl Piece {
    fn point(&self, u: f64) -> C {
        match *self {
            Piece::Line { a, b } => a + (b - a) * u,
            Piece::Arc { center, rho, theta0, delta } => center + C::from_polar(rho, theta0 + u * delta),
        }
    }

    fn tangent(&self, u: f64) -> C {
        match *self {
            Piece::Line { a, b } => b - a,
            Piece::Arc { center, delta, .. } => C::new(0.0, delta) * (self.point(u) - center),
        }
    }

    fn reversed(&self) -> Piece {
        match *self {
            Piece::Line { a, b } => Piece::Line { a: b, b: a },
            Piece::Arc { center, rho, theta0, delta } => Piece::Arc { center, rho, theta0: theta0 + delta, delta: -delta },
        }
    }
}

/// Split the segment `a -> b` into straight pieces and small arcs around
/// roots of `G` lying close to it.
fn segment_pieces(g: &BranchPoly, a: C, b: C) -> Result<Vec<Piece>> {
    let len = (b - a).norm();
    if len == 0.0 {
        return Ok(vec![]);
    }
    let dir = (b - a) / len;
    let base = 0.05 * g.scale();
    let mut detours: Vec<(f64, Piece, C, C)> = Vec::new();
    for &r in &g.roots {
        if (r - a).norm() <= 1e-12 * (1.0 + r.norm()) || (r - b).norm() <= 1e-12 * (1.0 + r.norm()) {
            continue;
        }
        let rel = (r - a) / dir;
        let t = rel.re;
        let delta = rel.im.abs();
        if t <= 0.0 || t >= len {
            continue;
        }
        let rho = base.min(0.3 * g.min_spacing(r)).min(0.45 * t).min(0.45 * (len - t));
        if delta >= rho {
            continue;
        }
        if delta <= 1e-9 * (1.0 + r.norm()) {
            return Err(LameError::BranchCollision { at: r });
        }
        let hw = (rho * rho - delta * delta).sqrt();
        let p_in = a + dir * (t - hw);
        let p_out = a + dir * (t + hw);
        let theta0 = (p_in - r).arg();
        let sweep = ((p_out - r) / (p_in - r)).arg();
        detours.push((t, Piece::Arc { center: r, rho, theta0, delta: sweep }, p_in, p_out));
    }
    detours.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pieces = Vec::new();
    let mut cur = a;
    for (_, arc, p_in, p_out) in detours {
        pieces.push(Piece::Line { a: cur, b: p_in });
        pieces.push(arc);
        cur = p_out;
    }
    pieces.push(Piece::Line { a: cur, b });
    Ok(pieces)
}

fn weight_values(weights: &[EnergyPolynomial], z: C) -> Vec<C> {
    weights.iter().map(|w| w.eval(z)).collect()
}

/// Integrate along one regular piece starting with `sqrt(G) = s0`.
fn regular_piece(g: &BranchPoly, weights: &[EnergyPolynomial], p: Piece, s0: C) -> Result<(Vec<C>, C)> {
    let t_of = |u: f64| g.eval(p.point(u));
    let f = |u: f64, s: C| {
        let z = p.point(u);
        let k = p.tangent(u) / s;
        weights.iter().map(|w| w.eval(z) * k).collect()
    };
    track_integrate(&t_of, s0, &f, weights.len(), &|u| p.point(u))
}

/// Integrate along the straight piece `s -> root`, `sqrt(G(s)) = s0`.
fn root_end_piece(g: &BranchPoly, weights: &[EnergyPolynomial], s: C, root: C, s0: C) -> Result<Vec<C>> {
    let g1 = g.poly.deflate(root).0;
    let d = s - root;
    let sd = d.sqrt();
    let sigma0 = s0 / sd;
    let point = |u: f64| root + d * (1.0 - u) * (1.0 - u);
    let t_of = |u: f64| g1.eval(point(u));
    let f = |u: f64, sig: C| {
        let z = point(u);
        let k = -2.0 * sd / sig;
        weight_values(weights, z).into_iter().map(|w| w * k).collect()
    };
    Ok(track_integrate(&t_of, sigma0, &f, weights.len(), &point)?.0)
}

fn pieces_integral(
    g: &BranchPoly,
    weights: &[EnergyPolynomial],
    pieces: &[Piece],
    s0: C,
    end_root: Option<C>,
) -> Result<(Vec<C>, C)> {
    let m = weights.len();
    let mut total = vec![C::new(0.0, 0.0); m];
    let mut s = s0;
    for (i, p) in pieces.iter().enumerate() {
        let last = i + 1 == pieces.len();
        match (last, end_root, p) {
            (true, Some(r), Piece::Line { a, .. }) => {
                let v = root_end_piece(g, weights, *a, r, s)?;
                add_into(&mut total, &v, 1.0);
                s = C::new(0.0, 0.0);
            }
            _ => {
                let (v, s1) = regular_piece(g, weights, *p, s)?;
                add_into(&mut total, &v, 1.0);
                s = s1;
            }
        }
    }
    Ok((total, s))
}

/// `int_path w_k(E) / sqrt(G(E)) dE` for each weight, with the branch seeded
/// as described on [`EPath`].
pub fn integrate_path(g: &BranchPoly, weights: &[EnergyPolynomial], path: &EPath) -> Result<PathIntegral> {
    let m = weights.len();
    let nodes = &path.nodes;
    let mut total = vec![C::new(0.0, 0.0); m];
    if nodes.len() < 2 {
        return Ok(PathIntegral { values: total, end_sqrt: path.branch_seed });
    }
    for (i, z) in nodes.iter().enumerate().skip(1).take(nodes.len().saturating_sub(2)) {
        if g.roots.iter().any(|r| (r - z).norm() < 1e-6) {
            return Err(LameError::BranchCollision { at: nodes[i] });
        }
    }
    let mut start = 1;
    let mut s = path.branch_seed;
    if let Some(r) = g.root_at(nodes[0]) {
        // seed lives at nodes[1]; walk the first segment backwards into the root
        let b = nodes[1];
        if g.root_at(b).is_some() {
            return Err(LameError::Domain("a segment may not join two roots".into()));
        }
        let pieces: Vec<Piece> = segment_pieces(g, r, b)?.iter().rev().map(|p| p.reversed()).collect();
        let (v, _) = pieces_integral(g, weights, &pieces, s, Some(r))?;
        add_into(&mut total, &v, -1.0);
        start = 2;
    }
    for k in start..nodes.len() {
        let (a, b) = (nodes[k - 1], nodes[k]);
        if a == b {
            continue;
        }
        let end_root = if k + 1 == nodes.len() { g.root_at(b) } else { None };
        let pieces = segment_pieces(g, a, b)?;
        let (v, s1) = pieces_integral(g, weights, &pieces, s, end_root)?;
        add_into(&mut total, &v, 1.0);
        s = s1;
    }
    Ok(PathIntegral { values: total, end_sqrt: s })
}

/// `int_inf^Z w_k(E) / sqrt(G(E)) dE` along the ray through `Z`, where
/// `sqrt(G(Z)) = s_z` and `|Z|` exceeds every root.  Requires
/// `deg G >= 2 deg w + 3`.
pub fn integrate_from_infinity(g: &BranchPoly, weights: &[EnergyPolynomial], z: C, s_z: C) -> Result<Vec<C>> {
    let d = g.poly.degree() as i32;
    for w in weights {
        if !w.is_zero() && 2 * w.degree() as i32 + 3 > d {
            return Err(LameError::Domain("integral from infinity diverges for this weight".into()));
        }
    }
    let rmax = g.roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if z.norm() <= rmax {
        return Err(LameError::Domain("ray start must lie outside all roots".into()));
    }
    // E = Z / u^2, u from 0 to 1; M(u) = u^(2d) G(Z/u^2)
    let m_of = |u: f64| {
        let mut acc = C::new(0.0, 0.0);
        for (k, c) in g.poly.coeffs.iter().enumerate() {
            acc += c * z.powu(k as u32) * u.powi(2 * (d - k as i32));
        }
        acc
    };
    let t_of = |v: f64| m_of(1.0 - v);
    let f = |v: f64, s: C| {
        let u = 1.0 - v;
        weights
            .iter()
            .map(|w| {
                let mut acc = C::new(0.0, 0.0);
                for (k, c) in w.coeffs.iter().enumerate() {
                    acc += c * z.powu(k as u32) * u.powi(d - 3 - 2 * k as i32);
                }
                -2.0 * z * acc / s
            })
            .collect()
    };
    let at = |v: f64| {
        let u = (1.0 - v).max(1e-300);
        z / (u * u)
    };
    Ok(track_integrate(&t_of, s_z, &f, weights.len(), &at)?.0)
}

/// `int_path weight(E) / sqrt(-Q(E)) dE`.
pub fn hyperelliptic_integral(curve: &SpectralCurve, weight: &EnergyPolynomial, path: &EPath) -> Result<C> {
    if weight.degree() > curve.n {
        return Err(LameError::Domain("weight degree must not exceed n".into()));
    }
    let g = BranchPoly::minus_q(curve);
    Ok(integrate_path(&g, std::slice::from_ref(weight), path)?.values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EllipticKind {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Infinity,
    Finite(C),
}

/// `int dxi / sqrt(4 xi^3 - g2 xi - g3)` (first kind) or
/// `int xi dxi / sqrt(...)` (second kind) along the straight segment.
///
/// For a finite start `branch_seed` is the root's value at `xi_from` (at
/// `xi_to` when `xi_from` is a root of the cubic); for an infinite start it
/// is the value at `xi_to`, and the contour is the ray through `xi_to`.
pub fn elliptic_integral_weierstrass(
    ctx: &EllipticContext,
    kind: EllipticKind,
    xi_from: Endpoint,
    xi_to: C,
    branch_seed: C,
) -> Result<C> {
    let g = BranchPoly::weierstrass_cubic(ctx);
    let weight = match kind {
        EllipticKind::First => EnergyPolynomial::constant(C::new(1.0, 0.0)),
        EllipticKind::Second => EnergyPolynomial::var(),
    };
    let ws = std::slice::from_ref(&weight);
    match xi_from {
        Endpoint::Finite(a) => {
            let mut path = EPath::straight(a, xi_to, branch_seed);
            if g.root_at(a).is_some() && g.root_at(xi_to).is_some() {
                if (a - xi_to).norm() == 0.0 {
                    return Ok(C::new(0.0, 0.0));
                }
                // route through the midpoint, shifted off the line
                let mid = 0.5 * (a + xi_to) + C::new(0.0, 1e-3) * (xi_to - a);
                path.nodes = vec![a, mid, xi_to];
            }
            Ok(integrate_path(&g, ws, &path)?.values[0])
        }
        Endpoint::Infinity => {
            if kind == EllipticKind::Second {
                return Err(LameError::Domain("second-kind integral from infinity diverges".into()));
            }
            first_kind_from_infinity(&g, xi_to, branch_seed)
        }
    }
}

/// `int_inf^xi dE/sqrt(G)` along the ray through `xi`, seeded at `xi`.
pub(crate) fn first_kind_from_infinity(g: &BranchPoly, xi: C, seed_at_xi: C) -> Result<C> {
    let w = [EnergyPolynomial::constant(C::new(1.0, 0.0))];
    integral_from_infinity_seeded(g, &w, xi, seed_at_xi).map(|v| v[0])
}

/// `int_inf^E w_k/sqrt(G)` with the contour coming in along the ray through
/// `E` and the branch fixed by `sqrt(G(E)) = seed`.
pub fn integral_from_infinity_seeded(g: &BranchPoly, weights: &[EnergyPolynomial], e: C, seed: C) -> Result<Vec<C>> {
    let rmax = g.roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let radius = 2.0 * rmax + e.norm() + 1.0;
    let dirn = if e.norm() > 0.0 { e / e.norm() } else { C::new(1.0, 0.0) };
    // nudge the ray off roots lying exactly on it
    let mut dirn = dirn;
    for _ in 0..8 {
        let hit = g.roots.iter().any(|r| {
            let rel = r / dirn;
            rel.re > 0.0 && rel.im.abs() < 1e-6 * (1.0 + r.norm())
        });
        if !hit {
            break;
        }
        dirn *= C::from_polar(1.0, PI / 97.0);
    }
    let far = dirn * radius;
    let back = integrate_path(g, weights, &EPath::straight(e, far, seed))?;
    let ray = integrate_from_infinity(g, weights, far, back.end_sqrt)?;
    Ok(ray.iter().zip(&back.values).map(|(r, b)| r - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::SignHint;
    use crate::spectral::{compute_q, compute_xi};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn n1_curve(tau: C) -> (EllipticContext, SpectralCurve) {
        let ctx = EllipticContext::new(tau).unwrap();
        let curve = compute_q(&compute_xi(&ctx, 1).unwrap()).unwrap();
        (ctx, curve)
    }

    #[test]
    fn zero_length_path() {
        let (_, curve) = n1_curve(c(0.0, 0.9));
        let one = EnergyPolynomial::constant(c(1.0, 0.0));
        let e = c(1.0, 1.0);
        let p = EPath::straight(e, e, (-curve.q(e)).sqrt());
        assert_eq!(hyperelliptic_integral(&curve, &one, &p).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn reversal_negates() {
        let (_, curve) = n1_curve(c(0.0, 0.9));
        let g = BranchPoly::minus_q(&curve);
        let one = [EnergyPolynomial::constant(c(1.0, 0.0))];
        let (a, b) = (c(-3.0, 2.0), c(5.0, 1.0));
        let fwd = integrate_path(&g, &one, &EPath::straight(a, b, g.eval(a).sqrt())).unwrap();
        let back = integrate_path(&g, &one, &EPath::straight(b, a, fwd.end_sqrt)).unwrap();
        assert!((fwd.values[0] + back.values[0]).norm() < 1e-12);
    }

    #[test]
    fn first_kind_inverts_wp() {
        let ctx = EllipticContext::new(c(0.0, 0.8)).unwrap();
        let a0 = c(0.23, 0.31);
        let xi = ctx.wp(a0).unwrap();
        let seed = ctx.wp_prime(a0).unwrap();
        let v = elliptic_integral_weierstrass(&ctx, EllipticKind::First, Endpoint::Infinity, xi, seed).unwrap();
        let (_, _, d) = ctx.nearest_lattice(v - a0);
        assert!(d < 1e-10, "{v}");
    }

    #[test]
    fn second_kind_matches_zeta() {
        let ctx = EllipticContext::new(c(0.0, 0.8)).unwrap();
        let a0 = c(0.23, 0.31);
        let xi = ctx.wp(a0).unwrap();
        let seed = ctx.wp_prime(a0).unwrap();
        // integrate from wp(a0) to e1 with the wp' branch, so the result is
        // -(zeta(1/2) - zeta(a0)) up to a period of zeta
        let v = elliptic_integral_weierstrass(&ctx, EllipticKind::Second, Endpoint::Finite(xi), ctx.e1, seed).unwrap();
        let w = elliptic_integral_weierstrass(&ctx, EllipticKind::First, Endpoint::Finite(xi), ctx.e1, seed).unwrap();
        // x runs from a0 to a0 + w, which is a half period
        let end = a0 + w;
        let z_end = ctx.zeta(end).unwrap();
        let expect = -(z_end - ctx.zeta(a0).unwrap());
        assert!((v - expect).norm() < 1e-9, "{v} {expect}");
        assert!(ctx.wp_prime(end).unwrap().norm() < 1e-6);
        let zero = elliptic_integral_weierstrass(&ctx, EllipticKind::Second, Endpoint::Finite(ctx.e1), ctx.e1, c(0.0, 0.0)).unwrap();
        assert_eq!(zero, c(0.0, 0.0));
        let _ = SignHint::Plus;
    }

    #[test]
    fn detour_homotopy() {
        let (_, curve) = n1_curve(c(0.0, 1.0));
        let g = BranchPoly::minus_q(&curve);
        let one = [EnergyPolynomial::constant(c(1.0, 0.0))];
        let r = curve.roots[1];
        let a = r + c(-2.0, 0.01);
        let b = r + c(2.0, 0.01);
        let s = g.eval(a).sqrt();
        let straight = integrate_path(&g, &one, &EPath::straight(a, b, s)).unwrap();
        let bent = integrate_path(&g, &one, &EPath { nodes: vec![a, r + c(0.0, 0.5), b], branch_seed: s }).unwrap();
        assert!((straight.values[0] - bent.values[0]).norm() < 1e-10);
        assert!((straight.end_sqrt - bent.end_sqrt).norm() < 1e-10);
    }
}
