//! Hermite-Krichever data and the Bethe Ansatz for the Lame equation.
//!
//! A solution is written as `exp(kappa x) sum_j b_j Phi^(j)(x, alpha)` with
//! `Phi(x, alpha) = exp(zeta(alpha) x) sigma(alpha - x) / (sigma(x) sigma(alpha))`,
//! or in Bethe form `prod sigma(x + t_j) / (sigma(x)^n prod sigma(t_j)) exp(c x)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, SignHint, C};
use crate::error::{LameError, Result};
use crate::monodromy::{Method, MonodromyResult};
use crate::poly::EnergyPolynomial;
use crate::spectral::{eval_wp_poly, generic_points, wp_even_derivatives, SpectralCurve, XiData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteKricheverData {
    #[serde(rename = "E")]
    pub e: C,
    /// `wp(alpha)`.
    pub xi: C,
    pub kappa: C,
    /// In the cell `s, t in [0, 1)`.
    pub alpha: C,
    pub zeta_alpha: C,
    /// Normalised so that the solution behaves like `x^(-n)` at the origin.
    pub b_tilde: Vec<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheSolution {
    pub n: usize,
    pub t: Vec<C>,
    pub c_exp: C,
    #[serde(rename = "E")]
    pub e: C,
}

fn cz() -> C {
    C::new(0.0, 0.0)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `(P1, P2, P3, P4)` for `n <= 3`, with `wp(alpha) = P1/P2` and
/// `kappa = P3/P4 sqrt(-Q)`.
pub fn closed_form_polys(ctx: &EllipticContext, n: usize) -> Result<[EnergyPolynomial; 4]> {
    let e1 = ctx.e1;
    let g2 = ctx.g2;
    let ep = EnergyPolynomial::new;
    let one = C::new(1.0, 0.0);
    match n {
        1 => Ok([ep(vec![cz(), -one]), EnergyPolynomial::constant(one), EnergyPolynomial::zero(), EnergyPolynomial::constant(one)]),
        2 => {
            let d = ep(vec![-3.0 * g2, cz(), one]);
            let lin = ep(vec![-3.0 * e1, one]);
            let tw = ep(vec![6.0 * e1, one]);
            let num = lin.mul(&tw).mul(&tw);
            let p2 = d.scale(C::new(9.0, 0.0));
            let p1 = p2.scale(e1).sub(&num);
            Ok([p1, p2, EnergyPolynomial::constant(C::new(2.0, 0.0)), d.scale(C::new(3.0, 0.0))])
        }
        3 => {
            let d = ep(vec![-18.75 * g2, cz(), one]);
            let first = ep(vec![45.0 * e1 * e1 - 15.0 * g2, 6.0 * e1, one]);
            let tw = ep(vec![-225.0 * e1 * e1 + 18.75 * g2, 15.0 * e1, one]);
            let num = first.mul(&tw).mul(&tw);
            let p2 = d.mul(&d).shift().scale(C::new(36.0, 0.0));
            let p1 = p2.scale(e1).sub(&num);
            Ok([p1, p2, EnergyPolynomial::constant(C::new(5.0, 0.0)), d.shift().scale(C::new(6.0, 0.0))])
        }
        _ => Err(LameError::Domain(format!("closed forms exist for n = 1, 2, 3, not n = {n}"))),
    }
}

/// Scale of `P2(E)` used for the degeneracy test.
fn p2_scale(p2: &EnergyPolynomial, e: C) -> f64 {
    p2.coeffs.iter().enumerate().map(|(k, c)| c.norm() * e.norm().powi(k as i32)).sum()
}

/// Derivatives `wp^(k)(x)`, `k = 0..count`.
fn wp_derivatives(ctx: &EllipticContext, x: C, count: usize) -> Result<Vec<C>> {
    let v = ctx.eval_all(x)?;
    let w = wp_even_derivatives(ctx.g2, ctx.g3, count / 2 + 1);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let m = k / 2;
        if k % 2 == 0 {
            out.push(eval_wp_poly(&w[m], v.wp));
        } else {
            let d: Vec<C> = w[m].iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
            out.push(v.wp_prime * eval_wp_poly(&d, v.wp));
        }
    }
    Ok(out)
}

/// `Phi^(j)(x, alpha)` for `j = 0..count`.
pub fn phi_derivatives(ctx: &EllipticContext, x: C, alpha: C, zeta_alpha: C, count: usize) -> Result<Vec<C>> {
    let phi0 = (zeta_alpha * x).exp() * ctx.sigma(alpha - x)? / (ctx.sigma(x)? * ctx.sigma(alpha)?);
    let mut l = vec![zeta_alpha - ctx.zeta(alpha - x)? - ctx.zeta(x)?];
    if count > 1 {
        let dx = wp_derivatives(ctx, x, count - 1)?;
        let da = wp_derivatives(ctx, alpha - x, count - 1)?;
        for i in 1..count {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            l.push(dx[i - 1] + s * da[i - 1]);
        }
    }
    let mut phi = vec![phi0];
    for j in 0..count.saturating_sub(1) {
        let mut s = cz();
        for i in 0..=j {
            s += binom(j, i) * l[i] * phi[j - i];
        }
        phi.push(s);
    }
    Ok(phi)
}

impl HermiteKricheverData {
    /// The solution `exp(kappa x) sum_j b_j Phi^(j)(x, alpha)`.
    pub fn eval(&self, ctx: &EllipticContext, x: C) -> Result<C> {
        let phi = phi_derivatives(ctx, x, self.alpha, self.zeta_alpha, self.b_tilde.len())?;
        let s: C = self.b_tilde.iter().zip(&phi).map(|(b, p)| b * p).sum();
        Ok((self.kappa * x).exp() * s)
    }

    /// Relative residual of the Lame equation for [`Self::eval`] at `x`.
    pub fn ode_residual(&self, ctx: &EllipticContext, x: C) -> Result<f64> {
        let n = self.b_tilde.len();
        let phi = phi_derivatives(ctx, x, self.alpha, self.zeta_alpha, n + 2)?;
        let pot = (n * (n + 1)) as f64 * ctx.wp(x)? - self.e;
        let (mut r, mut scale) = (cz(), 0.0);
        for (j, b) in self.b_tilde.iter().enumerate() {
            let f = b * phi[j];
            let f2 = b * (self.kappa * self.kappa * phi[j] + 2.0 * self.kappa * phi[j + 1] + phi[j + 2]);
            r += f2 - pot * f;
            scale += f2.norm() + (pot * f).norm();
        }
        Ok(r.norm() / scale.max(f64::MIN_POSITIVE))
    }
}

/// Solve for `b_tilde` so that the Hermite-Krichever form satisfies the
/// Lame equation at `4n` collocation points (right singular vector of the
/// smallest singular value).
fn fit_b_tilde_ode(ctx: &EllipticContext, n: usize, e: C, alpha: C, zeta_alpha: C, kappa: C) -> Result<Vec<C>> {
    let pts = generic_points(ctx, 4 * n);
    let nn = (n * (n + 1)) as f64;
    let mut m = DMatrix::<C>::zeros(pts.len(), n);
    for (r, &x) in pts.iter().enumerate() {
        let phi = phi_derivatives(ctx, x, alpha, zeta_alpha, n + 2)?;
        let pot = nn * ctx.wp(x)? - e;
        let mut norm = 0.0f64;
        for j in 0..n {
            let v = kappa * kappa * phi[j] + 2.0 * kappa * phi[j + 1] + phi[j + 2] - pot * phi[j];
            m[(r, j)] = v;
            norm = norm.max(v.norm()).max((pot * phi[j]).norm());
        }
        for j in 0..n {
            m[(r, j)] /= norm;
        }
    }
    // column scaling keeps high derivatives from dominating
    let mut cs = vec![1.0; n];
    for j in 0..n {
        cs[j] = m.column(j).norm().max(f64::MIN_POSITIVE);
        for r in 0..pts.len() {
            m[(r, j)] /= cs[j];
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| LameError::Degenerate("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let imin = (0..sv.len()).fold(0, |m, k| if sv[k] < sv[m] { k } else { m });
    let mut b: Vec<C> = (0..n).map(|j| vt[(imin, j)].conj() / cs[j]).collect();
    let lead = b[n - 1];
    if lead.norm() == 0.0 {
        return Err(LameError::Degenerate("Hermite-Krichever expansion has no leading term".into()));
    }
    let target = (if (n - 1).is_multiple_of(2) { 1.0 } else { -1.0 }) / factorial(n - 1);
    for v in &mut b {
        *v *= target / lead;
    }
    Ok(b)
}

/// Closed-form Hermite-Krichever data for `n = 1, 2, 3`.
pub fn hk_closed_form(ctx: &EllipticContext, curve: &SpectralCurve, e: C) -> Result<HermiteKricheverData> {
    let n = curve.n;
    let [p1, p2, p3, p4] = closed_form_polys(ctx, n)?;
    let p2e = p2.eval(e);
    if p2e.norm() < 1e-6 * p2_scale(&p2, e).max(1e-300) || p2e.norm() == 0.0 {
        return Err(LameError::Degenerate(format!("P2 vanishes at E = {e}")));
    }
    let xi = p1.eval(e) / p2e;
    let kappa = if n == 1 { cz() } else { p3.eval(e) / p4.eval(e) * (-curve.q(e)).sqrt() };
    let (a0, z0) = if n == 1 {
        // both branches solve the equation; take wp'(alpha) = 2 sqrt(-Q)
        let a = ctx.invert_wp_matching(xi, 2.0 * (-curve.q(e)).sqrt())?;
        (a, ctx.zeta(a)?)
    } else {
        ctx.invert_wp(xi, SignHint::Plus)?
    };
    let mut best: Option<(f64, HermiteKricheverData)> = None;
    let flips: &[bool] = if n == 1 { &[false] } else { &[false, true] };
    for &flip in flips {
        let (alpha, za) = if flip {
            let a = ctx.reduce_to_cell(-a0).reduced;
            (a, ctx.zeta(a)?)
        } else {
            (a0, z0)
        };
        let b = fit_b_tilde_ode(ctx, n, e, alpha, za, kappa)?;
        let cand = HermiteKricheverData { e, xi, kappa, alpha, zeta_alpha: za, b_tilde: b };
        let mut res = 0.0f64;
        for x in generic_points(ctx, 3) {
            res = res.max(cand.ode_residual(ctx, x)?);
        }
        if best.as_ref().map(|bb| res < bb.0).unwrap_or(true) {
            best = Some((res, cand));
        }
    }
    let (res, hk) = best.unwrap();
    if res > 1e-6 {
        return Err(LameError::Degenerate(format!("no alpha branch satisfies the equation (residual {res:.2e})")));
    }
    Ok(hk)
}

/// Multipliers `exp(-2 eta1 alpha + zeta(alpha) + kappa)` and
/// `exp(-2 eta3 alpha + tau (zeta(alpha) + kappa))`.  `base_root` is set to `E`.
pub fn multipliers_hk(ctx: &EllipticContext, hk: &HermiteKricheverData) -> MonodromyResult {
    let rho1 = (-2.0 * ctx.eta1 * hk.alpha + hk.zeta_alpha + hk.kappa).exp();
    let rho_tau = (-2.0 * ctx.eta3 * hk.alpha + ctx.tau * (hk.zeta_alpha + hk.kappa)).exp();
    MonodromyResult { e: hk.e, rho1, rho_tau, q1: 0, q3: 0, base_root: hk.e, method: Method::HermiteKrichever }
}

impl BetheSolution {
    /// Bethe residuals `-n zeta(t_j) + sum_k zeta(t_j - t_k) - c`.
    pub fn residuals(&self, ctx: &EllipticContext) -> Result<Vec<C>> {
        bethe_c_values(ctx, &self.t).map(|cs| cs.into_iter().map(|c| c - self.c_exp).collect())
    }

    /// Energy from the Bethe roots.
    pub fn energy(&self, ctx: &EllipticContext) -> Result<C> {
        bethe_energy(ctx, &self.t, self.c_exp)
    }

    /// The Bethe eigenfunction at `x`.
    pub fn eval(&self, ctx: &EllipticContext, x: C) -> Result<C> {
        let mut v = (self.c_exp * x).exp() / ctx.sigma(x)?.powu(self.n as u32);
        for t in &self.t {
            v *= ctx.sigma(x + t)? / ctx.sigma(*t)?;
        }
        Ok(v)
    }

    /// Relative residual of the Lame equation at `x` via the log-derivative.
    pub fn ode_residual(&self, ctx: &EllipticContext, x: C) -> Result<f64> {
        let n = self.n as f64;
        let mut l = self.c_exp - n * ctx.zeta(x)?;
        let mut dl = n * ctx.wp(x)?;
        for t in &self.t {
            let v = ctx.eval_all(x + t)?;
            l += v.zeta;
            dl -= v.wp;
        }
        let pot = n * (n + 1.0) * ctx.wp(x)? - self.e;
        let lhs = dl + l * l;
        Ok((lhs - pot).norm() / (dl.norm() + (l * l).norm() + pot.norm()))
    }
}

fn bethe_c_values(ctx: &EllipticContext, t: &[C]) -> Result<Vec<C>> {
    let n = t.len() as f64;
    let mut out = Vec::with_capacity(t.len());
    for (j, tj) in t.iter().enumerate() {
        let mut s = -n * ctx.zeta(*tj)?;
        for (k, tk) in t.iter().enumerate() {
            if k != j {
                s += ctx.zeta(tj - tk)?;
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn bethe_energy(ctx: &EllipticContext, t: &[C], c: C) -> Result<C> {
    let n = t.len() as f64;
    let mut e = -c * c;
    for tj in t {
        let v = ctx.eval_all(*tj)?;
        e -= n * (v.wp - v.zeta * v.zeta);
    }
    for j in 0..t.len() {
        for k in j + 1..t.len() {
            let v = ctx.eval_all(t[j] - t[k])?;
            e += v.wp - v.zeta * v.zeta;
        }
    }
    Ok(e)
}

fn half_lattice_distance(ctx: &EllipticContext, x: C) -> f64 {
    ctx.lattice_distance(2.0 * x) / 2.0
}

fn check_admissible(ctx: &EllipticContext, t: &[C]) -> Result<()> {
    for (j, tj) in t.iter().enumerate() {
        if half_lattice_distance(ctx, *tj) < 1e-4 {
            return Err(LameError::Degenerate(format!("Bethe root {tj} hits a half period")));
        }
        for tk in &t[j + 1..] {
            if ctx.lattice_distance(tj - tk) < 1e-4 {
                return Err(LameError::Degenerate("Bethe roots collide".into()));
            }
        }
    }
    Ok(())
}

/// Seed from the zeros of `Xi(x, E) = Lambda(x) Lambda(-x)`: the roots of
/// `Xi` as a polynomial in `wp` are `wp(t_j)`, and the signs of the `t_j` are
/// chosen to make the Bethe equations consistent.
fn seed_from_xi(xi: &XiData, e: C) -> Result<BetheSolution> {
    let ctx = &xi.ctx;
    let n = xi.n;
    let h = EnergyPolynomial::new(xi.h_at(e));
    if h.degree() != n {
        return Err(LameError::Degenerate("Xi loses degree in wp".into()));
    }
    let roots = h.roots()?;
    let mut base = Vec::with_capacity(n);
    for r in &roots {
        base.push(ctx.solve_wp(*r)?);
    }
    check_admissible(ctx, &base)?;
    let mut best: Option<(f64, Vec<C>)> = None;
    for mask in 0..(1usize << (n - 1)) {
        let t: Vec<C> = base
            .iter()
            .enumerate()
            .map(|(j, b)| if j > 0 && mask >> (j - 1) & 1 == 1 { -b } else { *b })
            .collect();
        let cs = match bethe_c_values(ctx, &t) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let mean: C = cs.iter().sum::<C>() / n as f64;
        let spread = cs.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max) / (1.0 + mean.norm());
        if best.as_ref().map(|b| spread < b.0).unwrap_or(true) {
            best = Some((spread, t));
        }
    }
    let (_, t) = best.ok_or_else(|| LameError::Degenerate("no admissible sign pattern".into()))?;
    let c = bethe_c_values(ctx, &t)?.iter().sum::<C>() / n as f64;
    Ok(BetheSolution { n, t, c_exp: c, e })
}

/// Newton on `(t_1..t_n, c)` for the Bethe equations plus the energy equation.
pub fn solve_bethe(xi: &XiData, curve: &SpectralCurve, target_e: C, seed: Option<&BetheSolution>) -> Result<BetheSolution> {
    let ctx = &xi.ctx;
    let n = xi.n;
    let qv = curve.q(target_e).norm();
    let dq = curve.q_poly.derivative().eval(target_e).norm();
    if qv <= 1e-10 * dq.max(1.0) * (1.0 + target_e.norm()) {
        return Err(LameError::Domain(format!("E = {target_e} is a root of Q")));
    }
    let start = match seed {
        Some(s) if s.n == n => s.clone(),
        Some(s) => return Err(LameError::Domain(format!("seed has n = {} instead of {n}", s.n))),
        None => seed_from_xi(xi, target_e)?,
    };
    let mut t = start.t;
    let mut c = start.c_exp;
    let escale = 1.0 + target_e.norm();
    let mut best = f64::INFINITY;
    for _ in 0..60 {
        check_admissible(ctx, &t)?;
        let (f, jac) = bethe_system(ctx, &t, c, target_e)?;
        let res = f.iter().map(|v| v.norm()).fold(0.0, f64::max) / escale;
        best = best.min(res);
        if res < 1e-13 {
            break;
        }
        let jm = DMatrix::from_row_slice(n + 1, n + 1, &jac);
        let rhs = DVector::from_vec(f.iter().map(|v| -v).collect());
        let dx = jm
            .lu()
            .solve(&rhs)
            .ok_or_else(|| LameError::Degenerate("singular Bethe Jacobian".into()))?;
        // limit steps to a fraction of the cell
        let step = dx.iter().take(n).map(|v| v.norm()).fold(0.0, f64::max);
        let damp = if step > 0.1 { 0.1 / step } else { 1.0 };
        for j in 0..n {
            t[j] += damp * dx[j];
        }
        c += damp * dx[n];
    }
    let sol = BetheSolution { n, t, c_exp: c, e: target_e };
    let res = sol.residuals(ctx)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let de = (sol.energy(ctx)? - target_e).norm();
    if res > 1e-9 * escale || de > 1e-9 * escale {
        return Err(LameError::NoConvergence { what: "Bethe equations".into(), residual: best.min(res.max(de) / escale) });
    }
    Ok(sol)
}

type System = (Vec<C>, Vec<C>);

fn bethe_system(ctx: &EllipticContext, t: &[C], c: C, target: C) -> Result<System> {
    let n = t.len();
    let nf = n as f64;
    let mut f = vec![cz(); n + 1];
    let mut jac = vec![cz(); (n + 1) * (n + 1)];
    let at = |r: usize, col: usize| r * (n + 1) + col;
    let mut energy = -c * c;
    jac[at(n, n)] = -2.0 * c;
    let gprime = |v: &crate::elliptic::WeierValues| v.wp_prime + 2.0 * v.zeta * v.wp;
    for j in 0..n {
        let vj = ctx.eval_all(t[j])?;
        f[j] = -nf * vj.zeta - c;
        jac[at(j, j)] = nf * vj.wp;
        jac[at(j, n)] = C::new(-1.0, 0.0);
        energy -= nf * (vj.wp - vj.zeta * vj.zeta);
        jac[at(n, j)] -= nf * gprime(&vj);
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = ctx.eval_all(t[j] - t[k])?;
            f[j] += d.zeta;
            jac[at(j, j)] -= d.wp;
            jac[at(j, k)] += d.wp;
            jac[at(n, j)] += gprime(&d);
            if k > j {
                energy += d.wp - d.zeta * d.zeta;
            }
        }
    }
    f[n] = energy - target;
    Ok((f, jac))
}

/// Hermite-Krichever data of a Bethe solution: `alpha = -sum t_j`,
/// `kappa = c - zeta(alpha)`, `b_tilde` by least squares against the Bethe
/// eigenfunction.
pub fn hk_from_bethe(ctx: &EllipticContext, sol: &BetheSolution) -> Result<HermiteKricheverData> {
    let n = sol.n;
    let alpha_raw: C = -sol.t.iter().sum::<C>();
    let kappa = sol.c_exp - ctx.zeta(alpha_raw)?;
    let alpha = ctx.reduce_to_cell(alpha_raw).reduced;
    let v = ctx.eval_all(alpha)?;
    let pts = generic_points(ctx, 4 * n);
    let mut m = DMatrix::<C>::zeros(pts.len(), n);
    let mut y = DVector::<C>::zeros(pts.len());
    for (r, &x) in pts.iter().enumerate() {
        let phi = phi_derivatives(ctx, x, alpha, v.zeta, n)?;
        let ek = (kappa * x).exp();
        let target = sol.eval(ctx, x)?;
        let w = 1.0 / target.norm().max(f64::MIN_POSITIVE);
        for j in 0..n {
            m[(r, j)] = ek * phi[j] * w;
        }
        y[r] = target * w;
    }
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-13 * smax {
        return Err(LameError::Degenerate("collocation matrix is singular".into()));
    }
    let b = svd.solve(&y, 1e-15).map_err(|e| LameError::Degenerate(e.to_string()))?;
    let res = (&m * &b - &y).norm() / y.norm();
    if res > 1e-7 {
        return Err(LameError::Consistency(format!("Hermite-Krichever fit residual {res:.2e}")));
    }
    Ok(HermiteKricheverData { e: sol.e, xi: v.wp, kappa, alpha, zeta_alpha: v.zeta, b_tilde: b.iter().cloned().collect() })
}
