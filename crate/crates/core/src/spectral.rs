//! The even doubly-periodic product solution `Xi(x, E)` and the spectral
//! polynomial `Q(E)`.
//!
//! `Xi` is a polynomial in `wp(x)` whose coefficients are polynomials in `E`.
//! Substituting `h(wp)` into
//!
//! ```text
//! Xi''' - 4 (N wp - E) Xi' - 2 N wp' Xi = 0,    N = n (n + 1)
//! ```
//!
//! and dividing by `wp'` leaves a polynomial identity in `wp` that fixes the
//! coefficients top-down.  `Q(E)` is the x-independent combination
//! `Xi Xi''/2 - Xi'^2/4 - (N wp - E) Xi^2`.

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticContext, C};
use crate::error::{LameError, Result};
use crate::poly::EnergyPolynomial;

fn cz() -> C {
    C::new(0.0, 0.0)
}

/// Polynomial in `wp` with `E`-polynomial coefficients, ascending in `wp`.
#[derive(Debug, Clone, PartialEq)]
struct BiPoly(Vec<EnergyPolynomial>);

impl BiPoly {
    fn from_numbers(c: &[C]) -> Self {
        BiPoly(c.iter().map(|&v| EnergyPolynomial::constant(v)).collect())
    }

    fn coeff(&self, k: usize) -> EnergyPolynomial {
        self.0.get(k).cloned().unwrap_or_else(EnergyPolynomial::zero)
    }

    fn add(&self, o: &Self) -> Self {
        let len = self.0.len().max(o.0.len());
        BiPoly((0..len).map(|k| self.coeff(k).add(&o.coeff(k))).collect())
    }

    fn scale(&self, s: C) -> Self {
        BiPoly(self.0.iter().map(|p| p.scale(s)).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out = vec![EnergyPolynomial::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        BiPoly(out)
    }

    fn d_wp(&self) -> Self {
        if self.0.len() <= 1 {
            return BiPoly(vec![EnergyPolynomial::zero()]);
        }
        BiPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| p.scale(C::new(k as f64, 0.0)))
                .collect(),
        )
    }
}

/// Evaluate a polynomial in `wp` (ascending coefficients).
pub fn eval_wp_poly(c: &[C], wp: C) -> C {
    c.iter().rev().fold(cz(), |acc, v| acc * wp + v)
}

fn d_poly(c: &[C]) -> Vec<C> {
    c.iter().enumerate().skip(1).map(|(k, v)| v * k as f64).collect()
}

/// `(d/dx)^(2j) wp` as polynomials in `wp`, `j = 0..count`.
pub fn wp_even_derivatives(g2: C, g3: C, count: usize) -> Vec<Vec<C>> {
    let s = [-g2 / 2.0, cz(), C::new(6.0, 0.0)];
    let p = [-g3, -g2, cz(), C::new(4.0, 0.0)];
    let mul = |a: &[C], b: &[C]| {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![cz(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut w = vec![vec![cz(), C::new(1.0, 0.0)]];
    for _ in 1..count {
        let f = w.last().unwrap();
        let d1 = d_poly(f);
        let d2 = d_poly(&d1);
        let a = mul(&s, &d1);
        let b = mul(&p, &d2);
        let len = a.len().max(b.len());
        let mut next: Vec<C> = (0..len)
            .map(|k| a.get(k).copied().unwrap_or_else(cz) + b.get(k).copied().unwrap_or_else(cz))
            .collect();
        while next.len() > 1 && next.last().unwrap().norm() == 0.0 {
            next.pop();
        }
        w.push(next);
    }
    w
}

/// The product solution in both bases plus its `x`-side coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiData {
    pub n: usize,
    pub ctx: EllipticContext,
    /// `b[j]` multiplies `wp^(n-j)`.
    pub b: Vec<EnergyPolynomial>,
    pub c0: EnergyPolynomial,
    /// `a[j]` multiplies `(d/dx)^(2j) wp`.
    pub a: Vec<EnergyPolynomial>,
    pub c: EnergyPolynomial,
    /// `a_tilde[i]` (a polynomial in `wp`) multiplies `E^(n-i)`.
    pub a_tilde: Vec<Vec<C>>,
}

/// `Q(E)` with its roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub n: usize,
    pub q_poly: EnergyPolynomial,
    pub roots: Vec<C>,
}

impl SpectralCurve {
    pub fn q(&self, e: C) -> C {
        self.q_poly.eval(e)
    }

    /// Characteristic size of the root set, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(1.0, f64::max)
    }

    pub fn nearest_root(&self, e: C) -> (usize, f64) {
        self.roots
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (r - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }
}

/// Build `Xi` in the `wp`-power basis, then fill the derivative basis and the
/// `x`-side coefficients.
pub fn compute_xi(ctx: &EllipticContext, n: usize) -> Result<XiData> {
    if n == 0 {
        return Err(LameError::Domain("n must be at least 1".into()));
    }
    let big_n = (n * (n + 1)) as f64;
    let (g2, g3) = (ctx.g2, ctx.g3);
    let mut beta = vec![EnergyPolynomial::zero(); n + 4];
    beta[n] = EnergyPolynomial::constant(C::new(1.0, 0.0));
    for j in (0..n).rev() {
        let jf = j as f64;
        let aj = 2.0 * (2.0 * jf + 1.0) * (jf * (jf + 1.0) - big_n);
        if aj == 0.0 {
            return Err(LameError::Consistency(format!("singular recursion at j={j}")));
        }
        let mut rhs = beta[j + 1].shift().scale(C::new(4.0 * (jf + 1.0), 0.0));
        rhs = rhs.sub(&beta[j + 2].scale(g2 * ((jf + 2.0) * (jf + 1.0) * (2.0 * jf + 3.0) / 2.0)));
        rhs = rhs.sub(&beta[j + 3].scale(g3 * ((jf + 3.0) * (jf + 2.0) * (jf + 1.0))));
        beta[j] = rhs.scale(C::new(-1.0 / aj, 0.0));
    }
    beta.truncate(n + 1);
    let lead = beta[0].coeff(n);
    if lead.norm() == 0.0 {
        return Err(LameError::Consistency("constant term has wrong degree".into()));
    }
    let norm = C::new(1.0, 0.0) / lead;
    for bk in beta.iter_mut() {
        *bk = bk.scale(norm);
    }
    remove_common_divisor(&mut beta)?;

    let c0 = beta[0].clone();
    let b: Vec<EnergyPolynomial> = (0..n).map(|j| beta[n - j].clone()).collect();
    let mut xi = XiData {
        n,
        ctx: ctx.clone(),
        b,
        c0,
        a: vec![],
        c: EnergyPolynomial::zero(),
        a_tilde: vec![],
    };
    convert_basis(&mut xi);
    xi.a_tilde = xi_x_coefficients(&xi);
    Ok(xi)
}

/// Divide out roots shared by every coefficient polynomial (detected at 1e-8).
fn remove_common_divisor(beta: &mut [EnergyPolynomial]) -> Result<()> {
    loop {
        let c0 = &beta[0];
        if c0.degree() == 0 {
            return Ok(());
        }
        let roots = c0.roots()?;
        let mut shared = None;
        'outer: for r in roots {
            for bk in beta.iter().skip(1) {
                let scale = bk.max_abs().max(1e-300) * (1.0 + r.norm()).powi(bk.degree() as i32);
                if bk.eval(r).norm() > 1e-8 * scale {
                    continue 'outer;
                }
            }
            shared = Some(r);
            break;
        }
        let Some(r) = shared else { return Ok(()) };
        for bk in beta.iter_mut() {
            *bk = bk.deflate(r).0;
        }
        let l = beta[0].leading();
        for bk in beta.iter_mut() {
            *bk = bk.scale(C::new(1.0, 0.0) / l);
        }
    }
}

/// Rewrite `Xi = c + sum_j a_j (d/dx)^(2j) wp` from the `wp`-power basis.
pub fn convert_basis(xi: &mut XiData) {
    let n = xi.n;
    let w = wp_even_derivatives(xi.ctx.g2, xi.ctx.g3, n);
    // remaining[k] multiplies wp^k
    let mut rem: Vec<EnergyPolynomial> = (0..=n).map(|k| xi.wp_coeff(k)).collect();
    let mut a = vec![EnergyPolynomial::zero(); n];
    for j in (0..n).rev() {
        let wj = &w[j];
        let lead = wj[j + 1];
        let aj = rem[j + 1].scale(C::new(1.0, 0.0) / lead);
        for (k, wk) in wj.iter().enumerate() {
            rem[k] = rem[k].sub(&aj.scale(*wk));
        }
        a[j] = aj;
    }
    xi.a = a;
    xi.c = rem[0].clone();
}

/// `a_tilde[i]` as polynomials in `wp`.
pub fn xi_x_coefficients(xi: &XiData) -> Vec<Vec<C>> {
    let n = xi.n;
    (0..=n)
        .map(|i| {
            let mut v: Vec<C> = (0..=n).map(|k| xi.wp_coeff(k).coeff(n - i)).collect();
            while v.len() > 1 && v.last().unwrap().norm() == 0.0 {
                v.pop();
            }
            v
        })
        .collect()
}

impl XiData {
    /// Coefficient of `wp^k` as a polynomial in `E`.
    pub fn wp_coeff(&self, k: usize) -> EnergyPolynomial {
        if k == 0 {
            self.c0.clone()
        } else if k <= self.n {
            self.b[self.n - k].clone()
        } else {
            EnergyPolynomial::zero()
        }
    }

    /// `h(wp)` coefficients at fixed `E` (ascending in `wp`).
    pub fn h_at(&self, e: C) -> Vec<C> {
        (0..=self.n).map(|k| self.wp_coeff(k).eval(e)).collect()
    }

    /// `dh/dE` coefficients at fixed `E`.
    pub fn dh_de_at(&self, e: C) -> Vec<C> {
        (0..=self.n).map(|k| self.wp_coeff(k).derivative().eval(e)).collect()
    }

    /// `Xi(x, E)` from the `wp`-power basis.
    pub fn value(&self, x: C, e: C) -> Result<C> {
        let wp = self.ctx.wp(x)?;
        Ok(eval_wp_poly(&self.h_at(e), wp))
    }

    /// `(Xi, Xi', Xi'')` in `x`.
    pub fn value_derivs(&self, x: C, e: C) -> Result<(C, C, C)> {
        let v = self.ctx.eval_all(x)?;
        let h = self.h_at(e);
        let h1 = d_poly(&h);
        let h2 = d_poly(&h1);
        let s = 6.0 * v.wp * v.wp - self.ctx.g2 / 2.0;
        let f = eval_wp_poly(&h, v.wp);
        let f1 = eval_wp_poly(&h1, v.wp);
        let f2 = eval_wp_poly(&h2, v.wp);
        Ok((f, f1 * v.wp_prime, f2 * v.wp_prime * v.wp_prime + f1 * s))
    }

    /// `Xi(x, E)` from the derivative basis.
    pub fn value_derivative_basis(&self, x: C, e: C) -> Result<C> {
        let wp = self.ctx.wp(x)?;
        let w = wp_even_derivatives(self.ctx.g2, self.ctx.g3, self.n);
        let mut v = self.c.eval(e);
        for (j, aj) in self.a.iter().enumerate() {
            v += aj.eval(e) * eval_wp_poly(&w[j], wp);
        }
        Ok(v)
    }

    /// `sum_i a_tilde_{n-i}(x) E^i`.
    pub fn value_x_side(&self, x: C, e: C) -> Result<C> {
        let wp = self.ctx.wp(x)?;
        let mut v = cz();
        let mut ek = C::new(1.0, 0.0);
        for i in (0..=self.n).rev() {
            v += eval_wp_poly(&self.a_tilde[i], wp) * ek;
            ek *= e;
        }
        Ok(v)
    }

    /// Residual of the third-order product equation at `(x, E)`, relative to
    /// the size of its terms.
    pub fn product_ode_residual(&self, x: C, e: C) -> Result<f64> {
        let v = self.ctx.eval_all(x)?;
        let h = self.h_at(e);
        let h1 = d_poly(&h);
        let h2 = d_poly(&h1);
        let h3 = d_poly(&h2);
        let p = v.wp_prime * v.wp_prime;
        let s = 6.0 * v.wp * v.wp - self.ctx.g2 / 2.0;
        let big_n = (self.n * (self.n + 1)) as f64;
        let f = eval_wp_poly(&h, v.wp);
        let f1 = eval_wp_poly(&h1, v.wp);
        let f2 = eval_wp_poly(&h2, v.wp);
        let f3 = eval_wp_poly(&h3, v.wp);
        let d1 = f1 * v.wp_prime;
        let d3 = f3 * p * v.wp_prime + 3.0 * f2 * v.wp_prime * s + f1 * 12.0 * v.wp * v.wp_prime;
        let terms = [d3, 4.0 * (big_n * v.wp - e) * d1, 2.0 * big_n * v.wp_prime * f];
        let scale = terms.iter().map(|t| t.norm()).fold(1e-300, f64::max);
        Ok((terms[0] - terms[1] - terms[2]).norm() / scale)
    }

    /// `Q(E)` evaluated from `Xi` at the point `x`.
    pub fn q_at_x(&self, x: C, e: C) -> Result<C> {
        let wp = self.ctx.wp(x)?;
        let (f, f1, f2) = self.value_derivs(x, e)?;
        let big_n = (self.n * (self.n + 1)) as f64;
        Ok(0.5 * f * f2 - 0.25 * f1 * f1 - (big_n * wp - e) * f * f)
    }
}

/// Deterministic evaluation points at distance at least `0.05` from the
/// half-lattice where `|wp(x)|` stays below `1.5 max |e_k|`.
///
/// Large `|wp|` makes the terms of `Q` cancel badly for `n >= 4`, so the
/// points stay well inside the cell.
pub fn generic_points(ctx: &EllipticContext, count: usize) -> Vec<C> {
    let phi = 0.618_033_988_749_894_9;
    let sqrt2 = std::f64::consts::SQRT_2 - 1.0;
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count && k < 10_000 {
        let s = (0.13 + k as f64 * phi).fract();
        let t = (0.29 + k as f64 * sqrt2).fract();
        k += 1;
        let x = s + t * ctx.tau;
        let bound = 1.5 * ctx.e().iter().map(|e| e.norm()).fold(0.0, f64::max);
        if ctx.lattice_distance(x) < 0.15 || ctx.wp(x).map(|v| v.norm() > bound).unwrap_or(true) {
            continue;
        }
        if ctx.lattice_distance(2.0 * x) < 0.1 {
            continue;
        }
        out.push(x);
    }
    out
}

/// `Q(E)` from `Xi`, checked for `x`-independence.
pub fn compute_q(xi: &XiData) -> Result<SpectralCurve> {
    let n = xi.n;
    let big_n = (n * (n + 1)) as f64;
    let h = BiPoly(xi.wp_coeff_all());
    let p = BiPoly::from_numbers(&[-xi.ctx.g3, -xi.ctx.g2, cz(), C::new(4.0, 0.0)]);
    let s = BiPoly::from_numbers(&[-xi.ctx.g2 / 2.0, cz(), C::new(6.0, 0.0)]);
    let dh = h.d_wp();
    let d2h = dh.d_wp();
    let e_minus_nwp = BiPoly(vec![EnergyPolynomial::var(), EnergyPolynomial::constant(C::new(-big_n, 0.0))]);
    let t1 = h.mul(&h).mul(&e_minus_nwp);
    let t2 = h.mul(&s.mul(&dh).add(&p.mul(&d2h))).scale(C::new(0.5, 0.0));
    let t3 = p.mul(&dh).mul(&dh).scale(C::new(-0.25, 0.0));
    let q = t1.add(&t2).add(&t3);

    let scale = q.0.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    for (k, ck) in q.0.iter().enumerate().skip(1) {
        if ck.max_abs() > 1e-9 * scale {
            return Err(LameError::Consistency(format!(
                "Q depends on wp at power {k} (size {:.3e})",
                ck.max_abs()
            )));
        }
    }
    let mut qp = q.0[0].clone();
    qp.coeffs.resize(2 * n + 2, cz());
    if qp.leading().norm() < 0.5 {
        return Err(LameError::Consistency(format!("Q has degree {} instead of {}", qp.degree(), 2 * n + 1)));
    }
    qp = qp.monic();

    // independent x-side check at n + 2 points
    let pts = generic_points(&xi.ctx, n + 2);
    let root_scale = qp.coeffs.iter().take(2 * n + 1).enumerate().map(|(k, c)| c.norm().powf(1.0 / (2 * n + 1 - k) as f64)).fold(1.0, f64::max);
    for (i, e) in [C::new(0.37, 0.21), C::new(-0.52, 0.44)].iter().enumerate() {
        let e = e * root_scale;
        let target = qp.eval(e);
        for x in &pts {
            let v = xi.q_at_x(*x, e)?;
            if (v - target).norm() > 1e-9 * (1.0 + target.norm()) {
                return Err(LameError::Consistency(format!(
                    "Q(E) depends on x (sample {i}, deviation {:.3e})",
                    (v - target).norm() / (1.0 + target.norm())
                )));
            }
        }
    }
    let roots = qp.roots()?;
    Ok(SpectralCurve { n, q_poly: qp, roots })
}

impl XiData {
    fn wp_coeff_all(&self) -> Vec<EnergyPolynomial> {
        (0..=self.n).map(|k| self.wp_coeff(k)).collect()
    }
}

/// Roots of `c0` at which every `b_j` also vanishes (should be empty).
pub fn common_roots(xi: &XiData, tol: f64) -> Result<Vec<C>> {
    let roots = xi.c0.roots()?;
    Ok(roots
        .into_iter()
        .filter(|r| {
            xi.b.iter().all(|bk| {
                let scale = bk.max_abs() * (1.0 + r.norm()).powi(bk.degree() as i32);
                bk.eval(*r).norm() <= tol * scale
            })
        })
        .collect())
}
