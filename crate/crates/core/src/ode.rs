//! Direct integration of `f'' = (n(n+1) wp(x) - E) f` along polylines in the
//! complex `x`-plane.

use ode_solvers::{Dop853, OutputType, SVector, System};

use crate::elliptic::{EllipticContext, C};
use crate::error::{LameError, Result};

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C; 2]; 2];

// ode_solvers 0.6.2 ships c_12 = 0 in its DOP853 tableau, which breaks
// non-autonomous systems; the path parameter is carried as state entry 8.
type State = SVector<f64, 9>;

// (rtol, atol); the looser pair is a retry for runs where the error
// estimate sits at the roundoff floor and the step size collapses.
const TOLERANCES: [(f64, f64); 2] = [(1e-14, 1e-16), (1e-12, 1e-14)];

struct Segment<'a> {
    ctx: &'a EllipticContext,
    big_n: f64,
    e: C,
    a: C,
    d: C,
}

impl System<f64, State> for Segment<'_> {
    fn system(&self, _s: f64, y: &State, dy: &mut State) {
        let x = self.a + self.d * y[8];
        dy[8] = 1.0;
        let wp = self.ctx.wp(x).unwrap_or(C::new(f64::NAN, f64::NAN));
        let k = self.big_n * wp - self.e;
        for col in 0..2 {
            let f = C::new(y[4 * col], y[4 * col + 1]);
            let g = C::new(y[4 * col + 2], y[4 * col + 3]);
            let df = self.d * g;
            let dg = self.d * k * f;
            dy[4 * col] = df.re;
            dy[4 * col + 1] = df.im;
            dy[4 * col + 2] = dg.re;
            dy[4 * col + 3] = dg.im;
        }
    }
}

fn pack(cols: &[[C; 2]; 2]) -> State {
    let mut y = State::zeros();
    for (col, v) in cols.iter().enumerate() {
        y[4 * col] = v[0].re;
        y[4 * col + 1] = v[0].im;
        y[4 * col + 2] = v[1].re;
        y[4 * col + 3] = v[1].im;
    }
    y
}

fn unpack(y: &State) -> [[C; 2]; 2] {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for (col, v) in out.iter_mut().enumerate() {
        v[0] = C::new(y[4 * col], y[4 * col + 1]);
        v[1] = C::new(y[4 * col + 2], y[4 * col + 3]);
    }
    out
}

/// Smallest distance from the segment `a -> b` to a lattice point.
pub fn segment_lattice_distance(ctx: &EllipticContext, a: C, b: C) -> f64 {
    let (sa, ta) = ctx.cell_coords(a);
    let (sb, tb) = ctx.cell_coords(b);
    let (n_lo, n_hi) = (ta.min(tb).floor() as i64 - 1, ta.max(tb).ceil() as i64 + 1);
    let (m_lo, m_hi) = (sa.min(sb).floor() as i64 - 1, sa.max(sb).ceil() as i64 + 1);
    let d = b - a;
    let len2 = d.norm_sqr();
    let mut best = f64::INFINITY;
    for n in n_lo..=n_hi {
        for m in m_lo..=m_hi {
            let w = C::new(m as f64, 0.0) + (n as f64) * ctx.tau;
            let t = if len2 > 0.0 { (((w - a) * d.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((a + d * t - w).norm());
        }
    }
    best
}

/// Propagate two solutions `(f, f')` along the polyline `nodes`.
///
/// `min_clearance` is the smallest allowed distance from the path to a pole.
pub fn propagate(
    ctx: &EllipticContext,
    n: usize,
    e: C,
    nodes: &[C],
    init: [[C; 2]; 2],
    min_clearance: f64,
) -> Result<[[C; 2]; 2]> {
    let big_n = (n * (n + 1)) as f64;
    let mut cols = init;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let clearance = segment_lattice_distance(ctx, a, b);
        if clearance < min_clearance {
            return Err(LameError::PathTooClose { at: a });
        }
        let y = TOLERANCES
            .iter()
            .find_map(|&(rtol, atol)| integrate_segment(Segment { ctx, big_n, e, a, d: b - a }, &cols, rtol, atol))
            .ok_or(LameError::PathTooClose { at: a })?;
        cols = unpack(&y);
    }
    Ok(cols)
}

fn integrate_segment(sys: Segment<'_>, cols: &[[C; 2]; 2], rtol: f64, atol: f64) -> Option<State> {
    // the stiffness heuristic misfires on oscillatory solutions, so it is disabled
    let mut solver = Dop853::from_param(
        sys,
        0.0,
        1.0,
        1.0,
        pack(cols),
        rtol,
        atol,
        0.9,
        0.0,
        0.333,
        6.0,
        1.0,
        0.0,
        200_000,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().ok()?;
    let y = solver.y_out().last().copied()?;
    y.iter().all(|v| v.is_finite()).then_some(y)
}

/// Transfer matrix in the `(f, f')` basis along `nodes`.
///
/// Column `k` is the image of the `k`-th unit vector.
pub fn transfer_matrix(ctx: &EllipticContext, n: usize, e: C, nodes: &[C]) -> Result<Mat2> {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let cols = propagate(ctx, n, e, nodes, [[one, zero], [zero, one]], 0.1)?;
    Ok([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_vec(a: &Mat2, v: [C; 2]) -> [C; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn det(m: &Mat2) -> C {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Mat2) -> C {
    m[0][0] + m[1][1]
}

/// Eigenvalues ordered so that `|lambda_0| >= |lambda_1|`.
pub fn eigenvalues(m: &Mat2) -> [C; 2] {
    let tr = trace(m);
    let disc = (tr * tr - 4.0 * det(m)).sqrt();
    let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    // recompute the smaller one from the determinant to avoid cancellation
    let (big, _) = if l1.norm() >= l2.norm() { (l1, l2) } else { (l2, l1) };
    let small = if big.norm() > 0.0 { det(m) / big } else { C::new(0.0, 0.0) };
    [big, small]
}

/// Eigenvector of `m` for eigenvalue `lambda`, unit norm.
pub fn eigenvector(m: &Mat2, lambda: C) -> [C; 2] {
    let r0 = [m[0][0] - lambda, m[0][1]];
    let r1 = [m[1][0], m[1][1] - lambda];
    let v = if r0[0].norm() + r0[1].norm() >= r1[0].norm() + r1[1].norm() {
        [r0[1], -r0[0]]
    } else {
        [r1[1], -r1[0]]
    };
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if nv == 0.0 {
        return [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    }
    [v[0] / nv, v[1] / nv]
}

/// Shift direction for a Floquet computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    One,
    Tau,
}

/// Transfer data for one period shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetData {
    pub matrix: Mat2,
    pub multipliers: [C; 2],
    pub det: C,
}

/// Base point used by the direct oracle.
pub fn base_point(ctx: &EllipticContext) -> C {
    (C::new(1.0, 0.0) + ctx.tau) / 2.0
}

/// Transfer matrix for `x -> x + 1` or `x -> x + tau` along the straight line
/// from the base point.
pub fn floquet_direct(ctx: &EllipticContext, n: usize, e: C, shift: Shift) -> Result<FloquetData> {
    let x0 = base_point(ctx);
    let step = match shift {
        Shift::One => C::new(1.0, 0.0),
        Shift::Tau => ctx.tau,
    };
    let m = transfer_matrix(ctx, n, e, &[x0, x0 + step])?;
    Ok(FloquetData { matrix: m, multipliers: eigenvalues(&m), det: det(&m) })
}

/// Simultaneous eigen-pairs `(rho_1, rho_tau)` of the two commuting transfer
/// matrices at the base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectMonodromy {
    pub m1: Mat2,
    pub mtau: Mat2,
    pub pairs: [(C, C); 2],
}

impl DirectMonodromy {
    /// The pair closest to `(rho1, rho_tau)`.
    pub fn closest(&self, rho1: C, rho_tau: C) -> (C, C) {
        let d = |p: &(C, C)| (p.0 - rho1).norm() + (p.1 - rho_tau).norm();
        if d(&self.pairs[0]) <= d(&self.pairs[1]) {
            self.pairs[0]
        } else {
            self.pairs[1]
        }
    }
}

pub fn direct_monodromy(ctx: &EllipticContext, n: usize, e: C) -> Result<DirectMonodromy> {
    let m1 = floquet_direct(ctx, n, e, Shift::One)?.matrix;
    let mtau = floquet_direct(ctx, n, e, Shift::Tau)?.matrix;
    Ok(DirectMonodromy { m1, mtau, pairs: joint_pairs(&m1, &mtau) })
}

/// `(rho_1(L(x)), rho_1(L(-x)))` for the forward-dominant Floquet solution `L`.
///
/// The second multiplier comes from its own integration `x0 -> x0 - 1`, where
/// `L(-x)` dominates, instead of from the small eigenvalue of the forward
/// matrix. `x0` is a half period, so the reflected path is a lattice translate.
pub fn reflected_pair(ctx: &EllipticContext, n: usize, e: C) -> Result<(C, C)> {
    let x0 = base_point(ctx);
    let fwd = transfer_matrix(ctx, n, e, &[x0, x0 + 1.0])?;
    let bwd = transfer_matrix(ctx, n, e, &[x0, x0 - 1.0])?;
    Ok((eigenvalues(&fwd)[0], 1.0 / eigenvalues(&bwd)[0]))
}

fn joint_pairs(m1: &Mat2, mtau: &Mat2) -> [(C, C); 2] {
    let l1 = eigenvalues(m1);
    let lt = eigenvalues(mtau);
    let gap1 = (l1[0] - l1[1]).norm() / (1.0 + l1[0].norm());
    let gapt = (lt[0] - lt[1]).norm() / (1.0 + lt[0].norm());
    let rayleigh = |m: &Mat2, v: [C; 2]| {
        let w = mat_vec(m, v);
        (v[0].conj() * w[0] + v[1].conj() * w[1]) / (v[0].norm_sqr() + v[1].norm_sqr())
    };
    if gap1 >= gapt {
        let mut out = [(C::new(0.0, 0.0), C::new(0.0, 0.0)); 2];
        for k in 0..2 {
            let v = eigenvector(m1, l1[k]);
            out[k] = (l1[k], rayleigh(mtau, v));
        }
        out
    } else {
        let mut out = [(C::new(0.0, 0.0), C::new(0.0, 0.0)); 2];
        for k in 0..2 {
            let v = eigenvector(mtau, lt[k]);
            out[k] = (rayleigh(m1, v), lt[k]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wronskian_is_one() {
        let ctx = EllipticContext::new(C::new(0.0, 0.9)).unwrap();
        for shift in [Shift::One, Shift::Tau] {
            let f = floquet_direct(&ctx, 2, C::new(3.0, 1.5), shift).unwrap();
            assert!((f.det - 1.0).norm() < 1e-9);
            let p = f.multipliers[0] * f.multipliers[1];
            assert!((p - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn band_edge_multipliers() {
        let ctx = EllipticContext::new(C::new(0.0, 1.0)).unwrap();
        // -e1 is a root of Q for n = 1: both multipliers are +-1
        let f = floquet_direct(&ctx, 1, -ctx.e1, Shift::One).unwrap();
        for m in f.multipliers {
            assert!((m.norm() - 1.0).abs() < 1e-6 && m.im.abs() < 1e-5, "{m}");
        }
    }

    #[test]
    fn path_clearance() {
        let ctx = EllipticContext::new(C::new(0.0, 1.0)).unwrap();
        let err = transfer_matrix(&ctx, 1, C::new(1.0, 0.0), &[C::new(0.5, 0.05), C::new(1.5, 0.05)]);
        assert!(matches!(err, Err(LameError::PathTooClose { .. })));
        assert!(segment_lattice_distance(&ctx, C::new(0.5, 0.5), C::new(1.5, 0.5)) > 0.49);
    }
}
