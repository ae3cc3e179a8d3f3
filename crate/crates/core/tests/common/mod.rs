#![allow(dead_code)]

use lame::{compute_q, compute_xi, EllipticContext, SpectralCurve, XiData, C};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x1a3e), failure_persistence: None, ..Config::default() }
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn tau() -> impl Strategy<Value = C> {
    (-0.5..0.5f64, 0.5..2.0f64).prop_map(|(a, b)| c(a, b))
}

pub fn imaginary_tau() -> impl Strategy<Value = C> {
    (0.6..1.8f64).prop_map(|b| c(0.0, b))
}

/// Cell coordinates away from the lattice.
pub fn cell() -> impl Strategy<Value = (f64, f64)> {
    (0.05..0.95f64, 0.05..0.95f64)
}

/// Point of the unit square mapped onto the box around the roots of `Q`.
pub fn unit_box() -> impl Strategy<Value = (f64, f64)> {
    (-1.0..1.0f64, -1.0..1.0f64)
}

pub fn setup(tau: C, n: usize) -> (XiData, SpectralCurve) {
    let ctx = EllipticContext::new(tau).unwrap();
    let xi = compute_xi(&ctx, n).unwrap();
    let curve = compute_q(&xi).unwrap();
    (xi, curve)
}

pub fn energy_in_box(curve: &SpectralCurve, u: (f64, f64)) -> C {
    let (mut lo, mut hi) = (c(f64::INFINITY, f64::INFINITY), c(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for r in &curve.roots {
        lo = c(lo.re.min(r.re), lo.im.min(r.im));
        hi = c(hi.re.max(r.re), hi.im.max(r.im));
    }
    let mid = (lo + hi) / 2.0;
    let w = (hi.re - lo.re).max(hi.im - lo.im).max(1.0);
    mid + c(u.0, u.1) * w
}

pub fn distance_to_roots(curve: &SpectralCurve, e: C) -> f64 {
    curve.roots.iter().map(|r| (r - e).norm()).fold(f64::INFINITY, f64::min)
}
