mod common;

use common::*;
use lame::spectral::generic_points;
use lame::EllipticContext;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn differential_identity(tau in tau(), (s, t) in cell()) {
        let ctx = EllipticContext::new(tau).unwrap();
        let x = s + tau * t;
        let v = ctx.eval_all(x).unwrap();
        let lhs = v.wp_prime * v.wp_prime;
        prop_assert!((lhs - ctx.cubic(v.wp)).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn periodicity_and_sigma_shift(tau in tau(), (s, t) in cell()) {
        let ctx = EllipticContext::new(tau).unwrap();
        let x = s + tau * t;
        let w = ctx.wp(x).unwrap();
        prop_assert!((ctx.wp(x + 1.0).unwrap() - w).norm() < 1e-10 * (1.0 + w.norm()));
        prop_assert!((ctx.wp(x + tau).unwrap() - w).norm() < 1e-10 * (1.0 + w.norm()));
        let sg = ctx.sigma(x).unwrap();
        let s1 = ctx.sigma(x + 1.0).unwrap();
        let want = -sg * (2.0 * ctx.eta1 * (x + 0.5)).exp();
        prop_assert!((s1 - want).norm() < 1e-10 * s1.norm());
    }

    #[test]
    fn derivatives_match_differences(tau in tau(), (s, t) in cell()) {
        let ctx = EllipticContext::new(tau).unwrap();
        let x = s + tau * t;
        let v = ctx.eval_all(x).unwrap();
        let h = 1e-5;
        let dz = (ctx.zeta(x + h).unwrap() - ctx.zeta(x - h).unwrap()) / (2.0 * h);
        let ds = (ctx.sigma(x + h).unwrap() - ctx.sigma(x - h).unwrap()) / (2.0 * h);
        prop_assert!((dz + v.wp).norm() < 1e-7 * (1.0 + v.wp.norm()));
        prop_assert!((ds / v.sigma - v.zeta).norm() < 1e-7 * (1.0 + v.zeta.norm()));
    }

    #[test]
    fn legendre(re in -0.5..0.5f64, im in 0.4..3.0f64) {
        let ctx = EllipticContext::new(c(re, im)).unwrap();
        prop_assert!(ctx.legendre_residual() < 1e-12);
    }

    #[test]
    fn inversion_round_trip(tau in tau(), (s, t) in cell()) {
        let ctx = EllipticContext::new(tau).unwrap();
        let x = s + tau * t;
        let w = ctx.wp(x).unwrap();
        let y = ctx.invert_wp_matching(w, ctx.wp_prime(x).unwrap()).unwrap();
        prop_assert!(ctx.lattice_distance(y - x) < 1e-8);
    }
}

#[test]
fn generic_points_avoid_lattice() {
    let ctx = EllipticContext::new(c(0.3, 0.8)).unwrap();
    for x in generic_points(&ctx, 20) {
        assert!(ctx.lattice_distance(x) > 0.05);
    }
}
