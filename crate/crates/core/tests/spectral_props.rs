mod common;

use common::*;
use lame::quadrature::{integrate_path, BranchPoly, EPath};
use lame::spectral::generic_points;
use lame::{EnergyPolynomial, C};
use proptest::prelude::*;

fn inside_triangle(p: C, a: C, b: C, q: C) -> bool {
    let cross = |u: C, v: C| u.re * v.im - u.im * v.re;
    let d = [cross(b - a, p - a), cross(q - b, p - b), cross(a - q, p - q)];
    !(d.iter().any(|x| *x < 0.0) && d.iter().any(|x| *x > 0.0))
}

fn weights() -> [EnergyPolynomial; 2] {
    [EnergyPolynomial::constant(c(1.0, 0.0)), EnergyPolynomial::var()]
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn product_equation(tau in tau(), n in 1usize..=5, (s, t) in cell(), u in unit_box()) {
        let (xi, curve) = setup(tau, n);
        let e = energy_in_box(&curve, u);
        let r = xi.product_ode_residual(s + tau * t, e).unwrap();
        prop_assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn q_is_x_independent(tau in tau(), n in 1usize..=5, u in unit_box()) {
        let (xi, curve) = setup(tau, n);
        let e = energy_in_box(&curve, u);
        let q = curve.q(e);
        for x in generic_points(&xi.ctx, 10) {
            prop_assert!((xi.q_at_x(x, e).unwrap() - q).norm() < 1e-9 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn real_roots_for_imaginary_tau(tau in imaginary_tau(), n in 1usize..=3) {
        let (_, curve) = setup(tau, n);
        prop_assert_eq!(curve.roots.len(), 2 * n + 1);
        for r in &curve.roots {
            prop_assert!(r.im.abs() < 1e-8 * curve.scale());
        }
    }

    #[test]
    fn homotopic_paths_agree(tau in tau(), n in 1usize..=3, a in unit_box(), b in unit_box(), m in unit_box()) {
        let (_, curve) = setup(tau, n);
        let (a, b, m) = (energy_in_box(&curve, a), energy_in_box(&curve, b), energy_in_box(&curve, m));
        let far = |p: C| distance_to_roots(&curve, p) > 0.2;
        prop_assume!(far(a) && far(b) && far(m));
        prop_assume!(!curve.roots.iter().any(|&r| inside_triangle(r, a, m, b)));
        let g = BranchPoly::minus_q(&curve);
        let s = g.eval(a).sqrt();
        let straight = integrate_path(&g, &weights(), &EPath::straight(a, b, s)).unwrap();
        let bent = integrate_path(&g, &weights(), &EPath { nodes: vec![a, m, b], branch_seed: s }).unwrap();
        for k in 0..2 {
            prop_assert!((straight.values[k] - bent.values[k]).norm() < 1e-9 * (1.0 + straight.values[k].norm()));
        }
        prop_assert!((straight.end_sqrt - bent.end_sqrt).norm() < 1e-9 * straight.end_sqrt.norm());
    }

    #[test]
    fn concatenation(tau in tau(), n in 1usize..=3, a in unit_box(), b in unit_box(), q in unit_box()) {
        let (_, curve) = setup(tau, n);
        let (a, b, q) = (energy_in_box(&curve, a), energy_in_box(&curve, b), energy_in_box(&curve, q));
        let far = |p: C| distance_to_roots(&curve, p) > 0.2;
        prop_assume!(far(a) && far(b) && far(q));
        let g = BranchPoly::minus_q(&curve);
        let s = g.eval(a).sqrt();
        let ab = integrate_path(&g, &weights(), &EPath::straight(a, b, s)).unwrap();
        let bq = integrate_path(&g, &weights(), &EPath::straight(b, q, ab.end_sqrt)).unwrap();
        let whole = integrate_path(&g, &weights(), &EPath { nodes: vec![a, b, q], branch_seed: s }).unwrap();
        for k in 0..2 {
            let sum = ab.values[k] + bq.values[k];
            prop_assert!((sum - whole.values[k]).norm() < 1e-10 * (1.0 + sum.norm()));
        }
    }
}

#[test]
fn loop_around_root_flips_branch() {
    let (_, curve) = setup(c(0.1, 1.0), 2);
    let g = BranchPoly::minus_q(&curve);
    let one = [EnergyPolynomial::constant(c(1.0, 0.0))];
    let r = curve.roots[2];
    let rho = 0.3 * curve.roots.iter().filter(|s| **s != r).map(|s| (s - r).norm()).fold(f64::INFINITY, f64::min);
    let base = r + c(0.0, 4.0 * rho);
    // base -> circle around r -> base
    let mut nodes = vec![base];
    for k in 0..=64 {
        let th = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        nodes.push(r + rho * C::from_polar(1.0, th));
    }
    nodes.push(base);
    let s = g.eval(base).sqrt();
    let lp = integrate_path(&g, &one, &EPath { nodes, branch_seed: s }).unwrap();
    // the same branch continued into the root
    let to_root = integrate_path(&g, &one, &EPath::straight(base, r, s)).unwrap();
    let from_root = -to_root.values[0];
    assert!((lp.values[0] + 2.0 * from_root).norm() < 1e-8 * (1.0 + from_root.norm()), "{} {}", lp.values[0], from_root);
    assert!((lp.end_sqrt + s).norm() < 1e-10 * s.norm());
}

#[test]
fn degrees_up_to_five() {
    for n in 1..=5 {
        let (xi, _) = setup(c(0.2, 1.3), n);
        assert_eq!(xi.c0.degree(), n);
        assert_eq!(xi.c.degree(), n);
        assert_eq!(xi.a[0].degree(), n - 1);
        for (j, b) in xi.b.iter().enumerate() {
            assert_eq!(b.degree(), j);
        }
    }
}
