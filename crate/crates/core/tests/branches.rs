//! Shape of the vertex-set branches through the umbilic.

use std::f64::consts::PI;

use vertexset::bifurcation::FamilyContext;
use vertexset::poly::{int, parse_multi};
use vertexset::tracer::{boundary_crossings, line_angle_diff, trace_zero_set, PolyField, Pt, TraceConfig};

/// Least-squares `y = m x + a x^2` through the origin.
fn parabola_fit(pts: &[Pt]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        s11 += x * x;
        s12 += x * x * x;
        s22 += x.powi(4);
        b1 += x * y;
        b2 += x * x * y;
    }
    let det = s11 * s22 - s12 * s12;
    ((b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det)
}

/// Closed-form second-order coefficients `A+-` along `mu = alpha lambda`,
/// without the higher-order correction factor.
fn a_pm(lambda: f64, alpha: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    let s = (1.0 + a2).sqrt();
    let num = |sign: f64| (a2 + 6.0) * (a2 + 1.0) - sign * 2.0 * s * (2.0 * a2 + 3.0);
    let den = |sign: f64| lambda * a2 * (1.0 + a2) * (-1.0 + sign * s);
    (num(1.0) / den(1.0), num(-1.0) / den(-1.0))
}

/// Branches through the origin of the family with `c - b = 1`, each with
/// its fitted `(slope, second-order coefficient)` inside `0.1 |lambda|`.
fn fitted_branches(lambda: f64, mu: f64) -> Vec<(f64, f64)> {
    let ctx = FamilyContext::canonical(int(0), int(0), int(1)).unwrap();
    let bs = ctx.branches((lambda, mu)).unwrap();
    bs.origin_branches
        .iter()
        .map(|b| {
            let near: Vec<Pt> = b
                .curve
                .points
                .iter()
                .copied()
                .filter(|p| p.0.hypot(p.1) < 0.1 * lambda.abs())
                .collect();
            parabola_fit(&near)
        })
        .collect()
}

#[test]
fn closed_form_values_at_alpha_one() {
    let (ap, am) = a_pm(1.0, 1.0);
    assert!((ap - (2.0 * 2f64.sqrt() - 3.0)).abs() < 1e-12);
    assert!((am + (2.0 * 2f64.sqrt() + 3.0)).abs() < 1e-12);
}

#[test]
fn vanishing_condition_identity() {
    let v = ["a"];
    let lhs = parse_multi("(a^2+6)^2*(a^2+1) - 4*(2*a^2+3)^2", &v).unwrap();
    let rhs = parse_multi("a^4*(a^2-3)", &v).unwrap();
    assert_eq!(lhs, rhs);
    assert!(!lhs.is_empty());
}

#[test]
fn convexity_signs_along_the_diagonal() {
    for lambda in [0.02, -0.02, 0.01] {
        let (ap, am) = a_pm(lambda, 1.0);
        let fits = fitted_branches(lambda, lambda);
        assert_eq!(fits.len(), 2);
        for (m, a) in fits {
            // slope (-1 + sqrt 2) pairs with A+, slope (-1 - sqrt 2) with A-
            let expected = if m > 0.0 { ap } else { am };
            let slope = if m > 0.0 { 2f64.sqrt() - 1.0 } else { -2f64.sqrt() - 1.0 };
            assert!((m - slope).abs() < 0.02 * slope.abs(), "slope {m} vs {slope}");
            assert_eq!(a.signum(), expected.signum(), "lambda {lambda}: A = {a}, closed form {expected}");
        }
    }
}

#[test]
fn parabolic_branch_along_mu_zero_bends_against_lambda() {
    for lambda in [0.02, -0.02] {
        let fits = fitted_branches(lambda, 0.0);
        let horizontal: Vec<_> = fits.iter().filter(|(m, _)| m.abs() < 1e-3).collect();
        assert_eq!(horizontal.len(), 1, "{fits:?}");
        let c = horizontal[0].1;
        // y = C x^2 with C = -1 / (2 lambda) to leading order
        assert_eq!(c.signum(), -lambda.signum());
    }
}

#[test]
fn unperturbed_branches_meet_at_sixty_degrees() {
    let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
    let t: Vec<f64> = ctx.branches((0.0, 0.0)).unwrap().origin_branches.iter().map(|b| b.tangent_angle).collect();
    assert_eq!(t.len(), 3);
    for i in 0..3 {
        for j in i + 1..3 {
            let d = line_angle_diff(t[i], t[j]).to_degrees();
            assert!((d - 60.0).abs() < 2.0, "{d}");
        }
    }
}

#[test]
fn refining_the_grid_does_not_move_the_branches() {
    let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
    for tau in [(0.0, 0.0), (0.03 * 0.5f64.cos(), 0.03 * 0.5f64.sin())] {
        let v = ctx.vertex_poly_at(tau).unwrap();
        let field = PolyField::new(&v);
        let coarse_cfg = TraceConfig::default();
        let fine_cfg = TraceConfig {
            resolution: 2 * coarse_cfg.resolution,
            ..coarse_cfg.clone()
        };
        let coarse = trace_zero_set(&field, &coarse_cfg).unwrap();
        let fine = trace_zero_set(&field, &fine_cfg).unwrap();
        let (bc, bf) = (boundary_crossings(&coarse.curves), boundary_crossings(&fine.curves));
        assert_eq!(bc.len(), bf.len());
        for (a, b) in bc.iter().zip(&bf) {
            assert!((a - b).abs().min(2.0 * PI - (a - b).abs()).to_degrees() < 0.5, "{a} vs {b}");
        }
        let tangents = |z: &vertexset::tracer::ZeroSet, cfg: &TraceConfig| {
            let bs = vertexset::tracer::origin_branches(&z.curves, cfg.r_fit, cfg.r_origin(), cfg.fit_min).unwrap();
            let mut t: Vec<f64> = bs.origin_branches.iter().map(|b| b.tangent_angle).collect();
            t.sort_by(f64::total_cmp);
            t
        };
        let (tc, tf) = (tangents(&coarse, &coarse_cfg), tangents(&fine, &fine_cfg));
        assert_eq!(tc.len(), tf.len());
        for (a, b) in tc.iter().zip(&tf) {
            assert!(line_angle_diff(*a, *b).to_degrees() < 0.5);
        }
    }
}
