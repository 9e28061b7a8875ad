//! Randomized invariants across modules.

use proptest::prelude::*;

use vertexset::bifurcation::{cup_reference, FamilyContext};
use vertexset::poly::{int, ratio, BivarPoly, Rational};
use vertexset::tracer::{trace_zero_set, PairingLabel, PolyField, TraceConfig};
use vertexset::verify::oracle_relative_residual;
use vertexset::vertexfn::vertex_poly;
use vertexset::vertices::{vertices_on_level, CensusConfig, Degeneracy, Extremum, LevelSurface};

fn radial(a: i64, b: i64, c: i64) -> BivarPoly<Rational> {
    BivarPoly::parse(&format!("{a}*(x^2+y^2) + {b}*(x^2+y^2)^2 + {c}*(x^2+y^2)^3")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn surfaces_of_revolution_have_no_vertex_function(a in 1i64..5, b in -5i64..5, c in -5i64..5) {
        prop_assert!(vertex_poly(&radial(a, b, c)).is_zero());
    }

    #[test]
    fn oracle_holds_on_random_cubic_surfaces(
        q in 0.5f64..2.0,
        c in prop::array::uniform4(-1.0f64..1.0),
        seed in 0u64..1000,
    ) {
        let f = BivarPoly::from_terms([
            ((2, 0), 1.0), ((0, 2), q),
            ((3, 0), c[0]), ((2, 1), c[1]), ((1, 2), c[2]), ((0, 3), c[3]),
        ]);
        let r = oracle_relative_residual(&f, &vertex_poly(&f), seed).unwrap();
        prop_assert!(r < 1e-8, "relative residual {r}");
    }

    #[test]
    fn reference_cup_has_sixfold_symmetry(k in 0.0f64..10.0) {
        let n = 360;
        let pts = cup_reference(k, n).unwrap();
        let (c, s) = ((-std::f64::consts::FRAC_PI_3).cos(), (-std::f64::consts::FRAC_PI_3).sin());
        for j in 0..n {
            let (p, q) = (pts[j], pts[(j + n / 6) % n]);
            prop_assert!((c * p.0 - s * p.1 - q.0).abs() < 1e-12 * (1.0 + k.sqrt()));
            prop_assert!((s * p.0 + c * p.1 - q.1).abs() < 1e-12 * (1.0 + k.sqrt()));
        }
    }

    #[test]
    fn label_algebra(s in 0u8..6, k in 0u8..12) {
        let l = PairingLabel::Sector(s);
        prop_assert_eq!(l.opposite().opposite(), l);
        prop_assert_eq!(l.shifted(3), l.opposite());
        prop_assert_eq!(l.shifted(k).shifted(12 - k), l);
        prop_assert_eq!(PairingLabel::Umbilic.opposite(), PairingLabel::Umbilic);
    }

    #[test]
    fn traced_points_meet_the_tolerance(a in 0.5f64..2.0, b in 0.5f64..2.0, c in -0.5f64..0.5) {
        let f = BivarPoly::from_terms([((2, 0), a), ((0, 2), b), ((3, 0), c), ((0, 0), -0.25)]);
        let cfg = TraceConfig::with_radius(1.0);
        let z = trace_zero_set(&PolyField::new(&f), &cfg).unwrap();
        prop_assert!(!z.curves.is_empty());
        for curve in &z.curves {
            prop_assert!(curve.residual_bound <= cfg.trace_tol);
            prop_assert!(curve.residuals.iter().all(|r| *r <= cfg.trace_tol));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn vertex_set_is_rotation_equivariant(theta in 0.0f64..std::f64::consts::TAU, phi in 0.35f64..0.7, r in 0.01f64..0.04) {
        let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
        let tau = (r * phi.cos(), r * phi.sin());
        let f = ctx.surface_at(tau).unwrap();
        let z = ctx.vertex_set(tau).unwrap();
        let g = f.rotate(theta);
        let vg = vertex_poly(&g);
        let (gx, gy) = (vg.diff(vertexset::poly::Var::X), vg.diff(vertexset::poly::Var::Y));
        let (c, s) = (theta.cos(), theta.sin());
        let mut checked = 0;
        for curve in &z.curves {
            for q in curve.points.iter().step_by(7) {
                if q.0.hypot(q.1) < 1e-3 {
                    continue;
                }
                // f.rotate(theta) at R_theta q equals f at q
                let p = (c * q.0 - s * q.1, s * q.0 + c * q.1);
                let dist = vg.eval(p.0, p.1).abs() / gx.eval(p.0, p.1).hypot(gy.eval(p.0, p.1));
                prop_assert!(dist < 1e-8, "distance estimate {dist} at {p:?}");
                checked += 1;
            }
        }
        prop_assert!(checked > 50);
    }

    #[test]
    fn census_is_rotation_invariant(
        theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.35f64..0.7,
        r in 0.01f64..0.04,
        logk in -4.0f64..-3.0,
    ) {
        let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
        let tau = (r * phi.cos(), r * phi.sin());
        let f = ctx.surface_at(tau).unwrap();
        let k = 10f64.powf(logk);
        let cfg = CensusConfig::default();
        let a = vertices_on_level(&LevelSurface::new(&f), k, &cfg).unwrap();
        let b = vertices_on_level(&LevelSurface::new(&f.rotate(theta)), k, &cfg).unwrap();
        prop_assert!(a.curve_closed && b.curve_closed);
        prop_assert_eq!(a.vertex_count, b.vertex_count);
        prop_assert_eq!(a.vertex_count % 2, 0);
        if a.records.iter().all(|v| v.degeneracy == Degeneracy::Degree(0)) {
            let n = a.records.len();
            for i in 0..n {
                let (e, next) = (a.records[i].extremum, a.records[(i + 1) % n].extremum);
                prop_assert!(e != Extremum::None && e != next, "extrema do not alternate");
            }
        }
    }
}

#[test]
fn rational_radial_coefficients_also_vanish() {
    let f = BivarPoly::from_terms([((2, 0), ratio(1, 3)), ((0, 2), ratio(1, 3))]);
    let g = &f * &f;
    assert!(vertex_poly(&(&f + &g)).is_zero());
}
