//! Parameter-space scans on the canonical family (1, 0, 2).

use std::f64::consts::{FRAC_PI_3, TAU};

use vertexset::bifurcation::{
    discriminant_angles, kstar_at, kstar_field, kstar_quadratic_fit, FamilyContext, SampleValue,
};
use vertexset::error::Error;
use vertexset::export::{write_angles_csv, write_kstar_csv, write_labels_csv, KSTAR_HEADER};
use vertexset::poly::int;
use vertexset::tracer::angle_diff;
use vertexset::vertices::{vertices_on_level, Degeneracy};

fn ctx() -> FamilyContext {
    FamilyContext::canonical(int(1), int(0), int(2)).unwrap()
}

fn polar(r: f64, t: f64) -> (f64, f64) {
    (r * t.cos(), r * t.sin())
}

#[test]
fn discriminant_angles_have_threefold_symmetry() {
    let ctx = ctx();
    let scan = discriminant_angles(&ctx, 0.005, 2f64.to_radians(), 0.02f64.to_radians()).unwrap();
    assert_eq!(scan.angles.len(), 6);
    for a in &scan.angles {
        let rotated = a + 2.0 * FRAC_PI_3;
        let best = scan
            .angles
            .iter()
            .map(|b| angle_diff(rotated, *b).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best.to_degrees() < 0.5, "{} has no partner at +120 deg", a.to_degrees());
    }
}

#[test]
fn kstar_field_is_quadratic_and_symmetric() {
    let ctx = ctx();
    let base = [(0.03, 20f64), (0.02, 40.0), (0.025, 100.0)];
    let mut taus = Vec::new();
    for (r, deg) in base {
        for n in 0..3 {
            taus.push(polar(r, deg.to_radians() + n as f64 * 2.0 * FRAC_PI_3));
        }
    }
    let scan = kstar_field(&ctx, &taus);
    let ks: Vec<f64> = scan
        .samples
        .iter()
        .map(|s| match &s.value {
            Ok(SampleValue::KStar(k)) => k.kstar,
            other => panic!("sample {} failed: {other:?}", s.index),
        })
        .collect();
    for group in ks.chunks(3) {
        let (lo, hi) = group.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 1.1, "rotated samples disagree: {group:?}");
    }
    let q = kstar_quadratic_fit(&scan).unwrap();
    for (s, k) in scan.samples.iter().zip(&ks) {
        let r2 = s.tau.0 * s.tau.0 + s.tau.1 * s.tau.1;
        assert!((k / (q * r2)).ln().abs() < 2f64.ln());
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_kstar_csv(&mut a, &scan).unwrap();
    write_kstar_csv(&mut b, &kstar_field(&ctx, &taus)).unwrap();
    assert_eq!(a, b, "repeated scans must export identical bytes");
    let text = String::from_utf8(a).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), KSTAR_HEADER);
    assert_eq!(rdr.records().count(), taus.len());
}

#[test]
fn kstar_rejects_the_umbilic_and_the_discriminant() {
    let ctx = ctx();
    assert!(matches!(kstar_at(&ctx, (0.0, 0.0)), Err(Error::Precondition(_))));
    assert!(matches!(kstar_at(&ctx, polar(0.03, 61f64.to_radians())), Err(Error::Precondition(_))));
    let scan = kstar_field(&ctx, &[(0.0, 0.0), polar(0.03, 0.5)]);
    assert!(scan.samples[0].value.is_err());
    assert!(scan.samples[1].value.is_ok());
}

#[test]
fn merge_is_the_only_degenerate_vertex() {
    let ctx = ctx();
    let tau = (0.05, 0.02);
    let ks = kstar_at(&ctx, tau).unwrap();
    assert_eq!(ks.degeneracy, Degeneracy::Degree(1));
    let s = ctx.level_surface(tau).unwrap();
    let census = vertices_on_level(&s, ks.bracket.1, &ctx.census).unwrap();
    assert_eq!(census.vertex_count, 6);
    let degenerate = census
        .records
        .iter()
        .filter(|r| r.degeneracy != Degeneracy::Degree(0))
        .filter(|r| (r.point.0 - ks.merge_point.0).hypot(r.point.1 - ks.merge_point.1) > 1e-3)
        .count();
    assert_eq!(degenerate, 0);
}

#[test]
fn discriminant_exports_are_deterministic() {
    let ctx = ctx();
    let run = || {
        let scan = discriminant_angles(&ctx, 0.03, 6f64.to_radians(), 0.5f64.to_radians()).unwrap();
        let mut labels = Vec::new();
        let mut angles = Vec::new();
        write_labels_csv(&mut labels, &ctx.provenance(), &scan).unwrap();
        write_angles_csv(&mut angles, &ctx.provenance(), &scan).unwrap();
        (labels, angles, scan.angles.len())
    };
    let (l1, a1, n) = run();
    let (l2, a2, _) = run();
    assert_eq!(n, 6);
    assert_eq!(l1, l2);
    assert_eq!(a1, a2);
    let text = String::from_utf8(l1).unwrap();
    assert!(text.starts_with("# family="));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + (TAU / 6f64.to_radians()).round() as usize);
}
