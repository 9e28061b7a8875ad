//! Acceptance checks, grouped into named suites.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, TAU};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bifurcation::{
    cup_reference, cup_section, degenerate_vertices_on_level, discriminant_angles, discriminant_point,
    distance_to_nominal_discriminant, kstar_at, pairing_flip_1param, FamilyContext,
};
use crate::error::{Error, Result};
use crate::poly::{int, BivarPoly, ParamPoly, Rational, Var};
use crate::surface::SurfaceFamily;
use crate::tracer::{angle_diff, line_angle_diff, origin_branches, trace_zero_set, PolyField, Pt, TraceConfig};
use crate::vertexfn::{curvature, jet_structure_check, oracle_value, vertex_poly, SurfacePartials, VertexFunction};
use crate::vertices::{vertices_on_level, Degeneracy, LevelSurface};

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Measured values against their tolerances.
    pub lines: Vec<String>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.2} s, budget {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

/// Accumulates sub-checks of one criterion.
struct Check {
    ok: bool,
    lines: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            ok: true,
            lines: Vec::new(),
        }
    }

    fn expect(&mut self, cond: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.lines.push(format!("{} {msg}", if cond { "ok  " } else { "FAIL" }));
        self.ok &= cond;
    }

    fn fail(&mut self, e: &Error, what: &str) {
        self.expect(false, format!("{what}: {e}"));
    }
}

fn run(id: u8, name: &'static str, budget_s: u64, body: impl FnOnce(&mut Check)) -> CheckReport {
    let t = Instant::now();
    let mut c = Check::new();
    body(&mut c);
    let elapsed = t.elapsed();
    let budget = Duration::from_secs(budget_s);
    c.expect(elapsed <= budget, format!("runtime {:.2} s <= {budget_s} s", elapsed.as_secs_f64()));
    CheckReport {
        id,
        name,
        passed: c.ok,
        lines: c.lines,
        elapsed,
        budget,
    }
}

/// Criteria belonging to a suite, or `None` for an unknown name.
pub fn suite_criteria(suite: &str) -> Option<Vec<u8>> {
    Some(match suite {
        "oracle" => vec![1, 10],
        "jets" => vec![2],
        "branches" => vec![3, 9],
        "discriminant" => vec![4, 5, 7],
        "cup" => vec![6, 8],
        "all" => (1..=10).collect(),
        _ => return None,
    })
}

pub fn run_criterion(id: u8) -> Result<CheckReport> {
    Ok(match id {
        1 => oracle_check(),
        2 => jets_check(),
        3 => branch_geometry_check(),
        4 => discriminant_check(),
        5 => pairing_flip_check(),
        6 => kstar_check(),
        7 => discriminant_degeneracy_check(),
        8 => cup_check(),
        9 => nonumbilic_check(),
        10 => cross_pipeline_check(),
        _ => return Err(Error::Input(format!("no acceptance criterion {id}"))),
    })
}

/// Runs every criterion of `suite`, calling `each` as reports come in.
pub fn run_suite(suite: &str, mut each: impl FnMut(&CheckReport)) -> Result<Vec<CheckReport>> {
    let ids = suite_criteria(suite).ok_or_else(|| {
        Error::Input(format!(
            "unknown suite {suite:?}; expected oracle, jets, branches, discriminant, cup or all"
        ))
    })?;
    let mut out = Vec::new();
    for id in ids {
        let r = run_criterion(id)?;
        each(&r);
        out.push(r);
    }
    Ok(out)
}

fn canonical_102() -> Result<FamilyContext> {
    FamilyContext::canonical(int(1), int(0), int(2))
}

fn example_family() -> Result<SurfaceFamily<Rational>> {
    SurfaceFamily::new(ParamPoly::parse(
        "x^2 + y^2 + x^3 - y^3 + lambda*(x^2 - y^2) + 2*mu*x*y",
        &["lambda", "mu"],
    )?)
}

fn deg(a: f64) -> f64 {
    a.to_degrees()
}

/// Largest `|V - c |grad f|^(2m) dkappa/ds|` over 1000 random points of the
/// disc of radius 0.5, relative to the largest `|V|` seen.
pub fn oracle_relative_residual(f: &BivarPoly<f64>, v: &BivarPoly<f64>, seed: u64) -> Result<f64> {
    let s = SurfacePartials::new(f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut res, mut mag) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    while n < 1000 {
        let (x, y): (f64, f64) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        if x * x + y * y > 0.25 {
            continue;
        }
        let Ok(c) = curvature(&s, (x, y), 1e-6) else { continue };
        let (vv, ov) = (v.eval(x, y), oracle_value(&c));
        res = res.max((vv - ov).abs());
        mag = mag.max(vv.abs()).max(ov.abs());
        n += 1;
    }
    Ok(if mag == 0.0 { res } else { res / mag })
}

fn oracle_check() -> CheckReport {
    run(1, "vertex function vs curvature derivative", 10, |c| {
        let fam = |src: &str| BivarPoly::<Rational>::parse(src).map(|p| p.to_f64());
        match fam("x^2+y^2+x^3") {
            Ok(f) => match oracle_relative_residual(&f, &vertex_poly(&f), 1) {
                Ok(r) => c.expect(r < 1e-8, format!("x^2+y^2+x^3: relative residual {r:.3e} < 1e-8")),
                Err(e) => c.fail(&e, "x^2+y^2+x^3"),
            },
            Err(e) => c.fail(&e, "parse"),
        }
        match example_family().and_then(|fam| {
            let v = VertexFunction::build(&fam).at(&[0.0, 0.0])?;
            let f = fam.at(&[0.0, 0.0])?;
            oracle_relative_residual(&f, &v, 2)
        }) {
            Ok(r) => c.expect(r < 1e-8, format!("Example surface at tau = 0: relative residual {r:.3e} < 1e-8")),
            Err(e) => c.fail(&e, "Example surface"),
        }
        match BivarPoly::<Rational>::parse("x^2+y^2") {
            Ok(f) => {
                let v = vertex_poly(&f);
                c.expect(v.is_zero(), format!("x^2+y^2: V has {} nonzero terms (exact)", v.len()));
            }
            Err(e) => c.fail(&e, "parse"),
        }
    })
}

fn jets_check() -> CheckReport {
    run(2, "low-order jet structure", 30, |c| {
        for (a, b, cc) in [(1, 0, 2), (0, 0, 1), (1, 2, 0)] {
            match SurfaceFamily::canonical(int(a), int(b), int(cc)).and_then(|f| jet_structure_check(&f)) {
                Ok(j) => c.expect(
                    j.defect4 < 1e-10 && j.defect5 < 1e-10 && j.c4 != 0.0 && j.c5 != 0.0,
                    format!(
                        "({a},{b},{cc}): degree 4 = {} * model (residual {:.1e}), degree 5 = {} * model (residual {:.1e}), tol 1e-10",
                        j.c4, j.defect4, j.c5, j.defect5
                    ),
                ),
                Err(e) => c.fail(&e, &format!("({a},{b},{cc})")),
            }
        }
    })
}

fn tangents(ctx: &FamilyContext, tau: Pt) -> Result<Vec<f64>> {
    Ok(ctx.branches(tau)?.origin_branches.iter().map(|b| b.tangent_angle).collect())
}

/// Each expected line angle matched by a distinct measured one within `tol`.
fn lines_match(measured: &[f64], expected: &[f64], tol: f64) -> (bool, f64) {
    if measured.len() != expected.len() {
        return (false, f64::INFINITY);
    }
    let mut used = vec![false; measured.len()];
    let mut worst: f64 = 0.0;
    for &e in expected {
        let best = (0..measured.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| line_angle_diff(measured[i], e).total_cmp(&line_angle_diff(measured[j], e)));
        let Some(i) = best else { return (false, f64::INFINITY) };
        used[i] = true;
        worst = worst.max(line_angle_diff(measured[i], e));
    }
    (worst <= tol, worst)
}

fn fmt_angles(a: &[f64]) -> String {
    let v: Vec<String> = a.iter().map(|x| format!("{:.2}", deg(x.rem_euclid(std::f64::consts::PI)))).collect();
    format!("[{}]", v.join(", "))
}

fn branch_geometry_check() -> CheckReport {
    run(3, "origin branch geometry", 120, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let tol = 2f64.to_radians();
        match tangents(&ctx, (0.0, 0.0)) {
            Ok(t) => {
                let (ok, w) = lines_match(&t, &[30f64.to_radians(), FRAC_PI_2, 150f64.to_radians()], tol);
                c.expect(ok, format!("tau = 0: tangents {} vs 30, 90, 150 (worst {:.2} deg, tol 2)", fmt_angles(&t), deg(w)));
            }
            Err(e) => c.fail(&e, "tau = 0"),
        }
        match tangents(&ctx, (0.1, 0.0)) {
            Ok(t) => {
                let (ok, w) = lines_match(&t, &[0.0, FRAC_PI_2], tol);
                c.expect(ok, format!("tau = (0.1, 0): tangents {} vs 0, 90 (worst {:.2} deg, tol 2)", fmt_angles(&t), deg(w)));
            }
            Err(e) => c.fail(&e, "tau = (0.1, 0)"),
        }
        for th in [20.0, 40.0, 80.0, 100.0, 140.0, 200.0, 260.0, 320.0_f64] {
            let t = th.to_radians();
            let (l, m) = (0.05 * t.cos(), 0.05 * t.sin());
            let rt = (l * l + m * m).sqrt();
            let expected = [((-l + rt) / m).atan(), ((-l - rt) / m).atan()];
            match tangents(&ctx, (l, m)) {
                Ok(tg) => {
                    let (ok, w) = lines_match(&tg, &expected, tol);
                    let orth = if tg.len() == 2 { (deg(line_angle_diff(tg[0], tg[1])) - 90.0).abs() } else { f64::INFINITY };
                    c.expect(
                        ok && orth <= 2.0,
                        format!(
                            "theta = {th}: tangents {} vs slopes {} (worst {:.2} deg), orthogonality defect {orth:.2} deg, tol 2",
                            fmt_angles(&tg),
                            fmt_angles(&expected),
                            deg(w)
                        ),
                    );
                }
                Err(e) => c.fail(&e, &format!("theta = {th}")),
            }
        }
    })
}

fn discriminant_check() -> CheckReport {
    run(4, "discriminant angles", 600, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let mut errors: Vec<Vec<f64>> = Vec::new();
        for r in [0.03, 0.015] {
            match discriminant_angles(&ctx, r, 2f64.to_radians(), 0.1f64.to_radians()) {
                Ok(scan) => {
                    let err: Vec<f64> = scan.angles.iter().map(|&a| deg(distance_to_nominal_discriminant(a))).collect();
                    let worst = err.iter().copied().fold(0.0, f64::max);
                    let shown: Vec<String> = scan.angles.iter().map(|a| format!("{:.2}", deg(*a))).collect();
                    c.expect(
                        scan.angles.len() == 6 && (r != 0.03 || worst <= 3.0),
                        format!(
                            "r_param = {r}: {} angles [{}], worst offset {worst:.2} deg{} ({} samples skipped)",
                            scan.angles.len(),
                            shown.join(", "),
                            if r == 0.03 { " (tol 3)" } else { "" },
                            scan.skipped()
                        ),
                    );
                    let adjacent = scan.labels_before.iter().zip(&scan.labels_after).all(|(b, a)| {
                        *a == b.shifted(1) || *a == b.shifted(5)
                    });
                    c.expect(adjacent, "labels across each angle are adjacent sectors");
                    // the discriminant curves bend away from their tangent
                    // lines, so only samples clear of every change angle pair up
                    let clear = |t: f64| scan.angles.iter().all(|a| angle_diff(t, *a).abs() > 3f64.to_radians());
                    let n = scan.samples.len();
                    let opposite = (0..n / 2).all(|i| match (&scan.samples[i], &scan.samples[i + n / 2]) {
                        ((ta, Ok(a)), (tb, Ok(b))) if clear(*ta) && clear(*tb) => *b == a.opposite(),
                        _ => true,
                    });
                    c.expect(opposite, "labels at theta and theta + 180 are opposite (samples 3 deg clear of the angles)");
                    errors.push(err);
                }
                Err(e) => c.fail(&e, &format!("r_param = {r}")),
            }
        }
        if let [a, b] = errors.as_slice() {
            if a.len() == b.len() {
                let closer = a.iter().zip(b).all(|(x, y)| y < x);
                let pairs: Vec<String> = a.iter().zip(b).map(|(x, y)| format!("{x:.2}->{y:.2}")).collect();
                c.expect(closer, format!("halving r_param moves every angle closer: [{}]", pairs.join(", ")));
            }
        }
    })
}

fn pairing_flip_check() -> CheckReport {
    run(5, "pairing flip across the umbilic", 300, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        for th in [20.0, 50.0, 80.0, 100.0, 140.0, 170.0_f64] {
            match pairing_flip_1param(&ctx, th.to_radians(), 0.03) {
                Ok((m, p)) => c.expect(p == m.shifted(3), format!("theta0 = {th}: t = -0.03 -> {m}, t = +0.03 -> {p}")),
                Err(e) => c.fail(&e, &format!("theta0 = {th}")),
            }
        }
        let mut sector_labels = Vec::new();
        for i in 0..6 {
            let labels: Vec<_> = [10.0, 30.0, 50.0]
                .iter()
                .map(|o: &f64| {
                    let t = (60.0 * i as f64 + o).to_radians();
                    ctx.pairing((0.03 * t.cos(), 0.03 * t.sin()))
                })
                .collect();
            match labels.iter().cloned().collect::<Result<Vec<_>>>() {
                Ok(ls) => {
                    let constant = ls.iter().all(|l| *l == ls[0]);
                    c.expect(
                        constant,
                        format!("sector {}..{} deg: labels {:?}", 60 * i, 60 * (i + 1), ls.iter().map(|l| l.to_string()).collect::<Vec<_>>()),
                    );
                    sector_labels.push(ls[0]);
                }
                Err(e) => c.fail(&e, &format!("sector {i}")),
            }
        }
        if sector_labels.len() == 6 {
            let distinct = (0..6).all(|i| sector_labels[i] != sector_labels[(i + 1) % 6]);
            c.expect(distinct, "neighbouring sectors carry different labels");
        }
    })
}

fn kstar_check() -> CheckReport {
    run(6, "vertex counts and k*", 300, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let tau = (0.05, 0.02);
        match kstar_at(&ctx, tau) {
            Ok(k) => {
                c.expect(
                    k.degeneracy == Degeneracy::Degree(1),
                    format!("k* = {:.6e} at (0.05, 0.02); merge vertex degeneracy {}", k.kstar, k.degeneracy),
                );
                match ctx.level_surface(tau) {
                    Ok(s) => {
                        for (factor, want) in [(0.9, 4), (1.1, 6)] {
                            match vertices_on_level(&s, factor * k.kstar, &ctx.census) {
                                Ok(cs) => c.expect(
                                    cs.vertex_count == want && cs.curve_closed,
                                    format!("k = {factor} k*: {} vertices (want {want})", cs.vertex_count),
                                ),
                                Err(e) => c.fail(&e, "census"),
                            }
                        }
                    }
                    Err(e) => c.fail(&e, "level surface"),
                }
            }
            Err(e) => c.fail(&e, "k* at (0.05, 0.02)"),
        }
        let t = 20f64.to_radians();
        let ratios: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .filter_map(|&r| match kstar_at(&ctx, (r * t.cos(), r * t.sin())) {
                Ok(k) => Some(k.kstar / (r * r)),
                Err(e) => {
                    c.fail(&e, &format!("k* at r = {r}"));
                    None
                }
            })
            .collect();
        if ratios.len() == 3 {
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
            c.expect(
                hi / lo <= 2.0,
                format!("ray 20 deg: k*/r^2 = {:.4}, {:.4}, {:.4} (spread {:.3}, tol 2)", ratios[0], ratios[1], ratios[2], hi / lo),
            );
        }
    })
}

fn discriminant_degeneracy_check() -> CheckReport {
    run(7, "degeneracy on the discriminant", 120, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let dp = match discriminant_point(&ctx, 0.05) {
            Ok(d) => d,
            Err(e) => return c.fail(&e, "self-intersection of the vertex set"),
        };
        c.expect(
            dp.degeneracy == Degeneracy::Degree(2),
            format!(
                "self-intersection at (lambda, mu) = (0.05, {:.4e}), point ({:.4e}, {:.4e}), level {:.6e}: degeneracy {}",
                dp.tau.1, dp.point.0, dp.point.1, dp.level, dp.degeneracy
            ),
        );
        match degenerate_vertices_on_level(&ctx, &dp, 1e-3 * dp.point.0.hypot(dp.point.1)) {
            Ok(n) => c.expect(n == 1, format!("degenerate vertices on that level: {n}")),
            Err(e) => c.fail(&e, "census on the self-intersection level"),
        }
        let s = match ctx.level_surface(dp.tau) {
            Ok(s) => s,
            Err(e) => return c.fail(&e, "level surface"),
        };
        let mut worst = 0;
        for i in 0..24 {
            let k = 1e-5 * 200f64.powf(i as f64 / 23.0);
            if let Ok(cs) = vertices_on_level(&s, k, &ctx.census) {
                let n = cs.records.iter().filter(|r| r.degeneracy != Degeneracy::Degree(0)).count();
                worst = worst.max(n);
            }
        }
        c.expect(worst <= 1, format!("most degenerate vertices on one of 24 levels in [1e-5, 2e-3]: {worst}"));
    })
}

fn cup_check() -> CheckReport {
    run(8, "cup section", 1200, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let fan = 360;
        let step = TAU / fan as f64;
        let k = 1e-4;
        let cup = match cup_section(&ctx, k, 0.06, fan) {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "cup section"),
        };
        c.expect(cup.closed, format!("k = {k}: locus closed on a {fan}-direction fan"));
        let shown: Vec<String> = cup.cusp_angles.iter().map(|a| format!("{:.1}", deg(*a))).collect();
        c.expect(cup.cusp_angles.len() == 6, format!("cusps at [{}] (want 6)", shown.join(", ")));
        let d120 = cup.rotation_defect(2.0 * FRAC_PI_3);
        let d240 = cup.rotation_defect(4.0 * FRAC_PI_3);
        c.expect(
            d120.max(d240) <= 0.1,
            format!("rotation by 120 / 240 deg: defect {d120:.3} / {d240:.3} of the diameter (tol 0.1)"),
        );
        let cusp_r: Vec<f64> = cup
            .cusp_angles
            .iter()
            .filter_map(|a| {
                let i = ((a / step).round() as usize) % fan;
                cup.radii.get(i).copied()
            })
            .collect();
        if !cusp_r.is_empty() {
            let r_mean = cusp_r.iter().sum::<f64>() / cusp_r.len() as f64;
            let disc_tol = 0.1f64.to_radians();
            match discriminant_angles(&ctx, r_mean, 2f64.to_radians(), disc_tol) {
                Ok(scan) => {
                    let worst = cup
                        .cusp_angles
                        .iter()
                        .map(|a| scan.angles.iter().map(|d| angle_diff(*a, *d).abs()).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max);
                    c.expect(
                        worst <= step + disc_tol,
                        format!(
                            "cusp directions vs discriminant at r = {r_mean:.4}: worst {:.2} deg (fan step {:.1} deg)",
                            deg(worst),
                            deg(step)
                        ),
                    );
                }
                Err(e) => c.fail(&e, "discriminant at the cusp radius"),
            }
        }
        match cup_section(&ctx, k / 4.0, 0.06, 120) {
            Ok(small) => {
                let ratio = cup.diameter() / small.diameter();
                c.expect((1.5..=2.5).contains(&ratio), format!("diameter ratio k : k/4 = {ratio:.3} (want 1.5..2.5)"));
            }
            Err(e) => c.fail(&e, "cup section at k/4"),
        }
        match cup_reference(1.0, 6) {
            Ok(p) => c.expect(
                (p[0].0 + 12.0).abs() < 1e-12 && p[0].1.abs() < 1e-12,
                format!("reference cup at k = 1, phi = 0: ({}, {})", p[0].0, p[0].1),
            ),
            Err(e) => c.fail(&e, "reference cup"),
        }
    })
}

fn nonumbilic_check() -> CheckReport {
    run(9, "non-umbilic origin branches", 60, |c| {
        let fixtures = [("x^2+2*y^2+x^3", 0.06, 2usize), ("x^2-y^2+x^3+y^4", 0.02, 4usize)];
        for (src, radius, want) in fixtures {
            let res = BivarPoly::<Rational>::parse(src).and_then(|f| {
                let v = vertex_poly(&f.to_f64());
                let cfg = TraceConfig::with_radius(radius);
                let z = trace_zero_set(&PolyField::new(&v), &cfg)?;
                origin_branches(&z.curves, cfg.r_fit, cfg.r_origin(), cfg.fit_min)
            });
            match res {
                Ok(bs) => {
                    let t: Vec<f64> = bs.origin_branches.iter().map(|b| b.tangent_angle).collect();
                    let mut ok = t.len() == want;
                    let mut note = String::new();
                    if want == 2 && t.len() == 2 {
                        let (m, w) = lines_match(&t, &[0.0, FRAC_PI_2], 2f64.to_radians());
                        ok &= m;
                        note = format!(", principal directions within {:.2} deg (tol 2)", deg(w));
                    }
                    if want == 4 {
                        let distinct = (0..t.len()).all(|i| (i + 1..t.len()).all(|j| line_angle_diff(t[i], t[j]) > 5f64.to_radians()));
                        ok &= distinct;
                        note = ", pairwise transverse".into();
                    }
                    c.expect(ok, format!("{src}: {} origin branches at {}{note} (want {want})", t.len(), fmt_angles(&t)));
                }
                Err(e) => c.fail(&e, src),
            }
        }
    })
}

/// Intersections of the traced zero set of `V` with the level `f = k`,
/// found on the traced polylines and polished by Newton's method on
/// `(f - k, V)`.
pub fn vertex_set_level_intersections(s: &LevelSurface, v: &BivarPoly<f64>, k: f64, cfg: &TraceConfig) -> Result<Vec<Pt>> {
    let z = trace_zero_set(&PolyField::new(v), cfg)?;
    let f = s.f();
    let (fx, fy) = (f.diff(Var::X), f.diff(Var::Y));
    let (vx, vy) = (v.diff(Var::X), v.diff(Var::Y));
    let mut out: Vec<Pt> = Vec::new();
    for curve in &z.curves {
        let g: Vec<f64> = curve.points.iter().map(|p| f.eval(p.0, p.1) - k).collect();
        for i in 0..curve.points.len().saturating_sub(1) {
            if g[i] == 0.0 || g[i].signum() == g[i + 1].signum() {
                continue;
            }
            let (a, b) = (curve.points[i], curve.points[i + 1]);
            let t = g[i] / (g[i] - g[i + 1]);
            let (mut x, mut y) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            for _ in 0..50 {
                let (r1, r2) = (f.eval(x, y) - k, v.eval(x, y));
                let (a11, a12, a21, a22) = (fx.eval(x, y), fy.eval(x, y), vx.eval(x, y), vy.eval(x, y));
                let det = a11 * a22 - a12 * a21;
                if det == 0.0 {
                    break;
                }
                let dx = (r1 * a22 - r2 * a12) / det;
                let dy = (a11 * r2 - a21 * r1) / det;
                x -= dx;
                y -= dy;
                if dx.hypot(dy) < 1e-15 * x.hypot(y).max(1e-300) {
                    break;
                }
            }
            if !out.iter().any(|q| (q.0 - x).hypot(q.1 - y) < 1e-10) {
                out.push((x, y));
            }
        }
    }
    Ok(out)
}

fn cross_pipeline_check() -> CheckReport {
    run(10, "census vs vertex-set intersections", 120, |c| {
        let ctx = match canonical_102() {
            Ok(x) => x,
            Err(e) => return c.fail(&e, "context"),
        };
        let tol = 10.0 * ctx.census.trace_tol;
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut done = 0;
        let mut attempts = 0;
        while done < 5 && attempts < 50 {
            attempts += 1;
            let r = rng.random_range(0.01..0.04);
            let th = rng.random_range(0.0..TAU);
            let k = 10f64.powf(rng.random_range(-4.0..-3.0));
            if distance_to_nominal_discriminant(th) < 5f64.to_radians() {
                continue;
            }
            let tau = (r * th.cos(), r * th.sin());
            // stay clear of the count transition, where vertex pairs nearly merge
            match kstar_at(&ctx, tau) {
                Ok(ks) if (k / ks.kstar).ln().abs() < 1.5f64.ln() => continue,
                Ok(_) => {}
                Err(_) => continue,
            }
            done += 1;
            let res = (|| -> Result<(usize, usize, f64)> {
                let s = ctx.level_surface(tau)?;
                let census = vertices_on_level(&s, k, &ctx.census)?;
                let v = ctx.vertex_poly_at(tau)?;
                let hits = vertex_set_level_intersections(&s, &v, k, &ctx.trace)?;
                let mut used = vec![false; hits.len()];
                let mut worst: f64 = 0.0;
                for rec in &census.records {
                    let best = (0..hits.len()).filter(|&j| !used[j]).min_by(|&i, &j| {
                        let d = |j: usize| (hits[j].0 - rec.point.0).hypot(hits[j].1 - rec.point.1);
                        d(i).total_cmp(&d(j))
                    });
                    match best {
                        Some(j) => {
                            used[j] = true;
                            worst = worst.max((hits[j].0 - rec.point.0).hypot(hits[j].1 - rec.point.1));
                        }
                        None => worst = f64::INFINITY,
                    }
                }
                Ok((census.records.len(), hits.len(), worst))
            })();
            match res {
                Ok((nc, nh, worst)) => c.expect(
                    nc == nh && worst <= tol,
                    format!(
                        "tau = ({:.4}, {:.4}), k = {k:.3e}: census {nc}, intersections {nh}, worst distance {worst:.1e} (tol {tol:.0e})",
                        tau.0, tau.1
                    ),
                ),
                Err(e) => c.fail(&e, &format!("tau = ({:.4}, {:.4}), k = {k:.3e}", tau.0, tau.1)),
            }
        }
        c.expect(done == 5, format!("{done} of 5 samples drawn in the valid window"));
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_cover_every_criterion_once() {
        let mut all: Vec<u8> = ["oracle", "jets", "branches", "discriminant", "cup"]
            .iter()
            .flat_map(|s| suite_criteria(s).unwrap())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (1..=10).collect::<Vec<_>>());
        assert_eq!(suite_criteria("all").unwrap().len(), 10);
        assert!(suite_criteria("nope").is_none());
        assert!(run_criterion(11).is_err());
    }

    #[test]
    fn line_matching() {
        let d = |x: f64| x.to_radians();
        assert!(lines_match(&[d(91.0), d(179.5)], &[d(0.0), d(90.0)], d(2.0)).0);
        assert!(!lines_match(&[d(91.0)], &[d(0.0), d(90.0)], d(2.0)).0);
        assert!(!lines_match(&[d(85.0), d(179.5)], &[d(0.0), d(90.0)], d(2.0)).0);
    }

    #[test]
    fn oracle_check_passes() {
        let r = run_criterion(1).unwrap();
        assert!(r.passed, "{r}\n{}", r.lines.join("\n"));
    }
}
