//! Scans over the deformation parameters `(lambda, mu)`: branch pairings and
//! the discriminant, the critical level `k*`, and sections of the surface in
//! `(lambda, mu, k)` separating 4-vertex from 6-vertex levels.

use std::f64::consts::{FRAC_PI_3, PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Rational, Var};
use crate::surface::SurfaceFamily;
use crate::tracer::{
    angle_diff, classify_pairing, origin_branches, trace_zero_set, BranchSet, PairingLabel, PolyField, Pt,
    SectorAnchors, TraceConfig, ZeroSet,
};
use crate::vertexfn::VertexFunction;
use crate::vertices::{
    classify_degeneracy, count_transition_kstar, tangency_point, vertices_on_level, CensusConfig, Degeneracy, KStar,
    LevelCensus, LevelSurface,
};

/// A two-parameter family with its vertex function and scan settings.
#[derive(Debug)]
pub struct FamilyContext {
    family: SurfaceFamily<Rational>,
    vf: VertexFunction<Rational>,
    pub trace: TraceConfig,
    pub census: CensusConfig,
    anchors: OnceLock<Result<SectorAnchors>>,
}

impl FamilyContext {
    pub fn new(family: SurfaceFamily<Rational>, trace: TraceConfig, census: CensusConfig) -> Result<Self> {
        if family.n() != 2 {
            return Err(Error::Precondition(format!(
                "parameter scans need a two-parameter family, got {}",
                family.n()
            )));
        }
        trace.validate()?;
        let vf = VertexFunction::build(&family);
        Ok(FamilyContext {
            family,
            vf,
            trace,
            census,
            anchors: OnceLock::new(),
        })
    }

    /// The canonical family with default settings.
    pub fn canonical(a: Rational, b: Rational, c: Rational) -> Result<Self> {
        Self::new(
            SurfaceFamily::canonical(a, b, c)?,
            TraceConfig::default(),
            CensusConfig::default(),
        )
    }

    pub fn family(&self) -> &SurfaceFamily<Rational> {
        &self.family
    }

    pub fn vertex_function(&self) -> &VertexFunction<Rational> {
        &self.vf
    }

    pub fn surface_at(&self, tau: Pt) -> Result<BivarPoly<f64>> {
        self.family.at(&[tau.0, tau.1])
    }

    pub fn vertex_poly_at(&self, tau: Pt) -> Result<BivarPoly<f64>> {
        self.vf.at(&[tau.0, tau.1])
    }

    pub fn level_surface(&self, tau: Pt) -> Result<LevelSurface> {
        Ok(LevelSurface::with_vertex_function(
            &self.surface_at(tau)?,
            self.vertex_poly_at(tau)?,
        ))
    }

    pub fn vertex_set(&self, tau: Pt) -> Result<ZeroSet> {
        trace_zero_set(&PolyField::new(&self.vertex_poly_at(tau)?), &self.trace)
    }

    pub fn branches(&self, tau: Pt) -> Result<BranchSet> {
        let z = self.vertex_set(tau)?;
        let t = &self.trace;
        origin_branches(&z.curves, t.r_fit, t.r_origin(), t.fit_min)
    }

    /// Boundary crossings of the unperturbed vertex set; computed once.
    pub fn anchors(&self) -> Result<SectorAnchors> {
        self.anchors
            .get_or_init(|| {
                let bs = self.branches((0.0, 0.0))?;
                SectorAnchors::new(&bs.boundary_angles)
            })
            .clone()
    }

    /// Settings needed to replay any sample of a scan in isolation.
    pub fn provenance(&self) -> Vec<(String, String)> {
        metadata(self)
    }

    pub fn pairing(&self, tau: Pt) -> Result<PairingLabel> {
        let anchors = self.anchors()?;
        classify_pairing(&self.branches(tau)?, &anchors)
    }

    /// `c - b` of the normal-form cubic at `tau = 0`.
    fn cubic_asymmetry(&self) -> f64 {
        let f0 = self.family.unperturbed().to_f64();
        f0.coeff(0, 3) - f0.coeff(2, 1)
    }
}

/// Angular distance from `theta` to the nearest of the lines
/// `mu = 0, mu = +-sqrt(3) lambda`.
pub fn distance_to_nominal_discriminant(theta: f64) -> f64 {
    let d = theta.rem_euclid(FRAC_PI_3);
    d.min(FRAC_PI_3 - d)
}

/// Result of a discriminant sweep.
#[derive(Clone, Debug)]
pub struct DiscriminantScan {
    pub r_param: f64,
    /// Label-change angles in `[0, 2 pi)`, sorted.
    pub angles: Vec<f64>,
    /// Sweep samples `(theta, label)`; failed samples carry the error.
    pub samples: Vec<(f64, Result<PairingLabel>)>,
    /// Label on the counterclockwise side of each change angle.
    pub labels_after: Vec<PairingLabel>,
    pub labels_before: Vec<PairingLabel>,
}

impl DiscriminantScan {
    pub fn skipped(&self) -> usize {
        self.samples.iter().filter(|s| s.1.is_err()).count()
    }
}

fn polar(r: f64, theta: f64) -> Pt {
    (r * theta.cos(), r * theta.sin())
}

/// Sweeps the circle `|tau| = r_param` in steps of `step` radians and
/// bisects every pairing change down to `tol` radians.
pub fn discriminant_angles(ctx: &FamilyContext, r_param: f64, step: f64, tol: f64) -> Result<DiscriminantScan> {
    if !(r_param > 0.0 && step > 0.0 && tol > 0.0) {
        return Err(Error::Input("r_param, step and tol must be positive".into()));
    }
    ctx.anchors()?;
    let n = (TAU / step).round() as usize;
    let thetas: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let samples: Vec<(f64, Result<PairingLabel>)> = thetas
        .par_iter()
        .map(|&t| (t, ctx.pairing(polar(r_param, t))))
        .collect();
    let valid: Vec<(f64, PairingLabel)> = samples
        .iter()
        .filter_map(|(t, l)| l.as_ref().ok().map(|l| (*t, *l)))
        .collect();
    if valid.len() < 2 {
        return Err(Error::UnresolvedTopology("fewer than two classified samples".into()));
    }
    let mut brackets = Vec::new();
    for i in 0..valid.len() {
        let (t0, l0) = valid[i];
        let (mut t1, l1) = valid[(i + 1) % valid.len()];
        if t1 <= t0 {
            t1 += TAU;
        }
        if l0 != l1 {
            brackets.push((t0, t1, l0, l1));
        }
    }
    let refined: Vec<Result<(f64, PairingLabel, PairingLabel)>> = brackets
        .par_iter()
        .map(|&(mut a, mut b, la, lb)| {
            while b - a > tol {
                let m = 0.5 * (a + b);
                match ctx.pairing(polar(r_param, m)) {
                    Ok(l) if l == la => a = m,
                    Ok(l) if l == lb => b = m,
                    // a third label or a failure: keep the side it resembles least
                    _ => b = m,
                }
            }
            Ok((0.5 * (a + b), la, lb))
        })
        .collect();
    let mut out = Vec::new();
    for r in refined {
        let (t, la, lb) = r?;
        out.push((t.rem_euclid(TAU), la, lb));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DiscriminantScan {
        r_param,
        angles: out.iter().map(|o| o.0).collect(),
        labels_before: out.iter().map(|o| o.1).collect(),
        labels_after: out.iter().map(|o| o.2).collect(),
        samples,
    })
}

/// Pairing labels at both ends of the path `t (cos theta, sin theta)`,
/// `t in [-t0, t0]`.
pub fn pairing_flip_1param(ctx: &FamilyContext, theta: f64, t0: f64) -> Result<(PairingLabel, PairingLabel)> {
    if distance_to_nominal_discriminant(theta) < 10f64.to_radians() {
        return Err(Error::Precondition(format!(
            "direction {:.1} deg is within 10 deg of a discriminant line",
            theta.to_degrees()
        )));
    }
    if !(t0 > 0.0) {
        return Err(Error::Input("t0 must be positive".into()));
    }
    let minus = ctx.pairing(polar(-t0, theta))?;
    let plus = ctx.pairing(polar(t0, theta))?;
    Ok((minus, plus))
}

/// Critical level at a single parameter value.
pub fn kstar_at(ctx: &FamilyContext, tau: Pt) -> Result<KStar> {
    let r = tau.0.hypot(tau.1);
    if r == 0.0 {
        return Err(Error::Precondition("the umbilic (tau = 0) has no transition level".into()));
    }
    if distance_to_nominal_discriminant(tau.1.atan2(tau.0)) < 5f64.to_radians() {
        return Err(Error::Precondition(format!(
            "({}, {}) is within 5 deg of a discriminant line",
            tau.0, tau.1
        )));
    }
    count_transition_kstar(&ctx.level_surface(tau)?, &ctx.census)
}

/// One sample of a parameter scan.
#[derive(Clone, Debug)]
pub struct ScanSample {
    pub index: usize,
    pub tau: Pt,
    pub value: Result<SampleValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleValue {
    Label(PairingLabel),
    KStar(KStar),
    Census { level: f64, count: usize, closed: bool },
}

/// Parameter-space dataset with the settings that produced it.
#[derive(Clone, Debug)]
pub struct ScanResult {
    pub family: String,
    pub metadata: Vec<(String, String)>,
    pub samples: Vec<ScanSample>,
}

fn metadata(ctx: &FamilyContext) -> Vec<(String, String)> {
    let t = &ctx.trace;
    let c = &ctx.census;
    vec![
        ("family".into(), family_id(ctx)),
        ("radius".into(), t.radius.to_string()),
        ("resolution".into(), t.resolution.to_string()),
        ("trace_tol".into(), t.trace_tol.to_string()),
        ("r_fit".into(), t.r_fit.to_string()),
        ("window".into(), c.window.to_string()),
        ("deg_tol".into(), c.deg_tol.to_string()),
    ]
}

fn family_id(ctx: &FamilyContext) -> String {
    ctx.family.f().to_string()
}

/// `k*` over a list of parameter values, with a fit `k* = Q r^2`.
pub fn kstar_field(ctx: &FamilyContext, taus: &[Pt]) -> ScanResult {
    let samples = taus
        .par_iter()
        .enumerate()
        .map(|(index, &tau)| ScanSample {
            index,
            tau,
            value: kstar_at(ctx, tau).map(SampleValue::KStar),
        })
        .collect();
    ScanResult {
        family: family_id(ctx),
        metadata: metadata(ctx),
        samples,
    }
}

/// Pairing labels over a list of parameter values.
pub fn pairing_field(ctx: &FamilyContext, taus: &[Pt]) -> ScanResult {
    let samples = taus
        .par_iter()
        .enumerate()
        .map(|(index, &tau)| ScanSample {
            index,
            tau,
            value: ctx.pairing(tau).map(SampleValue::Label),
        })
        .collect();
    ScanResult {
        family: family_id(ctx),
        metadata: metadata(ctx),
        samples,
    }
}

/// Least-squares `Q` in `k* = Q |tau|^2` over the successful samples.
pub fn kstar_quadratic_fit(scan: &ScanResult) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for s in &scan.samples {
        if let Ok(SampleValue::KStar(k)) = &s.value {
            let r2 = s.tau.0 * s.tau.0 + s.tau.1 * s.tau.1;
            num += k.kstar * r2;
            den += r2 * r2;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Level-`k` section of the surface of degenerate-vertex levels.
#[derive(Clone, Debug)]
pub struct CupSection {
    pub k: f64,
    /// Fan directions in `[0, 2 pi)`.
    pub thetas: Vec<f64>,
    /// Radius of the section along each direction; `NaN` where not found.
    pub radii: Vec<f64>,
    /// The section as a polyline in `(lambda, mu)`.
    pub locus: Vec<Pt>,
    /// Polar angles of the detected cusps.
    pub cusp_angles: Vec<f64>,
    /// False if some direction failed, so the locus has gaps.
    pub closed: bool,
}

impl CupSection {
    /// Largest distance between two locus points.
    pub fn diameter(&self) -> f64 {
        let p = &self.locus;
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for q in &p[i + 1..] {
                d = d.max((p[i].0 - q.0).hypot(p[i].1 - q.1));
            }
        }
        d
    }

    /// Largest distance from the locus rotated by `angle` to the closed
    /// locus polyline, relative to the diameter.
    pub fn rotation_defect(&self, angle: f64) -> f64 {
        let (c, s) = (angle.cos(), angle.sin());
        let p = &self.locus;
        let n = p.len();
        let dist = |q: Pt| -> f64 {
            (0..n)
                .map(|i| segment_distance(q, p[i], p[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        };
        let worst = p
            .iter()
            .map(|q| dist((c * q.0 - s * q.1, s * q.0 + c * q.1)))
            .fold(0.0, f64::max);
        worst / self.diameter()
    }
}

fn segment_distance(q: Pt, a: Pt, b: Pt) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (q.0 - a.0 - t * dx).hypot(q.1 - a.1 - t * dy)
}

/// Solves `f = k`, `V = 0`, tangency for `(x, y, r)` along a fixed direction
/// of parameter space, by Newton's method with a difference Jacobian.
fn polish_cup_point(ctx: &FamilyContext, theta: f64, k: f64, start: (Pt, f64)) -> Option<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let raw = |x: f64, y: f64, r: f64| -> Option<([f64; 3], [f64; 2])> {
        let tau = (r * c, r * s);
        let f = ctx.surface_at(tau).ok()?;
        let v = ctx.vertex_poly_at(tau).ok()?;
        let (fx, fy) = (f.diff(Var::X).eval(x, y), f.diff(Var::Y).eval(x, y));
        let (vx, vy) = (v.diff(Var::X).eval(x, y), v.diff(Var::Y).eval(x, y));
        Some((
            [f.eval(x, y) - k, v.eval(x, y), fx * vy - fy * vx],
            [v.eval_abs(x, y), fx.hypot(fy) * vx.hypot(vy)],
        ))
    };
    let (_, sc) = raw(start.0 .0, start.0 .1, start.1)?;
    let scale = [k, sc[0].max(f64::MIN_POSITIVE), sc[1].max(f64::MIN_POSITIVE)];
    let eqs = |x: f64, y: f64, r: f64| -> Option<[f64; 3]> {
        let (e, _) = raw(x, y, r)?;
        Some([e[0] / scale[0], e[1] / scale[1], e[2] / scale[2]])
    };
    let ((mut x, mut y), mut r) = start;
    let r0 = r;
    for _ in 0..30 {
        let e = eqs(x, y, r)?;
        let hx = 1e-7 * (x.hypot(y));
        let hr = 1e-7 * r;
        let mut jac = [[0.0; 3]; 3];
        let cols = [(hx, 0.0, 0.0), (0.0, hx, 0.0), (0.0, 0.0, hr)];
        for (j, &(dx, dy, dr)) in cols.iter().enumerate() {
            let p = eqs(x + dx, y + dy, r + dr)?;
            let m = eqs(x - dx, y - dy, r - dr)?;
            let h = dx + dy + dr;
            for i in 0..3 {
                jac[i][j] = (p[i] - m[i]) / (2.0 * h);
            }
        }
        let d = solve3(jac, e)?;
        x -= d[0];
        y -= d[1];
        r -= d[2];
        if !(r > 0.0) || (r - r0).abs() > 0.05 * r0 {
            return None;
        }
        if d[2].abs() < 1e-13 * r && d[0].hypot(d[1]) < 1e-13 * x.hypot(y) {
            return Some(r);
        }
    }
    None
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = b[i];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Radius along `theta` where the level `k` passes from 6 vertices (inside)
/// to 4 (outside).
fn cup_radius(ctx: &FamilyContext, theta: f64, k: f64, r_max: f64) -> Result<f64> {
    let census = |r: f64| -> Result<LevelCensus> {
        let s = ctx.level_surface(polar(r, theta))?;
        let c = vertices_on_level(&s, k, &ctx.census)?;
        if !c.curve_closed {
            return Err(Error::Precondition(format!("level {k} leaves the window")));
        }
        Ok(c)
    };
    let outer = census(r_max)?;
    if outer.vertex_count != 4 {
        return Err(Error::NoTransition(format!(
            "{} vertices at r_max along {:.2} deg",
            outer.vertex_count,
            theta.to_degrees()
        )));
    }
    let (mut lo, mut hi) = (0.0, r_max);
    while hi - lo > 1e-4 * r_max {
        let m = 0.5 * (lo + hi);
        match census(m)?.vertex_count {
            6 => lo = m,
            4 => hi = m,
            n => {
                return Err(Error::NoTransition(format!(
                    "{n} vertices at r = {m:.4e} along {:.2} deg",
                    theta.to_degrees()
                )))
            }
        }
    }
    if lo == 0.0 {
        return Err(Error::NoTransition("no 6-vertex level inside the fan".into()));
    }
    // the newborn pair on the 6-vertex side seeds the tangency solve
    let inner = census(lo)?;
    let recs = &inner.records;
    let n = recs.len();
    let i = (0..n)
        .min_by(|&i, &j| {
            let d = |i: usize| {
                let (p, q) = (recs[i].point, recs[(i + 1) % n].point);
                (p.0 - q.0).hypot(p.1 - q.1)
            };
            d(i).total_cmp(&d(j))
        })
        .expect("six records");
    let (p, q) = (recs[i].point, recs[(i + 1) % n].point);
    let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
    let r = polish_cup_point(ctx, theta, k, (mid, 0.5 * (lo + hi)))
        .filter(|r| *r > lo * (1.0 - 1e-2) && *r < hi * (1.0 + 1e-2))
        .unwrap_or(0.5 * (lo + hi));
    Ok(r)
}

/// Section of the cup at level `k` on a fan of `fan` directions.
pub fn cup_section(ctx: &FamilyContext, k: f64, r_max: f64, fan: usize) -> Result<CupSection> {
    if !(k > 0.0 && r_max > 0.0) || fan < 12 {
        return Err(Error::Input("need k > 0, r_max > 0 and at least 12 fan directions".into()));
    }
    let thetas: Vec<f64> = (0..fan).map(|i| TAU * i as f64 / fan as f64).collect();
    let radii: Vec<f64> = thetas
        .par_iter()
        .map(|&t| cup_radius(ctx, t, k, r_max).unwrap_or(f64::NAN))
        .collect();
    let closed = radii.iter().all(|r| r.is_finite());
    let locus: Vec<Pt> = thetas
        .iter()
        .zip(&radii)
        .filter(|(_, r)| r.is_finite())
        .map(|(&t, &r)| polar(r, t))
        .collect();
    let cusp_angles = if closed {
        detect_cusps(&locus, 90f64.to_radians())
            .into_iter()
            .map(|i| locus[i].1.atan2(locus[i].0).rem_euclid(TAU))
            .collect()
    } else {
        Vec::new()
    };
    Ok(CupSection {
        k,
        thetas,
        radii,
        locus,
        cusp_angles,
        closed,
    })
}

/// Cusps of a closed polyline: runs of consecutive vertices each turning by
/// more than 15 degrees whose total turning exceeds `threshold`. A cusp that
/// falls between samples spreads over two vertices; the sharper one is
/// reported.
pub fn detect_cusps(poly: &[Pt], threshold: f64) -> Vec<usize> {
    let n = poly.len();
    if n < 3 {
        return Vec::new();
    }
    let sharp = 15f64.to_radians();
    let turn: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b, c) = (poly[(i + n - 1) % n], poly[i], poly[(i + 1) % n]);
            let d1 = (b.1 - a.1).atan2(b.0 - a.0);
            let d2 = (c.1 - b.1).atan2(c.0 - b.0);
            angle_diff(d2, d1).abs()
        })
        .collect();
    // start scanning just after a smooth vertex so no run wraps around
    let Some(start) = (0..n).find(|&i| turn[i] <= sharp) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    for step in 1..=n {
        let i = (start + step) % n;
        if turn[i] > sharp {
            run.push(i);
            continue;
        }
        if run.iter().map(|&j| turn[j]).sum::<f64>() > threshold {
            let best = *run.iter().max_by(|&&a, &&b| turn[a].total_cmp(&turn[b])).expect("nonempty run");
            out.push(best);
        }
        run.clear();
    }
    out.sort_unstable();
    out
}

/// The curve `-2 sqrt(k) (5 e^{-i phi} + e^{5 i phi})`, sampled at
/// `phi = 2 pi j / samples`, as points of the `(lambda, mu)` plane.
pub fn cup_reference(k: f64, samples: usize) -> Result<Vec<Pt>> {
    if !(k >= 0.0) {
        return Err(Error::Input(format!("k must be nonnegative, got {k}")));
    }
    if samples == 0 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let s = -2.0 * k.sqrt();
    Ok((0..samples)
        .map(|j| {
            let phi = TAU * j as f64 / samples as f64;
            (
                s * (5.0 * phi.cos() + (5.0 * phi).cos()),
                s * (-5.0 * phi.sin() + (5.0 * phi).sin()),
            )
        })
        .collect())
}

/// A singular point of the vertex set away from the origin, with the
/// parameter value where it occurs.
#[derive(Clone, Debug)]
pub struct DiscriminantPoint {
    pub tau: Pt,
    pub point: Pt,
    pub level: f64,
    pub degeneracy: Degeneracy,
}

/// Solves `V = V_x = V_y = 0` for `(x, y, mu)` at fixed `lambda > 0`,
/// starting from the leading-order crossing `(0, 2 lambda / (3 (c - b)))`.
pub fn discriminant_point(ctx: &FamilyContext, lambda: f64) -> Result<DiscriminantPoint> {
    if !(lambda > 0.0) {
        return Err(Error::Input("lambda must be positive".into()));
    }
    let cb = ctx.cubic_asymmetry();
    let eval = |x: f64, y: f64, mu: f64| -> Result<([f64; 3], [[f64; 2]; 3])> {
        let v = ctx.vertex_poly_at((lambda, mu))?;
        let (vx, vy) = (v.diff(Var::X), v.diff(Var::Y));
        let (vxx, vxy, vyy) = (vx.diff(Var::X), vx.diff(Var::Y), vy.diff(Var::Y));
        Ok((
            [v.eval(x, y), vx.eval(x, y), vy.eval(x, y)],
            [
                [vx.eval(x, y), vy.eval(x, y)],
                [vxx.eval(x, y), vxy.eval(x, y)],
                [vxy.eval(x, y), vyy.eval(x, y)],
            ],
        ))
    };
    let (mut x, mut y, mut mu) = (0.0, 2.0 * lambda / (3.0 * cb), 0.0);
    let mut converged = false;
    for _ in 0..50 {
        let (e, g) = eval(x, y, mu)?;
        let h = 1e-6 * lambda;
        let (ep, _) = eval(x, y, mu + h)?;
        let (em, _) = eval(x, y, mu - h)?;
        let mut jac = [[0.0; 3]; 3];
        for i in 0..3 {
            jac[i] = [g[i][0], g[i][1], (ep[i] - em[i]) / (2.0 * h)];
        }
        let d = solve3(jac, e).ok_or_else(|| Error::Numeric("singular Jacobian in the discriminant solve".into()))?;
        x -= d[0];
        y -= d[1];
        mu -= d[2];
        if d[0].hypot(d[1]) < 1e-14 * y.abs() && d[2].abs() < 1e-14 * lambda {
            converged = true;
            break;
        }
    }
    if !converged || x.hypot(y) < 1e-3 * lambda {
        return Err(Error::Numeric(format!(
            "discriminant solve did not converge to an off-origin point (x, y, mu) = ({x}, {y}, {mu})"
        )));
    }
    let tau = (lambda, mu);
    let s = ctx.level_surface(tau)?;
    let level = s.f().eval(x, y);
    let degeneracy = classify_degeneracy(&s, (x, y), &ctx.census)?;
    Ok(DiscriminantPoint {
        tau,
        point: (x, y),
        level,
        degeneracy,
    })
}

/// Degenerate vertices on the level through a discriminant point: the
/// point itself plus any census vertex farther than `sep` from it whose
/// degeneracy is not 0.
pub fn degenerate_vertices_on_level(ctx: &FamilyContext, dp: &DiscriminantPoint, sep: f64) -> Result<usize> {
    let s = ctx.level_surface(dp.tau)?;
    let census = vertices_on_level(&s, dp.level, &ctx.census)?;
    let others = census
        .records
        .iter()
        .filter(|r| (r.point.0 - dp.point.0).hypot(r.point.1 - dp.point.1) > sep)
        .filter(|r| r.degeneracy != Degeneracy::Degree(0))
        .count();
    Ok(others + usize::from(dp.degeneracy != Degeneracy::Degree(0)))
}

/// Closest pair of consecutive census vertices, the usual seed for a
/// tangency solve near `k*`.
pub fn merge_seed(c: &LevelCensus) -> Option<Pt> {
    let n = c.records.len();
    if n < 2 {
        return None;
    }
    let i = (0..n).min_by(|&i, &j| {
        let d = |i: usize| {
            let (p, q) = (c.records[i].point, c.records[(i + 1) % n].point);
            (p.0 - q.0).hypot(p.1 - q.1)
        };
        d(i).total_cmp(&d(j))
    })?;
    let (p, q) = (c.records[i].point, c.records[(i + 1) % n].point);
    Some(((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0))
}

/// Polishes a seed onto the tangency locus of the vertex set with the level
/// curves at fixed parameters.
pub fn tangency(ctx: &FamilyContext, tau: Pt, seed: Pt) -> Result<Pt> {
    tangency_point(&ctx.level_surface(tau)?, seed)
        .ok_or_else(|| Error::Numeric("tangency solve did not converge".into()))
}

/// Nominal discriminant line angles `0, 60, ..., 300` degrees in radians.
pub fn nominal_discriminant_angles() -> [f64; 6] {
    [0.0, FRAC_PI_3, 2.0 * FRAC_PI_3, PI, 4.0 * FRAC_PI_3, 5.0 * FRAC_PI_3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    #[test]
    fn reference_cup_values() {
        let pts = cup_reference(1.0, 6).unwrap();
        assert!((pts[0].0 + 12.0).abs() < 1e-12 && pts[0].1.abs() < 1e-12);
        assert!(cup_reference(0.0, 8).unwrap().iter().all(|p| p.0 == 0.0 && p.1 == 0.0));
        assert!(cup_reference(-1.0, 8).is_err());
    }

    #[test]
    fn reference_cup_has_six_cusps_at_multiples_of_sixty_degrees() {
        let n = 720;
        let pts = cup_reference(1.0, n).unwrap();
        let cusps = detect_cusps(&pts, 90f64.to_radians());
        let phis: Vec<f64> = cusps.iter().map(|&i| TAU * i as f64 / n as f64).collect();
        assert_eq!(phis.len(), 6, "{phis:?}");
        for (p, e) in phis.iter().zip(nominal_discriminant_angles()) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_cup_sixfold_symmetry() {
        let n = 600;
        let pts = cup_reference(0.7, n).unwrap();
        // phi -> phi + pi/3 rotates the curve by -pi/3
        let (c, s) = ((-FRAC_PI_3).cos(), (-FRAC_PI_3).sin());
        for j in 0..n {
            let p = pts[j];
            let q = pts[(j + n / 6) % n];
            let rot = (c * p.0 - s * p.1, s * p.0 + c * p.1);
            assert!((rot.0 - q.0).abs() < 1e-12 && (rot.1 - q.1).abs() < 1e-12);
        }
    }

    #[test]
    fn nominal_distance() {
        assert!(distance_to_nominal_discriminant(0.0).abs() < 1e-15);
        assert!((distance_to_nominal_discriminant(20f64.to_radians()) - 20f64.to_radians()).abs() < 1e-12);
        assert!((distance_to_nominal_discriminant(-50f64.to_radians()) - 10f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
        assert!(matches!(kstar_at(&ctx, (0.0, 0.0)), Err(Error::Precondition(_))));
        assert!(matches!(pairing_flip_1param(&ctx, 0.0, 0.03), Err(Error::Precondition(_))));
        let one = SurfaceFamily::new(
            crate::poly::ParamPoly::parse("x^2+y^2+x^3+t*(x^2-y^2)", &["t"]).unwrap(),
        )
        .unwrap();
        assert!(FamilyContext::new(one, TraceConfig::default(), CensusConfig::default()).is_err());
    }
}
