//! Vertices of level curves `f = k`: detection, degeneracy, counts, and the
//! critical level where the count changes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Var};
use crate::series::curvature_derivatives;
use crate::tracer::{trace_closed_curve, PolyField, Pt, ScalarField, TraceConfig, TracedCurve};
use crate::vertexfn::{curvature, vertex_poly, SurfacePartials, GRAD_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Degeneracy {
    /// The first `d + 1` arc-length derivatives of curvature vanish and the
    /// next one does not.
    Degree(u8),
    Unresolved,
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Degeneracy::Degree(d) => write!(f, "{d}"),
            Degeneracy::Unresolved => write!(f, "unresolved"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Extremum {
    Max,
    Min,
    None,
}

impl std::fmt::Display for Extremum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Extremum::Max => "max",
            Extremum::Min => "min",
            Extremum::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexRecord {
    pub point: Pt,
    pub level: f64,
    pub kappa: f64,
    pub degeneracy: Degeneracy,
    pub extremum: Extremum,
    /// Normalized derivative magnitudes `|kappa^(n)| l^n / ref`, `n = 1..4`.
    pub weights: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCensus {
    pub level: f64,
    /// A lower bound when the curve is not closed in the window.
    pub vertex_count: usize,
    pub records: Vec<VertexRecord>,
    pub curve_closed: bool,
}

/// Tolerances for vertex extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusConfig {
    /// Disc that must contain the level curve.
    pub window: f64,
    /// Relative threshold below which a curvature derivative counts as zero.
    pub deg_tol: f64,
    /// Target number of points on a traced level curve.
    pub points_per_curve: usize,
    pub trace_tol: f64,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            window: 0.06,
            deg_tol: 1e-4,
            points_per_curve: 400,
            trace_tol: 1e-10,
        }
    }
}

/// A surface at fixed parameters together with its vertex function.
#[derive(Clone, Debug)]
pub struct LevelSurface {
    pub partials: SurfacePartials,
    pub v: BivarPoly<f64>,
    vfield: PolyField,
    vx: BivarPoly<f64>,
    vy: BivarPoly<f64>,
}

impl LevelSurface {
    /// Uses `v` as the vertex function of `f`.
    pub fn with_vertex_function(f: &BivarPoly<f64>, v: BivarPoly<f64>) -> Self {
        LevelSurface {
            partials: SurfacePartials::new(f),
            vfield: PolyField::new(&v),
            vx: v.diff(Var::X),
            vy: v.diff(Var::Y),
            v,
        }
    }

    pub fn new(f: &BivarPoly<f64>) -> Self {
        Self::with_vertex_function(f, vertex_poly(f))
    }

    pub fn f(&self) -> &BivarPoly<f64> {
        &self.partials.f
    }

    pub fn vfield(&self) -> &PolyField {
        &self.vfield
    }

    fn v_grad(&self, p: Pt) -> (f64, Pt) {
        self.vfield.value_grad(p)
    }

    fn is_everywhere_vertex(&self) -> bool {
        let s = self.partials.f.max_abs_coeff();
        self.v.prune(1e-12 * s.powi(5).max(f64::MIN_POSITIVE)).is_zero()
    }

    /// Solves `f = k`, `V = 0` by Newton's method from `p`.
    fn polish(&self, p: Pt, k: f64, max_move: f64) -> Option<Pt> {
        let mut q = p;
        for _ in 0..30 {
            let (fv, (fx, fy)) = (self.partials.f.eval(q.0, q.1) - k, self.partials.grad(q.0, q.1));
            let (vv, (vx, vy)) = self.v_grad(q);
            let det = fx * vy - fy * vx;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let dx = (fv * vy - fy * vv) / det;
            let dy = (fx * vv - vx * fv) / det;
            q = (q.0 - dx, q.1 - dy);
            if (q.0 - p.0).hypot(q.1 - p.1) > max_move {
                return None;
            }
            if dx.hypot(dy) <= 1e-15 * q.0.hypot(q.1).max(1e-300) {
                break;
            }
        }
        Some(q)
    }

    /// Orthogonal projection of `p` onto `f = k` along the gradient.
    fn project(&self, p: Pt, k: f64) -> Pt {
        let mut q = p;
        for _ in 0..20 {
            let v = self.partials.f.eval(q.0, q.1) - k;
            let (gx, gy) = self.partials.grad(q.0, q.1);
            let g2 = gx * gx + gy * gy;
            if g2 == 0.0 {
                break;
            }
            let s = v / g2;
            q = (q.0 - s * gx, q.1 - s * gy);
            if s.abs() * g2.sqrt() < 1e-16 * q.0.hypot(q.1) {
                break;
            }
        }
        q
    }
}

/// Level curve `f = k` around the origin, seeded where it is nearest along
/// one of 16 rays.
pub fn level_curve(s: &LevelSurface, k: f64, cfg: &CensusConfig) -> Result<TracedCurve> {
    if !(k > 0.0) {
        return Err(Error::Precondition(format!("level must be positive, got {k}")));
    }
    let f = &s.partials.f;
    let n = 4096;
    let dr = cfg.window / n as f64;
    // first crossing of the level along each of 16 rays; keep the nearest
    let mut best: Option<(f64, f64)> = None;
    for ray in 0..16 {
        let t = std::f64::consts::TAU * ray as f64 / 16.0;
        let (c, sn) = (t.cos(), t.sin());
        let g = |r: f64| f.eval(r * c, r * sn) - k;
        let Some(i) = (1..=n).find(|&i| g(i as f64 * dr) > 0.0) else {
            continue;
        };
        let (mut a, mut b) = ((i - 1) as f64 * dr, i as f64 * dr);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
            if b - a <= 1e-16 * b {
                break;
            }
        }
        let r = 0.5 * (a + b);
        if best.is_none_or(|(rb, _)| r < rb) {
            best = Some((r, t));
        }
    }
    let (r, t) = best.ok_or_else(|| Error::Precondition(format!("level {k} not reached inside the window")))?;
    let seed = (r * t.cos(), r * t.sin());
    let field = PolyField::level(f, k);
    let length_guess = std::f64::consts::TAU * r;
    let tc = TraceConfig {
        radius: cfg.window,
        resolution: 16,
        trace_tol: cfg.trace_tol,
        h_max_rel: length_guess / cfg.points_per_curve as f64 / cfg.window,
        h_min_rel: 1e-6 * length_guess / cfg.points_per_curve as f64 / cfg.window,
        r_fit: 1e-3 * r,
        r_origin: Some(1e-3 * r),
        fit_min: 8,
        max_steps: 50 * cfg.points_per_curve,
    };
    trace_closed_curve(&field, seed, &tc)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Curvature scale data of a level curve used to normalize derivatives.
#[derive(Clone, Copy, Debug)]
struct CurveScale {
    ell: f64,
    median_dk: f64,
}

fn curve_scale(s: &LevelSurface, c: &TracedCurve) -> Result<CurveScale> {
    let dks = c
        .points
        .iter()
        .map(|&p| curvature(&s.partials, p, GRAD_FLOOR).map(|cs| cs.dkappa_ds.abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveScale {
        ell: c.length() / std::f64::consts::TAU,
        median_dk: median(dks),
    })
}

/// Degeneracy of the vertex at `p` from exact arc-length derivatives of
/// curvature, normalized by the curve's size.
fn classify_with_scale(s: &LevelSurface, p: Pt, scale: CurveScale, deg_tol: f64) -> Result<(Degeneracy, [f64; 4], Vec<f64>)> {
    let g = s.partials.grad(p.0, p.1);
    let gn = g.0.hypot(g.1);
    if !(gn > GRAD_FLOOR) {
        return Err(Error::NearCritical {
            x: p.0,
            y: p.1,
            grad_norm: gn,
        });
    }
    let d = curvature_derivatives(&s.partials, p, 5)?;
    let mut w = [0.0; 4];
    for n in 1..=4 {
        w[n - 1] = d[n].abs() * scale.ell.powi(n as i32);
    }
    let reference = w.iter().copied().fold(scale.median_dk * scale.ell, f64::max);
    for x in &mut w {
        *x /= reference;
    }
    let vanish = |n: usize| w[n - 1] < deg_tol;
    let deg = (0..=2u8)
        .find(|&dd| {
            let dd = dd as usize;
            (1..=dd + 1).all(vanish) && !vanish(dd + 2)
        })
        .map_or(Degeneracy::Unresolved, Degeneracy::Degree);
    Ok((deg, w, d))
}

/// Degeneracy of a vertex on the level curve through `p`.
pub fn classify_degeneracy(s: &LevelSurface, p: Pt, cfg: &CensusConfig) -> Result<Degeneracy> {
    let k = s.partials.f.eval(p.0, p.1);
    let c = level_curve(s, k, cfg)?;
    let scale = curve_scale(s, &c)?;
    Ok(classify_with_scale(s, p, scale, cfg.deg_tol)?.0)
}

fn make_record(s: &LevelSurface, p: Pt, k: f64, scale: CurveScale, deg_tol: f64) -> Result<VertexRecord> {
    let (degeneracy, weights, d) = classify_with_scale(s, p, scale, deg_tol)?;
    let extremum = match degeneracy {
        Degeneracy::Degree(0) if d[2] < 0.0 => Extremum::Max,
        Degeneracy::Degree(0) => Extremum::Min,
        _ => Extremum::None,
    };
    Ok(VertexRecord {
        point: p,
        level: k,
        kappa: d[0],
        degeneracy,
        extremum,
        weights,
    })
}

/// Vertices of the level curve `f = k` around the origin.
///
/// Candidates are sign changes of `dkappa/ds` along the traced curve; each
/// bracket is refined by bisection of `V_f` restricted to the curve and
/// then by Newton's method on `(f - k, V_f)`.
pub fn vertices_on_level(s: &LevelSurface, k: f64, cfg: &CensusConfig) -> Result<LevelCensus> {
    if s.is_everywhere_vertex() {
        return Err(Error::EverywhereVertex(k));
    }
    let c = level_curve(s, k, cfg)?;
    let closed = c.closed;
    let pts = &c.points;
    let dks = pts
        .iter()
        .map(|&p| curvature(&s.partials, p, GRAD_FLOOR).map(|cs| cs.dkappa_ds))
        .collect::<Result<Vec<_>>>()?;
    let scale = CurveScale {
        ell: c.length() / std::f64::consts::TAU,
        median_dk: median(dks.iter().map(|x| x.abs()).collect()),
    };
    let kmax = pts
        .iter()
        .map(|&p| curvature(&s.partials, p, GRAD_FLOOR).map(|cs| cs.kappa.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let dkmax = dks.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if dkmax * scale.ell <= 1e-12 * kmax {
        return Err(Error::EverywhereVertex(k));
    }
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    let mut records = Vec::new();
    for i in 0..segs {
        let j = (i + 1) % n;
        let (a, b) = (dks[i], dks[j]);
        if a == 0.0 {
            records.push(refine(s, pts[i], pts[i], k, scale, cfg)?);
            continue;
        }
        if (a > 0.0) == (b > 0.0) || b == 0.0 {
            continue;
        }
        records.push(refine(s, pts[i], pts[j], k, scale, cfg)?);
    }
    Ok(LevelCensus {
        level: k,
        vertex_count: records.len(),
        records,
        curve_closed: closed,
    })
}

fn refine(s: &LevelSurface, a: Pt, b: Pt, k: f64, scale: CurveScale, cfg: &CensusConfig) -> Result<VertexRecord> {
    let at = |t: f64| s.project((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)), k);
    let va = s.v.eval(a.0, a.1);
    let (mut lo, mut hi) = (0.0, 1.0);
    if a != b {
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            let vm = s.v.eval(at(m).0, at(m).1);
            if vm == 0.0 {
                lo = m;
                hi = m;
                break;
            }
            if (vm > 0.0) == (va > 0.0) {
                lo = m;
            } else {
                hi = m;
            }
        }
    }
    let p0 = at(0.5 * (lo + hi));
    let seg = (b.0 - a.0).hypot(b.1 - a.1);
    let p = s.polish(p0, k, seg.max(1e-3 * scale.ell)).unwrap_or(p0);
    let rec = make_record(s, p, k, scale, cfg.deg_tol)?;
    Ok(rec)
}

/// Maps [`vertices_on_level`] over `levels` in parallel, keeping order.
pub fn vertex_census_sweep(s: &LevelSurface, levels: &[f64], cfg: &CensusConfig) -> Vec<Result<LevelCensus>> {
    levels.par_iter().map(|&k| vertices_on_level(s, k, cfg)).collect()
}

/// The level where the vertex count jumps from 4 to 6.
#[derive(Clone, Debug, PartialEq)]
pub struct KStar {
    pub kstar: f64,
    pub merge_point: Pt,
    pub degeneracy: Degeneracy,
    /// Bisection bracket `[k_lo, k_hi]` with 4 and 6 vertices.
    pub bracket: (f64, f64),
}

fn count(s: &LevelSurface, k: f64, cfg: &CensusConfig) -> Result<LevelCensus> {
    let c = vertices_on_level(s, k, cfg)?;
    if !c.curve_closed {
        return Err(Error::Precondition(format!("level {k} leaves the window")));
    }
    Ok(c)
}

/// Locates the critical level by a census ladder, bisection on the vertex
/// count, and Newton's method on the tangency of the vertex set with the
/// level curve.
pub fn count_transition_kstar(s: &LevelSurface, cfg: &CensusConfig) -> Result<KStar> {
    // largest level whose curve stays well inside the window
    let f = &s.partials.f;
    let k_top = (0..64)
        .map(|i| std::f64::consts::TAU * i as f64 / 64.0)
        .map(|t| f.eval(0.8 * cfg.window * t.cos(), 0.8 * cfg.window * t.sin()))
        .fold(f64::INFINITY, f64::min);
    if !(k_top > 0.0) {
        return Err(Error::Precondition("surface is not positive around the origin".into()));
    }
    let mut hi_k = k_top;
    let hi = count(s, hi_k, cfg)?;
    if hi.vertex_count != 6 {
        return Err(Error::NoTransition(format!(
            "{} vertices at the top level {k_top:.3e}; expected 6",
            hi.vertex_count
        )));
    }
    let mut lo_k = None;
    for _ in 0..60 {
        let k = hi_k / 4.0;
        let c = count(s, k, cfg)?;
        match c.vertex_count {
            6 => hi_k = k,
            4 => {
                lo_k = Some(k);
                break;
            }
            n => {
                return Err(Error::NoTransition(format!("{n} vertices at level {k:.3e}")));
            }
        }
    }
    let mut lo_k = lo_k.ok_or_else(|| Error::NoTransition("count stays at 6 down to tiny levels".into()))?;
    while hi_k / lo_k > 1.0 + 1e-6 {
        let m = (lo_k * hi_k).sqrt();
        match count(s, m, cfg)?.vertex_count {
            6 => hi_k = m,
            4 => lo_k = m,
            n => return Err(Error::NoTransition(format!("{n} vertices at level {m:.3e}"))),
        }
    }
    // the two closest consecutive vertices at the upper level are the new pair
    let upper = count(s, hi_k, cfg)?;
    let recs = &upper.records;
    let n = recs.len();
    let (i, _) = (0..n)
        .map(|i| {
            let (p, q) = (recs[i].point, recs[(i + 1) % n].point);
            (i, (p.0 - q.0).hypot(p.1 - q.1))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("six records");
    let (p, q) = (recs[i].point, recs[(i + 1) % n].point);
    let mid = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
    let merge = tangency_point(s, mid).filter(|m| {
        let km = f.eval(m.0, m.1);
        km > lo_k * (1.0 - 1e-3) && km < hi_k * (1.0 + 1e-3)
    });
    let merge = merge.unwrap_or(mid);
    let kstar = f.eval(merge.0, merge.1);
    let c = level_curve(s, kstar, cfg)?;
    let scale = curve_scale(s, &c)?;
    let (degeneracy, _, _) = classify_with_scale(s, merge, scale, cfg.deg_tol)?;
    Ok(KStar {
        kstar,
        merge_point: merge,
        degeneracy,
        bracket: (lo_k, hi_k),
    })
}

/// Point where the vertex set `V = 0` is tangent to a level curve of `f`:
/// Newton's method on `(V, f_x V_y - f_y V_x)`.
pub fn tangency_point(s: &LevelSurface, start: Pt) -> Option<Pt> {
    let p = &s.partials;
    let w = |q: Pt| -> f64 {
        let (fx, fy) = p.grad(q.0, q.1);
        fx * s.vy.eval(q.0, q.1) - fy * s.vx.eval(q.0, q.1)
    };
    let mut q = start;
    let scale = start.0.hypot(start.1);
    for _ in 0..40 {
        let (v, (vx, vy)) = s.v_grad(q);
        let wv = w(q);
        let h = 1e-7 * scale;
        let wx = (w((q.0 + h, q.1)) - w((q.0 - h, q.1))) / (2.0 * h);
        let wy = (w((q.0, q.1 + h)) - w((q.0, q.1 - h))) / (2.0 * h);
        let det = vx * wy - vy * wx;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (v * wy - vy * wv) / det;
        let dy = (vx * wv - wx * v) / det;
        q = (q.0 - dx, q.1 - dy);
        if (q.0 - start.0).hypot(q.1 - start.1) > 0.5 * scale {
            return None;
        }
        if dx.hypot(dy) < 1e-14 * scale {
            return Some(q);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Rational;

    fn surface(s: &str) -> LevelSurface {
        LevelSurface::new(&BivarPoly::<Rational>::parse(s).unwrap().to_f64())
    }

    fn cfg(window: f64) -> CensusConfig {
        CensusConfig {
            window,
            ..Default::default()
        }
    }

    #[test]
    fn circles_are_everywhere_vertex() {
        let s = surface("x^2+y^2");
        assert!(matches!(vertices_on_level(&s, 0.5, &cfg(2.0)), Err(Error::EverywhereVertex(_))));
    }

    #[test]
    fn ellipse_has_four_alternating_vertices() {
        let s = surface("x^2/4+y^2");
        let c = vertices_on_level(&s, 1.0, &cfg(3.0)).unwrap();
        assert!(c.curve_closed);
        assert_eq!(c.vertex_count, 4);
        let expected = [(2.0, 0.0), (0.0, 1.0), (-2.0, 0.0), (0.0, -1.0)];
        for e in expected {
            assert!(
                c.records.iter().any(|r| (r.point.0 - e.0).hypot(r.point.1 - e.1) < 1e-10),
                "{e:?} missing from {:?}",
                c.records
            );
        }
        for r in &c.records {
            assert_eq!(r.degeneracy, Degeneracy::Degree(0));
            let ex = if r.point.0.abs() > 1.0 { Extremum::Max } else { Extremum::Min };
            assert_eq!(r.extremum, ex);
            assert!((s.f().eval(r.point.0, r.point.1) - 1.0).abs() < 1e-10);
        }
        for w in c.records.windows(2) {
            assert_ne!(w[0].extremum, w[1].extremum);
        }
        let d = classify_degeneracy(&s, (2.0, 0.0), &cfg(3.0)).unwrap();
        assert_eq!(d, Degeneracy::Degree(0));
    }

    #[test]
    fn umbilic_levels_have_six_vertices() {
        let s = surface("x^2+y^2+x^3-y^3");
        for k in [1e-3, 1e-4] {
            let c = vertices_on_level(&s, k, &cfg(0.2)).unwrap();
            assert_eq!(c.vertex_count, 6, "k = {k}");
            for r in &c.records {
                assert!(s.v.eval(r.point.0, r.point.1).abs() / s.vfield().value_grad(r.point).1 .0.hypot(s.vfield().value_grad(r.point).1 .1) < 1e-10);
            }
        }
    }

    #[test]
    fn open_level_is_flagged() {
        let s = surface("x^2/4+y^2");
        let c = vertices_on_level(&s, 1.0, &cfg(1.5)).unwrap();
        assert!(!c.curve_closed);
    }

    #[test]
    fn empty_sweep() {
        let s = surface("x^2/4+y^2");
        assert!(vertex_census_sweep(&s, &[], &cfg(3.0)).is_empty());
    }
}
