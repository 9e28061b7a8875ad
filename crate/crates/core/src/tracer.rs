//! Real zero sets of smooth functions inside a disc centred at the origin.
//!
//! Seeds come from sign changes on a square lattice; every seed not already
//! covered is followed in both directions by tangent-predictor /
//! normal-corrector continuation until the curve leaves the disc, enters a
//! small ball around the origin, closes up, or the step size collapses.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Var};

pub type Pt = (f64, f64);

fn norm(p: Pt) -> f64 {
    p.0.hypot(p.1)
}

fn sub(a: Pt, b: Pt) -> Pt {
    (a.0 - b.0, a.1 - b.1)
}

fn dot(a: Pt, b: Pt) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn axpy(a: f64, x: Pt, y: Pt) -> Pt {
    (a * x.0 + y.0, a * x.1 + y.1)
}

/// Angle in `[0, 2 pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `a - b` reduced to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Distance between two line directions, both taken mod `pi`.
pub fn line_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// A smooth function of the plane with its gradient.
pub trait ScalarField: Sync {
    fn value_grad(&self, p: Pt) -> (f64, Pt);

    fn value(&self, p: Pt) -> f64 {
        self.value_grad(p).0
    }
}

/// A polynomial flattened for fast evaluation.
#[derive(Clone, Debug)]
struct Compiled {
    terms: Vec<(usize, usize, f64)>,
    mi: usize,
    mj: usize,
}

impl Compiled {
    fn new(p: &BivarPoly<f64>) -> Self {
        let terms: Vec<_> = p.terms().map(|(&(i, j), &c)| (i as usize, j as usize, c)).collect();
        let mi = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mj = terms.iter().map(|t| t.1).max().unwrap_or(0);
        Compiled { terms, mi, mj }
    }
}

/// A polynomial together with its first partials.
#[derive(Clone, Debug)]
pub struct PolyField {
    f: Compiled,
    fx: Compiled,
    fy: Compiled,
    powers: usize,
}

impl PolyField {
    pub fn new(p: &BivarPoly<f64>) -> Self {
        let f = Compiled::new(p);
        let fx = Compiled::new(&p.diff(Var::X));
        let fy = Compiled::new(&p.diff(Var::Y));
        let powers = f.mi.max(f.mj) + 1;
        PolyField { f, fx, fy, powers }
    }

    /// The field `p - k`.
    pub fn level(p: &BivarPoly<f64>, k: f64) -> Self {
        let mut q = p.clone();
        q.add_term(0, 0, -k);
        Self::new(&q)
    }
}

impl ScalarField for PolyField {
    fn value_grad(&self, p: Pt) -> (f64, Pt) {
        let n = self.powers;
        let mut xp = [1.0f64; 32];
        let mut yp = [1.0f64; 32];
        if n > 32 {
            let ev = |c: &Compiled| -> f64 {
                c.terms
                    .iter()
                    .map(|&(i, j, v)| v * p.0.powi(i as i32) * p.1.powi(j as i32))
                    .sum()
            };
            return (ev(&self.f), (ev(&self.fx), ev(&self.fy)));
        }
        for k in 1..n {
            xp[k] = xp[k - 1] * p.0;
            yp[k] = yp[k - 1] * p.1;
        }
        let ev = |c: &Compiled| -> f64 { c.terms.iter().map(|&(i, j, v)| v * xp[i] * yp[j]).sum() };
        (ev(&self.f), (ev(&self.fx), ev(&self.fy)))
    }
}

/// Knobs for [`trace_zero_set`]. Lengths are absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceConfig {
    /// Disc radius.
    pub radius: f64,
    /// Lattice cells per side of the bounding square.
    pub resolution: usize,
    /// Bound on the distance estimate `|F| / |grad F|` of stored points.
    pub trace_tol: f64,
    /// Step bounds as fractions of the radius.
    pub h_max_rel: f64,
    pub h_min_rel: f64,
    /// Outer radius of the tangent-fit annulus.
    pub r_fit: f64,
    /// Radius of the excluded ball around the origin; `r_fit / 10` if unset.
    pub r_origin: Option<f64>,
    pub fit_min: usize,
    pub max_steps: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            radius: 0.06,
            resolution: 512,
            trace_tol: 1e-10,
            h_max_rel: 0.01,
            h_min_rel: 1e-7,
            r_fit: 2e-5,
            r_origin: None,
            fit_min: 8,
            max_steps: 200_000,
        }
    }
}

impl TraceConfig {
    pub fn with_radius(radius: f64) -> Self {
        TraceConfig {
            radius,
            ..Default::default()
        }
    }

    pub fn r_origin(&self) -> f64 {
        self.r_origin.unwrap_or(self.r_fit / 10.0)
    }

    pub fn h_max(&self) -> f64 {
        self.h_max_rel * self.radius
    }

    pub fn h_min(&self) -> f64 {
        self.h_min_rel * self.radius
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("radius", self.radius),
            ("trace_tol", self.trace_tol),
            ("h_max_rel", self.h_max_rel),
            ("h_min_rel", self.h_min_rel),
            ("r_fit", self.r_fit),
            ("r_origin", self.r_origin()),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.resolution < 16 {
            return Err(Error::Input(format!(
                "resolution must be at least 16, got {}",
                self.resolution
            )));
        }
        if self.h_min_rel >= self.h_max_rel {
            return Err(Error::Input("h_min_rel must be below h_max_rel".into()));
        }
        Ok(())
    }
}

/// How a traced curve terminates at one of its ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveEnd {
    /// Leaves the disc at this polar angle in `[0, 2 pi)`.
    Boundary { angle: f64 },
    /// Enters the excluded ball around the origin.
    Origin,
    /// The curve is a closed loop.
    Closed,
    /// Continuation could not proceed.
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracedCurve {
    pub points: Vec<Pt>,
    /// Unit tangents, oriented along the point order.
    pub tangents: Vec<Pt>,
    /// Per-point distance estimate `|F| / |grad F|`.
    pub residuals: Vec<f64>,
    pub residual_bound: f64,
    pub closed: bool,
    /// Terminations at the first and last point.
    pub ends: [CurveEnd; 2],
}

impl TracedCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut c = self.clone();
        c.points.reverse();
        c.tangents.reverse();
        for t in &mut c.tangents {
            *t = (-t.0, -t.1);
        }
        c.residuals.reverse();
        c.ends.reverse();
        c
    }

    /// Polyline length, including the closing segment of a loop.
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| norm(sub(w[1], w[0]))).sum();
        if self.closed && self.points.len() > 1 {
            l += norm(sub(self.points[0], self.points[self.points.len() - 1]));
        }
        l
    }

    pub fn min_radius(&self) -> f64 {
        self.points.iter().map(|&p| norm(p)).fold(f64::INFINITY, f64::min)
    }

    fn touches_origin(&self) -> bool {
        self.ends.contains(&CurveEnd::Origin)
    }
}

/// All curves of the zero set met by the lattice, plus lattice cells where
/// the zero set appears to cross itself away from the origin.
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub curves: Vec<TracedCurve>,
    pub singular_cells: Vec<Pt>,
}

fn unit_tangent(g: Pt) -> Option<Pt> {
    let n = norm(g);
    (n > 0.0 && n.is_finite()).then(|| (-g.1 / n, g.0 / n))
}

/// Newton iteration for `F = 0` restricted to the line `q + s n`.
fn correct<F: ScalarField + ?Sized>(field: &F, mut q: Pt, n: Pt, tol: f64) -> Option<(Pt, f64)> {
    for _ in 0..16 {
        let (v, g) = field.value_grad(q);
        let gn = norm(g);
        if !(gn > 0.0) || !v.is_finite() {
            return None;
        }
        let d = v.abs() / gn;
        if d <= tol {
            return Some((q, d));
        }
        let gd = dot(g, n);
        if gd.abs() < 0.2 * gn {
            return None;
        }
        q = axpy(-v / gd, n, q);
    }
    let (v, g) = field.value_grad(q);
    let d = v.abs() / norm(g);
    (d <= tol).then_some((q, d))
}

/// Point of the zero set on the circle `|z| = r` near `z0`.
fn boundary_point<F: ScalarField + ?Sized>(field: &F, inside: Pt, outside: Pt, r: f64, tol: f64) -> Pt {
    // start from the chord's intersection with the circle
    let d = sub(outside, inside);
    let (a, b, c) = (dot(d, d), 2.0 * dot(inside, d), dot(inside, inside) - r * r);
    let s = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
    let mut z = axpy(s, d, inside);
    for _ in 0..20 {
        let (v, g) = field.value_grad(z);
        let h = dot(z, z) - r * r;
        let det = g.0 * 2.0 * z.1 - g.1 * 2.0 * z.0;
        if det == 0.0 {
            break;
        }
        let dx = (v * 2.0 * z.1 - g.1 * h) / det;
        let dy = (g.0 * h - 2.0 * z.0 * v) / det;
        z = (z.0 - dx, z.1 - dy);
        if dx.hypot(dy) < 1e-3 * tol {
            break;
        }
    }
    // land exactly on the circle
    let n = norm(z);
    if n > 0.0 {
        z = (z.0 * r / n, z.1 * r / n);
    }
    z
}

struct SegmentIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(Pt, Pt)>>,
}

impl SegmentIndex {
    fn new(cell: f64) -> Self {
        SegmentIndex {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, v: f64) -> i64 {
        (v / self.cell).floor() as i64
    }

    fn insert_curve(&mut self, pts: &[Pt], closed: bool) {
        let n = pts.len();
        let segs = if closed { n } else { n.saturating_sub(1) };
        if n == 1 {
            self.insert(pts[0], pts[0]);
        }
        for i in 0..segs {
            self.insert(pts[i], pts[(i + 1) % n]);
        }
    }

    fn insert(&mut self, a: Pt, b: Pt) {
        let (x0, x1) = (self.key(a.0.min(b.0)), self.key(a.0.max(b.0)));
        let (y0, y1) = (self.key(a.1.min(b.1)), self.key(a.1.max(b.1)));
        for i in x0..=x1 {
            for j in y0..=y1 {
                self.buckets.entry((i, j)).or_default().push((a, b));
            }
        }
    }

    fn near(&self, p: Pt, tol: f64) -> bool {
        let (i, j) = (self.key(p.0), self.key(p.1));
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(segs) = self.buckets.get(&(i + di, j + dj)) {
                    if segs.iter().any(|&(a, b)| seg_dist(p, a, b) < tol) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn seg_dist(p: Pt, a: Pt, b: Pt) -> f64 {
    let d = sub(b, a);
    let l2 = dot(d, d);
    let s = if l2 > 0.0 {
        (dot(sub(p, a), d) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, axpy(s, d, a)))
}

struct March {
    points: Vec<Pt>,
    tangents: Vec<Pt>,
    residuals: Vec<f64>,
    end: CurveEnd,
}

struct Tracer<'a, F: ScalarField + ?Sized> {
    field: &'a F,
    cfg: &'a TraceConfig,
    cell: f64,
}

impl<F: ScalarField + ?Sized> Tracer<'_, F> {
    fn tangent_at(&self, p: Pt, along: Pt) -> Option<Pt> {
        let t = unit_tangent(self.field.value_grad(p).1)?;
        Some(if dot(t, along) < 0.0 { (-t.0, -t.1) } else { t })
    }

    /// Follows the curve from `start` in direction `dir`. The start point
    /// itself is not included.
    fn march(&self, start: Pt, dir: Pt, detect_closure: bool) -> March {
        let cfg = self.cfg;
        let (r, r0) = (cfg.radius, cfg.r_origin());
        let (h_max, h_min) = (cfg.h_max(), cfg.h_min());
        let mut out = March {
            points: Vec::new(),
            tangents: Vec::new(),
            residuals: Vec::new(),
            end: CurveEnd::Stalled,
        };
        let mut p = start;
        let mut t = dir;
        let mut h = h_max.min(0.05 * norm(p).max(r0));
        let mut travelled = 0.0;
        for _ in 0..cfg.max_steps {
            let cap = h_max.min(0.05 * norm(p).max(r0));
            h = h.min(cap);
            let accepted = loop {
                let q = axpy(h, t, p);
                let n = (-t.1, t.0);
                let step = correct(self.field, q, n, 0.1 * cfg.trace_tol)
                    .or_else(|| correct(self.field, q, n, cfg.trace_tol))
                    .and_then(|(q2, d)| {
                        if norm(sub(q2, q)) > 0.5 * h || norm(sub(q2, p)) > h_max {
                            return None;
                        }
                        let t2 = self.tangent_at(q2, t)?;
                        (dot(t2, t) >= 10f64.to_radians().cos()).then_some((q2, t2, d))
                    });
                match step {
                    Some(s) => break Some(s),
                    None if h * 0.5 >= h_min => h *= 0.5,
                    None => break None,
                }
            };
            let Some((q, tq, d)) = accepted else {
                out.end = CurveEnd::Stalled;
                return out;
            };
            if detect_closure && travelled > 4.0 * h && seg_dist(start, p, q) < 0.1 * self.cell.min(h) {
                out.end = CurveEnd::Closed;
                return out;
            }
            if norm(q) >= r {
                let z = boundary_point(self.field, p, q, r, cfg.trace_tol);
                let (v, g) = self.field.value_grad(z);
                let tz = self.tangent_at(z, t).unwrap_or(t);
                if out.points.last().is_some_and(|&l| norm(sub(z, l)) < h_min) {
                    out.points.pop();
                    out.tangents.pop();
                    out.residuals.pop();
                }
                out.points.push(z);
                out.tangents.push(tz);
                out.residuals.push(v.abs() / norm(g));
                out.end = CurveEnd::Boundary {
                    angle: wrap_angle(z.1.atan2(z.0)),
                };
                return out;
            }
            travelled += norm(sub(q, p));
            out.points.push(q);
            out.tangents.push(tq);
            out.residuals.push(d);
            if norm(q) < r0 {
                out.end = CurveEnd::Origin;
                return out;
            }
            p = q;
            t = tq;
            h = (h * 1.5).min(h_max);
        }
        out
    }

    fn trace_from(&self, seed: Pt, d0: f64) -> Option<TracedCurve> {
        let t0 = unit_tangent(self.field.value_grad(seed).1)?;
        let fwd = self.march(seed, t0, true);
        if fwd.end == CurveEnd::Closed {
            let mut points = vec![seed];
            points.extend(fwd.points);
            let mut tangents = vec![t0];
            tangents.extend(fwd.tangents);
            let mut residuals = vec![d0];
            residuals.extend(fwd.residuals);
            return Some(finish(points, tangents, residuals, true, [CurveEnd::Closed; 2]));
        }
        let bwd = self.march(seed, (-t0.0, -t0.1), false);
        let mut points: Vec<Pt> = bwd.points.iter().rev().copied().collect();
        let mut tangents: Vec<Pt> = bwd.tangents.iter().rev().map(|t| (-t.0, -t.1)).collect();
        let mut residuals: Vec<f64> = bwd.residuals.iter().rev().copied().collect();
        points.push(seed);
        tangents.push(t0);
        residuals.push(d0);
        points.extend(fwd.points);
        tangents.extend(fwd.tangents);
        residuals.extend(fwd.residuals);
        Some(finish(points, tangents, residuals, false, [bwd.end, fwd.end]))
    }
}

fn finish(points: Vec<Pt>, tangents: Vec<Pt>, residuals: Vec<f64>, closed: bool, ends: [CurveEnd; 2]) -> TracedCurve {
    let residual_bound = residuals.iter().copied().fold(0.0, f64::max);
    TracedCurve {
        points,
        tangents,
        residuals,
        residual_bound,
        closed,
        ends,
    }
}

/// Refines a sign change of `F` on the segment `[a, b]` to a curve point.
fn edge_root<F: ScalarField + ?Sized>(field: &F, a: Pt, b: Pt, va: f64, tol: f64) -> Option<(Pt, f64)> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let at = |s: f64| axpy(s, sub(b, a), a);
    for _ in 0..12 {
        let m = 0.5 * (lo + hi);
        let vm = field.value(at(m));
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
    let q = at(0.5 * (lo + hi));
    let g = field.value_grad(q).1;
    let gn = norm(g);
    if gn == 0.0 {
        return None;
    }
    correct(field, q, (g.0 / gn, g.1 / gn), tol)
}

/// Traces the zero set of `field` inside the disc of radius `cfg.radius`.
pub fn trace_zero_set<F: ScalarField + ?Sized>(field: &F, cfg: &TraceConfig) -> Result<ZeroSet> {
    cfg.validate()?;
    let n = cfg.resolution;
    let r = cfg.radius;
    let cell = 2.0 * r / n as f64;
    let coord = |i: usize| -r + cell * i as f64;
    let mut grid = vec![0.0; (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            grid[i * (n + 1) + j] = field.value((coord(i), coord(j)));
        }
    }
    let val = |i: usize, j: usize| grid[i * (n + 1) + j];
    let tracer = Tracer { field, cfg, cell };
    let mut index = SegmentIndex::new(cell);
    let mut curves = Vec::new();
    let r0 = cfg.r_origin();

    let mut edges = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            if i < n {
                edges.push(((i, j), (i + 1, j)));
            }
            if j < n {
                edges.push(((i, j), (i, j + 1)));
            }
        }
    }
    for ((i0, j0), (i1, j1)) in edges {
        let (va, vb) = (val(i0, j0), val(i1, j1));
        if !((va > 0.0 && vb <= 0.0) || (va < 0.0 && vb >= 0.0)) {
            continue;
        }
        let (a, b) = ((coord(i0), coord(j0)), (coord(i1), coord(j1)));
        let mid = (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
        if norm(mid) >= r || norm(mid) < 1.5 * r0 {
            continue;
        }
        let Some((seed, d0)) = edge_root(field, a, b, va, 0.1 * cfg.trace_tol)
            .or_else(|| edge_root(field, a, b, va, cfg.trace_tol))
        else {
            continue;
        };
        if norm(seed) >= r || norm(seed) < r0 || index.near(seed, 0.1 * cell) {
            continue;
        }
        if let Some(c) = tracer.trace_from(seed, d0) {
            index.insert_curve(&c.points, c.closed);
            curves.push(c);
        }
    }

    let singular_cells = singular_cells(field, &grid, n, cell, r, r0);
    Ok(ZeroSet {
        curves,
        singular_cells,
    })
}

/// Saddle-pattern lattice cells containing a critical point of `F` close
/// to the zero set, away from the origin.
fn singular_cells<F: ScalarField + ?Sized>(field: &F, grid: &[f64], n: usize, cell: f64, r: f64, r0: f64) -> Vec<Pt> {
    let val = |i: usize, j: usize| grid[i * (n + 1) + j];
    let coord = |i: usize| -r + cell * i as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b, c, d) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1));
            let saddle = (a > 0.0) == (c > 0.0) && (b > 0.0) == (d > 0.0) && (a > 0.0) != (b > 0.0);
            if !saddle {
                continue;
            }
            let centre = (coord(i) + 0.5 * cell, coord(j) + 0.5 * cell);
            if norm(centre) >= r || norm(centre) < 2.0 * cell + r0 {
                continue;
            }
            if let Some(p) = critical_point(field, centre, cell) {
                let (v, _) = field.value_grad(p);
                let hs = hessian_norm(field, p, cell);
                if v.abs() <= hs * cell * cell {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn hessian(field: &(impl ScalarField + ?Sized), p: Pt, h: f64) -> [[f64; 2]; 2] {
    let gxp = field.value_grad((p.0 + h, p.1)).1;
    let gxm = field.value_grad((p.0 - h, p.1)).1;
    let gyp = field.value_grad((p.0, p.1 + h)).1;
    let gym = field.value_grad((p.0, p.1 - h)).1;
    let hxx = (gxp.0 - gxm.0) / (2.0 * h);
    let hxy = 0.5 * ((gxp.1 - gxm.1) + (gyp.0 - gym.0)) / (2.0 * h);
    let hyy = (gyp.1 - gym.1) / (2.0 * h);
    [[hxx, hxy], [hxy, hyy]]
}

fn hessian_norm(field: &(impl ScalarField + ?Sized), p: Pt, cell: f64) -> f64 {
    let h = hessian(field, p, 1e-3 * cell);
    h[0][0].abs().max(h[0][1].abs()).max(h[1][1].abs())
}

fn critical_point(field: &(impl ScalarField + ?Sized), start: Pt, cell: f64) -> Option<Pt> {
    let mut p = start;
    for _ in 0..30 {
        let g = field.value_grad(p).1;
        let h = hessian(field, p, 1e-3 * cell);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (h[1][1] * g.0 - h[0][1] * g.1) / det;
        let dy = (h[0][0] * g.1 - h[0][1] * g.0) / det;
        p = (p.0 - dx, p.1 - dy);
        if norm(sub(p, start)) > cell {
            return None;
        }
        if dx.hypot(dy) < 1e-9 * cell {
            return Some(p);
        }
    }
    None
}

/// Traces the closed level curve through `seed`; errors if the curve leaves
/// the disc, enters the origin ball, or stalls.
pub fn trace_closed_curve<F: ScalarField + ?Sized>(field: &F, seed: Pt, cfg: &TraceConfig) -> Result<TracedCurve> {
    cfg.validate()?;
    let g = field.value_grad(seed).1;
    let gn = norm(g);
    if gn == 0.0 {
        return Err(Error::NearCritical {
            x: seed.0,
            y: seed.1,
            grad_norm: 0.0,
        });
    }
    let (p, d) = correct(field, seed, (g.0 / gn, g.1 / gn), 0.1 * cfg.trace_tol)
        .ok_or_else(|| Error::Numeric("could not project seed onto the curve".into()))?;
    let tracer = Tracer {
        field,
        cfg,
        cell: 2.0 * cfg.radius / cfg.resolution as f64,
    };
    let c = tracer
        .trace_from(p, d)
        .ok_or_else(|| Error::Numeric("vanishing gradient at the seed".into()))?;
    Ok(c)
}

/// Polar angles where the curves leave the disc, sorted in `[0, 2 pi)`.
pub fn boundary_crossings(curves: &[TracedCurve]) -> Vec<f64> {
    let mut a: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.ends.iter())
        .filter_map(|e| match e {
            CurveEnd::Boundary { angle } => Some(*angle),
            _ => None,
        })
        .collect();
    a.sort_by(f64::total_cmp);
    a
}

/// A smooth branch through the origin, assembled from two half-branches.
#[derive(Clone, Debug)]
pub struct OriginBranch {
    /// Runs from one half-branch into the origin ball and out along the other.
    pub curve: TracedCurve,
    /// Tangent direction at the origin, in `[0, pi)`.
    pub tangent_angle: f64,
    /// Indices into the input curve list of the two halves.
    pub halves: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct BranchSet {
    pub origin_branches: Vec<OriginBranch>,
    pub avoiding_branches: Vec<TracedCurve>,
    pub boundary_angles: Vec<f64>,
}

/// Direction of the line through the origin best fitting `pts`
/// (total least squares), in `[0, pi)`.
pub fn tls_angle_through_origin(pts: &[Pt]) -> f64 {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    (0.5 * (2.0 * sxy).atan2(sxx - syy)).rem_euclid(PI)
}

struct HalfEnd {
    curve: usize,
    /// true when the origin end is the last point
    at_last: bool,
    dir: f64,
    fit: Vec<Pt>,
}

/// Splits curves into branches through the origin and branches avoiding it.
pub fn origin_branches(curves: &[TracedCurve], r_fit: f64, r_origin: f64, fit_min: usize) -> Result<BranchSet> {
    let mut halves = Vec::new();
    let mut avoiding = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        if !c.touches_origin() {
            avoiding.push(c.clone());
            continue;
        }
        for (slot, at_last) in [(0usize, false), (1, true)] {
            if c.ends[slot] != CurveEnd::Origin {
                continue;
            }
            let fit: Vec<Pt> = c
                .points
                .iter()
                .copied()
                .filter(|&p| {
                    let r = norm(p);
                    r > r_origin && r < r_fit
                })
                .collect();
            if fit.len() < fit_min {
                return Err(Error::InsufficientSampling(format!(
                    "half-branch of curve {ci} has {} points in the fit annulus ({r_origin:.3e}, {r_fit:.3e}), need {fit_min}",
                    fit.len()
                )));
            }
            let (sx, sy) = fit.iter().fold((0.0, 0.0), |acc, &p| {
                let n = norm(p);
                (acc.0 + p.0 / n, acc.1 + p.1 / n)
            });
            halves.push(HalfEnd {
                curve: ci,
                at_last,
                dir: sy.atan2(sx),
                fit,
            });
        }
    }
    if halves.len() % 2 == 1 {
        return Err(Error::UnresolvedTopology(format!(
            "{} half-branches reach the origin; expected an even number",
            halves.len()
        )));
    }
    // pair half-branches with opposite approach directions
    let mut cand = Vec::new();
    for a in 0..halves.len() {
        for b in a + 1..halves.len() {
            let off = angle_diff(halves[a].dir, halves[b].dir + PI).abs();
            cand.push((off, a, b));
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used = vec![false; halves.len()];
    let mut branches = Vec::new();
    for (off, a, b) in cand {
        if used[a] || used[b] {
            continue;
        }
        if off > 20f64.to_radians() {
            return Err(Error::UnresolvedTopology(format!(
                "half-branches at {:.2} deg and {:.2} deg are not opposite",
                halves[a].dir.to_degrees(),
                halves[b].dir.to_degrees()
            )));
        }
        used[a] = true;
        used[b] = true;
        let (ha, hb) = (&halves[a], &halves[b]);
        let first = if ha.at_last {
            curves[ha.curve].clone()
        } else {
            curves[ha.curve].reversed()
        };
        let second = if hb.at_last {
            curves[hb.curve].reversed()
        } else {
            curves[hb.curve].clone()
        };
        let mut pts = ha.fit.clone();
        pts.extend_from_slice(&hb.fit);
        branches.push(OriginBranch {
            curve: join(&first, &second),
            tangent_angle: tls_angle_through_origin(&pts),
            halves: [ha.curve, hb.curve],
        });
    }
    Ok(BranchSet {
        origin_branches: branches,
        avoiding_branches: avoiding,
        boundary_angles: boundary_crossings(curves),
    })
}

fn join(a: &TracedCurve, b: &TracedCurve) -> TracedCurve {
    let mut points = a.points.clone();
    points.extend_from_slice(&b.points);
    let mut tangents = a.tangents.clone();
    tangents.extend_from_slice(&b.tangents);
    let mut residuals = a.residuals.clone();
    residuals.extend_from_slice(&b.residuals);
    finish(points, tangents, residuals, false, [a.ends[0], b.ends[1]])
}

/// The six boundary crossings of the unperturbed vertex set, which number
/// the sectors `0..6` counterclockwise: sector `i` lies between crossings
/// `i` and `i + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorAnchors {
    pub angles: [f64; 6],
}

impl SectorAnchors {
    pub fn new(angles: &[f64]) -> Result<Self> {
        if angles.len() != 6 {
            return Err(Error::UnresolvedTopology(format!(
                "expected 6 boundary crossings for the sector anchors, found {}",
                angles.len()
            )));
        }
        let mut a: Vec<f64> = angles.iter().map(|&x| wrap_angle(x)).collect();
        a.sort_by(f64::total_cmp);
        Ok(SectorAnchors {
            angles: [a[0], a[1], a[2], a[3], a[4], a[5]],
        })
    }

    /// Index of the anchor nearest to `angle`.
    pub fn nearest(&self, angle: f64) -> usize {
        (0..6)
            .min_by(|&i, &j| {
                angle_diff(angle, self.angles[i])
                    .abs()
                    .total_cmp(&angle_diff(angle, self.angles[j]).abs())
            })
            .expect("six anchors")
    }
}

/// Which adjacent pair of boundary crossings is joined by the branch that
/// avoids the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairingLabel {
    /// Three branches through the origin.
    Umbilic,
    /// The avoiding branch lies in this sector.
    Sector(u8),
}

impl PairingLabel {
    /// Sector shifted by three; `Umbilic` is its own opposite.
    pub fn opposite(self) -> Self {
        self.shifted(3)
    }

    pub fn shifted(self, k: u8) -> Self {
        match self {
            PairingLabel::Umbilic => PairingLabel::Umbilic,
            PairingLabel::Sector(s) => PairingLabel::Sector((s + k) % 6),
        }
    }
}

impl std::fmt::Display for PairingLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairingLabel::Umbilic => write!(f, "umbilic"),
            PairingLabel::Sector(s) => write!(f, "{s}"),
        }
    }
}

fn topology_dump(bs: &BranchSet) -> String {
    let ends: Vec<String> = bs
        .avoiding_branches
        .iter()
        .map(|c| format!("{:?}", c.ends))
        .collect();
    format!(
        "origin branches: {}, avoiding branches: {} {:?}, boundary angles (deg): {:?}",
        bs.origin_branches.len(),
        bs.avoiding_branches.len(),
        ends,
        bs.boundary_angles
            .iter()
            .map(|a| (a.to_degrees() * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    )
}

pub fn classify_pairing(bs: &BranchSet, anchors: &SectorAnchors) -> Result<PairingLabel> {
    if bs.boundary_angles.len() != 6 {
        return Err(Error::UnresolvedTopology(format!(
            "expected 6 boundary crossings; {}",
            topology_dump(bs)
        )));
    }
    let mut hit = [false; 6];
    for &a in &bs.boundary_angles {
        let k = anchors.nearest(a);
        if hit[k] {
            return Err(Error::UnresolvedTopology(format!(
                "two crossings near anchor {k}; {}",
                topology_dump(bs)
            )));
        }
        hit[k] = true;
    }
    let crossing: Vec<&TracedCurve> = bs
        .avoiding_branches
        .iter()
        .filter(|c| c.ends.iter().all(|e| matches!(e, CurveEnd::Boundary { .. })))
        .collect();
    match (bs.origin_branches.len(), crossing.len()) {
        (3, 0) => Ok(PairingLabel::Umbilic),
        (2, 1) => {
            let ends: Vec<usize> = crossing[0]
                .ends
                .iter()
                .map(|e| match e {
                    CurveEnd::Boundary { angle } => anchors.nearest(*angle),
                    _ => unreachable!("filtered above"),
                })
                .collect();
            let (i, j) = (ends[0], ends[1]);
            if (i + 1) % 6 == j {
                Ok(PairingLabel::Sector(i as u8))
            } else if (j + 1) % 6 == i {
                Ok(PairingLabel::Sector(j as u8))
            } else {
                Err(Error::UnresolvedTopology(format!(
                    "avoiding branch joins non-adjacent crossings {i} and {j}; {}",
                    topology_dump(bs)
                )))
            }
        }
        _ => Err(Error::UnresolvedTopology(topology_dump(bs))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{BivarPoly, Rational};

    fn field(s: &str) -> PolyField {
        PolyField::new(&BivarPoly::<Rational>::parse(s).unwrap().to_f64())
    }

    #[test]
    fn circle() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 64,
            ..Default::default()
        };
        let z = trace_zero_set(&field("x^2+y^2-1/25"), &cfg).unwrap();
        assert_eq!(z.curves.len(), 1);
        let c = &z.curves[0];
        assert!(c.closed);
        assert!(c.residual_bound <= cfg.trace_tol);
        let dev = c.points.iter().map(|&p| (norm(p) - 0.2).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-8, "{dev}");
        assert!((c.length() - TAU * 0.2).abs() < 1e-3);
        assert!(z.singular_cells.is_empty());
    }

    #[test]
    fn coordinate_cross() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 64,
            r_fit: 0.05,
            ..Default::default()
        };
        let z = trace_zero_set(&field("x*y"), &cfg).unwrap();
        let deg: Vec<f64> = boundary_crossings(&z.curves).iter().map(|a| a.to_degrees()).collect();
        assert_eq!(deg.len(), 4);
        for (d, e) in deg.iter().zip([0.0, 90.0, 180.0, 270.0]) {
            assert!(angle_diff(d.to_radians(), f64::to_radians(e)).abs() < 0.5f64.to_radians(), "{deg:?}");
        }
        let bs = origin_branches(&z.curves, cfg.r_fit, cfg.r_origin(), cfg.fit_min).unwrap();
        assert_eq!(bs.origin_branches.len(), 2);
        let t: Vec<f64> = bs.origin_branches.iter().map(|b| b.tangent_angle).collect();
        let d0 = t.iter().map(|&a| line_angle_diff(a, 0.0)).fold(f64::INFINITY, f64::min);
        let d90 = t.iter().map(|&a| line_angle_diff(a, 0.5 * PI)).fold(f64::INFINITY, f64::min);
        assert!(d0 < 1e-6 && d90 < 1e-6, "{t:?}");
        assert!(bs.avoiding_branches.is_empty());
    }

    #[test]
    fn two_disjoint_ovals_and_an_open_arc() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 128,
            ..Default::default()
        };
        // (x - 1/2)^2 + y^2 = 1/100 and (x + 1/2)^2 + y^2 = 1/100
        let z = trace_zero_set(&field("((x-1/2)^2+y^2-1/100)*((x+1/2)^2+y^2-1/100)"), &cfg).unwrap();
        assert_eq!(z.curves.len(), 2);
        assert!(z.curves.iter().all(|c| c.closed));
        let z = trace_zero_set(&field("y-x^2+1/4"), &cfg).unwrap();
        assert_eq!(z.curves.len(), 1);
        assert!(matches!(z.curves[0].ends, [CurveEnd::Boundary { .. }, CurveEnd::Boundary { .. }]));
    }

    #[test]
    fn step_bounds_hold() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 64,
            ..Default::default()
        };
        let z = trace_zero_set(&field("x^2+4*y^2-1/4"), &cfg).unwrap();
        let c = &z.curves[0];
        for w in c.points.windows(2) {
            let s = norm(sub(w[1], w[0]));
            assert!(s <= cfg.h_max() * (1.0 + 1e-9) && s >= cfg.h_min());
        }
        for (p, t) in c.points.iter().zip(&c.tangents) {
            assert!((norm(*t) - 1.0).abs() < 1e-12);
            // tangent is orthogonal to the gradient (2x, 8y)
            assert!((2.0 * p.0 * t.0 + 8.0 * p.1 * t.1).abs() < 1e-9);
        }
    }

    #[test]
    fn crossing_lines_off_origin_are_flagged() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 64,
            ..Default::default()
        };
        let z = trace_zero_set(&field("(x-3/10)*(y-1/5)"), &cfg).unwrap();
        assert!(!z.singular_cells.is_empty());
        assert!(z.singular_cells.iter().any(|p| norm(sub(*p, (0.3, 0.2))) < 0.05));
    }

    #[test]
    fn insufficient_sampling() {
        let cfg = TraceConfig {
            radius: 1.0,
            resolution: 32,
            r_fit: 0.05,
            fit_min: 1000,
            ..Default::default()
        };
        let z = trace_zero_set(&field("x*y"), &cfg).unwrap();
        assert!(matches!(
            origin_branches(&z.curves, cfg.r_fit, cfg.r_origin(), cfg.fit_min),
            Err(Error::InsufficientSampling(_))
        ));
    }

    #[test]
    fn tls_fit() {
        let pts: Vec<Pt> = (1..10).map(|i| (i as f64, -(i as f64))).collect();
        assert!((tls_angle_through_origin(&pts) - 0.75 * PI).abs() < 1e-12);
        let pts: Vec<Pt> = (1..10).map(|i| (0.0, i as f64)).collect();
        assert!((tls_angle_through_origin(&pts) - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn labels() {
        assert_eq!(PairingLabel::Sector(4).opposite(), PairingLabel::Sector(1));
        assert_eq!(PairingLabel::Umbilic.opposite(), PairingLabel::Umbilic);
        let a = SectorAnchors::new(&[5.0, 0.1, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.angles[0], 0.1);
        assert_eq!(a.nearest(6.2), 0);
        assert_eq!(a.nearest(4.6), 5);
        assert!(SectorAnchors::new(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TraceConfig::default().validate().is_ok());
        let bad = TraceConfig {
            resolution: 8,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TraceConfig {
            trace_tol: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
