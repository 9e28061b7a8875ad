//! CSV datasets and SVG plots.
//!
//! Floats are written as `{:.16e}` (17 significant digits). Every CSV may
//! start with `# key=value` provenance lines; readers should treat `#` as a
//! comment marker.

use std::fmt::Write as _;
use std::io::Write;

use crate::bifurcation::{CupSection, DiscriminantScan, SampleValue, ScanResult};
use crate::error::{Error, Result};
use crate::tracer::{Pt, ZeroSet};
use crate::vertices::LevelCensus;

pub const CURVE_HEADER: [&str; 7] = ["curve_id", "seq", "x", "y", "tx", "ty", "residual"];
pub const CENSUS_HEADER: [&str; 7] = ["k", "count", "x", "y", "kappa", "degeneracy", "extremum"];
pub const KSTAR_HEADER: [&str; 10] = [
    "index",
    "lambda",
    "mu",
    "kstar",
    "kstar_over_r2",
    "merge_x",
    "merge_y",
    "degeneracy",
    "count",
    "status",
];
pub const LABEL_HEADER: [&str; 5] = ["theta_deg", "lambda", "mu", "label", "status"];
pub const ANGLE_HEADER: [&str; 4] = ["index", "theta_deg", "label_before", "label_after"];
pub const CUP_HEADER: [&str; 6] = ["seq", "theta_deg", "lambda", "mu", "radius", "cusp"];
pub const REFERENCE_HEADER: [&str; 5] = ["seq", "phi", "lambda", "mu", "cusp"];

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv output: {e}"))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Input(format!("output: {e}"))
}

fn writer<W: Write>(mut w: W, meta: &[(String, String)], header: &[&str]) -> Result<csv::Writer<W>> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}").map_err(io_err)?;
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    Ok(wr)
}

fn finish<W: Write>(mut wr: csv::Writer<W>) -> Result<()> {
    wr.flush().map_err(io_err)
}

pub fn write_curves_csv<W: Write>(w: W, meta: &[(String, String)], z: &ZeroSet) -> Result<()> {
    let mut wr = writer(w, meta, &CURVE_HEADER)?;
    for (id, c) in z.curves.iter().enumerate() {
        for (seq, ((p, t), r)) in c.points.iter().zip(&c.tangents).zip(&c.residuals).enumerate() {
            wr.write_record([
                id.to_string(),
                seq.to_string(),
                fmt_f64(p.0),
                fmt_f64(p.1),
                fmt_f64(t.0),
                fmt_f64(t.1),
                fmt_f64(*r),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(wr)
}

/// One row per vertex; a level without vertices gets one row with empty
/// vertex fields.
pub fn write_census_csv<W: Write>(w: W, meta: &[(String, String)], levels: &[LevelCensus]) -> Result<()> {
    let mut wr = writer(w, meta, &CENSUS_HEADER)?;
    for c in levels {
        if c.records.is_empty() {
            wr.write_record([fmt_f64(c.level), c.vertex_count.to_string(), "".into(), "".into(), "".into(), "".into(), "".into()])
                .map_err(csv_err)?;
        }
        for r in &c.records {
            wr.write_record([
                fmt_f64(c.level),
                c.vertex_count.to_string(),
                fmt_f64(r.point.0),
                fmt_f64(r.point.1),
                fmt_f64(r.kappa),
                r.degeneracy.to_string(),
                r.extremum.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(wr)
}

pub fn write_kstar_csv<W: Write>(w: W, scan: &ScanResult) -> Result<()> {
    let mut wr = writer(w, &scan.metadata, &KSTAR_HEADER)?;
    for s in &scan.samples {
        let r2 = s.tau.0 * s.tau.0 + s.tau.1 * s.tau.1;
        let mut row = vec![s.index.to_string(), fmt_f64(s.tau.0), fmt_f64(s.tau.1)];
        match &s.value {
            Ok(SampleValue::KStar(k)) => row.extend([
                fmt_f64(k.kstar),
                fmt_f64(k.kstar / r2),
                fmt_f64(k.merge_point.0),
                fmt_f64(k.merge_point.1),
                k.degeneracy.to_string(),
                String::new(),
                "ok".into(),
            ]),
            Ok(SampleValue::Census { level, count, closed }) => row.extend([
                fmt_f64(*level),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                count.to_string(),
                if *closed { "ok".into() } else { "open".into() },
            ]),
            Ok(SampleValue::Label(l)) => row.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("label {l}"),
            ]),
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("error: {e}"));
            }
        }
        wr.write_record(&row).map_err(csv_err)?;
    }
    finish(wr)
}

/// Pairing label at every sweep sample.
pub fn write_labels_csv<W: Write>(w: W, meta: &[(String, String)], scan: &DiscriminantScan) -> Result<()> {
    let mut wr = writer(w, meta, &LABEL_HEADER)?;
    for (theta, label) in &scan.samples {
        let (lam, mu) = (scan.r_param * theta.cos(), scan.r_param * theta.sin());
        let (l, status) = match label {
            Ok(l) => (l.to_string(), "ok".to_string()),
            Err(e) => (String::new(), format!("skipped: {e}")),
        };
        wr.write_record([fmt_f64(theta.to_degrees()), fmt_f64(lam), fmt_f64(mu), l, status])
            .map_err(csv_err)?;
    }
    finish(wr)
}

/// The refined label-change angles.
pub fn write_angles_csv<W: Write>(w: W, meta: &[(String, String)], scan: &DiscriminantScan) -> Result<()> {
    let mut wr = writer(w, meta, &ANGLE_HEADER)?;
    for (i, a) in scan.angles.iter().enumerate() {
        wr.write_record([
            i.to_string(),
            fmt_f64(a.to_degrees()),
            scan.labels_before[i].to_string(),
            scan.labels_after[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(wr)
}

pub fn write_cup_csv<W: Write>(w: W, meta: &[(String, String)], cup: &CupSection) -> Result<()> {
    let mut wr = writer(w, meta, &CUP_HEADER)?;
    for (i, (t, r)) in cup.thetas.iter().zip(&cup.radii).enumerate() {
        let is_cusp = r.is_finite()
            && cup
                .cusp_angles
                .iter()
                .any(|c| (c - t).abs() < 1e-12 || (c - t).abs() > std::f64::consts::TAU - 1e-12);
        wr.write_record([
            i.to_string(),
            fmt_f64(t.to_degrees()),
            fmt_f64(r * t.cos()),
            fmt_f64(r * t.sin()),
            fmt_f64(*r),
            u8::from(is_cusp).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(wr)
}

/// Reference cup polyline sampled at `phi = 2 pi seq / n`; `cusps` are the
/// indices of detected cusps.
pub fn write_reference_csv<W: Write>(w: W, meta: &[(String, String)], pts: &[Pt], cusps: &[usize]) -> Result<()> {
    let mut wr = writer(w, meta, &REFERENCE_HEADER)?;
    let n = pts.len();
    for (i, p) in pts.iter().enumerate() {
        wr.write_record([
            i.to_string(),
            fmt_f64(std::f64::consts::TAU * i as f64 / n as f64),
            fmt_f64(p.0),
            fmt_f64(p.1),
            u8::from(cusps.contains(&i)).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(wr)
}

/// Minimal self-contained SVG plot with the y axis pointing up.
#[derive(Clone, Debug)]
pub struct SvgPlot {
    size: f64,
    bounds: (f64, f64, f64, f64),
    body: String,
}

impl SvgPlot {
    /// Square plot of `size` pixels showing `[cx - half, cx + half]` in
    /// both coordinates.
    pub fn new(size: f64, center: Pt, half: f64) -> Self {
        SvgPlot {
            size,
            bounds: (center.0 - half, center.0 + half, center.1 - half, center.1 + half),
            body: String::new(),
        }
    }

    /// Plot window fitted around a set of points with a 5% margin.
    pub fn fitted<'a>(size: f64, pts: impl IntoIterator<Item = &'a Pt>) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(p.1);
            y1 = y1.max(p.1);
        }
        if !x0.is_finite() {
            return SvgPlot::new(size, (0.0, 0.0), 1.0);
        }
        let half = (0.5 * (x1 - x0).max(y1 - y0) * 1.05).max(1e-300);
        SvgPlot::new(size, (0.5 * (x0 + x1), 0.5 * (y0 + y1)), half)
    }

    fn map(&self, p: Pt) -> Pt {
        let (x0, x1, y0, y1) = self.bounds;
        (
            (p.0 - x0) / (x1 - x0) * self.size,
            (y1 - p.1) / (y1 - y0) * self.size,
        )
    }

    fn coords(&self, pts: &[Pt]) -> String {
        let mut s = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let q = self.map(p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.3},{:.3}", q.0, q.1);
        }
        s
    }

    pub fn polyline(&mut self, pts: &[Pt], color: &str, width: f64, closed: bool) -> &mut Self {
        let tag = if closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            self.body,
            r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            self.coords(pts)
        );
        self
    }

    /// Circle of data-space radius `r`.
    pub fn circle(&mut self, c: Pt, r: f64, color: &str, dashed: bool) -> &mut Self {
        let q = self.map(c);
        let rr = r / (self.bounds.1 - self.bounds.0) * self.size;
        let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{rr:.3}" fill="none" stroke="{color}" stroke-width="1"{dash}/>"#,
            q.0,
            q.1
        );
        self
    }

    pub fn marker(&mut self, p: Pt, color: &str) -> &mut Self {
        let q = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
            q.0,
            q.1
        );
        self
    }

    pub fn label(&mut self, text: &str) -> &mut Self {
        let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="8" y="18" font-family="monospace" font-size="12">{escaped}</text>"#
        );
        self
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            s = self.size
        )
    }
}

/// Traced curves inside their disc, origin branches drawn thicker.
pub fn zero_set_svg(z: &ZeroSet, radius: f64, title: &str) -> String {
    let mut plot = SvgPlot::new(600.0, (0.0, 0.0), radius * 1.05);
    plot.circle((0.0, 0.0), radius, "#888888", true);
    for c in &z.curves {
        plot.polyline(&c.points, "#1f4e9c", 1.5, c.closed);
    }
    for &p in &z.singular_cells {
        plot.marker(p, "#c0392b");
    }
    plot.label(title);
    plot.render()
}

/// A cup section and the reference curve, each scaled to unit diameter so
/// the shapes can be compared.
pub fn cup_overlay_svg(section: &[Pt], reference: &[Pt], title: &str) -> String {
    let unit = |pts: &[Pt]| -> Vec<Pt> {
        let r = pts.iter().map(|p| p.0.hypot(p.1)).fold(0.0, f64::max);
        let s = if r > 0.0 { 0.5 / r } else { 1.0 };
        pts.iter().map(|p| (p.0 * s, p.1 * s)).collect()
    };
    let mut plot = SvgPlot::new(600.0, (0.0, 0.0), 0.55);
    if !reference.is_empty() {
        plot.polyline(&unit(reference), "#999999", 1.0, true);
    }
    if !section.is_empty() {
        plot.polyline(&unit(section), "#1f4e9c", 1.5, true);
    }
    plot.label(title);
    plot.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::cup_reference;

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn reference_csv_layout() {
        let pts = cup_reference(1.0, 6).unwrap();
        let mut buf = Vec::new();
        write_reference_csv(&mut buf, &[("k".into(), "1".into())], &pts, &[0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# k=1");
        assert_eq!(lines[1], "seq,phi,lambda,mu,cusp");
        assert!(lines[2].starts_with("0,0.0000000000000000e0,-1.2000000000000000e1,"));
        assert!(lines[2].ends_with(",1"));
        assert_eq!(lines.len(), 8);
    }

    #[test]
    fn svg_is_self_contained() {
        let pts = cup_reference(1.0, 60).unwrap();
        let svg = cup_overlay_svg(&pts, &pts, "a < b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("href"));
    }
}
