//! Command dispatch and artifact writing.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vertexset::bifurcation::{
    cup_reference, cup_section, detect_cusps, discriminant_angles, kstar_field, kstar_quadratic_fit, FamilyContext,
    SampleValue,
};
use vertexset::export::{
    cup_overlay_svg, write_angles_csv, write_census_csv, write_cup_csv, write_curves_csv, write_kstar_csv,
    write_labels_csv, write_reference_csv, zero_set_svg,
};
use vertexset::surface::SurfaceFamily;
use vertexset::tracer::{origin_branches, trace_zero_set, PolyField, SectorAnchors, ZeroSet};
use vertexset::vertexfn::VertexFunction;
use vertexset::vertices::{vertex_census_sweep, LevelSurface};
use vertexset::Error;

use crate::config::{Command, ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{failed} acceptance check(s) failed")]
    Verification { failed: usize, lines: Vec<String> },
}

/// Machine-readable error line for stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.record().code
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, code) = match self {
            CliError::Config(_) => ("config", 2),
            CliError::Library(e) => match e {
                Error::Input(_) | Error::Validation(_) | Error::Genericity(_) | Error::Precondition(_) | Error::Degenerate(_) => {
                    ("config", 2)
                }
                _ => ("numeric", 3),
            },
            CliError::Io { .. } => ("io", 3),
            CliError::Verification { .. } => ("verification", 4),
        };
        ErrorRecord {
            kind,
            code,
            message: self.to_string(),
        }
    }
}

/// What a successful run printed and wrote.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Out<'a> {
    dir: &'a Path,
    prefix: &'a str,
    report: Report,
}

impl Out<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.prefix))
    }

    fn csv(
        &mut self,
        suffix: &str,
        write: impl FnOnce(BufWriter<fs::File>) -> vertexset::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.path(suffix);
        let file = fs::File::create(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        write(BufWriter::new(file))?;
        self.report.files.push(path);
        Ok(())
    }

    fn text(&mut self, suffix: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(suffix);
        fs::write(&path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.report.files.push(path);
        Ok(())
    }

    fn say(&mut self, line: impl Into<String>) {
        self.report.lines.push(line.into());
    }
}

fn family(cfg: &RunConfig) -> Result<SurfaceFamily, CliError> {
    let spec = cfg
        .family
        .as_ref()
        .ok_or_else(|| ConfigError(format!("[family] is required for {}", cfg.command)))?;
    Ok(spec.build()?)
}

fn context(cfg: &RunConfig) -> Result<FamilyContext, CliError> {
    Ok(FamilyContext::new(family(cfg)?, cfg.trace.clone(), cfg.census.clone())?)
}

/// The configured `tau`, truncated to the family's parameter count.
fn tau_for(fam: &SurfaceFamily, tau: [f64; 2]) -> Result<Vec<f64>, CliError> {
    let n = fam.n();
    if n > 2 {
        return Err(ConfigError(format!("families with {n} parameters are not supported by the CLI")).into());
    }
    if tau[n..].iter().any(|v| *v != 0.0) {
        return Err(ConfigError(format!("scan.tau has nonzero entries beyond the family's {n} parameters")).into());
    }
    Ok(tau[..n].to_vec())
}

fn meta(ctx_meta: Vec<(String, String)>, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = ctx_meta;
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

fn base_meta(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut m = vec![("command".to_string(), cfg.command.name().to_string())];
    if let Some(f) = &cfg.family {
        if let Ok(fam) = f.build() {
            m.push(("family".into(), fam.f().to_string()));
        }
    }
    let t = &cfg.trace;
    let c = &cfg.census;
    m.extend([
        ("radius".to_string(), t.radius.to_string()),
        ("resolution".to_string(), t.resolution.to_string()),
        ("trace_tol".to_string(), t.trace_tol.to_string()),
        ("r_fit".to_string(), t.r_fit.to_string()),
        ("window".to_string(), c.window.to_string()),
        ("deg_tol".to_string(), c.deg_tol.to_string()),
    ]);
    m
}

/// Executes a validated configuration, writing artifacts under
/// `out_dir` (or the configured directory).
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<Report, CliError> {
    let dir = out_dir.unwrap_or(&cfg.out_dir);
    if cfg.command != Command::Verify {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut out = Out {
        dir,
        prefix: &cfg.prefix,
        report: Report::default(),
    };
    match cfg.command {
        Command::TraceVertexSet => trace_vertex_set(cfg, &mut out)?,
        Command::LevelCensus => level_census(cfg, &mut out)?,
        Command::Kstar => kstar(cfg, &mut out)?,
        Command::Discriminant => discriminant(cfg, &mut out)?,
        Command::CupSection => cup(cfg, &mut out)?,
        Command::CupReference => reference(cfg, &mut out)?,
        Command::Verify => verify(cfg, &mut out)?,
    }
    Ok(out.report)
}

fn trace_vertex_set(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let fam = family(cfg)?;
    let tau = tau_for(&fam, cfg.scan.tau)?;
    let v = VertexFunction::build(&fam).at(&tau)?;
    let t = &cfg.trace;
    let z = trace_zero_set(&PolyField::new(&v), t)?;
    let bs = origin_branches(&z.curves, t.r_fit, t.r_origin(), t.fit_min)?;
    let tau_text = format!("{:?}", tau);
    let m = meta(base_meta(cfg), &[("tau", tau_text.clone())]);
    // origin branches first, each joined through the origin
    let joined = ZeroSet {
        curves: bs
            .origin_branches
            .iter()
            .map(|b| b.curve.clone())
            .chain(bs.avoiding_branches.iter().cloned())
            .collect(),
        singular_cells: z.singular_cells.clone(),
    };
    out.csv("_curves.csv", |w| write_curves_csv(w, &m, &joined))?;
    let svg = zero_set_svg(&joined, t.radius, &format!("vertex set, tau = {tau_text}"));
    out.text(".svg", &svg)?;
    out.say(format!("curves: {}", joined.curves.len()));
    let tangents: Vec<String> = bs
        .origin_branches
        .iter()
        .map(|b| format!("{:.3}", b.tangent_angle.to_degrees()))
        .collect();
    out.say(format!(
        "origin branches: {} (tangents deg: {})",
        bs.origin_branches.len(),
        tangents.join(", ")
    ));
    out.say(format!("branches avoiding the origin: {}", bs.avoiding_branches.len()));
    if !z.singular_cells.is_empty() {
        out.say(format!("singular cells: {:?}", z.singular_cells));
    }
    if fam.n() == 2 && tau.iter().any(|v| *v != 0.0) {
        let ctx = context(cfg)?;
        match ctx.anchors().and_then(|a: SectorAnchors| vertexset::tracer::classify_pairing(&bs, &a)) {
            Ok(l) => out.say(format!("pairing label: {l}")),
            Err(e) => out.say(format!("pairing label: unresolved ({e})")),
        }
    }
    Ok(())
}

fn level_census(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let fam = family(cfg)?;
    let tau = tau_for(&fam, cfg.scan.tau)?;
    let s = LevelSurface::with_vertex_function(&fam.at(&tau)?, VertexFunction::build(&fam).at(&tau)?);
    let results = vertex_census_sweep(&s, &cfg.scan.levels, &cfg.census);
    let mut censuses = Vec::new();
    for (k, r) in cfg.scan.levels.iter().zip(results) {
        let c = r?;
        out.say(format!(
            "k = {k:e}: {} vertices{}",
            c.vertex_count,
            if c.curve_closed { "" } else { " (level leaves the window; lower bound)" }
        ));
        censuses.push(c);
    }
    let m = meta(base_meta(cfg), &[("tau", format!("{tau:?}"))]);
    out.csv("_census.csv", |w| write_census_csv(w, &m, &censuses))
}

fn kstar(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let ctx = context(cfg)?;
    let taus: Vec<(f64, f64)> = cfg.scan.grid.iter().map(|t| (t[0], t[1])).collect();
    let scan = kstar_field(&ctx, &taus);
    for s in &scan.samples {
        match &s.value {
            Ok(SampleValue::KStar(k)) => out.say(format!(
                "({:.6}, {:.6}): k* = {:.9e}, merge degeneracy {}",
                s.tau.0, s.tau.1, k.kstar, k.degeneracy
            )),
            Ok(other) => out.say(format!("({:.6}, {:.6}): {other:?}", s.tau.0, s.tau.1)),
            Err(e) => out.say(format!("({:.6}, {:.6}): failed: {e}", s.tau.0, s.tau.1)),
        }
    }
    if let Some(q) = kstar_quadratic_fit(&scan) {
        out.say(format!("quadratic fit: k* = {q:.6} r^2"));
    }
    out.csv("_kstar.csv", |w| write_kstar_csv(w, &scan))
}

fn discriminant(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let ctx = context(cfg)?;
    let s = &cfg.scan;
    let scan = discriminant_angles(&ctx, s.r_param, s.step_deg.to_radians(), s.tol_deg.to_radians())?;
    let angles: Vec<String> = scan.angles.iter().map(|a| format!("{:.3}", a.to_degrees())).collect();
    out.say(format!("discriminant angles (deg): {}", angles.join(", ")));
    if scan.skipped() > 0 {
        out.say(format!("skipped samples: {}", scan.skipped()));
    }
    let m = meta(
        base_meta(cfg),
        &[
            ("r_param", s.r_param.to_string()),
            ("step_deg", s.step_deg.to_string()),
            ("tol_deg", s.tol_deg.to_string()),
        ],
    );
    out.csv("_labels.csv", |w| write_labels_csv(w, &m, &scan))?;
    out.csv("_angles.csv", |w| write_angles_csv(w, &m, &scan))
}

fn cup(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let ctx = context(cfg)?;
    let s = &cfg.scan;
    let section = cup_section(&ctx, s.k, s.r_max, s.fan)?;
    let cusps: Vec<String> = section.cusp_angles.iter().map(|a| format!("{:.1}", a.to_degrees())).collect();
    out.say(format!(
        "cup section at k = {:e}: {} directions, {}, {} cusps at {}",
        s.k,
        section.thetas.len(),
        if section.closed { "closed" } else { "partial" },
        section.cusp_angles.len(),
        cusps.join(", ")
    ));
    let m = meta(
        base_meta(cfg),
        &[("k", s.k.to_string()), ("r_max", s.r_max.to_string()), ("fan", s.fan.to_string())],
    );
    out.csv("_section.csv", |w| write_cup_csv(w, &m, &section))?;
    let refp = cup_reference(s.k, s.samples)?;
    let ref_cusps = detect_cusps(&refp, 90f64.to_radians());
    let rm = vec![("k".to_string(), s.k.to_string()), ("samples".to_string(), s.samples.to_string())];
    out.csv("_reference.csv", |w| write_reference_csv(w, &rm, &refp, &ref_cusps))?;
    let svg = cup_overlay_svg(
        &section.locus,
        &refp,
        &format!("cup section k = {:e} (blue) vs reference (grey), unit diameter", s.k),
    );
    out.text(".svg", &svg)
}

fn reference(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let s = &cfg.scan;
    let pts = cup_reference(s.k, s.samples)?;
    let cusps = detect_cusps(&pts, 90f64.to_radians());
    out.say(format!("reference cup at k = {}: {} samples, {} cusps", s.k, pts.len(), cusps.len()));
    let m = vec![("k".to_string(), s.k.to_string()), ("samples".to_string(), s.samples.to_string())];
    out.csv("_reference.csv", |w| write_reference_csv(w, &m, &pts, &cusps))?;
    let mut plot = vertexset::export::SvgPlot::fitted(600.0, pts.iter());
    plot.polyline(&pts, "#1f4e9c", 1.5, true);
    for &i in &cusps {
        plot.marker(pts[i], "#c0392b");
    }
    plot.label(&format!("reference cup, k = {}", s.k));
    out.text(".svg", &plot.render())
}

fn verify(cfg: &RunConfig, out: &mut Out) -> Result<(), CliError> {
    let mut lines = Vec::new();
    let reports = vertexset::verify::run_suite(&cfg.scan.suite, |r| {
        lines.push(r.to_string());
        lines.extend(r.lines.iter().map(|l| format!("      {l}")));
    })?;
    for l in lines {
        out.say(l);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    out.say(format!("{} passed, {failed} failed", reports.len() - failed));
    if failed > 0 {
        return Err(CliError::Verification {
            failed,
            lines: std::mem::take(&mut out.report.lines),
        });
    }
    Ok(())
}
