//! Configuration, study drivers and output files behind the `gapfem` CLI.

use crate::error::{Error, Result};
use crate::geometry::Manufactured;
use crate::problem::{Discretization, GeometryKind, ProblemSetup};
use crate::solve_post::{fitted_rates, hybrid_value, run_solve, sample_patch, ErrorReport, SolutionFields};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable overriding the output directory of the config.
pub const OUT_ENV: &str = "GAPFEM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    FixedGap,
    GapScaling,
    HybridStudy,
    SingleSolve,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::FixedGap => "fixed_gap",
            StudyKind::GapScaling => "gap_scaling",
            StudyKind::HybridStudy => "hybrid_study",
            StudyKind::SingleSolve => "single_solve",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed_gap" => Ok(StudyKind::FixedGap),
            "gap_scaling" => Ok(StudyKind::GapScaling),
            "hybrid_study" => Ok(StudyKind::HybridStudy),
            "single_solve" => Ok(StudyKind::SingleSolve),
            _ => Err(Error::Config(format!("unknown study kind {s:?}"))),
        }
    }
}

fn default_tau() -> f64 {
    0.01
}
fn default_alpha() -> f64 {
    2.0
}
fn default_ratio() -> f64 {
    1.0
}
fn default_margin() -> usize {
    1
}
fn default_depth() -> usize {
    crate::mesh::CutOptions::DEFAULT_DEPTH
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment, read from a TOML file.
///
/// `levels` are mesh levels `n` with surface mesh size `h = 1/n`; see
/// [`GeometryKind::patch_cells`] for the patch grids they give.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: StudyKind,
    pub geometry: GeometryKind,
    pub p: usize,
    pub levels: Vec<usize>,
    /// Gap sizes for `fixed_gap` and `single_solve`.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Exponents of `delta = 0.1 h0^s` for `gap_scaling`.
    #[serde(default)]
    pub s: Vec<f64>,
    /// `hybrid_study`: sweep of `tau0` at gap `delta_over_h[0] * h`.
    #[serde(default)]
    pub tau0_sweep: Vec<f64>,
    /// `hybrid_study`: sweep of the gap relative to `h`.
    #[serde(default)]
    pub delta_over_h: Vec<f64>,
    /// Nitsche penalty, `25 p^2` when absent.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau0: f64,
    #[serde(default = "default_tau")]
    pub tau_patch: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ratio")]
    pub hybrid_ratio: f64,
    #[serde(default = "default_margin")]
    pub margin: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Constant Dirichlet data with zero source instead of the manufactured
    /// solution.
    #[serde(default)]
    pub constant: Option<f64>,
    /// Points per axis of field dumps; no dumps when absent.
    #[serde(default)]
    pub dump_resolution: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Command line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub study: Option<String>,
    pub p: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub delta: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies CLI overrides, then the output directory from the environment
    /// unless `--out` was given.
    pub fn apply(&mut self, o: &Overrides, env_out: Option<PathBuf>) -> Result<()> {
        if let Some(s) = &o.study {
            self.study = StudyKind::parse(s)?;
        }
        if let Some(p) = o.p {
            self.p = p;
        }
        if let Some(l) = &o.levels {
            self.levels = l.clone();
        }
        if let Some(d) = &o.delta {
            self.deltas = d.clone();
        }
        if let Some(s) = &o.s {
            self.s = s.clone();
        }
        if let Some(out) = o.out.clone().or(env_out) {
            self.out = out;
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(25.0 * (self.p * self.p) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=4).contains(&self.p) {
            return bad(format!("degree {} outside 1..=4", self.p));
        }
        if self.levels.is_empty() {
            return bad("no levels given".into());
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) || self.levels[0] == 0 {
            return bad(format!("levels {:?} must be positive with h strictly decreasing", self.levels));
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return bad(format!("gap sizes {:?} must be nonnegative", self.deltas));
        }
        if self.s.iter().any(|s| !(*s > 0.0)) {
            return bad(format!("scaling exponents {:?} must be positive", self.s));
        }
        if self.delta_over_h.iter().any(|d| !(*d >= 0.0)) || self.tau0_sweep.iter().any(|t| !(*t > 0.0)) {
            return bad("hybrid sweep values must be positive".into());
        }
        if self.dump_resolution == Some(0) {
            return bad("dump resolution must be positive".into());
        }
        match self.study {
            StudyKind::FixedGap if self.deltas.is_empty() => bad("fixed_gap needs deltas".into()),
            StudyKind::GapScaling if self.s.is_empty() => bad("gap_scaling needs s".into()),
            StudyKind::HybridStudy if self.tau0_sweep.is_empty() && self.delta_over_h.is_empty() => {
                bad("hybrid_study needs tau0_sweep or delta_over_h".into())
            }
            _ => self.setup(self.levels[0], 0.0, self.tau0).and_then(|s| s.validate()),
        }
    }

    /// Problem setup for one level with the configured parameters.
    pub fn setup(&self, cells: usize, delta: f64, tau0: f64) -> Result<ProblemSetup> {
        let mut s = ProblemSetup::new(self.geometry, self.p, cells, delta)?.with_hybrid(self.hybrid_ratio, self.margin);
        s.params.beta = self.beta();
        s.params.tau0 = tau0;
        s.params.tau_patch = self.tau_patch;
        s.params.alpha = self.alpha;
        s.depth = self.depth;
        if let Some(c) = self.constant {
            s = s.with_data(Manufactured::Constant(c));
        }
        Ok(s)
    }
}

/// One level of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub series: String,
    pub level: usize,
    pub n: usize,
    pub h: f64,
    /// Reference cells per axis of the patch grids and their size.
    pub n_patch: usize,
    pub h_patch: f64,
    pub h_norm: f64,
    pub s: f64,
    pub delta: f64,
    pub tau0: f64,
    pub report: Option<ErrorReport>,
    pub status: String,
    pub seconds: f64,
}

/// Rate summary of one series and norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub series: String,
    pub norm: &'static str,
    pub levels_fitted: usize,
    pub fit: f64,
    pub pairwise: Vec<f64>,
}

/// Sampled field as rows of `(x, y, z, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub name: String,
    pub rows: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub rates: Vec<RateRow>,
    pub dumps: Vec<FieldDump>,
}

impl StudyOutput {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.report.is_none())
    }

    pub fn series(&self, name: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.series == name).collect()
    }

    pub fn rate(&self, series: &str, norm: &str) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.series == series && r.norm == norm)
    }
}

/// Series label with a stable number format.
fn label(key: &str, v: f64) -> String {
    format!("{key}={v:e}")
}

struct Level {
    series: String,
    n: usize,
    delta: f64,
    s: f64,
    tau0: f64,
}

fn run_level(
    cfg: &ExperimentConfig,
    index: usize,
    lv: &Level,
    dumps: Option<&mut Vec<FieldDump>>,
) -> Row {
    let start = Instant::now();
    let coarsest = cfg.levels[0] as f64;
    let mut row = Row {
        series: lv.series.clone(),
        level: index,
        n: lv.n,
        h: 1.0 / lv.n as f64,
        n_patch: cfg.geometry.patch_cells(lv.n),
        h_patch: 1.0 / cfg.geometry.patch_cells(lv.n) as f64,
        h_norm: coarsest / lv.n as f64,
        s: lv.s,
        delta: lv.delta,
        tau0: lv.tau0,
        report: None,
        status: "ok".into(),
        seconds: 0.0,
    };
    let result = cfg.setup(lv.n, lv.delta, lv.tau0).and_then(|s| s.discretize()).and_then(|disc| {
        let (_, sol, report) = run_solve(&disc)?;
        Ok((disc, sol, report))
    });
    match result {
        Ok((disc, sol, report)) => {
            if let (Some(d), Some(res)) = (dumps, cfg.dump_resolution) {
                d.extend(field_dumps(&disc, &sol, res, &format!("{}_n{}", lv.series, lv.n)));
            }
            row.report = Some(report);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row.seconds = start.elapsed().as_secs_f64();
    row
}

fn run_levels(cfg: &ExperimentConfig, series: Vec<Vec<Level>>, dump: bool) -> StudyOutput {
    let mut rows = Vec::new();
    let mut dumps = Vec::new();
    for levels in &series {
        for (k, lv) in levels.iter().enumerate() {
            rows.push(run_level(cfg, k, lv, if dump { Some(&mut dumps) } else { None }));
        }
    }
    let rates = summarize_rates(&rows, cfg.p);
    StudyOutput { config: cfg.clone(), rows, rates, dumps }
}

/// Rate fits per series for the L2, H1 and energy errors against the patch
/// cell size. Series with a failed level or a single level are skipped.
pub fn summarize_rates(rows: &[Row], degree: usize) -> Vec<RateRow> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.series.as_str()) {
            names.push(&r.series);
        }
    }
    let mut out = Vec::new();
    for name in names {
        let rs: Vec<&Row> = rows.iter().filter(|r| r.series == name).collect();
        let reports: Option<Vec<&ErrorReport>> = rs.iter().map(|r| r.report.as_ref()).collect();
        let Some(reports) = reports else { continue };
        let h: Vec<f64> = rs.iter().map(|r| r.h_patch).collect();
        let norms: [(&'static str, fn(&ErrorReport) -> f64); 3] =
            [("l2", |r| r.l2()), ("h1", |r| r.h1()), ("energy", |r| r.energy.total())];
        for (norm, f) in norms {
            let e: Vec<f64> = reports.iter().map(|r| f(r)).collect();
            if let Ok(fit) = fitted_rates(&h, &e, degree) {
                out.push(RateRow {
                    series: name.to_string(),
                    norm,
                    levels_fitted: fit.levels,
                    fit: fit.fit,
                    pairwise: fit.pairwise,
                });
            }
        }
    }
    out
}

/// Fixed gap sizes, one series per gap.
pub fn run_fixed_gap(cfg: &ExperimentConfig) -> StudyOutput {
    let series = cfg
        .deltas
        .iter()
        .map(|&d| {
            cfg.levels
                .iter()
                .map(|&n| Level { series: label("delta", d), n, delta: d, s: f64::NAN, tau0: cfg.tau0 })
                .collect()
        })
        .collect();
    run_levels(cfg, series, false)
}

/// Gap tied to the mesh, `delta = 0.1 h0^s` with `h0` the mesh size over
/// the coarsest mesh size of the study.
pub fn run_gap_scaling(cfg: &ExperimentConfig) -> StudyOutput {
    let coarsest = cfg.levels[0] as f64;
    let series = cfg
        .s
        .iter()
        .map(|&s| {
            cfg.levels
                .iter()
                .map(|&n| Level {
                    series: label("s", s),
                    n,
                    delta: 0.1 * (coarsest / n as f64).powf(s),
                    s,
                    tau0: cfg.tau0,
                })
                .collect()
        })
        .collect();
    run_levels(cfg, series, false)
}

/// Planar sweeps of the hybrid stabilization strength or of the gap size,
/// with field dumps when a resolution is configured.
pub fn run_hybrid_study(cfg: &ExperimentConfig) -> StudyOutput {
    let mut series: Vec<Vec<Level>> = Vec::new();
    if !cfg.tau0_sweep.is_empty() {
        let ratio = cfg.delta_over_h.first().copied().unwrap_or(0.2);
        for &t in &cfg.tau0_sweep {
            series.push(
                cfg.levels
                    .iter()
                    .map(|&n| Level { series: label("tau0", t), n, delta: ratio / n as f64, s: f64::NAN, tau0: t })
                    .collect(),
            );
        }
    } else {
        for &r in &cfg.delta_over_h {
            series.push(
                cfg.levels
                    .iter()
                    .map(|&n| Level {
                        series: label("delta_over_h", r),
                        n,
                        delta: r / n as f64,
                        s: f64::NAN,
                        tau0: cfg.tau0,
                    })
                    .collect(),
            );
        }
    }
    run_levels(cfg, series, true)
}

/// One solve on the first level and first gap.
pub fn run_single_solve(cfg: &ExperimentConfig) -> StudyOutput {
    let d = cfg.deltas.first().copied().unwrap_or(0.0);
    let lv = Level { series: label("delta", d), n: cfg.levels[0], delta: d, s: f64::NAN, tau0: cfg.tau0 };
    run_levels(cfg, vec![vec![lv]], true)
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    Ok(match cfg.study {
        StudyKind::FixedGap => run_fixed_gap(cfg),
        StudyKind::GapScaling => run_gap_scaling(cfg),
        StudyKind::HybridStudy => run_hybrid_study(cfg),
        StudyKind::SingleSolve => run_single_solve(cfg),
    })
}

/// Samples both patch fields on an `n x n` grid of cell centres of the
/// reference square, and the hybrid field on an `n x n` grid over the `z = 0`
/// slice of the hybrid band's bounding box. Points outside a field's domain
/// carry `NaN`.
pub fn field_dumps(disc: &Discretization, sol: &SolutionFields, n: usize, tag: &str) -> Vec<FieldDump> {
    let centre = |k: usize| (k as f64 + 0.5) / n as f64;
    let mut out = Vec::new();
    for i in 0..2 {
        let map = &disc.patches[i].geometry.map;
        let mut rows = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                let x = [centre(a), centre(b)];
                let y = map.eval(x);
                let v = sample_patch(disc, sol, i, x).ok().flatten().unwrap_or(f64::NAN);
                rows.push([y.x, y.y, y.z, v]);
            }
        }
        out.push(FieldDump { name: format!("{tag}_patch{}", i + 1), rows });
    }
    let grid = disc.hybrid.mesh.grid();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &c in disc.hybrid.mesh.cells() {
        let (a, b) = grid.cell_bounds(c);
        for k in 0..2 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(b[k]);
        }
    }
    let mut rows = Vec::with_capacity(n * n);
    for b in 0..n {
        for a in 0..n {
            let y = Vector3::new(lo[0] + (hi[0] - lo[0]) * centre(a), lo[1] + (hi[1] - lo[1]) * centre(b), 0.0);
            let v = hybrid_value(disc, &sol.hybrid, &y).unwrap_or(f64::NAN);
            rows.push([y.x, y.y, y.z, v]);
        }
    }
    out.push(FieldDump { name: format!("{tag}_hybrid"), rows });
    out
}

/// CSV columns of the per-level table.
pub const CSV_HEADER: &str = "study,geometry,series,p,beta,tau0,tau_patch,alpha,hybrid_ratio,margin,depth,level,n,h,n_patch,h_patch,h_norm,s,delta,\
dofs_hybrid,dofs_patch1,dofs_patch2,l2_patch1,l2_patch2,l2,h1_patch1,h1_patch2,h1,\
energy_s0,energy_grad,energy_ghost,energy_flux,energy_jump,energy,gap_var_max,gap_var_mean,residual,status";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn results_csv(out: &StudyOutput) -> String {
    let c = &out.config;
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in &out.rows {
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.study.name(),
            c.geometry.name(),
            r.series,
            c.p,
            c.beta(),
            r.tau0,
            c.tau_patch,
            c.alpha,
            c.hybrid_ratio,
            c.margin,
            c.depth,
            r.level,
            r.n,
            r.h,
            r.n_patch,
            r.h_patch,
            r.h_norm,
            r.s,
            r.delta
        )
        .unwrap();
        match &r.report {
            Some(e) => {
                let en = &e.energy;
                let nums = [
                    e.patch[0].l2,
                    e.patch[1].l2,
                    e.l2(),
                    e.patch[0].h1,
                    e.patch[1].h1,
                    e.h1(),
                    en.hybrid_stab.sqrt(),
                    en.gradient.sqrt(),
                    en.ghost.sqrt(),
                    en.flux.sqrt(),
                    en.jump.sqrt(),
                    en.total(),
                    e.gap.max,
                    e.gap.mean,
                    e.residual,
                ];
                write!(s, ",{},{},{}", e.dofs[0], e.dofs[1], e.dofs[2]).unwrap();
                for v in nums {
                    write!(s, ",{v}").unwrap();
                }
            }
            None => s.push_str(&",NaN".repeat(18)),
        }
        writeln!(s, ",{}", csv_field(&r.status)).unwrap();
    }
    s
}

pub fn rates_csv(out: &StudyOutput) -> String {
    let mut s = String::from("series,norm,levels_fitted,fit,pairwise\n");
    for r in &out.rates {
        let pw: Vec<String> = r.pairwise.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{},{},{},{},{}", r.series, r.norm, r.levels_fitted, r.fit, pw.join(";")).unwrap();
    }
    s
}

pub fn timings_csv(out: &StudyOutput) -> String {
    let mut s = String::from("series,level,n,seconds\n");
    for r in &out.rows {
        writeln!(s, "{},{},{},{:.3}", r.series, r.level, r.n, r.seconds).unwrap();
    }
    s
}

pub fn dump_text(d: &FieldDump) -> String {
    let mut s = String::from("x y z value\n");
    for r in &d.rows {
        writeln!(s, "{} {} {} {}", r[0], r[1], r[2], r[3]).unwrap();
    }
    s
}

/// Writes `results.csv`, `rates.csv`, `timings.csv` and one text file per
/// field dump into the configured directory. Returns the paths written.
pub fn write_outputs(out: &StudyOutput) -> Result<Vec<PathBuf>> {
    let dir = &out.config.out;
    std::fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join("results.csv"), results_csv(out)),
        (dir.join("rates.csv"), rates_csv(out)),
        (dir.join("timings.csv"), timings_csv(out)),
    ];
    for d in &out.dumps {
        files.push((dir.join(format!("{}.txt", d.name)), dump_text(d)));
    }
    let mut paths = Vec::new();
    for (p, text) in files {
        std::fs::write(&p, text)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "study = \"fixed_gap\"\ngeometry = \"planar\"\np = 1\nlevels = [4, 8]\ndeltas = [0.0]\n";

    #[test]
    fn parse_defaults_and_overrides() {
        let mut c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.beta(), 25.0);
        assert_eq!(c.tau0, 0.01);
        assert_eq!(c.margin, 1);
        c.apply(&Overrides { p: Some(2), ..Default::default() }, Some("env".into())).unwrap();
        assert_eq!(c.beta(), 100.0);
        assert_eq!(c.out, PathBuf::from("env"));
        c.apply(&Overrides { out: Some("cli".into()), ..Default::default() }, Some("env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("cli"));
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        assert!(ExperimentConfig::from_toml("study = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml(&format!("{BASE}colour = 1\n")).is_err());
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        let check = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = c.clone();
            f(&mut c);
            matches!(c.validate(), Err(Error::Config(_)))
        };
        assert!(check(&|c| c.levels = vec![8, 8]));
        assert!(check(&|c| c.levels = vec![]));
        assert!(check(&|c| c.deltas = vec![-1.0]));
        assert!(check(&|c| c.study = StudyKind::GapScaling));
        assert!(check(&|c| {
            c.study = StudyKind::GapScaling;
            c.s = vec![0.0];
        }));
        assert!(check(&|c| c.p = 7));
    }

    #[test]
    fn rows_per_gap_and_level() {
        let mut c = ExperimentConfig::from_toml(BASE).unwrap();
        c.deltas = vec![0.0, 0.01];
        let out = run_study(&c).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert!(!out.failed());
        let csv = results_csv(&out);
        assert_eq!(csv.lines().count(), 5);
        let cols = CSV_HEADER.split(',').count();
        assert!(csv.lines().all(|l| l.split(',').count() == cols));
        assert_eq!(out.rates.len(), 6);
        assert_eq!(results_csv(&run_study(&c).unwrap()), csv);
    }

    #[test]
    fn failed_level_is_recorded() {
        let mut c = ExperimentConfig::from_toml(BASE).unwrap();
        c.deltas = vec![0.5];
        let out = run_study(&c).unwrap();
        assert!(out.failed());
        assert!(out.rows.iter().all(|r| r.status.starts_with("error")));
        assert!(out.rates.is_empty());
        let csv = results_csv(&out);
        let cols = CSV_HEADER.split(',').count();
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == cols));
    }

    #[test]
    fn dump_resolution_is_honoured() {
        let mut c = ExperimentConfig::from_toml(BASE).unwrap();
        c.study = StudyKind::SingleSolve;
        c.levels = vec![4];
        c.dump_resolution = Some(7);
        let out = run_study(&c).unwrap();
        assert_eq!(out.dumps.len(), 3);
        assert!(out.dumps.iter().all(|d| d.rows.len() == 49));
        assert_eq!(dump_text(&out.dumps[0]).lines().count(), 50);
    }
}
