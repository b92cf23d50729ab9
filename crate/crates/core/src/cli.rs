//! Command-line pipeline.
//!
//! Each stage reads what the previous one wrote under the output directory,
//! so any stage can be re-run from files:
//!
//! ```text
//! out/
//!   manifest.json  design.json  mask.csv
//!   train/{counts0,counts1,counts2,f,sigma}.csv   test/…
//!   fit/reports.json  fit/reports.csv  fit/model_rank_<k>.json
//!   analysis/gauge.json  analysis/{s_realized,e_realized,lambda}.csv
//!   analysis/rays.csv  analysis/summary.json  analysis/projections/*.{json,ply}
//!   report.txt
//! ```

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{
    build_design, counts_to_frequencies, simulate_train_test, CountTable, Design, DesignKind,
    FrequencyMatrix, SimulationParams,
};
use crate::gauge::{gauge_fix, GaugeResult};
use crate::geometry::{
    consistent_effect_space, consistent_state_space, probe_rays, project_hpolytope,
    project_vpolytope, ratio_summary, realized_effect_space, realized_state_space, residual_stats,
    sample_jnr, straddle_from_probes, HPolytope, JnrKind, Projection3D, RayProbe, Straddle,
    VPolytope,
};
use crate::io;
use crate::lowrank_fit::{rank_sweep, FitOptions, FitReport, GptModel};
use crate::rng::{derive_seed, substream, tag};

/// Axis triples written by `analyze`.
pub const PROJECTION_TRIPLES: [[usize; 3]; 10] = [
    [1, 2, 3],
    [2, 3, 8],
    [3, 4, 6],
    [1, 3, 4],
    [2, 5, 8],
    [3, 4, 5],
    [0, 3, 8],
    [0, 1, 3],
    [0, 3, 4],
    [0, 7, 8],
];

/// Everything a run depends on. Missing fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub design: DesignKind,
    /// Expected counts per second.
    pub rate: f64,
    /// Seconds per configuration.
    pub exposure: f64,
    pub epsilon: f64,
    pub ranks: Vec<usize>,
    pub rays: usize,
    pub output_dir: PathBuf,
    /// Rank analyzed by `analyze`; the selected rank when absent.
    pub analysis_rank: Option<usize>,
    /// Support directions per consistent-body projection.
    pub projection_dirs: usize,
    /// Haar samples per quantum reference projection; 0 skips them.
    pub reference_samples: usize,
    /// Fit settings. The restart seed is derived from `seed`.
    pub fit: FitOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            design: DesignKind::Fiducial { n_random: 60 },
            rate: 2000.0,
            exposure: 2.0,
            epsilon: 0.01,
            ranks: vec![8, 9, 10],
            rays: 1000,
            output_dir: PathBuf::from("out"),
            analysis_rank: None,
            projection_dirs: 2000,
            reference_samples: 2000,
            fit: FitOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> SimulationParams {
        SimulationParams {
            rate: self.rate,
            exposure: self.exposure,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.design {
            DesignKind::Haar { m, n } if m == 0 || n == 0 || n > m => {
                return bad(format!("haar design needs 0 < n ≤ m, got ({m}, {n})"))
            }
            _ => {}
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if !(self.exposure.is_finite() && self.exposure > 0.0) {
            return bad(format!("exposure must be positive, got {}", self.exposure));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.ranks.is_empty() || self.ranks[0] == 0 || self.ranks.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("ranks must be positive and strictly ascending, got {:?}", self.ranks));
        }
        if self.rays == 0 {
            return bad("rays must be positive".into());
        }
        if self.projection_dirs == 0 {
            return bad("projection_dirs must be positive".into());
        }
        if self.analysis_rank == Some(0) {
            return bad("analysis_rank must be positive".into());
        }
        Ok(())
    }
}

/// Parses `"2-12"`, `"8,9,10"` or mixtures such as `"2-4,9"`.
pub fn parse_ranks(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad rank '{s}' in '{text}'")))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(Error::Config(format!("empty rank range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(Error::Config("empty rank list".into()));
    }
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "qutrit-gpt", version, about = "Self-consistent tomography of a simulated qutrit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the design and simulate train and test counts.
    Simulate,
    /// Fit every rank and select one by test error.
    Fit,
    /// Gauge-fix a fitted model and measure the realized and consistent bodies.
    Analyze {
        /// Model file; defaults to the analysis rank under the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Summarize fit and analysis outputs.
    Report,
    /// All four stages in order.
    Run,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// e.g. "2-12" or "8,9,10".
    #[arg(long, global = true, value_name = "LIST")]
    pub ranks: Option<String>,
    #[arg(long, global = true)]
    pub rays: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    #[arg(long, global = true)]
    pub exposure: Option<f64>,
    /// Rank used by analyze.
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Reads the config file (if any), applies flag overrides and validates.
pub fn resolve_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.ranks {
        cfg.ranks = parse_ranks(v)?;
    }
    if let Some(v) = o.rays {
        cfg.rays = v;
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = o.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = o.rate {
        cfg.rate = v;
    }
    if let Some(v) = o.exposure {
        cfg.exposure = v;
    }
    if let Some(v) = o.rank {
        cfg.analysis_rank = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub design: String,
    pub n_preparations: usize,
    pub n_measurements: usize,
    pub probed_pairs: usize,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub reports: Vec<FitReport>,
    pub selected_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub report: FitReport,
    pub model: GptModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub rank: usize,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub rays: usize,
    pub excluded_rays: usize,
    pub straddle: Straddle,
    pub residual_mean: f64,
    pub residual_std: f64,
    /// Smallest slack of a realized state in the consistent state space.
    pub state_containment_slack: f64,
    /// Same for realized effects in the consistent effect space.
    pub effect_containment_slack: f64,
    pub gauge_condition_number: f64,
    pub gauge_chi2: f64,
    pub projections: Vec<String>,
}

fn rel(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

fn write_counts(dir: &Path, table: &CountTable, design: &Design) -> Result<Vec<PathBuf>> {
    let freq = counts_to_frequencies(table, design)?;
    // count tables have no unit column, so labels start at m1
    let labels: Vec<String> = (1..=table.counts0.ncols()).map(|j| format!("m{j}")).collect();
    let mut out = Vec::new();
    for (name, c) in [("counts0", &table.counts0), ("counts1", &table.counts1), ("counts2", &table.counts2)] {
        let path = dir.join(format!("{name}.csv"));
        io::write_labelled_csv(&path, c, "p", &labels)?;
        out.push(path);
    }
    for (name, m) in [("f", &freq.f), ("sigma", &freq.sigma)] {
        let path = dir.join(format!("{name}.csv"));
        io::write_matrix_csv(&path, m, "p", "m")?;
        out.push(path);
    }
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let root = &cfg.output_dir;
    let mut rng = substream(cfg.seed, &[tag::DESIGN]);
    let design = build_design(&cfg.design, &mut rng)?;
    let (train, test) = simulate_train_test(&design, &cfg.params(), cfg.seed)?;
    let mut files = vec![root.join("design.json"), root.join("mask.csv")];
    io::write_json(&files[0], &design)?;
    io::write_mask_csv(&files[1], &design.mask)?;
    files.extend(write_counts(&root.join("train"), &train, &design)?);
    files.extend(write_counts(&root.join("test"), &test, &design)?);
    let manifest = Manifest {
        config: cfg.clone(),
        design: cfg.design.describe(),
        n_preparations: design.n_preparations(),
        n_measurements: design.n_measurements(),
        probed_pairs: design.probed_pairs(),
        files: files.iter().map(|p| rel(root, p)).collect(),
    };
    let manifest_path = root.join("manifest.json");
    io::write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(files)
}

pub fn load_manifest(root: &Path) -> Result<Manifest> {
    io::read_json(&root.join("manifest.json"))
}

/// Frequencies of one stage (`train` or `test`), checked against the manifest.
pub fn load_frequencies(root: &Path, stage: &str, manifest: &Manifest) -> Result<FrequencyMatrix> {
    let f: nalgebra::DMatrix<f64> = io::read_matrix_csv(&root.join(stage).join("f.csv"))?;
    let sigma: nalgebra::DMatrix<f64> = io::read_matrix_csv(&root.join(stage).join("sigma.csv"))?;
    let mask = io::read_mask_csv(&root.join("mask.csv"))?;
    let expected = (manifest.n_preparations, manifest.n_measurements + 1);
    for (name, shape) in [("f", f.shape()), ("sigma", sigma.shape()), ("mask", mask.shape())] {
        if shape != expected {
            return Err(Error::Data(format!(
                "{stage}/{name} is {shape:?} but the manifest describes {expected:?}"
            )));
        }
    }
    let fm = FrequencyMatrix { f, sigma, mask };
    fm.validate()?;
    Ok(fm)
}

fn model_path(root: &Path, rank: usize) -> PathBuf {
    root.join("fit").join(format!("model_rank_{rank}.json"))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let root = &cfg.output_dir;
    let manifest = load_manifest(root)?;
    let train = load_frequencies(root, "train", &manifest)?;
    let test = load_frequencies(root, "test", &manifest)?;
    let mut opts = cfg.fit.clone();
    opts.seed = derive_seed(cfg.seed, &[tag::RESTART]);
    let sweep = rank_sweep(&train, &test, &cfg.ranks, &opts)?;
    let mut files = Vec::new();
    for (report, model) in sweep.reports.iter().zip(&sweep.models) {
        let path = model_path(root, report.rank);
        io::write_json(&path, &ModelFile { report: report.clone(), model: model.clone() })?;
        files.push(path);
    }
    let summary = FitSummary {
        reports: sweep.reports.clone(),
        selected_rank: sweep.selected_rank,
    };
    let json = root.join("fit").join("reports.json");
    io::write_json(&json, &summary)?;
    let mut csv = String::from("rank,chi2_train,chi2_test,iterations,restarts_used,converged,selected\n");
    for r in &sweep.reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.rank,
            r.chi2_train,
            r.chi2_test.unwrap_or(f64::NAN),
            r.iterations,
            r.restarts_used,
            r.converged,
            r.rank == sweep.selected_rank
        ));
    }
    let csv_path = root.join("fit").join("reports.csv");
    io::write_text(&csv_path, &csv)?;
    files.push(json);
    files.push(csv_path);
    Ok(files)
}

fn with_context(e: Error, ctx: &str) -> Error {
    match e {
        Error::Argument(m) => Error::Argument(format!("{ctx}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
        Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
        Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
        Error::Consistency(m) => Error::Consistency(format!("{ctx}: {m}")),
        other => other,
    }
}

/// Realized factors with the leading state component and the unit effect
/// set exactly.
pub fn normalized_factors(g: &GaugeResult) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)> {
    let mut s = g.s_realized.clone();
    for (i, mut row) in s.row_iter_mut().enumerate() {
        let lead = row[0];
        if (lead - 1.0).abs() > 1e-6 {
            return Err(Error::Data(format!("realized state {i} has leading component {lead}")));
        }
        row /= lead;
        row[0] = 1.0;
    }
    let mut e = g.e_realized.clone();
    let drift = (1..e.nrows()).map(|r| e[(r, 0)].abs()).fold((e[(0, 0)] - 1.0).abs(), f64::max);
    if drift > 1e-6 {
        return Err(Error::Data(format!("realized unit effect is off by {drift:e}")));
    }
    e.column_mut(0).fill(0.0);
    e[(0, 0)] = 1.0;
    Ok((s, e))
}

fn min_slack(body: &HPolytope, points: impl Iterator<Item = nalgebra::DVector<f64>>) -> f64 {
    points
        .map(|p| {
            let (ineq, eq) = body.slack(&p);
            ineq.min(-eq)
        })
        .fold(f64::INFINITY, f64::min)
}

fn write_rays(path: &Path, probes: &[RayProbe]) -> Result<()> {
    let mut text = String::new();
    for c in 1..=8 {
        text.push_str(&format!("d{c},"));
    }
    text.push_str("t_realized,t_consistent,ratio\n");
    for p in probes {
        for d in &p.direction {
            text.push_str(&format!("{d},"));
        }
        text.push_str(&format!("{},{},{}\n", p.t_realized, p.t_consistent, p.ratio));
    }
    io::write_text(path, &text)
}

fn write_projection(dir: &Path, name: &str, p: &Projection3D) -> Result<Vec<PathBuf>> {
    let [a, b, c] = p.axes;
    let stem = format!("{name}_{a}{b}{c}");
    let json = dir.join(format!("{stem}.json"));
    let ply = dir.join(format!("{stem}.ply"));
    io::write_text(&json, &(p.to_json()? + "\n"))?;
    io::write_text(&ply, &p.to_ply())?;
    Ok(vec![json, ply])
}

struct Bodies {
    s_real: VPolytope,
    s_cons: HPolytope,
    e_real: VPolytope,
    e_cons: HPolytope,
}

fn projections(cfg: &RunConfig, bodies: &Bodies, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (t, axes) in PROJECTION_TRIPLES.iter().enumerate() {
        let seed = derive_seed(cfg.seed, &[tag::DIRECTIONS, t as u64]);
        let mut items = vec![
            ("realized_states", project_vpolytope(&bodies.s_real, *axes)?),
            ("consistent_states", project_hpolytope(&bodies.s_cons, *axes, cfg.projection_dirs, seed)?),
            ("realized_effects", project_vpolytope(&bodies.e_real, *axes)?),
            ("consistent_effects", project_hpolytope(&bodies.e_cons, *axes, cfg.projection_dirs, seed)?),
        ];
        if cfg.reference_samples >= 4 {
            let jseed = derive_seed(cfg.seed, &[tag::JNR, t as u64]);
            items.push(("qutrit_states", sample_jnr(JnrKind::State, *axes, cfg.reference_samples, jseed)?));
            items.push(("qutrit_effects", sample_jnr(JnrKind::Effect, *axes, cfg.reference_samples, jseed)?));
        }
        for (name, p) in &items {
            files.extend(write_projection(dir, name, p)?);
        }
    }
    Ok(files)
}

pub fn cmd_analyze(cfg: &RunConfig, model: Option<&Path>) -> Result<Vec<PathBuf>> {
    let root = &cfg.output_dir;
    let design: Design = io::read_json(&root.join("design.json"))?;
    let model_file = match model {
        Some(p) => p.to_path_buf(),
        None => {
            let rank = match cfg.analysis_rank {
                Some(k) => k,
                None => io::read_json::<FitSummary>(&root.join("fit").join("reports.json"))?.selected_rank,
            };
            model_path(root, rank)
        }
    };
    let ModelFile { model, .. } = io::read_json(&model_file)?;
    let d = model.predictions();
    if d.shape() != design.mask.shape() {
        return Err(Error::Data(format!(
            "model predicts {:?} but the design is {:?}",
            d.shape(),
            design.mask.shape()
        )));
    }
    let s_ref = design.state_vectors()?;
    if model.rank != s_ref.ncols() {
        return Err(Error::Data(format!(
            "gauge alignment needs a rank-{} model, got rank {} (use --rank)",
            s_ref.ncols(),
            model.rank
        )));
    }
    let gauge = gauge_fix(&d, model.rank, &s_ref).map_err(|e| with_context(e, "gauge fixing"))?;
    let (s_norm, e_norm) = normalized_factors(&gauge)?;
    let bodies = Bodies {
        s_real: realized_state_space(&s_norm)?,
        s_cons: consistent_state_space(&e_norm)?,
        e_real: realized_effect_space(&e_norm)?,
        e_cons: consistent_effect_space(&s_norm)?,
    };
    let rays = probe_rays(&bodies.s_real, &bodies.s_cons, cfg.rays, cfg.seed)
        .map_err(|e| with_context(e, "ray probing"))?;
    let straddle = straddle_from_probes(&rays.probes);
    let ratio = ratio_summary(rays);
    let (residual_mean, residual_std) = residual_stats(&(&s_norm * &e_norm), &design.probabilities(0.0))?;

    let dir = root.join("analysis");
    let mut files = Vec::new();
    let gauge_path = dir.join("gauge.json");
    io::write_json(&gauge_path, &gauge)?;
    files.push(gauge_path);
    for (name, m) in [("s_realized", &s_norm), ("e_realized", &e_norm), ("lambda", &gauge.lambda)] {
        let path = dir.join(format!("{name}.csv"));
        io::write_matrix_csv(&path, m, "r", "c")?;
        files.push(path);
    }
    let rays_path = dir.join("rays.csv");
    write_rays(&rays_path, &ratio.rays.probes)?;
    files.push(rays_path);
    let proj = projections(cfg, &bodies, &dir.join("projections"))?;

    let summary = AnalysisSummary {
        rank: model.rank,
        ratio_mean: ratio.mean,
        ratio_std: ratio.std,
        rays: ratio.rays.probes.len(),
        excluded_rays: ratio.rays.excluded,
        straddle,
        residual_mean,
        residual_std,
        state_containment_slack: min_slack(&bodies.s_cons, bodies.s_real.vertices().iter().cloned()),
        effect_containment_slack: min_slack(&bodies.e_cons, bodies.e_real.vertices().iter().cloned()),
        gauge_condition_number: gauge.condition_number,
        gauge_chi2: gauge.chi2_alignment,
        projections: proj.iter().map(|p| rel(root, p)).collect(),
    };
    let summary_path = dir.join("summary.json");
    io::write_json(&summary_path, &summary)?;
    files.extend(proj);
    files.push(summary_path);
    Ok(files)
}

/// Plain-text summary of whichever stages have run.
pub fn render_report(root: &Path) -> Result<String> {
    let manifest = load_manifest(root)?;
    let mut out = format!(
        "design {}: {} preparations × {} measurements, {} probed pairs\n",
        manifest.design, manifest.n_preparations, manifest.n_measurements, manifest.probed_pairs
    );
    out.push_str(&format!(
        "seed {}, rate {}, exposure {}, epsilon {}\n",
        manifest.config.seed, manifest.config.rate, manifest.config.exposure, manifest.config.epsilon
    ));
    let fit_path = root.join("fit").join("reports.json");
    if fit_path.exists() {
        let fit: FitSummary = io::read_json(&fit_path)?;
        out.push_str("\nrank  chi2_train        chi2_test\n");
        for r in &fit.reports {
            out.push_str(&format!(
                "{:>4}  {:<16.6e}  {:<16.6e}{}\n",
                r.rank,
                r.chi2_train,
                r.chi2_test.unwrap_or(f64::NAN),
                if r.rank == fit.selected_rank { "  <- selected" } else { "" }
            ));
        }
    }
    let summary_path = root.join("analysis").join("summary.json");
    if summary_path.exists() {
        let s: AnalysisSummary = io::read_json(&summary_path)?;
        out.push_str(&format!("\nanalysis at rank {}\n", s.rank));
        out.push_str(&format!(
            "linear dimension ratio {:.4} ± {:.4} over {} rays ({} excluded)\n",
            s.ratio_mean, s.ratio_std, s.rays, s.excluded_rays
        ));
        out.push_str(&format!(
            "max realized norm {:.4}, min consistent norm {:.4}, straddles: {}\n",
            s.straddle.max_realized_norm, s.straddle.min_consistent_norm, s.straddle.straddles
        ));
        out.push_str(&format!(
            "D_realized − D_qutrit: mean {:.4}, std {:.4}\n",
            s.residual_mean, s.residual_std
        ));
        out.push_str(&format!(
            "containment slack: states {:.3e}, effects {:.3e}\n",
            s.state_containment_slack, s.effect_containment_slack
        ));
    }
    Ok(out)
}

pub fn cmd_report(cfg: &RunConfig) -> Result<(String, PathBuf)> {
    let text = render_report(&cfg.output_dir)?;
    let path = cfg.output_dir.join("report.txt");
    io::write_text(&path, &text)?;
    Ok((text, path))
}

/// Runs a parsed command; returns the files written and any text to print.
pub fn execute(cli: &Cli) -> Result<(Vec<PathBuf>, Option<String>)> {
    let cfg = resolve_config(&cli.overrides)?;
    let work = || -> Result<(Vec<PathBuf>, Option<String>)> {
        match &cli.command {
            Command::Simulate => Ok((cmd_simulate(&cfg)?, None)),
            Command::Fit => Ok((cmd_fit(&cfg)?, None)),
            Command::Analyze { model } => Ok((cmd_analyze(&cfg, model.as_deref())?, None)),
            Command::Report => {
                let (text, path) = cmd_report(&cfg)?;
                Ok((vec![path], Some(text)))
            }
            Command::Run => {
                let mut files = cmd_simulate(&cfg)?;
                files.extend(cmd_fit(&cfg)?);
                files.extend(cmd_analyze(&cfg, None)?);
                let (text, path) = cmd_report(&cfg)?;
                files.push(path);
                Ok((files, Some(text)))
            }
        }
    };
    match cli.overrides.threads {
        Some(0) => Err(Error::Config("threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((files, text)) => {
            if let Some(text) = text {
                print!("{text}");
            } else {
                for f in files {
                    println!("{}", f.display());
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
