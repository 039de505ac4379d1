//! Runs an [`ExperimentConfig`]: one solve per sweep point followed by the
//! requested analyses, written as a versioned CSV plus a JSON manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{AnalysisConfig, AnalysisKind, ExperimentConfig, FieldChoice};
use crate::error::{Error, Result};
use crate::goodsets::{a_decay, alpha_beta_sequences, ADecay, AlphaBetaParams, TouchingProfile};
use crate::grid::{GridFunction, ParabolicCube};
use crate::regularity::{
    c2alpha_seminorm_seeded, campanato_seminorm, decay_exponent_fit, dyadic_polynomial_sequence, holder_seminorm_seeded, loglip_fit,
    pbmo_norm, sobolev_norm, DecayFit, GrowthModel,
};
use crate::solver::{solve, SolveResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: &[&str] = &[
    "schema_version",
    "sweep_parameter",
    "sweep_value",
    "analysis",
    "estimator",
    "value",
    "exponent",
    "constant",
    "r_squared",
    "model",
    "scales",
    "values",
];

/// One estimator result at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_value: Option<f64>,
    pub analysis: String,
    pub estimator: String,
    /// Headline number of the estimator (seminorm, norm, fitted constant).
    pub value: f64,
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    pub r_squared: Option<f64>,
    pub model: String,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// Kept out of the CSV so that it stays reproducible.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub sweep_value: Option<f64>,
    pub steps: usize,
    pub solve_seconds: f64,
    pub rows: Vec<ResultRow>,
    /// Full estimator reports.
    pub details: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub points: Vec<PointReport>,
    pub started: f64,
    pub finished: f64,
    pub workers: usize,
}

impl ExperimentRun {
    pub fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.points.iter().flat_map(|p| &p.rows)
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn fit_parts(fit: Option<&DecayFit>) -> (Option<f64>, Option<f64>, Option<f64>) {
    match fit {
        Some(f) => (Some(f.exponent), Some(f.constant), Some(f.r_squared)),
        None => (None, None, None),
    }
}

fn row(sweep_value: Option<f64>, a: &AnalysisConfig, value: f64) -> ResultRow {
    ResultRow {
        sweep_value,
        analysis: a.name.clone(),
        estimator: a.kind.estimator().to_string(),
        value,
        exponent: None,
        constant: None,
        r_squared: None,
        model: String::new(),
        scales: Vec::new(),
        values: Vec::new(),
        runtime_seconds: 0.0,
    }
}

fn run_analysis(cfg: &ExperimentConfig, a: &AnalysisConfig, sol: &SolveResult, sweep_value: Option<f64>) -> Result<(ResultRow, Value)> {
    let u = &sol.u;
    let d = cfg.problem.dim;
    let cube = |r: f64| ParabolicCube::new(d, r);
    let mut out = row(sweep_value, a, 0.0);
    let detail = match &a.kind {
        AnalysisKind::Campanato { alpha, center, radii, mode } => {
            let rep = campanato_seminorm(u, *alpha, center, radii, *mode)?;
            out.value = rep.value;
            out.scales = rep.fits.iter().map(|f| f.radius).collect();
            out.values = rep.fits.iter().map(|f| f.sup_residual).collect();
            let fit = decay_exponent_fit(&out.scales, &out.values).ok();
            (out.exponent, out.constant, out.r_squared) = fit_parts(fit.as_ref());
            serde_json::to_value(&rep)?
        }
        AnalysisKind::Sequence { alpha, rho, k_max, center } => {
            let op = cfg.operator()?;
            let rep = dyadic_polynomial_sequence(u, &op, *rho, *alpha, *k_max, center)?;
            out.scales = rep.steps.iter().map(|s| s.radius).collect();
            out.values = rep.steps.iter().map(|s| s.sup_error).collect();
            out.value = rep.increments.iter().map(|i| i.weighted).fold(0.0, f64::max);
            (out.exponent, out.constant, out.r_squared) = fit_parts(rep.fit.as_ref());
            serde_json::to_value(&rep)?
        }
        AnalysisKind::Loglip { center, radii } => {
            let rep = loglip_fit(u, center, radii)?;
            out.scales = rep.radii.clone();
            out.values = rep.moduli.clone();
            out.model = match rep.preferred {
                GrowthModel::Quadratic => "quadratic",
                GrowthModel::QuadraticLog => "quadratic_log",
                GrowthModel::Degenerate => "degenerate",
            }
            .to_string();
            out.value = if rep.preferred == GrowthModel::QuadraticLog { rep.c_log } else { rep.c_plain };
            let fit = decay_exponent_fit(&out.scales, &out.values).ok();
            (out.exponent, out.constant, out.r_squared) = fit_parts(fit.as_ref());
            serde_json::to_value(&rep)?
        }
        AnalysisKind::Holder { alpha, cube: r, budget } => {
            out.value = holder_seminorm_seeded(u, *alpha, &cube(*r)?, *budget, cfg.seed)?;
            json!({ "value": out.value })
        }
        AnalysisKind::C2alpha { alpha, cube: r, budget } => {
            out.value = c2alpha_seminorm_seeded(u, *alpha, &cube(*r)?, *budget, cfg.seed)?;
            json!({ "value": out.value })
        }
        AnalysisKind::Sobolev { p, cube: r } => {
            out.value = sobolev_norm(u, *p, &cube(*r)?)?;
            json!({ "value": out.value })
        }
        AnalysisKind::Pbmo { p, cube: r, radii, field } => {
            let g = match field {
                FieldChoice::Solution => u.clone(),
                FieldChoice::Source => {
                    let f = cfg.source_field()?;
                    GridFunction::from_fn(u.grid().clone(), |x, t| f.eval(x, t))?
                }
            };
            out.value = pbmo_norm(&g, *p, &cube(*r)?, radii)?;
            out.scales = radii.clone();
            json!({ "value": out.value })
        }
        AnalysisKind::ADecay { openings, cube: r, reading } => {
            // the touching domain is the whole computational domain
            let profile = TouchingProfile::compute(u, &cube(*r)?, None, *reading)?;
            let rep = a_decay(&profile, openings)?;
            out.scales = openings.clone();
            match &rep {
                ADecay::Fit { delta, fit, measures, .. } => {
                    out.values = measures.clone();
                    out.value = *delta;
                    out.exponent = Some(*delta);
                    out.constant = Some(fit.constant);
                    out.r_squared = Some(fit.r_squared);
                    out.model = "fit".into();
                }
                ADecay::Empty { .. } => {
                    out.values = vec![0.0; openings.len()];
                    out.model = "empty".into();
                }
            }
            json!({ "decay": rep, "saturation_opening": profile.saturation_opening() })
        }
        AnalysisKind::AlphaBeta { m, c1, rho, k_max, p, cube: r, reading } => {
            let profile = TouchingProfile::compute(u, &cube(*r)?, None, *reading)?;
            let f = cfg.source_field()?;
            let shift = cfg.problem_spec()?.source_shift();
            let fg = GridFunction::from_fn(u.grid().clone(), |x, t| f.eval(x, t) - shift)?;
            let params = AlphaBetaParams { m: *m, c1: *c1, rho: *rho, k_max: *k_max, p: *p };
            let rows = alpha_beta_sequences(&profile, &fg, &params)?;
            out.scales = rows.iter().map(|r| r.opening).collect();
            out.values = rows.iter().map(|r| r.alpha).collect();
            out.value = rows.last().map_or(0.0, |r| r.alpha_partial_sum);
            let recursion = rows.iter().all(|r| r.recursion_holds != Some(false));
            let envelope = rows.iter().all(|r| r.envelope_holds);
            out.model = format!("recursion_{}_envelope_{}", if recursion { "ok" } else { "broken" }, if envelope { "ok" } else { "broken" });
            serde_json::to_value(&rows)?
        }
    };
    Ok((out, json!({ "analysis": a.name, "sweep_value": sweep_value, "report": detail })))
}

fn run_point(cfg: &ExperimentConfig, sweep_value: Option<f64>) -> std::result::Result<PointReport, (Option<f64>, Error)> {
    let inner = || -> Result<PointReport> {
        let point = cfg.at(sweep_value)?;
        let spec = point.problem_spec()?;
        let scheme = point.scheme_config()?;
        let sol = solve(&spec, &scheme)?;
        let mut rows = Vec::with_capacity(point.analyses.len());
        let mut details = Vec::with_capacity(point.analyses.len());
        for a in &point.analyses {
            let start = Instant::now();
            let (mut r, detail) = run_analysis(&point, a, &sol, sweep_value)?;
            r.runtime_seconds = start.elapsed().as_secs_f64();
            rows.push(r);
            details.push(detail);
        }
        Ok(PointReport { sweep_value, steps: sol.steps, solve_seconds: sol.wall_seconds, rows, details })
    };
    inner().map_err(|e| (sweep_value, e))
}

/// Failure of a run, with the sweep point it happened at.
#[derive(Debug)]
pub struct RunFailure {
    pub sweep_value: Option<f64>,
    pub error: Error,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { sweep_value: None, error }
    }
}

/// Runs every sweep point on `workers` threads; points come back in sweep order.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> std::result::Result<ExperimentRun, RunFailure> {
    let started = unix_now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let points = cfg.points();
    let results: Vec<_> = pool.install(|| points.par_iter().map(|&v| run_point(cfg, v)).collect());
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r.map_err(|(sweep_value, error)| RunFailure { sweep_value, error })?);
    }
    Ok(ExperimentRun { points: out, started, finished: unix_now(), workers: workers.max(1) })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn to_csv(cfg: &ExperimentConfig, run: &ExperimentRun) -> String {
    let param = cfg.sweep.as_ref().map(|s| s.parameter.as_str()).unwrap_or("");
    let mut s = csv_header();
    s.push('\n');
    for r in run.rows() {
        let _ = writeln!(
            s,
            "{SCHEMA_VERSION},{param},{},{},{},{},{},{},{},{},{},{}",
            fmt_opt(r.sweep_value),
            r.analysis,
            r.estimator,
            r.value,
            fmt_opt(r.exponent),
            fmt_opt(r.constant),
            fmt_opt(r.r_squared),
            r.model,
            fmt_list(&r.scales),
            fmt_list(&r.values)
        );
    }
    s
}

/// Human-readable description of the CSV layout.
pub fn schema_description() -> String {
    let mut s = format!("results.csv schema version {SCHEMA_VERSION}\n{}\n\n", csv_header());
    for (col, what) in CSV_COLUMNS.iter().zip([
        "integer, constant per file",
        "name of the swept parameter (empty without a sweep)",
        "value of the swept parameter (empty without a sweep)",
        "analysis name from the config",
        "campanato | sequence | loglip | holder | c2alpha | sobolev | pbmo | a_decay | alpha_beta",
        "headline number: seminorm, norm, fitted constant, delta, or partial sum",
        "fitted power-law exponent (empty when not fitted)",
        "fitted power-law constant",
        "r^2 of the log-log fit",
        "preferred model or status tag",
        "';'-separated scales (radii or openings)",
        "';'-separated values at those scales",
    ]) {
        let _ = writeln!(s, "  {col:<16} {what}");
    }
    s
}

pub fn manifest(cfg: &ExperimentConfig, run: &ExperimentRun) -> Value {
    let mut notes = Vec::new();
    if cfg.analyses.iter().any(|a| a.kind.uses_good_sets()) {
        notes.push("touching domain for good sets is the full computational domain");
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": cfg.text,
        "parsed_config": cfg,
        "seed": cfg.seed,
        "workers": run.workers,
        "environment": {
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
            "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
        "started_unix": run.started,
        "finished_unix": run.finished,
        "points": run.points.iter().map(|p| json!({
            "sweep_value": p.sweep_value,
            "steps": p.steps,
            "solve_seconds": p.solve_seconds,
            "runtimes": p.rows.iter().map(|r| json!({ "analysis": r.analysis, "seconds": r.runtime_seconds })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "notes": notes,
    })
}

/// Reads a config file, or the config echoed inside a manifest.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)?;
        let echoed = v
            .get("config")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Validation { code: "manifest", message: "manifest has no `config` text".into() })?;
        return ExperimentConfig::parse(echoed);
    }
    ExperimentConfig::parse(&text)
}

fn write_error(dir: &Path, failure: &RunFailure) -> Result<()> {
    fs::create_dir_all(dir)?;
    let e = &failure.error;
    let body = json!({
        "code": e.code(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
        "sweep_value": failure.sweep_value,
    });
    fs::write(dir.join("errors.json"), serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(())
}

/// The `run` command: returns the process exit code. Output goes to `out`,
/// else `output.dir` from the config, else the current directory.
pub fn run_command(path: &Path, out: Option<&Path>, workers: Option<usize>) -> i32 {
    let fallback = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            let _ = write_error(&fallback, &RunFailure::from(e));
            return code;
        }
    };
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or(fallback);
    let attempt = || -> std::result::Result<(), RunFailure> {
        let run = run_experiment(&cfg, workers.unwrap_or(cfg.workers))?;
        fs::create_dir_all(&dir).map_err(Error::from)?;
        let _ = fs::remove_file(dir.join("errors.json"));
        if cfg.formats.iter().any(|f| f == "csv") {
            fs::write(dir.join("results.csv"), to_csv(&cfg, &run)).map_err(Error::from)?;
        }
        if cfg.formats.iter().any(|f| f == "json") {
            let details: Vec<&Value> = run.points.iter().flat_map(|p| &p.details).collect();
            fs::write(dir.join("results.json"), serde_json::to_string_pretty(&details).map_err(Error::from)? + "\n").map_err(Error::from)?;
        }
        let m = manifest(&cfg, &run);
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m).map_err(Error::from)? + "\n").map_err(Error::from)?;
        Ok(())
    };
    match attempt() {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            let _ = write_error(&dir, &f);
            f.error.exit_code()
        }
    }
}
