//! Experiment configuration: flat `section.key = value` lines.
//!
//! `#` starts a comment; blank lines are ignored; every key may appear once
//! and unknown keys are rejected. Lists are comma separated, matrix entries
//! (upper triangle, row by row) are `;` separated. Expression values are taken
//! verbatim. The full key set is documented in the README.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField};
use crate::grid::{check_dim, ParabolicCylinder, Point};
use crate::operators::{check_uniform_ellipticity, ellipticity_samples, EllipticityPair, IsaacsEntry, OperatorSpec};
use crate::regularity::FitMode;
use crate::goodsets::AffineReading;
use crate::solver::{Domain, ProblemSpec, SchemeConfig};

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: &[&str] = &["aperture", "lambda", "Lambda", "p", "scale", "h"];

const ELLIPTICITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum OperatorChoice {
    PucciPlus,
    PucciMinus,
    Trace,
    Linear { coefficient: String, zero_order: Option<String> },
    /// `entries[(beta, gamma)] = (a, f)`
    Isaacs { entries: BTreeMap<(usize, usize), (String, String)> },
    PLaplace,
}

/// Integrability class declared for the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", content = "exponent", rename_all = "snake_case")]
pub enum SourceClass {
    Unspecified,
    /// `C^(alpha, alpha/2)`
    Holder(f64),
    Bounded,
    Lebesgue(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DomainConfig {
    Box { lower: Vec<f64>, upper: Vec<f64>, t_start: f64 },
    /// Cylinder `Q_r(0, 0)`.
    Cylinder { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub dim: usize,
    pub operator: OperatorChoice,
    pub lambda: f64,
    pub upper: Option<f64>,
    pub aperture: Option<f64>,
    pub scale: f64,
    pub p: Option<f64>,
    pub source: String,
    pub boundary: String,
    pub normalize_source: bool,
    pub domain: DomainConfig,
    pub source_class: SourceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSettings {
    pub h: f64,
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    /// Number of stored time levels; sets the output stride.
    pub time_levels: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    Solution,
    Source,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisKind {
    Campanato { alpha: f64, center: Point, radii: Vec<f64>, mode: FitMode },
    Sequence { alpha: f64, rho: f64, k_max: usize, center: Point },
    Loglip { center: Point, radii: Vec<f64> },
    Holder { alpha: f64, cube: f64, budget: usize },
    C2alpha { alpha: f64, cube: f64, budget: usize },
    Sobolev { p: f64, cube: f64 },
    Pbmo { p: f64, cube: f64, radii: Vec<f64>, field: FieldChoice },
    ADecay { openings: Vec<f64>, cube: f64, reading: AffineReading },
    AlphaBeta { m: f64, c1: f64, rho: f64, k_max: usize, p: f64, cube: f64, reading: AffineReading },
}

impl AnalysisKind {
    pub fn estimator(&self) -> &'static str {
        match self {
            AnalysisKind::Campanato { .. } => "campanato",
            AnalysisKind::Sequence { .. } => "sequence",
            AnalysisKind::Loglip { .. } => "loglip",
            AnalysisKind::Holder { .. } => "holder",
            AnalysisKind::C2alpha { .. } => "c2alpha",
            AnalysisKind::Sobolev { .. } => "sobolev",
            AnalysisKind::Pbmo { .. } => "pbmo",
            AnalysisKind::ADecay { .. } => "a_decay",
            AnalysisKind::AlphaBeta { .. } => "alpha_beta",
        }
    }

    pub fn uses_good_sets(&self) -> bool {
        matches!(self, AnalysisKind::ADecay { .. } | AnalysisKind::AlphaBeta { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub name: String,
    pub kind: AnalysisKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub scheme: SchemeSettings,
    pub analyses: Vec<AnalysisConfig>,
    pub sweep: Option<SweepConfig>,
    pub output_dir: Option<String>,
    pub formats: Vec<String>,
    pub seed: u64,
    pub workers: usize,
    /// The text this config was parsed from.
    pub text: String,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Key-value table with usage tracking so leftovers can be reported.
struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.contains('.') || key.contains(char::is_whitespace) {
                return Err(Error::Parse { line, message: format!("bad key `{key}`") });
            }
            if value.is_empty() {
                return Err(Error::Parse { line, message: format!("empty value for `{key}`") });
            }
            if entries.insert(key.to_string(), Entry { line, value: value.to_string(), used: false }).is_some() {
                return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(_, v)| v)
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, v)| parse_float(&v).ok_or_else(|| Error::Parse { line, message: format!("`{key}` needs a number, got `{v}`") }))
            .transpose()
    }

    fn float_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn required_float(&mut self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| missing(key))
    }

    fn integer(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|(line, v)| v.parse::<usize>().map_err(|_| Error::Parse { line, message: format!("`{key}` needs a non-negative integer, got `{v}`") }))
            .transpose()
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|(line, v)| {
                v.split(',')
                    .map(|s| parse_float(s.trim()).ok_or_else(|| Error::Parse { line, message: format!("`{key}` needs numbers, got `{s}`") }))
                    .collect()
            })
            .transpose()
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
            .map(|(line, v)| match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Parse { line, message: format!("`{key}` needs true or false, got `{v}`") }),
            })
            .transpose()
    }

    fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.entries.keys().filter(|k| k.starts_with(prefix)).cloned().collect()
    }

    fn leftovers(&self) -> Result<()> {
        match self.entries.iter().find(|(_, e)| !e.used) {
            Some((k, e)) => Err(Error::Parse { line: e.line, message: format!("unknown key `{k}`") }),
            None => Ok(()),
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn missing(key: &str) -> Error {
    Error::Validation { code: "missing_key", message: format!("`{key}` is required") }
}

fn invalid(code: &'static str, message: impl Into<String>) -> Error {
    Error::Validation { code, message: message.into() }
}

fn broadcast(v: Vec<f64>, dim: usize, key: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(invalid("dimension", format!("`{key}` has {n} entries for dimension {dim}"))),
    }
}

fn center(t: &mut Table, prefix: &str, dim: usize) -> Result<Point> {
    let x = match t.list(&format!("{prefix}.center"))? {
        Some(v) => broadcast(v, dim, "center")?,
        None => vec![0.0; dim],
    };
    let time = t.float_or(&format!("{prefix}.center_t"), 0.0)?;
    Point::new(&x, time)
}

fn reading(t: &mut Table, key: &str) -> Result<AffineReading> {
    match t.string(key).as_deref() {
        None | Some("space_time") => Ok(AffineReading::SpaceTime),
        Some("space_only") => Ok(AffineReading::SpaceOnly),
        Some(other) => Err(invalid("analysis", format!("unknown affine reading `{other}`"))),
    }
}

fn parse_analysis(t: &mut Table, name: &str, dim: usize) -> Result<AnalysisConfig> {
    let pre = format!("analysis.{name}");
    let key = |k: &str| format!("{pre}.{k}");
    let kind_name = t.string(&key("kind")).ok_or_else(|| missing(&key("kind")))?;
    let radii = |t: &mut Table| t.list(&key("radii"))?.ok_or_else(|| missing(&key("radii")));
    let kind = match kind_name.as_str() {
        "campanato" => {
            let mode = match t.string(&key("mode")).as_deref() {
                None | Some("least_squares") => FitMode::LeastSquares,
                Some("chebyshev") => FitMode::Chebyshev,
                Some(other) => return Err(invalid("analysis", format!("unknown fit mode `{other}`"))),
            };
            AnalysisKind::Campanato { alpha: t.required_float(&key("alpha"))?, center: center(t, &pre, dim)?, radii: radii(t)?, mode }
        }
        "sequence" => AnalysisKind::Sequence {
            alpha: t.required_float(&key("alpha"))?,
            rho: t.float_or(&key("rho"), 0.5)?,
            k_max: t.integer(&key("k_max"))?.ok_or_else(|| missing(&key("k_max")))?,
            center: center(t, &pre, dim)?,
        },
        "loglip" => AnalysisKind::Loglip { center: center(t, &pre, dim)?, radii: radii(t)? },
        "holder" | "c2alpha" => {
            let alpha = t.required_float(&key("alpha"))?;
            let cube = t.float_or(&key("cube"), 1.0)?;
            let budget = t.integer(&key("budget"))?.unwrap_or(crate::regularity::DEFAULT_PAIR_BUDGET);
            if kind_name == "holder" {
                AnalysisKind::Holder { alpha, cube, budget }
            } else {
                AnalysisKind::C2alpha { alpha, cube, budget }
            }
        }
        "sobolev" => AnalysisKind::Sobolev { p: t.required_float(&key("p"))?, cube: t.float_or(&key("cube"), 1.0)? },
        "pbmo" => {
            let field = match t.string(&key("field")).as_deref() {
                None | Some("solution") => FieldChoice::Solution,
                Some("source") => FieldChoice::Source,
                Some(other) => return Err(invalid("analysis", format!("unknown field `{other}`"))),
            };
            AnalysisKind::Pbmo { p: t.required_float(&key("p"))?, cube: t.float_or(&key("cube"), 1.0)?, radii: radii(t)?, field }
        }
        "a_decay" => AnalysisKind::ADecay {
            openings: t.list(&key("openings"))?.ok_or_else(|| missing(&key("openings")))?,
            cube: t.float_or(&key("cube"), 1.0)?,
            reading: reading(t, &key("reading"))?,
        },
        "alpha_beta" => AnalysisKind::AlphaBeta {
            m: t.required_float(&key("m"))?,
            c1: t.required_float(&key("c1"))?,
            rho: t.float_or(&key("rho"), 0.5)?,
            k_max: t.integer(&key("k_max"))?.ok_or_else(|| missing(&key("k_max")))?,
            p: t.float_or(&key("p"), 1.0)?,
            cube: t.float_or(&key("cube"), 1.0)?,
            reading: reading(t, &key("reading"))?,
        },
        other => return Err(invalid("analysis", format!("unknown analysis kind `{other}`"))),
    };
    Ok(AnalysisConfig { name: name.to_string(), kind })
}

fn parse_operator(t: &mut Table) -> Result<OperatorChoice> {
    let name = t.string("problem.operator").ok_or_else(|| missing("problem.operator"))?;
    Ok(match name.as_str() {
        "pucci_plus" => OperatorChoice::PucciPlus,
        "pucci_minus" => OperatorChoice::PucciMinus,
        "trace" => OperatorChoice::Trace,
        "p_laplace" => OperatorChoice::PLaplace,
        "linear" => OperatorChoice::Linear {
            coefficient: t.string("problem.coefficient").ok_or_else(|| missing("problem.coefficient"))?,
            zero_order: t.string("problem.zero_order"),
        },
        "isaacs" => {
            let mut entries = BTreeMap::new();
            for k in t.keys_with_prefix("problem.isaacs.") {
                let parts: Vec<&str> = k.split('.').collect();
                let parsed = match parts.as_slice() {
                    ["problem", "isaacs", b, g, "a"] => b.parse::<usize>().ok().zip(g.parse::<usize>().ok()),
                    _ => None,
                };
                let Some((b, g)) = parsed else { continue };
                let a = t.string(&k).unwrap_or_default();
                let f = t.string(&format!("problem.isaacs.{b}.{g}.f")).unwrap_or_else(|| "0".into());
                entries.insert((b, g), (a, f));
            }
            if entries.is_empty() {
                return Err(invalid("operator", "isaacs needs problem.isaacs.<beta>.<gamma>.a entries"));
            }
            OperatorChoice::Isaacs { entries }
        }
        other => return Err(invalid("operator", format!("unknown operator `{other}`"))),
    })
}

fn parse_source_class(t: &mut Table) -> Result<SourceClass> {
    let exponent = t.float("problem.source_exponent")?;
    let need = |e: Option<f64>| e.ok_or_else(|| missing("problem.source_exponent"));
    Ok(match t.string("problem.source_class").as_deref() {
        None | Some("unspecified") => SourceClass::Unspecified,
        Some("holder") => SourceClass::Holder(need(exponent)?),
        Some("bounded") => SourceClass::Bounded,
        Some("lebesgue") => SourceClass::Lebesgue(need(exponent)?),
        Some(other) => return Err(invalid("source_class", format!("unknown source class `{other}`"))),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::parse(text)?;
        let dim = t.integer("problem.dim")?.ok_or_else(|| missing("problem.dim"))?;
        check_dim(dim)?;
        let operator = parse_operator(&mut t)?;
        let domain = match t.string("problem.domain").as_deref() {
            None | Some("box") => DomainConfig::Box {
                lower: broadcast(t.list("problem.lower")?.unwrap_or(vec![-1.0]), dim, "problem.lower")?,
                upper: broadcast(t.list("problem.upper")?.unwrap_or(vec![1.0]), dim, "problem.upper")?,
                t_start: t.float_or("problem.t_start", -1.0)?,
            },
            Some("cylinder") => DomainConfig::Cylinder { radius: t.float_or("problem.radius", 1.0)? },
            Some(other) => return Err(invalid("domain", format!("unknown domain `{other}`"))),
        };
        let problem = ProblemConfig {
            dim,
            operator,
            lambda: t.float_or("problem.lambda", 1.0)?,
            upper: t.float("problem.Lambda")?,
            aperture: t.float("problem.aperture")?,
            scale: t.float_or("problem.scale", 1.0)?,
            p: t.float("problem.p")?,
            source: t.string("problem.source").unwrap_or_else(|| "0".into()),
            boundary: t.string("problem.boundary").unwrap_or_else(|| "0".into()),
            normalize_source: t.boolean("problem.normalize_source")?.unwrap_or(false),
            domain,
            source_class: parse_source_class(&mut t)?,
        };
        let scheme = SchemeSettings {
            h: t.float("scheme.h")?.ok_or_else(|| missing("scheme.h"))?,
            dt: t.float("scheme.dt")?,
            cfl_safety: t.float_or("scheme.cfl_safety", 0.9)?,
            time_levels: t.integer("scheme.time_levels")?,
        };
        let mut names: Vec<String> = t
            .keys_with_prefix("analysis.")
            .iter()
            .filter_map(|k| k.split('.').nth(1).map(str::to_string))
            .collect();
        names.dedup();
        let analyses = names.iter().map(|n| parse_analysis(&mut t, n, dim)).collect::<Result<Vec<_>>>()?;
        let sweep = match (t.string("sweep.parameter"), t.list("sweep.values")?) {
            (Some(parameter), Some(values)) => Some(SweepConfig { parameter, values }),
            (None, None) => None,
            _ => return Err(invalid("sweep", "sweep.parameter and sweep.values go together")),
        };
        let formats = t
            .string("output.formats")
            .map(|s| s.split(',').map(|f| f.trim().to_string()).collect())
            .unwrap_or_else(|| vec!["csv".to_string()]);
        let cfg = Self {
            problem,
            scheme,
            analyses,
            sweep,
            output_dir: t.string("output.dir"),
            formats,
            seed: t.integer("run.seed")?.unwrap_or(0) as u64,
            workers: t.integer("run.workers")?.unwrap_or(1),
            text: text.to_string(),
        };
        t.leftovers()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sweep values, or a single `None` point without a sweep.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|v| Some(*v)).collect(),
            None => vec![None],
        }
    }

    /// This config with the sweep parameter set to `value`.
    pub fn at(&self, value: Option<f64>) -> Result<ExperimentConfig> {
        let mut cfg = self.clone();
        let (Some(sweep), Some(v)) = (&self.sweep, value) else { return Ok(cfg) };
        let pr = &mut cfg.problem;
        match sweep.parameter.as_str() {
            "aperture" => {
                pr.aperture = Some(v);
                pr.upper = None;
            }
            "lambda" => pr.lambda = v,
            "Lambda" => {
                pr.upper = Some(v);
                pr.aperture = None;
            }
            "p" => pr.p = Some(v),
            "scale" => pr.scale = v,
            "h" => cfg.scheme.h = v,
            other => return Err(invalid("sweep", format!("cannot sweep `{other}`"))),
        }
        Ok(cfg)
    }

    pub fn pair(&self) -> Result<EllipticityPair> {
        let pr = &self.problem;
        match pr.operator {
            OperatorChoice::Trace => EllipticityPair::new(pr.scale, pr.scale),
            OperatorChoice::PLaplace => crate::operators::p_laplace_pair(pr.p.ok_or_else(|| missing("problem.p"))?),
            _ => match (pr.upper, pr.aperture) {
                (Some(_), Some(_)) => Err(invalid("ellipticity", "give problem.Lambda or problem.aperture, not both")),
                (Some(upper), None) => EllipticityPair::new(pr.lambda, upper),
                (None, Some(a)) => EllipticityPair::with_aperture(pr.lambda, a),
                (None, None) => EllipticityPair::new(pr.lambda, pr.lambda),
            },
        }
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        let pr = &self.problem;
        let d = pr.dim;
        let pair = self.pair()?;
        let matrix = |src: &str| -> Result<MatrixField> {
            let entries = src.split(';').map(|e| ScalarField::parse(e.trim(), d)).collect::<Result<Vec<_>>>()?;
            MatrixField::from_entries(d, entries)
        };
        match &pr.operator {
            OperatorChoice::PucciPlus => OperatorSpec::pucci_plus(d, pair),
            OperatorChoice::PucciMinus => OperatorSpec::pucci_minus(d, pair),
            OperatorChoice::Trace => OperatorSpec::scaled_trace(d, pr.scale),
            OperatorChoice::PLaplace => OperatorSpec::normalized_p_laplace(d, pr.p.ok_or_else(|| missing("problem.p"))?),
            OperatorChoice::Linear { coefficient, zero_order } => {
                let c = zero_order.as_deref().map(|z| ScalarField::parse(z, d)).transpose()?;
                OperatorSpec::linear(d, matrix(coefficient)?, c, pair)
            }
            OperatorChoice::Isaacs { entries } => {
                let betas = entries.keys().map(|k| k.0).max().map_or(0, |b| b + 1);
                let mut families: Vec<Vec<IsaacsEntry>> = vec![Vec::new(); betas];
                for ((b, _), (a, f)) in entries {
                    families[*b].push(IsaacsEntry { a: matrix(a)?, f: ScalarField::parse(f, d)? });
                }
                OperatorSpec::isaacs(d, families, pair)
            }
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        Ok(match &self.problem.domain {
            DomainConfig::Box { lower, upper, t_start } => Domain::Box { lower: lower.clone(), upper: upper.clone(), t_start: *t_start },
            DomainConfig::Cylinder { radius } => Domain::Cylinder(ParabolicCylinder::centered(self.problem.dim, *radius)?),
        })
    }

    fn duration(&self) -> f64 {
        match &self.problem.domain {
            DomainConfig::Box { t_start, .. } => -t_start,
            DomainConfig::Cylinder { radius } => radius * radius,
        }
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let d = self.problem.dim;
        let mut spec = ProblemSpec::new(
            self.operator()?,
            ScalarField::parse(&self.problem.source, d)?,
            ScalarField::parse(&self.problem.boundary, d)?,
            self.domain()?,
        )?;
        spec.normalize_source = self.problem.normalize_source;
        Ok(spec)
    }

    pub fn source_field(&self) -> Result<ScalarField> {
        ScalarField::parse(&self.problem.source, self.problem.dim)
    }

    /// Time step and output stride. An explicit `scheme.dt` is taken as given
    /// (the solver refuses it when it breaks the CFL limit).
    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let s = &self.scheme;
        let duration = self.duration();
        let upper = self.pair()?.upper();
        let d = self.problem.dim;
        let mut cfg = match (s.dt, s.time_levels) {
            (Some(dt), None) => SchemeConfig { cfl_safety: s.cfl_safety, ..SchemeConfig::new(s.h, dt) },
            (None, None) => SchemeConfig::from_cfl(s.h, s.cfl_safety, d, upper, duration),
            (dt, Some(levels)) => {
                if levels < 2 {
                    return Err(invalid("scheme", "scheme.time_levels must be at least 2"));
                }
                let spacing = duration / (levels - 1) as f64;
                let stride = match dt {
                    Some(dt) => {
                        let k = (spacing / dt).round();
                        if k < 1.0 || (k * dt - spacing).abs() > 1e-9 * spacing {
                            return Err(invalid("scheme", "scheme.dt must divide the stored level spacing"));
                        }
                        k as usize
                    }
                    None => (spacing / SchemeConfig::cfl_limit(s.h, s.cfl_safety, d, upper) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
                };
                SchemeConfig { h: s.h, dt: spacing / stride as f64, cfl_safety: s.cfl_safety, output_stride: stride }
            }
        };
        cfg.cfl_safety = s.cfl_safety;
        Ok(cfg)
    }

    /// Checks that do not need a solve: ellipticity (declared pair and a
    /// sampled check of the operator), source class against the requested
    /// analyses, and every sweep point.
    pub fn validate(&self) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            if !SWEEP_PARAMETERS.contains(&sweep.parameter.as_str()) {
                return Err(invalid("sweep", format!("cannot sweep `{}`; choose one of {SWEEP_PARAMETERS:?}", sweep.parameter)));
            }
            if sweep.values.is_empty() {
                return Err(invalid("sweep", "sweep.values is empty"));
            }
        }
        if self.workers == 0 {
            return Err(invalid("run", "run.workers must be positive"));
        }
        if let Some(f) = self.formats.iter().find(|f| !matches!(f.as_str(), "csv" | "json")) {
            return Err(invalid("output", format!("unknown output format `{f}`")));
        }
        for point in self.points() {
            self.at(point)?.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        let pair = self.pair()?;
        let op = self.operator()?;
        if !(self.scheme.h > 0.0) || !(self.scheme.cfl_safety > 0.0 && self.scheme.cfl_safety <= 1.0) {
            return Err(invalid("scheme", "need scheme.h > 0 and scheme.cfl_safety in (0, 1]"));
        }
        let samples = ellipticity_samples(self.problem.dim, ELLIPTICITY_SAMPLES, 1.0, self.seed);
        let report = check_uniform_ellipticity(&op, pair, &samples)?;
        if !report.passed {
            return Err(invalid(
                "ellipticity",
                format!("operator leaves [{}, {}] on sampled increments (worst miss {:e})", pair.lower(), pair.upper(), report.worst_violation),
            ));
        }
        self.source_field()?;
        ScalarField::parse(&self.problem.boundary, self.problem.dim)?;
        let d = self.problem.dim as f64;
        let class = self.problem.source_class;
        for a in &self.analyses {
            let ok = match (&a.kind, class) {
                (AnalysisKind::Sequence { .. }, SourceClass::Holder(_)) => true,
                (AnalysisKind::Sequence { .. }, _) => false,
                (AnalysisKind::Loglip { .. }, SourceClass::Holder(_) | SourceClass::Bounded) => true,
                (AnalysisKind::Loglip { .. }, _) => false,
                (AnalysisKind::Sobolev { .. } | AnalysisKind::ADecay { .. } | AnalysisKind::AlphaBeta { .. }, c) => match c {
                    SourceClass::Holder(_) | SourceClass::Bounded => true,
                    SourceClass::Lebesgue(p) => p > d + 1.0,
                    SourceClass::Unspecified => false,
                },
                _ => true,
            };
            if !ok {
                return Err(invalid(
                    "source_class",
                    format!("analysis `{}` ({}) is not supported by source class {class:?}", a.name, a.kind.estimator()),
                ));
            }
        }
        if let SourceClass::Holder(alpha) = class {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(invalid("source_class", format!("Hölder exponent must lie in (0, 1], got {alpha}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = "
        # caloric check
        problem.dim = 1
        problem.operator = trace
        problem.source = 0
        problem.boundary = exp(-t) * cos(x1)   # comment after a value
        scheme.h = 0.0625
        analysis.c.kind = campanato
        analysis.c.alpha = 0.5
        analysis.c.radii = 0.5, 0.25, 0.125
    ";

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(HEAT).unwrap();
        assert_eq!(cfg.problem.boundary, "exp(-t) * cos(x1)");
        assert_eq!(cfg.analyses.len(), 1);
        assert_eq!(cfg.points(), vec![None]);
        let s = cfg.scheme_config().unwrap();
        assert!(s.dt <= 0.9 * 0.0625 * 0.0625 / 2.0 + 1e-15);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let typo = format!("{HEAT}\nscheme.hh = 0.1\n");
        assert!(matches!(ExperimentConfig::parse(&typo), Err(Error::Parse { line: 12, .. })));
        let dup = format!("{HEAT}\nscheme.h = 0.1\n");
        assert!(matches!(ExperimentConfig::parse(&dup), Err(Error::Parse { .. })));
    }

    #[test]
    fn ellipticity_errors() {
        let bad = "problem.dim = 1\nproblem.operator = pucci_plus\nproblem.lambda = 2\nproblem.Lambda = 1\nscheme.h = 0.1\n";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert_eq!(err.code(), "ellipticity");
        assert_eq!(err.exit_code(), 2);
        let lin = "problem.dim = 2\nproblem.operator = linear\nproblem.coefficient = 1; 0; 3\nproblem.Lambda = 2\nscheme.h = 0.1\n";
        assert_eq!(ExperimentConfig::parse(lin).unwrap_err().code(), "ellipticity");
    }

    #[test]
    fn source_class_gates_analyses() {
        let base = "problem.dim = 1\nproblem.operator = pucci_minus\nproblem.aperture = 0.1\nscheme.h = 0.1\nanalysis.s.kind = sequence\nanalysis.s.alpha = 0.5\nanalysis.s.k_max = 3\n";
        assert_eq!(ExperimentConfig::parse(base).unwrap_err().code(), "source_class");
        let ok = format!("{base}problem.source_class = holder\nproblem.source_exponent = 0.5\n");
        assert!(ExperimentConfig::parse(&ok).is_ok());
        let lp = "problem.dim = 2\nproblem.operator = trace\nscheme.h = 0.1\nproblem.source_class = lebesgue\nproblem.source_exponent = 2.5\nanalysis.a.kind = a_decay\nanalysis.a.openings = 1, 2, 4\n";
        assert_eq!(ExperimentConfig::parse(lp).unwrap_err().code(), "source_class");
    }

    #[test]
    fn sweep_adjusts_the_pair() {
        let text = "problem.dim = 1\nproblem.operator = pucci_plus\nscheme.h = 0.1\nsweep.parameter = aperture\nsweep.values = 0, 0.5\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let p = cfg.at(Some(0.5)).unwrap().pair().unwrap();
        assert_eq!((p.lower(), p.upper()), (1.0, 1.5));
        let bad = text.replace("aperture\n", "radius\n");
        assert_eq!(ExperimentConfig::parse(&bad).unwrap_err().code(), "sweep");
    }

    #[test]
    fn stored_levels_set_the_stride() {
        let text = format!("{HEAT}scheme.time_levels = 17\nproblem.t_start = -1\n");
        let s = ExperimentConfig::parse(&text).unwrap().scheme_config().unwrap();
        let spacing = 1.0 / 16.0;
        assert!((s.dt * s.output_stride as f64 - spacing).abs() < 1e-15);
        assert!(s.dt <= SchemeConfig::cfl_limit(0.0625, 0.9, 1, 1.0));
    }

    #[test]
    fn isaacs_entries() {
        let text = "problem.dim = 1\nproblem.operator = isaacs\nproblem.Lambda = 2\nproblem.isaacs.0.0.a = 1\nproblem.isaacs.0.1.a = 2\nproblem.isaacs.1.0.a = 1.5\nproblem.isaacs.1.0.f = 0\nscheme.h = 0.1\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert!(matches!(&cfg.problem.operator, OperatorChoice::Isaacs { entries } if entries.len() == 3));
        cfg.operator().unwrap();
    }
}
