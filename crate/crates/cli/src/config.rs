//! Flag and config-file handling for `scan`.
//!
//! The TOML file uses the flag names as keys with the same value syntax.
//! Precedence is flags, then file, then the preset (if any), then the mode
//! defaults. Environment variables are not consulted.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use xyfisher::scan::{Mode, Range, Refinement, ScanSpec};
use xyfisher::{ParameterTag, Separation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScanArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// single-heatmap, pair-curves, multiparam, oracle-check or asymptotic-decay.
    #[arg(long)]
    pub mode: Option<String>,
    /// Named grid: fig1, fig2, fig3-4, fig8, fig9-10, fig5-7a, fig5-7b, oracle, decay.
    #[arg(long)]
    pub preset: Option<String>,
    /// J grid as start:end:step, or a single value.
    #[arg(long = "grid-J", allow_hyphen_values = true)]
    pub grid_j: Option<String>,
    /// Comma-separated anisotropy values.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// DM strength as a value or start:end:step.
    #[arg(long = "D", allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Comma-separated separations; `inf` for infinite separation.
    #[arg(long)]
    pub r: Option<String>,
    /// Comma-separated parameter tags from J, gamma, D.
    #[arg(long)]
    pub tags: Option<String>,
    /// J refinement near |J| = 1 as step:window, or `none`.
    #[arg(long)]
    pub refine: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Relative quadrature tolerance; the absolute tolerance is a tenth of it.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated chain lengths for exact diagonalization.
    #[arg(long = "oracle-N")]
    pub oracle_n: Option<String>,
    /// Distance from |J| = 1 below which grid points are skipped.
    #[arg(long = "critical-guard")]
    pub critical_guard: Option<f64>,
    /// Include a wall-clock timestamp in JSON metadata.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrText {
    Number(f64),
    Text(String),
}

impl NumberOrText {
    fn text(&self) -> String {
        match self {
            NumberOrText::Number(x) => x.to_string(),
            NumberOrText::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub preset: Option<String>,
    #[serde(rename = "grid-J")]
    pub grid_j: Option<NumberOrText>,
    pub gamma: Option<NumberOrText>,
    #[serde(rename = "D")]
    pub d: Option<NumberOrText>,
    pub r: Option<NumberOrText>,
    pub tags: Option<String>,
    pub refine: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    #[serde(rename = "oracle-N")]
    pub oracle_n: Option<NumberOrText>,
    #[serde(rename = "critical-guard")]
    pub critical_guard: Option<f64>,
    pub timestamp: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub spec: ScanSpec,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
    pub timestamp: bool,
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

pub fn parse_gamma(s: &str) -> Result<Vec<f64>> {
    split_list(s)
        .map(|x| x.parse::<f64>().with_context(|| format!("bad gamma value {x:?}")))
        .collect()
}

pub fn parse_separations(s: &str) -> Result<Vec<Separation>> {
    split_list(s)
        .map(|x| x.parse::<Separation>().map_err(anyhow::Error::from))
        .collect()
}

pub fn parse_tags(s: &str) -> Result<Vec<ParameterTag>> {
    split_list(s)
        .map(|x| x.parse::<ParameterTag>().map_err(anyhow::Error::from))
        .collect()
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    split_list(s)
        .map(|x| {
            x.parse::<usize>()
                .with_context(|| format!("bad chain length {x:?}"))
        })
        .collect()
}

pub fn parse_refine(s: &str) -> Result<Option<Refinement>> {
    if s.trim() == "none" {
        return Ok(None);
    }
    let (step, window) = s
        .split_once(':')
        .with_context(|| format!("refine {s:?} is not step:window"))?;
    Ok(Some(Refinement {
        step: step.trim().parse().context("bad refine step")?,
        window: window.trim().parse().context("bad refine window")?,
    }))
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

fn pick_text(flag: &Option<String>, file: &Option<NumberOrText>) -> Option<String> {
    flag.clone().or_else(|| file.as_ref().map(NumberOrText::text))
}

pub fn resolve(args: &ScanArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    resolve_with(args, &file)
}

pub fn resolve_with(args: &ScanArgs, file: &FileConfig) -> Result<Resolved> {
    let mode = pick(&args.mode, &file.mode)
        .map(|m| m.parse::<Mode>())
        .transpose()?;
    let preset = pick(&args.preset, &file.preset);
    let mut spec = match (&preset, mode) {
        (Some(name), mode) => {
            let mut spec = ScanSpec::preset(name)?;
            if let Some(mode) = mode {
                spec.mode = mode;
            }
            spec
        }
        (None, Some(mode)) => ScanSpec::new(mode),
        (None, None) => bail!("either --mode or --preset is required"),
    };

    if let Some(j) = pick_text(&args.grid_j, &file.grid_j) {
        spec.j = j.parse::<Range>()?;
    }
    if let Some(g) = pick_text(&args.gamma, &file.gamma) {
        spec.gamma = parse_gamma(&g)?;
    }
    if let Some(d) = pick_text(&args.d, &file.d) {
        spec.d = d.parse::<Range>()?;
    }
    if let Some(r) = pick_text(&args.r, &file.r) {
        spec.r_list = parse_separations(&r)?;
    }
    if let Some(t) = pick(&args.tags, &file.tags) {
        spec.tags = parse_tags(&t)?;
    }
    if let Some(refine) = pick(&args.refine, &file.refine) {
        spec.refine = parse_refine(&refine)?;
    }
    if let Some(tol) = pick(&args.tol, &file.tol) {
        spec.cfg.rel_tol = tol;
        spec.cfg.abs_tol = 0.1 * tol;
    }
    if let Some(guard) = pick(&args.critical_guard, &file.critical_guard) {
        spec.cfg.critical_guard = guard;
    }
    if let Some(n) = pick_text(&args.oracle_n, &file.oracle_n) {
        spec.oracle_n = parse_sizes(&n)?;
    }
    spec.validate()?;

    let out = pick(&args.out, &file.out);
    let format = match pick(&args.format, &file.format) {
        Some(f) => f,
        None => match out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        },
    };
    Ok(Resolved {
        spec,
        out,
        format,
        threads: pick(&args.threads, &file.threads).unwrap_or(0),
        timestamp: args.timestamp || file.timestamp.unwrap_or(false),
    })
}
