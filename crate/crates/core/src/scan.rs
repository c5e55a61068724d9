//! Parameter sweeps producing one [`ScanRecord`] per grid point,
//! separation and tag, plus CSV and JSON writers.
//!
//! Grid order is `γ` (outer), `D`, `J` (inner). Points are evaluated
//! independently through [`Executor`] and emitted in grid order, so output
//! bytes do not depend on the thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainParams, CoefficientTable, ParameterTag, QuadratureConfig};
use crate::correlations::{self, Separation};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fisher;
use crate::multiparam;
use crate::oracle::{self, FiniteChainSpec, OracleReport, QuadratureReference};
use crate::states::PairPoint;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SingleHeatmap,
    PairCurves,
    Multiparam,
    OracleCheck,
    AsymptoticDecay,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::SingleHeatmap,
        Mode::PairCurves,
        Mode::Multiparam,
        Mode::OracleCheck,
        Mode::AsymptoticDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::SingleHeatmap => "single-heatmap",
            Mode::PairCurves => "pair-curves",
            Mode::Multiparam => "multiparam",
            Mode::OracleCheck => "oracle-check",
            Mode::AsymptoticDecay => "asymptotic-decay",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode {s:?}")))
    }
}

/// Inclusive arithmetic range `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

/// Values are rounded to this many decimals to keep grids free of
/// accumulated float noise.
const GRID_DECIMALS: i32 = 10;

fn round_grid(x: f64) -> f64 {
    let s = 10f64.powi(GRID_DECIMALS);
    let v = (x * s).round() / s;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

impl Range {
    pub fn single(x: f64) -> Self {
        Range {
            start: x,
            end: x,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidConfig("range bounds must be finite".into()));
        }
        if self.end < self.start || self.step <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "range {self} needs start <= end and step > 0"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| round_grid(self.start + i as f64 * self.step))
            .collect())
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number {x:?} in range {s:?}")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let range = match parts.as_slice() {
            [x] => Range::single(parse(x)?),
            [a, b, step] => Range {
                start: parse(a)?,
                end: parse(b)?,
                step: parse(step)?,
            },
            _ => return Err(Error::InvalidConfig(format!("range {s:?} is not a:b:step"))),
        };
        range.validate()?;
        Ok(range)
    }
}

/// Finer `J` spacing inside `|J ∓ 1| < window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub step: f64,
    pub window: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Refinement {
            step: 0.002,
            window: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub mode: Mode,
    pub preset: Option<String>,
    pub j: Range,
    pub refine: Option<Refinement>,
    pub gamma: Vec<f64>,
    pub d: Range,
    pub r_list: Vec<Separation>,
    pub tags: Vec<ParameterTag>,
    pub cfg: QuadratureConfig,
    /// Chain lengths for exact-diagonalization comparisons.
    pub oracle_n: Vec<usize>,
    /// Separations of the power-law fit in `asymptotic-decay` mode.
    pub decay_r: Vec<u32>,
}

pub const PRESETS: [&str; 9] = [
    "fig1", "fig2", "fig3-4", "fig8", "fig9-10", "fig5-7a", "fig5-7b", "oracle", "decay",
];

impl ScanSpec {
    /// Defaults for a mode: a single point at `J = 0.5, γ = 1, D = 0`.
    pub fn new(mode: Mode) -> Self {
        ScanSpec {
            mode,
            preset: None,
            j: Range::single(0.5),
            refine: None,
            gamma: vec![1.0],
            d: Range::single(0.0),
            r_list: Separation::standard_set(correlations::DEFAULT_MAX_SEPARATION),
            tags: vec![ParameterTag::J],
            cfg: QuadratureConfig::default(),
            oracle_n: vec![8, 10, 12],
            decay_r: vec![8, 16, 32, 64],
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let full = Range {
            start: -2.0,
            end: 2.0,
            step: 0.01,
        };
        let positive = Range { start: 0.0, ..full };
        let with = |mode: Mode, j: Range, gamma: f64, d: Range| ScanSpec {
            preset: Some(name.to_string()),
            j,
            refine: Some(Refinement::default()),
            gamma: vec![gamma],
            d,
            ..ScanSpec::new(mode)
        };
        let spec = match name {
            "fig1" => with(
                Mode::SingleHeatmap,
                full,
                1.0,
                Range {
                    start: 0.0,
                    end: 0.5,
                    step: 0.05,
                },
            ),
            "fig2" => with(Mode::PairCurves, positive, 1.0, Range::single(0.0)),
            "fig3-4" => with(Mode::PairCurves, full, 1.0, Range::single(0.3)),
            "fig8" => with(Mode::PairCurves, positive, 0.25, Range::single(0.0)),
            "fig9-10" => with(Mode::PairCurves, full, 0.25, Range::single(0.1)),
            "fig5-7a" => with(Mode::Multiparam, full, 1.0, Range::single(0.0)),
            "fig5-7b" => with(Mode::Multiparam, full, 1.0, Range::single(0.1)),
            "oracle" => ScanSpec {
                preset: Some(name.to_string()),
                j: Range {
                    start: -0.5,
                    end: 1.5,
                    step: 0.5,
                },
                gamma: vec![1.0, 0.25],
                r_list: (1..=4).map(Separation::Finite).collect(),
                tags: ParameterTag::ALL.to_vec(),
                ..ScanSpec::new(Mode::OracleCheck)
            },
            "decay" => ScanSpec {
                preset: Some(name.to_string()),
                j: Range {
                    start: 0.5,
                    end: 1.5,
                    step: 1.0,
                },
                gamma: vec![1.0, 0.25],
                d: Range::single(0.0),
                ..ScanSpec::new(Mode::AsymptoticDecay)
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.j.validate()?;
        self.d.validate()?;
        if self.gamma.is_empty() {
            return Err(Error::InvalidConfig("gamma list is empty".into()));
        }
        for &g in &self.gamma {
            ChainParams::new(0.0, g, 0.0)?;
        }
        if let Some(r) = self.refine {
            if !(r.step > 0.0 && r.window >= 0.0) {
                return Err(Error::InvalidConfig(
                    "refinement needs step > 0, window >= 0".into(),
                ));
            }
        }
        if self.r_list.is_empty()
            && matches!(self.mode, Mode::PairCurves | Mode::Multiparam | Mode::OracleCheck)
        {
            return Err(Error::InvalidConfig("r list is empty".into()));
        }
        if self.r_list.contains(&Separation::Finite(0)) {
            return Err(Error::InvalidSeparation("r must be >= 1".into()));
        }
        if self.tags.is_empty() && matches!(self.mode, Mode::SingleHeatmap | Mode::PairCurves) {
            return Err(Error::InvalidConfig("tag list is empty".into()));
        }
        if self.mode == Mode::OracleCheck {
            if self.oracle_n.is_empty() {
                return Err(Error::InvalidConfig("oracle N list is empty".into()));
            }
            for &n in &self.oracle_n {
                FiniteChainSpec::new(n, ChainParams::new(0.0, 1.0, 0.0)?)?;
            }
        }
        Ok(())
    }

    /// `J` values including refinement around `±1`, before exclusions.
    pub fn j_values(&self) -> Result<Vec<f64>> {
        let mut js = self.j.values()?;
        if let Some(refine) = self.refine {
            for c in [-1.0, 1.0] {
                let lo = (c - refine.window).max(self.j.start);
                let hi = (c + refine.window).min(self.j.end);
                if lo <= hi {
                    let fine = Range {
                        start: lo,
                        end: hi,
                        step: refine.step,
                    };
                    js.extend(fine.values()?);
                }
            }
        }
        js.sort_by(f64::total_cmp);
        js.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        Ok(js)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        let js = self.j_values()?;
        let ds = self.d.values()?;
        let guard = self.cfg.critical_guard;
        let keep_zero = self.mode == Mode::OracleCheck;
        let mut grid = Grid::default();
        for &gamma in &self.gamma {
            for &d in &ds {
                for &j in &js {
                    if (j.abs() - 1.0).abs() < guard {
                        grid.excluded_critical += 1;
                    } else if j == 0.0 && !keep_zero {
                        grid.excluded_zero_coupling += 1;
                    } else {
                        grid.points.push(ChainParams::new(j, gamma, d)?);
                    }
                }
            }
        }
        Ok(grid)
    }

    fn max_finite_r(&self) -> u32 {
        self.r_list
            .iter()
            .filter_map(|r| r.as_finite())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid {
    pub points: Vec<ChainParams>,
    pub excluded_critical: usize,
    pub excluded_zero_coupling: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Library,
    Oracle,
}

/// One output row. Absent values are `None`: an empty CSV field or a JSON
/// `null`, never NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub schema_version: u32,
    pub source: Source,
    #[serde(rename = "J")]
    pub j: f64,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub r: Option<Separation>,
    pub tag: Option<ParameterTag>,
    pub qfi: Option<f64>,
    pub fi: Option<f64>,
    pub saturation: Option<f64>,
    #[serde(rename = "R_H")]
    pub r_h: Option<f64>,
    #[serde(rename = "R_F")]
    pub r_f: Option<f64>,
    pub det_qfim: Option<f64>,
    pub trace_inverse: Option<f64>,
    pub hjj_fraction: Option<f64>,
    pub uhlmann_max_abs: Option<f64>,
    pub commutator_max_abs: Option<f64>,
    pub quantity: Option<String>,
    pub library_value: Option<f64>,
    pub oracle_value: Option<f64>,
    pub abs_dev: Option<f64>,
    pub rel_dev: Option<f64>,
    pub oracle_n: Option<usize>,
    pub passed: Option<bool>,
    pub decay_slope: Option<f64>,
    pub decay_asymmetry: Option<f64>,
    pub near_critical: bool,
    pub converged: bool,
    pub error: Option<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ScanRecord {
    pub fn new(source: Source, params: &ChainParams, guard: f64) -> Self {
        ScanRecord {
            schema_version: SCHEMA_VERSION,
            source,
            j: params.j,
            gamma: params.gamma,
            d: params.d,
            r: None,
            tag: None,
            qfi: None,
            fi: None,
            saturation: None,
            r_h: None,
            r_f: None,
            det_qfim: None,
            trace_inverse: None,
            hjj_fraction: None,
            uhlmann_max_abs: None,
            commutator_max_abs: None,
            quantity: None,
            library_value: None,
            oracle_value: None,
            abs_dev: None,
            rel_dev: None,
            oracle_n: None,
            passed: None,
            decay_slope: None,
            decay_asymmetry: None,
            near_critical: params.is_near_critical(guard),
            converged: true,
            error: None,
        }
    }

    fn at(mut self, r: Option<Separation>, tag: Option<ParameterTag>) -> Self {
        self.r = r;
        self.tag = tag;
        self
    }

    /// Records the first error seen; later ones are dropped.
    fn note<T>(&mut self, result: Result<T>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                if matches!(e, Error::NonConvergence { .. }) {
                    self.converged = false;
                }
                if self.error.is_none() {
                    self.error = Some(e.to_string());
                }
                None
            }
        }
    }

    fn with_report(mut self, report: &OracleReport, abs_tol: f64, rel_tol: f64) -> Self {
        self.quantity = Some(report.quantity.clone());
        self.library_value = finite(report.library);
        self.oracle_value = finite(report.oracle);
        self.abs_dev = finite(report.abs_dev);
        self.rel_dev = finite(report.rel_dev);
        self.oracle_n = report.n;
        self.passed = Some(report.within(abs_tol, rel_tol));
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub points: usize,
    pub rows: usize,
    pub excluded_critical: usize,
    pub excluded_zero_coupling: usize,
    pub failed_rows: usize,
    pub not_converged: usize,
    pub near_critical_rows: usize,
    pub oracle_comparisons: usize,
    pub oracle_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput {
    pub records: Vec<ScanRecord>,
    pub summary: Summary,
}

pub fn run(spec: &ScanSpec, exec: &Executor) -> Result<ScanOutput> {
    let grid = spec.grid()?;
    let per_point = exec.map(&grid.points, |p| evaluate_point(spec, p))?;
    let records: Vec<ScanRecord> = per_point.into_iter().flatten().collect();
    let summary = Summary {
        points: grid.points.len(),
        rows: records.len(),
        excluded_critical: grid.excluded_critical,
        excluded_zero_coupling: grid.excluded_zero_coupling,
        failed_rows: records.iter().filter(|r| r.error.is_some()).count(),
        not_converged: records.iter().filter(|r| !r.converged).count(),
        near_critical_rows: records.iter().filter(|r| r.near_critical).count(),
        oracle_comparisons: records.iter().filter(|r| r.passed.is_some()).count(),
        oracle_failures: records.iter().filter(|r| r.passed == Some(false)).count(),
    };
    Ok(ScanOutput { records, summary })
}

pub fn evaluate_point(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    match spec.mode {
        Mode::SingleHeatmap => run_single_heatmap(spec, params),
        Mode::PairCurves => run_pair_curves(spec, params),
        Mode::Multiparam => run_multiparam(spec, params),
        Mode::OracleCheck => run_oracle_check(spec, params),
        Mode::AsymptoticDecay => run_asymptotic_decay(spec, params),
    }
}

/// Rows for every `(r, tag)` pair, each carrying the same error.
fn error_rows(
    spec: &ScanSpec,
    params: &ChainParams,
    rs: &[Option<Separation>],
    tags: &[Option<ParameterTag>],
    err: Error,
) -> Vec<ScanRecord> {
    let mut rows = Vec::new();
    for &r in rs {
        for &tag in tags {
            let mut row = ScanRecord::new(Source::Library, params, spec.cfg.critical_guard).at(r, tag);
            row.note::<()>(Err(err.clone()));
            rows.push(row);
        }
    }
    rows
}

pub fn run_single_heatmap(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    let table = match CoefficientTable::compute(params, 0, &spec.cfg) {
        Ok(t) => t,
        Err(e) => {
            let tags: Vec<_> = spec.tags.iter().map(|&t| Some(t)).collect();
            return error_rows(spec, params, &[None], &tags, e);
        }
    };
    spec.tags
        .iter()
        .map(|&tag| {
            let mut row =
                ScanRecord::new(Source::Library, params, spec.cfg.critical_guard).at(None, Some(tag));
            if let Some(h) = row.note(fisher::qfi_single_from_table(&table, tag)) {
                row.qfi = finite(h);
                row.fi = finite(h);
                row.saturation = (h > 0.0).then_some(1.0);
            }
            row
        })
        .collect()
}

pub fn run_pair_curves(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    let rs: Vec<_> = spec.r_list.iter().map(|&r| Some(r)).collect();
    let tags: Vec<_> = spec.tags.iter().map(|&t| Some(t)).collect();
    let table = match CoefficientTable::compute(params, spec.max_finite_r(), &spec.cfg) {
        Ok(t) => t,
        Err(e) => return error_rows(spec, params, &rs, &tags, e),
    };
    let inf = PairPoint::from_table(&table, Separation::Infinite);
    let mut rows = Vec::new();
    for &r in &spec.r_list {
        let point = PairPoint::from_table(&table, r);
        for &tag in &spec.tags {
            let mut row =
                ScanRecord::new(Source::Library, params, spec.cfg.critical_guard).at(Some(r), Some(tag));
            if let Some(point) = row.note(point.clone()) {
                let h = row.note(fisher::qfi_pair_at(&point, tag));
                let f = row.note(fisher::fi_magnetization_at(&point, tag));
                row.qfi = h.and_then(finite);
                row.fi = f.and_then(finite);
                if let (Some(h), Some(f)) = (h, f) {
                    row.saturation = row.note(fisher::saturation_ratio(f, h, tag));
                }
                if let Some(inf) = row.note(inf.clone()) {
                    if let Some((rh, rf)) = row.note(fisher::ratios_at(&point, &inf, tag)) {
                        row.r_h = finite(rh);
                        row.r_f = finite(rf);
                    }
                }
            }
            rows.push(row);
        }
    }
    rows
}

pub fn run_multiparam(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    let rs: Vec<_> = spec.r_list.iter().map(|&r| Some(r)).collect();
    let table = match CoefficientTable::compute(params, spec.max_finite_r(), &spec.cfg) {
        Ok(t) => t,
        Err(e) => return error_rows(spec, params, &rs, &[None], e),
    };
    spec.r_list
        .iter()
        .map(|&r| {
            let mut row = ScanRecord::new(Source::Library, params, spec.cfg.critical_guard).at(Some(r), None);
            if let Some(point) = row.note(PairPoint::from_table(&table, r)) {
                if let Some((h, slds)) = row.note(multiparam::qfim_at(&point)) {
                    row.det_qfim = finite(h.det);
                    row.trace_inverse = h.trace_inverse.and_then(finite);
                    row.hjj_fraction = h.hjj_fraction.and_then(finite);
                    row.qfi = finite(h.entries[0][0]);
                    row.uhlmann_max_abs = finite(multiparam::uhlmann_at(&point, &slds).max_abs);
                    row.commutator_max_abs = finite(multiparam::max_commutator_trace(&point, &slds));
                }
            }
            row
        })
        .collect()
}

pub fn run_asymptotic_decay(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    let mut row = ScanRecord::new(Source::Library, params, spec.cfg.critical_guard);
    if let Some(fit) = row.note(correlations::asymptotic_decay_check(
        params,
        &spec.decay_r,
        &spec.cfg,
    )) {
        row.decay_slope = finite(fit.slope);
        row.decay_asymmetry = finite(fit.max_asymmetry);
    }
    vec![row]
}

/// Tolerances of the oracle comparisons.
pub mod tolerance {
    /// Exact diagonalization at `N` spins: finite-size error is not
    /// controlled analytically, so the absolute slack scales as `1/N`.
    pub fn finite_size(n: usize) -> f64 {
        0.5 / n as f64
    }
    /// Relative slack for QFI against the finite chain.
    pub const FINITE_SIZE_QFI_REL: f64 = 0.15;
    /// Fixed-rule quadrature reference.
    pub const REFERENCE_ABS: f64 = 1e-8;
    /// Analytic partials against finite differences.
    pub const DERIVATIVE_REL: f64 = 1e-6;
    pub const DERIVATIVE_ABS: f64 = 1e-8;
    /// SLD identities and closed-form vs spectral QFI.
    pub const IDENTITY_ABS: f64 = 1e-10;
    pub const IDENTITY_REL: f64 = 1e-8;
}

/// Finite-difference step for parameter derivatives.
pub const FD_STEP: f64 = 1e-3;

/// True when the five-point stencil around `params` along `tag` stays in
/// the valid, non-critical, non-zero-coupling region.
fn stencil_ok(params: &ChainParams, tag: ParameterTag, h: f64, guard: f64) -> bool {
    [-2.0, -1.0, 1.0, 2.0].iter().all(|&k| {
        let p = params.with(tag, params.get(tag) + k * h);
        p.validate().is_ok() && !p.is_near_critical(guard.max(10.0 * h)) && p.j != 0.0
    })
}

pub fn run_oracle_check(spec: &ScanSpec, params: &ChainParams) -> Vec<ScanRecord> {
    let guard = spec.cfg.critical_guard;
    let cfg = &spec.cfg;
    let mut rows = Vec::new();
    let base = || ScanRecord::new(Source::Oracle, params, guard);
    let failed = |r: Option<Separation>, quantity: String, e: Error| {
        let mut row = base().at(r, None);
        row.quantity = Some(quantity);
        row.passed = Some(false);
        row.note::<()>(Err(e));
        row
    };

    let max_r = spec.max_finite_r();
    let table = match CoefficientTable::compute(params, max_r, cfg) {
        Ok(t) => t,
        Err(e) => return vec![failed(None, "coefficient table".into(), e)],
    };
    let finite_rs: Vec<u32> = spec.r_list.iter().filter_map(|r| r.as_finite()).collect();

    // Fixed-rule quadrature with cofactor determinants, valid for any D.
    let reference = QuadratureReference::new(400, 20);
    let m_ref = reference.magnetization(params);
    rows.push(base().with_report(
        &OracleReport::new("m[reference]", table.magnetization.value, m_ref, None),
        tolerance::REFERENCE_ABS,
        0.0,
    ));
    for &r in &finite_rs {
        let sep = Some(Separation::Finite(r));
        match correlations::correlations_from_table(&table, Separation::Finite(r)) {
            Ok((lib, _)) => {
                let oracle_set = reference.correlations(params, r);
                for (name, a, b) in [
                    ("sxx", lib.sxx, oracle_set.sxx),
                    ("syy", lib.syy, oracle_set.syy),
                    ("szz", lib.szz, oracle_set.szz),
                ] {
                    let rep = OracleReport::new(format!("{name}[reference]"), a, b, None);
                    rows.push(
                        base()
                            .at(sep, None)
                            .with_report(&rep, tolerance::REFERENCE_ABS, 0.0),
                    );
                }
            }
            Err(e) => rows.push(failed(sep, "correlators".into(), e)),
        }
    }

    // Analytic partials against finite differences.
    for tag in ParameterTag::ALL {
        if !stencil_ok(params, tag, FD_STEP, guard) {
            continue;
        }
        let fd = oracle::finite_difference(
            |x| chain::magnetization(&params.with(tag, x), cfg),
            params.get(tag),
            FD_STEP,
        );
        let quantity = format!("dm/d{tag}[finite-difference]");
        match fd {
            Ok(fd) => {
                let rep = OracleReport::new(quantity, table.magnetization.d(tag), fd.value, None);
                rows.push(base().at(None, Some(tag)).with_report(
                    &rep,
                    tolerance::DERIVATIVE_ABS,
                    tolerance::DERIVATIVE_REL,
                ));
            }
            Err(e) => rows.push(failed(None, quantity, e)),
        }
    }

    // SLD identities and the two QFI routes.
    if params.j != 0.0 {
        for &r in &spec.r_list {
            let point = match PairPoint::from_table(&table, r) {
                Ok(p) => p,
                Err(e) => {
                    rows.push(failed(Some(r), "pair state".into(), e));
                    continue;
                }
            };
            for &tag in &spec.tags {
                let at = |row: ScanRecord| row.at(Some(r), Some(tag));
                match multiparam::sld_at(&point, tag) {
                    Ok(sld) => {
                        let residual = multiparam::sld_residual(&point, &sld);
                        let rep = OracleReport::new("sld_residual", residual, 0.0, None);
                        rows.push(at(base()).with_report(&rep, tolerance::IDENTITY_ABS, 0.0));
                        let c = |m: &nalgebra::Matrix4<f64>| m.map(|x| oracle::C64::new(x, 0.0));
                        let dense = oracle::sld_dense(
                            &c(&point.state.to_dense()),
                            &c(&point.tangents[tag.index()].to_dense()),
                        );
                        let diff = (dense - c(&sld.to_dense()))
                            .iter()
                            .map(|z| z.norm())
                            .fold(0.0, f64::max);
                        let scale = sld.to_dense().amax().max(1.0);
                        let rep = OracleReport::new("sld[dense]", diff / scale, 0.0, None);
                        rows.push(at(base()).with_report(&rep, 1e-8, 0.0));
                    }
                    Err(e) => rows.push(at(failed(Some(r), "sld".into(), e))),
                }
                match (
                    fisher::qfi_closed_form_at(&point, tag),
                    fisher::qfi_spectral_at(&point, tag),
                ) {
                    (Ok(a), Ok(b)) => {
                        let rep = OracleReport::new("qfi[spectral]", a, b, None);
                        rows.push(at(base()).with_report(
                            &rep,
                            tolerance::IDENTITY_ABS,
                            tolerance::IDENTITY_REL,
                        ));
                    }
                    (Err(e), _) | (_, Err(e)) => rows.push(at(failed(Some(r), "qfi[spectral]".into(), e))),
                }
            }
        }
    }

    // The DM term only shifts quasiparticle energies of the finite chain
    // without changing its ground state, so exact diagonalization is
    // compared at D = 0 only.
    if params.d == 0.0 {
        for &n in &spec.oracle_n {
            rows.extend(ed_rows(spec, params, &table, &finite_rs, n));
        }
    }
    rows
}

fn ed_rows(
    spec: &ScanSpec,
    params: &ChainParams,
    table: &CoefficientTable,
    finite_rs: &[u32],
    n: usize,
) -> Vec<ScanRecord> {
    let guard = spec.cfg.critical_guard;
    let base = || ScanRecord::new(Source::Oracle, params, guard);
    let tol = tolerance::finite_size(n);
    let mut rows = Vec::new();
    let gs = match FiniteChainSpec::new(n, *params).and_then(|s| oracle::ground_state(&s)) {
        Ok(gs) => gs,
        Err(e) => {
            let mut row = base();
            row.quantity = Some(format!("ground state N={n}"));
            row.oracle_n = Some(n);
            row.passed = Some(false);
            row.note::<()>(Err(e));
            return vec![row];
        }
    };
    let degenerate = gs.degenerate;
    let mark = |mut row: ScanRecord| {
        if degenerate {
            row.error = Some("degenerate ground state; symmetric mixture used".into());
        }
        row
    };

    for &r in finite_rs.iter().filter(|&&r| r as usize <= n / 2) {
        let sep = Separation::Finite(r);
        let rho = match gs.reduced_pair(1, r as usize) {
            Ok(rho) => rho,
            Err(e) => {
                let mut row = base().at(Some(sep), None);
                row.note::<()>(Err(e));
                rows.push(row);
                continue;
            }
        };
        let ed = oracle::correlators_from_pair(&rho, r as usize);
        let lib = match correlations::correlations_from_table(table, sep) {
            Ok((set, _)) => set,
            Err(e) => {
                let mut row = base().at(Some(sep), None);
                row.note::<()>(Err(e));
                rows.push(row);
                continue;
            }
        };
        let state = crate::states::XState::from_correlations(&lib);
        let mut comparisons = vec![
            ("sxx", lib.sxx, ed.sxx),
            ("syy", lib.syy, ed.syy),
            ("szz", lib.szz, ed.szz),
            ("a_plus", state.a_plus, rho[(0, 0)].re),
            ("a_minus", state.a_minus, rho[(3, 3)].re),
            ("b_plus", state.b_plus, rho[(1, 2)].re),
            ("b_minus", state.b_minus, rho[(0, 3)].re),
            ("c", state.c, rho[(1, 1)].re),
            ("off_x", 0.0, oracle::off_x_magnitude(&rho)),
        ];
        if r == finite_rs[0] {
            comparisons.insert(0, ("m", lib.m, ed.m));
        }
        for (name, a, b) in comparisons {
            let rep = OracleReport::new(format!("{name}[ed]"), a, b, Some(n));
            let abs_tol = if name == "off_x" { 1e-10 } else { tol };
            rows.push(mark(base().at(Some(sep), None).with_report(&rep, abs_tol, 0.0)));
        }
    }

    // Finite-chain QFI needs four extra ground states per tag; only done at
    // the largest N, r = 1, and for J (γ and D stencils leave the domain or
    // see no D dependence in the finite chain).
    if params.j != 0.0 && n == *spec.oracle_n.iter().max().unwrap_or(&n) && finite_rs.contains(&1) {
        let tag = ParameterTag::J;
        if spec.tags.contains(&tag) && stencil_ok(params, tag, FD_STEP, guard) {
            let lib = PairPoint::from_table(table, Separation::Finite(1))
                .and_then(|p| fisher::qfi_pair_at(&p, tag));
            let ed = FiniteChainSpec::new(n, *params)
                .and_then(|s| oracle::pair_state_derivative(&s, tag, 1, FD_STEP))
                .map(|(rho, drho)| oracle::qfi_dense(&rho, &drho));
            match (lib, ed) {
                (Ok(a), Ok(b)) => {
                    let rep = OracleReport::new("qfi[ed]", a, b, Some(n));
                    rows.push(mark(
                        base().at(Some(Separation::Finite(1)), Some(tag)).with_report(
                            &rep,
                            0.0,
                            tolerance::FINITE_SIZE_QFI_REL,
                        ),
                    ));
                }
                (Err(e), _) | (_, Err(e)) => {
                    let mut row = base().at(Some(Separation::Finite(1)), Some(tag));
                    row.quantity = Some("qfi[ed]".into());
                    row.oracle_n = Some(n);
                    row.passed = Some(false);
                    row.note::<()>(Err(e));
                    rows.push(row);
                }
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub library: String,
    pub version: String,
    pub schema_version: u32,
    pub spec: ScanSpec,
    /// Off by default so repeated runs are byte-identical.
    pub timestamp: Option<String>,
}

impl Metadata {
    pub fn new(spec: &ScanSpec, timestamp: Option<String>) -> Self {
        Metadata {
            library: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            spec: spec.clone(),
            timestamp,
        }
    }
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    metadata: &'a Metadata,
    rows: &'a [ScanRecord],
    summary: &'a Summary,
}

pub fn write_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER).map_err(io)?;
    }
    for r in records {
        w.serialize(r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidConfig(format!("csv output: {e}")))
}

pub fn write_json<W: Write>(output: &ScanOutput, metadata: &Metadata, out: W) -> Result<()> {
    let doc = JsonDocument {
        metadata,
        rows: &output.records,
        summary: &output.summary,
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &doc)
        .map_err(|e| Error::InvalidConfig(format!("json output: {e}")))?;
    out.write_all(b"\n")
        .map_err(|e| Error::InvalidConfig(format!("json output: {e}")))
}

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 29] = [
    "schema_version",
    "source",
    "J",
    "gamma",
    "D",
    "r",
    "tag",
    "qfi",
    "fi",
    "saturation",
    "R_H",
    "R_F",
    "det_qfim",
    "trace_inverse",
    "hjj_fraction",
    "uhlmann_max_abs",
    "commutator_max_abs",
    "quantity",
    "library_value",
    "oracle_value",
    "abs_dev",
    "rel_dev",
    "oracle_n",
    "passed",
    "decay_slope",
    "decay_asymmetry",
    "near_critical",
    "converged",
    "error",
];
