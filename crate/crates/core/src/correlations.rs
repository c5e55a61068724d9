//! Spin–spin correlators from Toeplitz determinants of `G_k`.
//!
//! ```text
//! S^x_r = det[G_{j−i−1}]_{i,j<r}     first row G_{−1} … G_{−r}
//! S^y_r = det[G_{i−j+1}]_{i,j<r}     first row G_1 … G_{−r+2}
//! S^z_r = m² − G_r G_{−r}
//! ```
//!
//! The infinite-separation branch is `S^x = S^y = 0`, `S^z = m²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, CoefficientTable, ParameterTag, QuadratureConfig};
use crate::error::{Error, Result};

/// Largest finite separation scanned by default.
pub const DEFAULT_MAX_SEPARATION: u32 = 6;

/// Below this `|det M|` the Jacobi formula is replaced by row replacement.
const JACOBI_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Separation {
    Finite(u32),
    Infinite,
}

impl Separation {
    pub fn finite(r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidSeparation("r must be >= 1".into()));
        }
        Ok(Separation::Finite(r))
    }

    /// `1..=r_max` followed by `Infinite`.
    pub fn standard_set(r_max: u32) -> Vec<Separation> {
        (1..=r_max)
            .map(Separation::Finite)
            .chain(std::iter::once(Separation::Infinite))
            .collect()
    }

    pub fn as_finite(&self) -> Option<u32> {
        match self {
            Separation::Finite(r) => Some(*r),
            Separation::Infinite => None,
        }
    }

    fn require_valid(&self) -> Result<()> {
        match self {
            Separation::Finite(0) => Err(Error::InvalidSeparation("r must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Separation::Finite(r) => write!(f, "{r}"),
            Separation::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Separation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinite" | "∞" => Ok(Separation::Infinite),
            other => other
                .parse::<u32>()
                .map_err(|_| Error::InvalidSeparation(format!("cannot parse {other:?}")))
                .and_then(Separation::finite),
        }
    }
}

impl Serialize for Separation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Separation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub r: Separation,
    pub m: f64,
    pub sxx: f64,
    pub syy: f64,
    pub szz: f64,
}

/// Derivatives of one [`CorrelationSet`] with respect to a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationDerivative {
    pub m: f64,
    pub sxx: f64,
    pub syy: f64,
    pub szz: f64,
}

fn sx_matrix(table: &CoefficientTable, r: usize, grad: Option<usize>) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |i, j| {
        let g = table.g(j as i32 - i as i32 - 1);
        grad.map_or(g.value, |t| g.grad[t])
    })
}

fn sy_matrix(table: &CoefficientTable, r: usize, grad: Option<usize>) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |i, j| {
        let g = table.g(i as i32 - j as i32 + 1);
        grad.map_or(g.value, |t| g.grad[t])
    })
}

/// Determinant by LU with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// `d det(M)` along `dm`: Jacobi's formula when `M` is comfortably
/// invertible, otherwise the sum of determinants with one row replaced.
pub fn determinant_derivative(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    let det = lu.determinant();
    if det.abs() >= JACOBI_FLOOR {
        if let Some(x) = lu.solve(dm) {
            return det * x.trace();
        }
    }
    row_replacement_derivative(m, dm)
}

pub fn row_replacement_derivative(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| {
            let mut a = m.clone();
            a.set_row(i, &dm.row(i));
            determinant(&a)
        })
        .sum()
}

/// Correlators and their gradients at one separation, from a precomputed
/// coefficient table.
pub fn correlations_from_table(
    table: &CoefficientTable,
    r: Separation,
) -> Result<(CorrelationSet, [CorrelationDerivative; 3])> {
    r.require_valid()?;
    let m = table.magnetization;
    match r {
        Separation::Infinite => {
            let set = CorrelationSet {
                r,
                m: m.value,
                sxx: 0.0,
                syy: 0.0,
                szz: m.value * m.value,
            };
            let grads = ParameterTag::ALL.map(|t| CorrelationDerivative {
                m: m.d(t),
                sxx: 0.0,
                syy: 0.0,
                szz: 2.0 * m.value * m.d(t),
            });
            Ok((set, grads))
        }
        Separation::Finite(rr) => {
            if rr > table.max_k {
                return Err(Error::InvalidSeparation(format!(
                    "r = {rr} exceeds coefficient table range {}",
                    table.max_k
                )));
            }
            let n = rr as usize;
            let mx = sx_matrix(table, n, None);
            let my = sy_matrix(table, n, None);
            let gp = table.g(rr as i32);
            let gm = table.g(-(rr as i32));
            let set = CorrelationSet {
                r,
                m: m.value,
                sxx: determinant(&mx),
                syy: determinant(&my),
                szz: m.value * m.value - gp.value * gm.value,
            };
            let grads = ParameterTag::ALL.map(|t| {
                let i = t.index();
                CorrelationDerivative {
                    m: m.grad[i],
                    sxx: determinant_derivative(&mx, &sx_matrix(table, n, Some(i))),
                    syy: determinant_derivative(&my, &sy_matrix(table, n, Some(i))),
                    szz: 2.0 * m.value * m.grad[i] - gp.grad[i] * gm.value - gp.value * gm.grad[i],
                }
            });
            Ok((set, grads))
        }
    }
}

fn table_for(params: &ChainParams, r: u32, cfg: &QuadratureConfig) -> Result<CoefficientTable> {
    if r == 0 {
        return Err(Error::InvalidSeparation("r must be >= 1".into()));
    }
    CoefficientTable::compute(params, r, cfg)
}

pub fn toeplitz_sx(params: &ChainParams, r: u32, cfg: &QuadratureConfig) -> Result<f64> {
    let table = table_for(params, r, cfg)?;
    Ok(determinant(&sx_matrix(&table, r as usize, None)))
}

pub fn toeplitz_sy(params: &ChainParams, r: u32, cfg: &QuadratureConfig) -> Result<f64> {
    let table = table_for(params, r, cfg)?;
    Ok(determinant(&sy_matrix(&table, r as usize, None)))
}

pub fn s_z(params: &ChainParams, r: u32, cfg: &QuadratureConfig) -> Result<f64> {
    let table = table_for(params, r, cfg)?;
    let m = table.magnetization.value;
    Ok(m * m - table.g(r as i32).value * table.g(-(r as i32)).value)
}

pub fn correlation_set(
    params: &ChainParams,
    r: Separation,
    cfg: &QuadratureConfig,
) -> Result<CorrelationSet> {
    let table = CoefficientTable::compute(params, r.as_finite().unwrap_or(0), cfg)?;
    correlations_from_table(&table, r).map(|(set, _)| set)
}

pub fn correlation_partials(
    params: &ChainParams,
    r: Separation,
    wrt: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<CorrelationDerivative> {
    let table = CoefficientTable::compute(params, r.as_finite().unwrap_or(0), cfg)?;
    correlations_from_table(&table, r).map(|(_, grads)| grads[wrt.index()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares slope of `log|G_r|` against `log r`.
    pub slope: f64,
    /// `max |G_r + G_{−r}| / |G_r|` over the sampled separations.
    pub max_asymmetry: f64,
    pub samples: Vec<(u32, f64, f64)>,
}

/// Fits the power-law decay of `G_r` over `r_list`.
///
/// Values at or below `max(1e-14, abs_tol)` are not resolved by the
/// quadrature and make the fit degenerate.
pub fn asymptotic_decay_check(
    params: &ChainParams,
    r_list: &[u32],
    cfg: &QuadratureConfig,
) -> Result<DecayFit> {
    if r_list.len() < 4 {
        return Err(Error::InvalidSeparation(format!(
            "decay fit needs at least 4 separations, got {}",
            r_list.len()
        )));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) || r_list[0] < 8 {
        return Err(Error::InvalidSeparation(
            "decay fit separations must be increasing and >= 8".into(),
        ));
    }
    let floor = cfg.abs_tol.max(1e-14);
    let mut samples = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let gp = crate::chain::g_coefficient(params, r as i32, cfg)?;
        let gm = crate::chain::g_coefficient(params, -(r as i32), cfg)?;
        if gp.abs() <= floor {
            return Err(Error::DegenerateFit {
                r: r as i32,
                value: gp,
            });
        }
        samples.push((r, gp, gm));
    }
    let xs: Vec<f64> = samples.iter().map(|s| (s.0 as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let max_asymmetry = samples
        .iter()
        .map(|(_, gp, gm)| (gp + gm).abs() / gp.abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        slope: sxy / sxx,
        max_asymmetry,
        samples,
    })
}
