//! Single-parameter Fisher information for the one- and two-spin states.
//!
//! Every `*_at` function works on a precomputed [`PairPoint`] so that a scan
//! can evaluate all separations and tags from one coefficient table.

use serde::{Deserialize, Serialize};

use crate::chain::{self, ChainParams, CoefficientTable, ParameterTag, QuadratureConfig};
use crate::correlations::{CorrelationDerivative, Separation};
use crate::error::{Error, Result};
use crate::states::{xstate_eigensystem, MinkowskiCoefficients, PairPoint};

/// Smallest admissible probability, block weight or denominator.
pub const DEGENERACY_FLOOR: f64 = 1e-12;
/// Slack allowed on `F ≤ H` before it counts as a violation.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherScalars {
    pub qfi: f64,
    pub fi: f64,
    pub saturation: f64,
    pub r: Separation,
    pub tag: ParameterTag,
    pub near_critical: bool,
}

fn single_from_grad(m: f64, dm: f64) -> Result<f64> {
    let one_minus_m2 = 1.0 - m * m;
    if one_minus_m2 < DEGENERACY_FLOOR {
        return Err(Error::PureStateDegeneracy { one_minus_m2 });
    }
    Ok(dm * dm / one_minus_m2)
}

/// `H(λ) = (∂_λ m)² / (1 − m²)` for one spin.
pub fn qfi_single(params: &ChainParams, tag: ParameterTag, cfg: &QuadratureConfig) -> Result<f64> {
    params.require_coupling()?;
    qfi_single_from_table(&CoefficientTable::compute(params, 0, cfg)?, tag)
}

/// Magnetization-measurement FI of one spin. The state is diagonal, so this
/// coincides with [`qfi_single`].
pub fn fi_single(params: &ChainParams, tag: ParameterTag, cfg: &QuadratureConfig) -> Result<f64> {
    qfi_single(params, tag, cfg)
}

pub fn qfi_single_from_table(table: &CoefficientTable, tag: ParameterTag) -> Result<f64> {
    table.params.require_coupling()?;
    single_from_grad(table.magnetization.value, table.magnetization.d(tag))
}

pub fn qfi_single_at(point: &PairPoint, tag: ParameterTag) -> Result<f64> {
    single_from_grad(point.correlations.m, point.magnetization_grad[tag.index()])
}

fn block_term(x: &[f64; 4], dx: &[f64; 4], name: &'static str) -> Result<f64> {
    if x[0] <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateDenominator {
            term: name,
            value: x[0],
        });
    }
    let norm = MinkowskiCoefficients::eta(x, x);
    if norm <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateDenominator {
            term: if name == "a0" { "eta(a, a)" } else { "eta(b, b)" },
            value: norm,
        });
    }
    let cross = MinkowskiCoefficients::eta(x, dx);
    let tangent = MinkowskiCoefficients::eta(dx, dx);
    Ok((cross * cross / norm - tangent) / x[0] + dx[0] * dx[0] / x[0])
}

fn derivative_of(point: &PairPoint, tag: ParameterTag) -> CorrelationDerivative {
    let t = &point.tangents[tag.index()];
    // Invert the linear map from correlators to the X-state entries.
    CorrelationDerivative {
        m: t.a_plus - t.a_minus,
        sxx: 2.0 * (t.b_plus + t.b_minus),
        syy: 2.0 * (t.b_plus - t.b_minus),
        szz: -4.0 * t.c,
    }
}

/// Two-spin QFI from the Minkowski-form closed expression.
pub fn qfi_closed_form_at(point: &PairPoint, tag: ParameterTag) -> Result<f64> {
    point.params.require_coupling()?;
    let x = MinkowskiCoefficients::from_correlations(&point.correlations);
    let dx = MinkowskiCoefficients::from_derivative(&derivative_of(point, tag));
    Ok(block_term(&x.a, &dx.a, "a0")? + block_term(&x.b, &dx.b, "b0")?)
}

/// Two-spin QFI `Σ_ij 2|⟨i|∂ρ|j⟩|²/(p_i + p_j)` over the eigenbasis of `ρ`.
pub fn qfi_spectral_at(point: &PairPoint, tag: ParameterTag) -> Result<f64> {
    point.params.require_coupling()?;
    let pairs = xstate_eigensystem(&point.state);
    let drho = point.tangents[tag.index()].to_dense();
    let mut h = 0.0;
    for ei in &pairs {
        let dv = drho * ei.vector;
        for ej in &pairs {
            let denom = ei.value + ej.value;
            if denom > DEGENERACY_FLOOR {
                let elem = ej.vector.dot(&dv);
                h += 2.0 * elem * elem / denom;
            }
        }
    }
    Ok(h)
}

/// Closed form, falling back to the spectral sum when a block is pure.
pub fn qfi_pair_at(point: &PairPoint, tag: ParameterTag) -> Result<f64> {
    match qfi_closed_form_at(point, tag) {
        Err(Error::DegenerateDenominator { .. }) => qfi_spectral_at(point, tag),
        other => other,
    }
}

/// Classical FI of the joint `σ^z σ^z` measurement on two spins.
pub fn fi_magnetization_at(point: &PairPoint, tag: ParameterTag) -> Result<f64> {
    point.params.require_coupling()?;
    let s = &point.state;
    let t = &point.tangents[tag.index()];
    let outcomes = [
        ("up-up", s.a_plus, t.a_plus, 1.0),
        ("up-down", s.c, t.c, 2.0),
        ("down-down", s.a_minus, t.a_minus, 1.0),
    ];
    let mut f = 0.0;
    for (outcome, p, dp, mult) in outcomes {
        if p < DEGENERACY_FLOOR {
            return Err(Error::DegenerateOutcome {
                outcome,
                probability: p,
            });
        }
        f += mult * dp * dp / p;
    }
    Ok(f)
}

/// `F/H`. Ratios marginally above one are clamped; anything beyond the
/// slack is reported as a bound violation.
pub fn saturation_ratio(fi: f64, qfi: f64, tag: ParameterTag) -> Result<f64> {
    if qfi <= 0.0 {
        return Err(Error::ZeroQfi { tag });
    }
    if fi > qfi + BOUND_SLACK * qfi.max(1.0) {
        return Err(Error::BoundViolation { fi, qfi });
    }
    Ok((fi / qfi).min(1.0))
}

pub fn scalars_at(point: &PairPoint, tag: ParameterTag, guard: f64) -> Result<FisherScalars> {
    let qfi = qfi_pair_at(point, tag)?;
    let fi = fi_magnetization_at(point, tag)?;
    Ok(FisherScalars {
        qfi,
        fi,
        saturation: saturation_ratio(fi, qfi, tag)?,
        r: point.state.r,
        tag,
        near_critical: point.params.is_near_critical(guard),
    })
}

fn point(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<PairPoint> {
    params.require_coupling()?;
    PairPoint::compute(params, r, cfg)
}

pub fn qfi_pair_closed_form(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    qfi_closed_form_at(&point(params, r, cfg)?, tag)
}

pub fn qfi_pair_spectral(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    qfi_spectral_at(&point(params, r, cfg)?, tag)
}

pub fn qfi_pair(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    qfi_pair_at(&point(params, r, cfg)?, tag)
}

pub fn fi_pair_magnetization(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    fi_magnetization_at(&point(params, r, cfg)?, tag)
}

pub fn saturation(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    scalars_at(&point(params, r, cfg)?, tag, cfg.critical_guard).map(|s| s.saturation)
}

/// `(R_H, R_F)`: the two-spin QFI and FI at `r` relative to their
/// infinite-separation values.
pub fn distance_ratios(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    params.require_coupling()?;
    let table = CoefficientTable::compute(params, r.as_finite().unwrap_or(0), cfg)?;
    let at = PairPoint::from_table(&table, r)?;
    let inf = PairPoint::from_table(&table, Separation::Infinite)?;
    ratios_at(&at, &inf, tag)
}

pub fn ratios_at(at: &PairPoint, inf: &PairPoint, tag: ParameterTag) -> Result<(f64, f64)> {
    let h_inf = qfi_pair_at(inf, tag)?;
    let f_inf = fi_magnetization_at(inf, tag)?;
    if h_inf <= 0.0 || f_inf <= 0.0 {
        return Err(Error::ZeroQfi { tag });
    }
    Ok((
        qfi_pair_at(at, tag)? / h_inf,
        fi_magnetization_at(at, tag)? / f_inf,
    ))
}

/// Single-spin QFI with the magnetization gradient taken from `chain`.
/// Used by heat-map scans that never need a pair state.
pub fn qfi_single_direct(params: &ChainParams, tag: ParameterTag, cfg: &QuadratureConfig) -> Result<f64> {
    params.require_coupling()?;
    let m = chain::magnetization(params, cfg)?;
    let dm = chain::magnetization_partial(params, tag, cfg)?;
    single_from_grad(m, dm)
}
