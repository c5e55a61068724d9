//! Joint estimation of `(J, γ, D)`: SLDs of the X state, the 3×3 QFI
//! matrix, the scalar bound `Tr[H⁻¹]` and the Uhlmann matrix.
//!
//! Each 2×2 block of the X state is written as `ρ = ½(ω₀ 𝟙 + ω₁ σ^x + ω₃ σ^z)`
//! and its SLD as `𝓛 = f₀ 𝟙 + f₁ σ^x + f₂ σ^y + f₃ σ^z`, with
//!
//! ```text
//! f₀ = (ω₀ ∂ω₀ − Σᵢ ωᵢ ∂ωᵢ) / (ω₀² − Σᵢ ωᵢ²),    fᵢ = (∂ωᵢ − f₀ ωᵢ) / ω₀.
//! ```

use nalgebra::{Complex, Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, CoefficientTable, ParameterTag, QuadratureConfig};
use crate::correlations::Separation;
use crate::error::{Error, Result};
use crate::states::{PairPoint, XState, XStateTangent};

pub const BLOCK_FLOOR: f64 = 1e-12;
/// `det H > INVERTIBILITY_SCALE · (Tr H / 3)³` is required to invert.
pub const INVERTIBILITY_SCALE: f64 = 1e-12;

pub type C64 = Complex<f64>;

/// SLD coefficients of the outer (`f`) and inner (`f̃`) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SldXState {
    pub f: [f64; 4],
    pub f_tilde: [f64; 4],
    pub tag: ParameterTag,
}

/// `(ω, ω̃)` of a state or tangent given by its five X entries.
fn omegas(a_plus: f64, a_minus: f64, b_plus: f64, b_minus: f64, c: f64) -> ([f64; 4], [f64; 4]) {
    (
        [a_plus + a_minus, 2.0 * b_minus, 0.0, a_plus - a_minus],
        [2.0 * c, 2.0 * b_plus, 0.0, 0.0],
    )
}

fn state_omegas(s: &XState) -> ([f64; 4], [f64; 4]) {
    omegas(s.a_plus, s.a_minus, s.b_plus, s.b_minus, s.c)
}

fn tangent_omegas(t: &XStateTangent) -> ([f64; 4], [f64; 4]) {
    omegas(t.a_plus, t.a_minus, t.b_plus, t.b_minus, t.c)
}

fn block_sld(w: &[f64; 4], dw: &[f64; 4], block: &'static str) -> Result<[f64; 4]> {
    let denom = w[0] * w[0] - (w[1] * w[1] + w[2] * w[2] + w[3] * w[3]);
    if denom <= BLOCK_FLOOR || w[0] <= BLOCK_FLOOR {
        return Err(Error::DegenerateBlock { block, value: denom });
    }
    let f0 = (w[0] * dw[0] - (w[1] * dw[1] + w[2] * dw[2] + w[3] * dw[3])) / denom;
    Ok([
        f0,
        (dw[1] - f0 * w[1]) / w[0],
        (dw[2] - f0 * w[2]) / w[0],
        (dw[3] - f0 * w[3]) / w[0],
    ])
}

impl SldXState {
    /// Dense operator in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn to_dense(&self) -> Matrix4<f64> {
        let (f, g) = (&self.f, &self.f_tilde);
        Matrix4::new(
            f[0] + f[3],
            0.0,
            0.0,
            f[1], //
            0.0,
            g[0] + g[3],
            g[1],
            0.0, //
            0.0,
            g[1],
            g[0] - g[3],
            0.0, //
            f[1],
            0.0,
            0.0,
            f[0] - f[3],
        )
    }
}

pub fn sld_at(point: &PairPoint, tag: ParameterTag) -> Result<SldXState> {
    let (w, wt) = state_omegas(&point.state);
    let (dw, dwt) = tangent_omegas(&point.tangents[tag.index()]);
    Ok(SldXState {
        f: block_sld(&w, &dw, "outer")?,
        f_tilde: block_sld(&wt, &dwt, "inner")?,
        tag,
    })
}

pub fn sld_xstate(
    params: &ChainParams,
    r: Separation,
    tag: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<SldXState> {
    sld_at(&PairPoint::compute(params, r, cfg)?, tag)
}

/// `max |∂ρ − ½{𝓛, ρ}|`.
pub fn sld_residual(point: &PairPoint, sld: &SldXState) -> f64 {
    let rho = point.state.to_dense();
    let l = sld.to_dense();
    let drho = point.tangents[sld.tag.index()].to_dense();
    (drho - 0.5 * (l * rho + rho * l)).amax()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    /// Row-major over `(J, γ, D)`.
    pub entries: [[f64; 3]; 3],
    pub det: f64,
    pub trace: f64,
    /// `Tr[H⁻¹]`, present only when the matrix is invertible.
    pub trace_inverse: Option<f64>,
    /// `H_JJ / Tr H`, absent when the trace vanishes.
    pub hjj_fraction: Option<f64>,
    /// Ascending.
    pub eigenvalues: [f64; 3],
}

impl FisherMatrix {
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let sym = 0.5 * (m + m.transpose());
        let det = sym.determinant();
        let trace = sym.trace();
        let invertible = det > invertibility_threshold(trace);
        let trace_inverse = if invertible {
            sym.try_inverse().map(|inv| inv.trace())
        } else {
            None
        };
        let mut eigenvalues: [f64; 3] = SymmetricEigen::new(sym).eigenvalues.into();
        eigenvalues.sort_by(f64::total_cmp);
        let mut entries = [[0.0; 3]; 3];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = sym[(i, j)];
            }
        }
        FisherMatrix {
            entries,
            det,
            trace,
            trace_inverse,
            hjj_fraction: (trace > 0.0).then(|| sym[(0, 0)] / trace),
            eigenvalues,
        }
    }

    pub fn get(&self, mu: ParameterTag, nu: ParameterTag) -> f64 {
        self.entries[mu.index()][nu.index()]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j])
    }

    pub fn is_invertible(&self) -> bool {
        self.trace_inverse.is_some()
    }

    pub fn scalar_bound(&self) -> ScalarBound {
        match self.trace_inverse {
            Some(v) => ScalarBound::Defined(v),
            None => ScalarBound::Undefined { det: self.det },
        }
    }
}

pub fn invertibility_threshold(trace: f64) -> f64 {
    INVERTIBILITY_SCALE * (trace / 3.0).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalarBound {
    Defined(f64),
    Undefined { det: f64 },
}

impl ScalarBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            ScalarBound::Defined(v) => Some(*v),
            ScalarBound::Undefined { .. } => None,
        }
    }
}

/// QFIM of the pair state and the three SLDs it was built from.
pub fn qfim_at(point: &PairPoint) -> Result<(FisherMatrix, [SldXState; 3])> {
    point.params.require_coupling()?;
    let slds = [
        sld_at(point, ParameterTag::J)?,
        sld_at(point, ParameterTag::Gamma)?,
        sld_at(point, ParameterTag::D)?,
    ];
    let rho = point.state.to_dense();
    let dense = slds.map(|s| s.to_dense());
    let h = Matrix3::from_fn(|mu, nu| {
        let anti = dense[mu] * dense[nu] + dense[nu] * dense[mu];
        0.5 * (rho * anti).trace()
    });
    Ok((FisherMatrix::from_matrix(&h), slds))
}

pub fn qfim_pair(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<FisherMatrix> {
    qfim_at(&PairPoint::compute(params, r, cfg)?).map(|(h, _)| h)
}

/// Rank-one single-spin QFIM `∂_μ m ∂_ν m / (1 − m²)`.
pub fn qfim_single(params: &ChainParams, cfg: &QuadratureConfig) -> Result<FisherMatrix> {
    params.require_coupling()?;
    let table = CoefficientTable::compute(params, 0, cfg)?;
    let m = table.magnetization.value;
    let one_minus_m2 = 1.0 - m * m;
    if one_minus_m2 < BLOCK_FLOOR {
        return Err(Error::PureStateDegeneracy { one_minus_m2 });
    }
    let g = table.magnetization.grad;
    Ok(FisherMatrix::from_matrix(&Matrix3::from_fn(|i, j| {
        g[i] * g[j] / one_minus_m2
    })))
}

pub fn scalar_bound(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<ScalarBound> {
    qfim_pair(params, r, cfg).map(|h| h.scalar_bound())
}

pub fn hjj_fraction(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<f64> {
    qfim_pair(params, r, cfg)?.hjj_fraction.ok_or(Error::ZeroTrace)
}

/// Uhlmann matrix `U_μν = Tr[ρ(𝓛_μ𝓛_ν − 𝓛_ν𝓛_μ)/2]`.
///
/// For Hermitian `ρ` and SLDs every entry is purely imaginary, so
/// `entries` holds imaginary parts. `max_abs` is the largest modulus,
/// real rounding included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UhlmannMatrix {
    pub entries: [[f64; 3]; 3],
    pub max_abs: f64,
}

/// `Tr[ρ [A, B]]` for every ordered pair.
pub fn commutator_traces(rho: &Matrix4<C64>, slds: &[Matrix4<C64>; 3]) -> [[C64; 3]; 3] {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for mu in 0..3 {
        for nu in 0..3 {
            if mu != nu {
                let comm = slds[mu] * slds[nu] - slds[nu] * slds[mu];
                out[mu][nu] = (rho * comm).trace();
            }
        }
    }
    out
}

pub fn uhlmann_from_dense(rho: &Matrix4<C64>, slds: &[Matrix4<C64>; 3]) -> UhlmannMatrix {
    let traces = commutator_traces(rho, slds);
    let mut entries = [[0.0; 3]; 3];
    let mut max_abs = 0.0_f64;
    for mu in 0..3 {
        for nu in 0..3 {
            let u = 0.5 * traces[mu][nu];
            entries[mu][nu] = u.im;
            max_abs = max_abs.max(u.norm());
        }
    }
    UhlmannMatrix { entries, max_abs }
}

fn complexify(m: &Matrix4<f64>) -> Matrix4<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub fn uhlmann_at(point: &PairPoint, slds: &[SldXState; 3]) -> UhlmannMatrix {
    let rho = complexify(&point.state.to_dense());
    uhlmann_from_dense(&rho, &slds.map(|s| complexify(&s.to_dense())))
}

/// `max_{μν} |Tr[ρ [𝓛_μ, 𝓛_ν]]|`.
pub fn max_commutator_trace(point: &PairPoint, slds: &[SldXState; 3]) -> f64 {
    let rho = complexify(&point.state.to_dense());
    commutator_traces(&rho, &slds.map(|s| complexify(&s.to_dense())))
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn uhlmann_matrix(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<UhlmannMatrix> {
    let point = PairPoint::compute(params, r, cfg)?;
    let (_, slds) = qfim_at(&point)?;
    Ok(uhlmann_at(&point, &slds))
}
