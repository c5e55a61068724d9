//! Reduced density matrices of one and two spins.
//!
//! The two-spin state in the basis `|00⟩, |01⟩, |10⟩, |11⟩` (0 = spin up) is
//!
//! ```text
//!     ⎛ a₊  0   0   b₋ ⎞
//! ρ = ⎜ 0   c   b₊  0  ⎟     a± = (1 ± 2m + S^z)/4,  b± = (S^x ± S^y)/4,
//!     ⎜ 0   b₊  c   0  ⎟     c  = (1 − S^z)/4
//!     ⎝ b₋  0   0   a₋ ⎠
//! ```
//!
//! and is kept as its five scalars. Dense matrices are only built on demand.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, CoefficientTable, QuadratureConfig};
use crate::correlations::{self, CorrelationDerivative, CorrelationSet, Separation};
use crate::error::{Error, Result};

/// Eigenvalues above `−EIGEN_CLAMP` are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Positivity violations beyond this signal an upstream numerical error.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSpinState {
    /// Population of spin up, `(1 + m)/2`.
    pub p: f64,
    pub m: f64,
}

impl SingleSpinState {
    pub fn from_magnetization(m: f64) -> Self {
        SingleSpinState {
            p: 0.5 * (1.0 + m),
            m,
        }
    }
}

pub fn single_spin_state(params: &ChainParams, cfg: &QuadratureConfig) -> Result<SingleSpinState> {
    crate::chain::magnetization(params, cfg).map(SingleSpinState::from_magnetization)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XState {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub c: f64,
    pub r: Separation,
}

/// Parameter derivative of an [`XState`]: same five entries, no trace or
/// positivity constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XStateTangent {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub c: f64,
}

fn x_matrix(a_plus: f64, a_minus: f64, b_plus: f64, b_minus: f64, c: f64) -> Matrix4<f64> {
    Matrix4::new(
        a_plus, 0.0, 0.0, b_minus, //
        0.0, c, b_plus, 0.0, //
        0.0, b_plus, c, 0.0, //
        b_minus, 0.0, 0.0, a_minus,
    )
}

impl XState {
    /// Builds the state without checking positivity.
    pub fn from_correlations(set: &CorrelationSet) -> Self {
        XState {
            a_plus: 0.25 * (1.0 + 2.0 * set.m + set.szz),
            a_minus: 0.25 * (1.0 - 2.0 * set.m + set.szz),
            b_plus: 0.25 * (set.sxx + set.syy),
            b_minus: 0.25 * (set.sxx - set.syy),
            c: 0.25 * (1.0 - set.szz),
            r: set.r,
        }
    }

    pub fn tangent(d: &CorrelationDerivative) -> XStateTangent {
        XStateTangent {
            a_plus: 0.25 * (2.0 * d.m + d.szz),
            a_minus: 0.25 * (-2.0 * d.m + d.szz),
            b_plus: 0.25 * (d.sxx + d.syy),
            b_minus: 0.25 * (d.sxx - d.syy),
            c: -0.25 * d.szz,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a_plus + self.a_minus + 2.0 * self.c
    }

    pub fn is_diagonal(&self) -> bool {
        self.b_plus == 0.0 && self.b_minus == 0.0
    }

    /// PSD conditions of the two 2×2 blocks, with slack `tol`.
    pub fn check_positivity(&self, tol: f64) -> Result<()> {
        let checks = [
            ("a+ >= 0", self.a_plus),
            ("a- >= 0", self.a_minus),
            ("c >= 0", self.c),
            (
                "a+ a- >= b-^2",
                self.a_plus * self.a_minus - self.b_minus * self.b_minus,
            ),
            ("c >= |b+|", self.c - self.b_plus.abs()),
        ];
        for (name, value) in checks {
            if value < -tol {
                return Err(Error::PositivityViolation(format!(
                    "{name} fails by {:e} at r = {}",
                    -value, self.r
                )));
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Matrix4<f64> {
        x_matrix(self.a_plus, self.a_minus, self.b_plus, self.b_minus, self.c)
    }
}

impl XStateTangent {
    pub fn to_dense(&self) -> Matrix4<f64> {
        x_matrix(self.a_plus, self.a_minus, self.b_plus, self.b_minus, self.c)
    }
}

/// A two-spin state together with its derivatives along `(J, γ, D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub params: ChainParams,
    pub correlations: CorrelationSet,
    pub state: XState,
    pub tangents: [XStateTangent; 3],
    pub magnetization_grad: [f64; 3],
}

impl PairPoint {
    pub fn from_table(table: &CoefficientTable, r: Separation) -> Result<Self> {
        let (set, grads) = correlations::correlations_from_table(table, r)?;
        let state = XState::from_correlations(&set);
        state.check_positivity(POSITIVITY_TOL)?;
        Ok(PairPoint {
            params: table.params,
            correlations: set,
            state,
            tangents: grads.map(|g| XState::tangent(&g)),
            magnetization_grad: table.magnetization.grad,
        })
    }

    pub fn compute(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<Self> {
        let table = CoefficientTable::compute(params, r.as_finite().unwrap_or(0), cfg)?;
        Self::from_table(&table, r)
    }
}

/// Two-spin reduced density matrix at separation `r`.
pub fn pair_state(params: &ChainParams, r: Separation, cfg: &QuadratureConfig) -> Result<XState> {
    let set = correlations::correlation_set(params, r, cfg)?;
    let state = XState::from_correlations(&set);
    state.check_positivity(POSITIVITY_TOL)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vector4<f64>,
}

/// Closed-form spectrum of the outer `(a₊, a₋, b₋)` and inner `(c, c, b₊)`
/// blocks, sorted by descending eigenvalue.
pub fn xstate_eigensystem(state: &XState) -> [Eigenpair; 4] {
    let clamp = |v: f64| if v < 0.0 && v > -EIGEN_CLAMP { 0.0 } else { v };

    let mean = 0.5 * (state.a_plus + state.a_minus);
    let half_diff = 0.5 * (state.a_plus - state.a_minus);
    let radius = half_diff.hypot(state.b_minus);
    let theta = 0.5 * state.b_minus.atan2(half_diff);
    let (s, c) = theta.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;

    let mut pairs = [
        Eigenpair {
            value: clamp(mean + radius),
            vector: Vector4::new(c, 0.0, 0.0, s),
        },
        Eigenpair {
            value: clamp(mean - radius),
            vector: Vector4::new(-s, 0.0, 0.0, c),
        },
        Eigenpair {
            value: clamp(state.c + state.b_plus),
            vector: Vector4::new(0.0, h, h, 0.0),
        },
        Eigenpair {
            value: clamp(state.c - state.b_plus),
            vector: Vector4::new(0.0, h, -h, 0.0),
        },
    ];
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    pairs
}

/// Minkowski-form coefficients `a_α`, `b_α` of the two blocks, with
/// `η = diag(1, −1, −1, −1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiCoefficients {
    pub a: [f64; 4],
    pub b: [f64; 4],
}

impl MinkowskiCoefficients {
    pub const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

    pub fn from_correlations(set: &CorrelationSet) -> Self {
        MinkowskiCoefficients {
            a: [0.5 * (1.0 + set.szz), 0.5 * (set.sxx - set.syy), 0.0, set.m],
            b: [0.5 * (1.0 - set.szz), 0.5 * (set.sxx + set.syy), 0.0, 0.0],
        }
    }

    pub fn from_derivative(d: &CorrelationDerivative) -> Self {
        MinkowskiCoefficients {
            a: [0.5 * d.szz, 0.5 * (d.sxx - d.syy), 0.0, d.m],
            b: [-0.5 * d.szz, 0.5 * (d.sxx + d.syy), 0.0, 0.0],
        }
    }

    /// `Σ_jk η_jk x_j y_k`.
    pub fn eta(x: &[f64; 4], y: &[f64; 4]) -> f64 {
        (0..4).map(|i| Self::ETA[i] * x[i] * y[i]).sum()
    }

    /// `ρ = ½ Σ_α a_α η_α + ½ Σ_α b_α η̃_α`. The `α = 2` operators are
    /// imaginary; their coefficients vanish for this model and are ignored.
    pub fn to_dense(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        // η_0, η_3 on |00⟩,|11⟩; η_1 couples them.
        m[(0, 0)] = 0.5 * (self.a[0] + self.a[3]);
        m[(3, 3)] = 0.5 * (self.a[0] - self.a[3]);
        m[(0, 3)] = 0.5 * self.a[1];
        m[(3, 0)] = 0.5 * self.a[1];
        // η̃ on |01⟩,|10⟩.
        m[(1, 1)] = 0.5 * (self.b[0] + self.b[3]);
        m[(2, 2)] = 0.5 * (self.b[0] - self.b[3]);
        m[(1, 2)] = 0.5 * self.b[1];
        m[(2, 1)] = 0.5 * self.b[1];
        m
    }
}

pub fn minkowski_coefficients(
    params: &ChainParams,
    r: Separation,
    cfg: &QuadratureConfig,
) -> Result<MinkowskiCoefficients> {
    correlations::correlation_set(params, r, cfg).map(|s| MinkowskiCoefficients::from_correlations(&s))
}
