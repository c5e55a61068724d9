//! Parameter space of the chain and the two fundamental integrals.
//!
//! With `a(φ) = J(cos φ − 2D sin φ) − 1`, `b(φ) = Jγ sin φ` and
//! `Δ = sqrt(a² + b²)`:
//!
//! ```text
//! m   = −(1/π) ∫₀^π a/Δ dφ
//! G_k =  (1/π) ∫₀^π [−cos(kφ) a + sin(kφ) b] / Δ dφ
//! ```
//!
//! # Normalization of `G_k`
//!
//! `G_k` here carries no overall factor 2, so `G_0 = m`. Exact
//! diagonalization of periodic chains (see [`crate::oracle`]) confirms this
//! convention: `S^x_1 = G_{−1}`, `S^y_1 = G_1` and
//! `S^z_r = m² − G_r G_{−r}` all match the finite-chain ground state,
//! whereas doubling every `G_k` produces correlators larger than one and
//! two-spin states that are not positive.
//!
//! Parameter derivatives are taken under the integral sign:
//! `∂(a/Δ) = b(b∂a − a∂b)/Δ³` and `∂(b/Δ) = a(a∂b − b∂a)/Δ³`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// The three Hamiltonian parameters, always ordered `(J, γ, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParameterTag {
    J,
    Gamma,
    D,
}

impl ParameterTag {
    pub const ALL: [ParameterTag; 3] = [ParameterTag::J, ParameterTag::Gamma, ParameterTag::D];

    pub fn index(self) -> usize {
        match self {
            ParameterTag::J => 0,
            ParameterTag::Gamma => 1,
            ParameterTag::D => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParameterTag::J => "J",
            ParameterTag::Gamma => "gamma",
            ParameterTag::D => "D",
        }
    }
}

impl fmt::Display for ParameterTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParameterTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "J" | "j" => Ok(ParameterTag::J),
            "gamma" | "Gamma" | "g" => Ok(ParameterTag::Gamma),
            "D" | "d" => Ok(ParameterTag::D),
            other => Err(Error::InvalidParams(format!("unknown parameter tag {other:?}"))),
        }
    }
}

/// Dimensionless Hamiltonian parameters: coupling `J` (in units of the
/// field), anisotropy `γ ∈ [−1, 1]` and DM factor `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub j: f64,
    pub gamma: f64,
    pub d: f64,
}

impl ChainParams {
    pub fn new(j: f64, gamma: f64, d: f64) -> Result<Self> {
        let p = ChainParams { j, gamma, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j.is_finite() && self.gamma.is_finite() && self.d.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameters {self:?}")));
        }
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParams(format!(
                "gamma = {} outside [-1, 1]",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Fisher-level operations are defined only away from `J = 0`.
    pub fn require_coupling(&self) -> Result<()> {
        self.validate()?;
        if self.j == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        Ok(())
    }

    pub fn get(&self, tag: ParameterTag) -> f64 {
        match tag {
            ParameterTag::J => self.j,
            ParameterTag::Gamma => self.gamma,
            ParameterTag::D => self.d,
        }
    }

    /// Copy with one parameter replaced. Not validated: finite-difference
    /// stencils legitimately step just outside `γ ∈ [−1, 1]`.
    pub fn with(&self, tag: ParameterTag, value: f64) -> Self {
        let mut p = *self;
        match tag {
            ParameterTag::J => p.j = value,
            ParameterTag::Gamma => p.gamma = value,
            ParameterTag::D => p.d = value,
        }
        p
    }

    pub fn is_near_critical(&self, guard: f64) -> bool {
        (self.j - 1.0).abs() < guard || (self.j + 1.0).abs() < guard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Points with `|J ± 1|` below this are flagged near-critical.
    pub critical_guard: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            critical_guard: 1e-3,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive (abs_tol = {}, rel_tol = {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidConfig("max_subdivisions must be >= 1".into()));
        }
        if self.critical_guard.is_nan() || self.critical_guard < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "critical_guard = {} must be >= 0",
                self.critical_guard
            )));
        }
        Ok(())
    }

    /// Tighter copy, used by tests and oracles that need a noise floor well
    /// below the default one.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureConfig {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub phi: f64,
    pub delta: f64,
}

/// `Δ(φ)`.
pub fn dispersion(params: &ChainParams, phi: f64) -> DispersionPoint {
    let (s, c) = phi.sin_cos();
    let a = params.j * (c - 2.0 * params.d * s) - 1.0;
    let b = params.j * params.gamma * s;
    DispersionPoint {
        phi,
        delta: a.hypot(b),
    }
}

/// Integrand ingredients at one angle.
struct Kernel {
    sin: f64,
    cos: f64,
    a: f64,
    b: f64,
    delta: f64,
    /// `(a ∂b − b ∂a) / Δ³` for each parameter.
    cross: [f64; 3],
}

impl Kernel {
    fn new(p: &ChainParams, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let a = p.j * (c - 2.0 * p.d * s) - 1.0;
        let b = p.j * p.gamma * s;
        let delta = a.hypot(b);
        let da = [c - 2.0 * p.d * s, 0.0, -2.0 * p.j * s];
        let db = [p.gamma * s, p.j * s, 0.0];
        let d3 = delta * delta * delta;
        let cross = [
            (a * db[0] - b * da[0]) / d3,
            (a * db[1] - b * da[1]) / d3,
            (a * db[2] - b * da[2]) / d3,
        ];
        Kernel {
            sin: s,
            cos: c,
            a,
            b,
            delta,
            cross,
        }
    }

    fn magnetization(&self) -> f64 {
        -self.a / self.delta / PI
    }

    fn magnetization_grad(&self, i: usize) -> f64 {
        self.b * self.cross[i] / PI
    }

    fn g(&self, cos_k: f64, sin_k: f64) -> f64 {
        (-cos_k * self.a + sin_k * self.b) / self.delta / PI
    }

    fn g_grad(&self, cos_k: f64, sin_k: f64, i: usize) -> f64 {
        self.cross[i] * (cos_k * self.b + sin_k * self.a) / PI
    }
}

fn check_magnetization(m: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if m.abs() > 1.0 + cfg.abs_tol {
        return Err(Error::Unphysical {
            quantity: "magnetization",
            value: m,
        });
    }
    Ok(m)
}

/// Mean magnetization per spin, `⟨σ^z⟩`.
pub fn magnetization(params: &ChainParams, cfg: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    cfg.validate()?;
    let m = quadrature::integrate_scalar(|phi| Kernel::new(params, phi).magnetization(), 0.0, PI, cfg)?;
    check_magnetization(m, cfg)
}

/// `G_k` for any integer `k`.
pub fn g_coefficient(params: &ChainParams, k: i32, cfg: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    cfg.validate()?;
    let kf = k as f64;
    quadrature::integrate_scalar(
        |phi| {
            let (sk, ck) = (kf * phi).sin_cos();
            Kernel::new(params, phi).g(ck, sk)
        },
        0.0,
        PI,
        cfg,
    )
}

/// `∂m/∂λ`, differentiated under the integral sign.
pub fn magnetization_partial(params: &ChainParams, wrt: ParameterTag, cfg: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    cfg.validate()?;
    let i = wrt.index();
    quadrature::integrate_scalar(|phi| Kernel::new(params, phi).magnetization_grad(i), 0.0, PI, cfg)
}

/// `∂G_k/∂λ`, differentiated under the integral sign.
pub fn g_coefficient_partial(
    params: &ChainParams,
    k: i32,
    wrt: ParameterTag,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    params.validate()?;
    cfg.validate()?;
    let i = wrt.index();
    let kf = k as f64;
    quadrature::integrate_scalar(
        |phi| {
            let (sk, ck) = (kf * phi).sin_cos();
            Kernel::new(params, phi).g_grad(ck, sk, i)
        },
        0.0,
        PI,
        cfg,
    )
}

/// A value together with its gradient over `(J, γ, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ValueGrad {
    pub value: f64,
    pub grad: [f64; 3],
}

impl ValueGrad {
    pub fn d(&self, tag: ParameterTag) -> f64 {
        self.grad[tag.index()]
    }
}

/// `m` and `G_k` for `|k| ≤ max_k`, with gradients, from a single adaptive
/// pass over a vector integrand.
///
/// This is the per-point cache: one table serves every separation up to
/// `max_k` and all three correlators.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub params: ChainParams,
    pub max_k: u32,
    pub magnetization: ValueGrad,
    g: Vec<ValueGrad>,
}

impl CoefficientTable {
    pub fn compute(params: &ChainParams, max_k: u32, cfg: &QuadratureConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let kmax = max_k as i64;
        let n_g = (2 * kmax + 1) as usize;
        // Layout: [m, ∂m(3)] then per k ∈ [−K, K]: [G_k, ∂G_k(3)].
        let dim = 4 * (n_g + 1);
        let integral = quadrature::integrate(
            |phi, out: &mut [f64]| {
                let kern = Kernel::new(params, phi);
                out[0] = kern.magnetization();
                for i in 0..3 {
                    out[1 + i] = kern.magnetization_grad(i);
                }
                // cos(kφ), sin(kφ) for k = 0..K by angle addition.
                let (mut ck, mut sk) = (1.0, 0.0);
                for k in 0..=kmax {
                    for (sign, slot) in [(1.0, kmax + k), (-1.0, kmax - k)] {
                        if k == 0 && sign < 0.0 {
                            continue;
                        }
                        let base = 4 * (1 + slot as usize);
                        let s = sign * sk;
                        out[base] = kern.g(ck, s);
                        for i in 0..3 {
                            out[base + 1 + i] = kern.g_grad(ck, s, i);
                        }
                    }
                    let next_c = ck * kern.cos - sk * kern.sin;
                    sk = sk * kern.cos + ck * kern.sin;
                    ck = next_c;
                }
            },
            dim,
            0.0,
            PI,
            cfg,
        )?;
        let v = &integral.values;
        let take = |base: usize| ValueGrad {
            value: v[base],
            grad: [v[base + 1], v[base + 2], v[base + 3]],
        };
        let magnetization = take(0);
        check_magnetization(magnetization.value, cfg)?;
        let g = (0..n_g).map(|slot| take(4 * (1 + slot))).collect();
        Ok(CoefficientTable {
            params: *params,
            max_k,
            magnetization,
            g,
        })
    }

    /// `G_k` with gradient. Panics if `|k| > max_k`.
    pub fn g(&self, k: i32) -> ValueGrad {
        assert!(
            k.unsigned_abs() <= self.max_k,
            "G_{k} outside table range ±{}",
            self.max_k
        );
        self.g[(k + self.max_k as i32) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn p(j: f64, gamma: f64, d: f64) -> ChainParams {
        ChainParams::new(j, gamma, d).unwrap()
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion(&p(0.0, 0.7, 0.4), PI / 2.0);
        assert!((d.delta - 1.0).abs() < 1e-15);
        let d = dispersion(&p(1.0, 1.0, 0.0), 0.0);
        assert_eq!(d.delta, 0.0);
        // Direct arithmetic at (0.5, 1, 0.3), φ = π/4.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a: f64 = 0.5 * (s - 0.6 * s) - 1.0;
        let b = 0.5 * s;
        let d = dispersion(&p(0.5, 1.0, 0.3), PI / 4.0);
        assert!((d.delta - (a * a + b * b).sqrt()).abs() < 1e-15);
        assert!((d.delta - 0.928_524_252_524_069).abs() < 1e-12);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(ChainParams::new(0.5, 1.2, 0.0).is_err());
        assert!(ChainParams::new(0.5, -1.0, 0.0).is_ok());
    }

    #[test]
    fn fully_polarized_at_zero_coupling() {
        let m = magnetization(&p(0.0, 1.0, 0.0), &cfg()).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
    }

    #[test]
    fn magnetization_even_in_coupling_without_dm() {
        for &g in &[1.0, 0.25, -0.6] {
            for &j in &[0.3, 0.8, 1.4, 2.0] {
                let a = magnetization(&p(j, g, 0.0), &cfg()).unwrap();
                let b = magnetization(&p(-j, g, 0.0), &cfg()).unwrap();
                assert!((a - b).abs() < 2.0 * cfg().abs_tol, "j={j} g={g}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn g_vanishes_off_diagonal_at_zero_coupling() {
        assert!(g_coefficient(&p(0.0, 1.0, 0.2), 1, &cfg()).unwrap().abs() < 1e-14);
        let g0 = g_coefficient(&p(0.0, 1.0, 0.2), 0, &cfg()).unwrap();
        assert!((g0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_g_is_first_integral_only() {
        let params = p(0.7, 0.0, 0.2);
        let first = quadrature::integrate_scalar(
            |phi| {
                let a = 0.7 * (phi.cos() - 0.4 * phi.sin()) - 1.0;
                -(2.0 * phi).cos() * a / a.abs() / PI
            },
            0.0,
            PI,
            &cfg(),
        )
        .unwrap();
        let g2 = g_coefficient(&params, 2, &cfg()).unwrap();
        assert!((g2 - first).abs() < 1e-9);
    }

    #[test]
    fn gamma_partial_vanishes_at_isotropy() {
        for &j in &[0.4, 1.6] {
            let d = magnetization_partial(&p(j, 0.0, 0.0), ParameterTag::Gamma, &cfg()).unwrap();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_partial_odd_without_dm() {
        let a = magnetization_partial(&p(0.6, 0.5, 0.0), ParameterTag::J, &cfg()).unwrap();
        let b = magnetization_partial(&p(-0.6, 0.5, 0.0), ParameterTag::J, &cfg()).unwrap();
        assert!((a + b).abs() < 1e-9 * a.abs().max(1.0));
        assert!(a.abs() > 1e-3);
    }

    #[test]
    fn g_partials_special_cases() {
        // γ = 0: only the first integral survives. Here J·sqrt(1 + 4D²) < 1,
        // so a < 0 on [0, π], the first integrand is −cos(kφ)·sign(a)/π and
        // its D-derivative vanishes.
        let params = p(0.7, 0.0, 0.2);
        let d = g_coefficient_partial(&params, 0, ParameterTag::D, &cfg()).unwrap();
        let h = 1e-4;
        let fd = (g_coefficient(&params.with(ParameterTag::D, 0.2 + h), 0, &cfg()).unwrap()
            - g_coefficient(&params.with(ParameterTag::D, 0.2 - h), 0, &cfg()).unwrap())
            / (2.0 * h);
        assert!(d.abs() < 1e-12);
        assert!((d - fd).abs() < 1e-8);
        // J = 0: both gradient terms vanish for γ.
        for k in -3..=3 {
            let v = g_coefficient_partial(&p(0.0, 0.5, 0.1), k, ParameterTag::Gamma, &cfg()).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn table_matches_scalar_integrals() {
        let params = p(1.3, 0.6, 0.15);
        let table = CoefficientTable::compute(&params, 4, &cfg()).unwrap();
        let m = magnetization(&params, &cfg()).unwrap();
        assert!((table.magnetization.value - m).abs() < 1e-9);
        for k in -4..=4 {
            let g = g_coefficient(&params, k, &cfg()).unwrap();
            assert!((table.g(k).value - g).abs() < 1e-9, "k={k}");
            for tag in ParameterTag::ALL {
                let dg = g_coefficient_partial(&params, k, tag, &cfg()).unwrap();
                assert!((table.g(k).d(tag) - dg).abs() < 1e-8, "k={k} {tag}");
            }
        }
        assert!((table.g(0).value - m).abs() < 1e-9);
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = QuadratureConfig {
            abs_tol: 0.0,
            ..cfg()
        };
        assert!(matches!(
            magnetization(&p(0.5, 1.0, 0.0), &bad),
            Err(Error::InvalidConfig(_))
        ));
    }
}
