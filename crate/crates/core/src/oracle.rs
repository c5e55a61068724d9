//! Independent checks for the thermodynamic-limit formulas.
//!
//! * Exact diagonalization of a periodic chain of `N` spins, with
//!   `H = Σ_l (J/2)[(1+γ) σˣσˣ + (1−γ) σʸσʸ + D(σˣσʸ − σʸσˣ)] − Σ_l σᶻ`,
//!   by Lanczos in each parity sector or, for small `N`, a dense
//!   eigensolver on a Hamiltonian assembled from Kronecker products.
//! * Dense SLD solver in the eigenbasis of `ρ`.
//! * Five-point finite differences with Richardson extrapolation.
//! * A fixed composite Gauss–Legendre rule with cofactor determinants.
//!
//! Basis states are bit strings with bit `l` describing site `l + 1`;
//! bit 0 is spin up.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::correlations::{CorrelationSet, Separation};
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const MIN_SPINS: usize = 4;
pub const MAX_SPINS: usize = 14;
/// Largest chain the dense solver accepts.
pub const MAX_DENSE_SPINS: usize = 10;
/// Ground states closer than this in energy are treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteChainSpec {
    pub n: usize,
    pub params: ChainParams,
}

impl FiniteChainSpec {
    pub fn new(n: usize, params: ChainParams) -> Result<Self> {
        let spec = FiniteChainSpec { n, params };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.n.is_multiple_of(2) || !(MIN_SPINS..=MAX_SPINS).contains(&self.n) {
            return Err(Error::Oracle(format!(
                "N = {} must be even and within {MIN_SPINS}..={MAX_SPINS}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

/// Ground state of a finite chain.
///
/// Observables use the equal mixture of the lowest state of each parity
/// sector when the sectors are degenerate, and always in the ordered phase
/// `|J| > 1`, where the splitting closes exponentially with `N` and a single
/// sector converges to the infinite chain far more slowly than the mixture.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub spec: FiniteChainSpec,
    pub energy: f64,
    pub vectors: Vec<DVector<C64>>,
    pub degenerate: bool,
    /// Whether `vectors` holds one state per parity sector.
    pub mixed: bool,
    /// Energy difference to the lowest state of the other sector (Lanczos)
    /// or to the next eigenvalue (dense).
    pub gap: f64,
}

/// Hamiltonian restricted to one parity sector, stored by column.
struct SectorHamiltonian {
    states: Vec<usize>,
    columns: Vec<Vec<(u32, C64)>>,
}

impl SectorHamiltonian {
    fn build(spec: &FiniteChainSpec, parity: u32) -> Self {
        let n = spec.n;
        let ChainParams { j, gamma, d } = spec.params;
        let states: Vec<usize> = (0..spec.dim()).filter(|s| s.count_ones() % 2 == parity).collect();
        let mut index = vec![u32::MAX; spec.dim()];
        for (i, &s) in states.iter().enumerate() {
            index[s] = i as u32;
        }
        let sign = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
        let columns = states
            .iter()
            .enumerate()
            .map(|(col, &s)| {
                let mut entries = Vec::with_capacity(n + 1);
                let field: f64 = (0..n).map(|l| -sign((s >> l) & 1)).sum();
                entries.push((col as u32, C64::new(field, 0.0)));
                if j != 0.0 {
                    for l in 0..n {
                        let l2 = (l + 1) % n;
                        let (s1, s2) = (sign((s >> l) & 1), sign((s >> l2) & 1));
                        let amp = 0.5 * j * C64::new((1.0 + gamma) - (1.0 - gamma) * s1 * s2, d * (s2 - s1));
                        let t = s ^ (1 << l) ^ (1 << l2);
                        entries.push((index[t], amp));
                    }
                }
                entries
            })
            .collect();
        SectorHamiltonian { states, columns }
    }

    fn apply(&self, v: &DVector<C64>, out: &mut DVector<C64>) {
        out.fill(C64::new(0.0, 0.0));
        for (col, entries) in self.columns.iter().enumerate() {
            let x = v[col];
            for &(row, amp) in entries {
                out[row as usize] += amp * x;
            }
        }
    }

    fn dim(&self) -> usize {
        self.states.len()
    }
}

fn inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(b)
}

/// Lowest eigenpair by Lanczos with full reorthogonalization.
fn lanczos(h: &SectorHamiltonian) -> Result<(f64, DVector<C64>)> {
    let dim = h.dim();
    let max_iter = dim.min(400);
    // Deterministic start with no special symmetry.
    let mut q = DVector::from_fn(dim, |i, _| {
        let x = ((i as f64 + 1.0) * 0.618_033_988_749_895).fract();
        C64::new(1.0 + 0.5 * (x - 0.5), 0.25 * (x * 7.0).fract())
    });
    q /= C64::new(q.norm(), 0.0);

    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = DVector::zeros(dim);
    let mut best: Option<(f64, DVector<f64>)> = None;

    for k in 0..max_iter {
        h.apply(&q, &mut w);
        let a = inner(&q, &w).re;
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = inner(v, &w);
                w.axpy(-c, v, C64::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        let last = k + 1 == max_iter || b < 1e-13;
        if !last && k % 5 != 4 {
            beta.push(b);
            q = &w / C64::new(b, 0.0);
            continue;
        }

        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, jj| {
            if i == jj {
                alpha[i]
            } else if i + 1 == jj || jj + 1 == i {
                beta[i.min(jj)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty");
        let y = eig.eigenvectors.column(imin).into_owned();
        let residual = b * y[m - 1].abs();
        best = Some((theta, y));
        if residual < 1e-12 * theta.abs().max(1.0) || last {
            break;
        }
        beta.push(b);
        q = &w / C64::new(b, 0.0);
    }

    let (theta, y) = best.expect("at least one iteration");
    let mut v = DVector::zeros(dim);
    for (coef, qk) in y.iter().zip(&basis) {
        v.axpy(C64::new(*coef, 0.0), qk, C64::new(1.0, 0.0));
    }
    let norm = v.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Oracle("Lanczos produced a null vector".into()));
    }
    v /= C64::new(norm, 0.0);

    let mut hv = DVector::zeros(dim);
    h.apply(&v, &mut hv);
    let res = (&hv - &v * C64::new(theta, 0.0)).norm();
    if res > 1e-8 {
        return Err(Error::Oracle(format!(
            "Lanczos residual {res:e} after {} steps",
            basis.len()
        )));
    }
    Ok((theta, v))
}

fn embed(h: &SectorHamiltonian, v: &DVector<C64>, full_dim: usize) -> DVector<C64> {
    let mut out = DVector::zeros(full_dim);
    for (i, &s) in h.states.iter().enumerate() {
        out[s] = v[i];
    }
    out
}

/// Ground state by Lanczos in both parity sectors.
pub fn ground_state(spec: &FiniteChainSpec) -> Result<GroundState> {
    spec.validate()?;
    let sectors = [0, 1].map(|p| SectorHamiltonian::build(spec, p));
    let mut results = Vec::with_capacity(2);
    for h in &sectors {
        let (e, v) = lanczos(h)?;
        results.push((e, embed(h, &v, spec.dim())));
    }
    let gap = (results[0].0 - results[1].0).abs();
    let degenerate = gap < DEGENERACY_GAP;
    let mixed = degenerate || is_ordered(&spec.params);
    let lower = if results[0].0 <= results[1].0 { 0 } else { 1 };
    let energy = results[lower].0;
    let vectors = if mixed {
        results.into_iter().map(|(_, v)| v).collect()
    } else {
        vec![results.swap_remove(lower).1]
    };
    Ok(GroundState {
        spec: *spec,
        energy,
        vectors,
        degenerate,
        mixed,
        gap,
    })
}

fn is_ordered(params: &ChainParams) -> bool {
    params.j.abs() > 1.0
}

fn pauli(k: usize) -> Matrix2<C64> {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    match k {
        0 => Matrix2::new(o, z, z, o),
        1 => Matrix2::new(z, o, o, z),
        2 => Matrix2::new(z, -i, i, z),
        3 => Matrix2::new(o, z, z, -o),
        _ => unreachable!("Pauli index"),
    }
}

/// `⊗_l ops[l]`, with site 1 as the least significant factor.
fn site_product(ops: &[Matrix2<C64>]) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for op in ops.iter().rev() {
        let op = DMatrix::from_fn(2, 2, |a, b| op[(a, b)]);
        m = m.kronecker(&op);
    }
    m
}

/// Full Hamiltonian assembled from Kronecker products of Pauli matrices.
pub fn hamiltonian_dense(spec: &FiniteChainSpec) -> Result<DMatrix<C64>> {
    spec.validate()?;
    if spec.n > MAX_DENSE_SPINS {
        return Err(Error::Oracle(format!(
            "dense solver limited to N <= {MAX_DENSE_SPINS}"
        )));
    }
    let n = spec.n;
    let ChainParams { j, gamma, d } = spec.params;
    let mut h = DMatrix::zeros(spec.dim(), spec.dim());
    let two_site = |l: usize, a: usize, b: usize| {
        let mut ops = vec![pauli(0); n];
        ops[l] = pauli(a);
        ops[(l + 1) % n] = pauli(b);
        site_product(&ops)
    };
    for l in 0..n {
        let c = |x: f64| C64::new(0.5 * j * x, 0.0);
        h += two_site(l, 1, 1) * c(1.0 + gamma);
        h += two_site(l, 2, 2) * c(1.0 - gamma);
        h += two_site(l, 1, 2) * c(d);
        h -= two_site(l, 2, 1) * c(d);
        let mut ops = vec![pauli(0); n];
        ops[l] = pauli(3);
        h -= site_product(&ops);
    }
    Ok(h)
}

/// Ground state by full diagonalization.
pub fn ground_state_dense(spec: &FiniteChainSpec) -> Result<GroundState> {
    let h = hamiltonian_dense(spec)?;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let gap = eig.eigenvalues[order[1]] - e0;
    let degenerate = gap < DEGENERACY_GAP;
    let mixed = degenerate || is_ordered(&spec.params);
    let picked = if !mixed {
        vec![order[0]]
    } else if degenerate {
        order[..2].to_vec()
    } else {
        // Lowest eigenvector of each parity; parity is diagonal here.
        let parity = |k: usize| {
            let v = eig.eigenvectors.column(k);
            v.iter()
                .enumerate()
                .map(|(s, z)| {
                    if s.count_ones() % 2 == 0 {
                        z.norm_sqr()
                    } else {
                        -z.norm_sqr()
                    }
                })
                .sum::<f64>()
                > 0.0
        };
        let even = order.iter().copied().find(|&k| parity(k));
        let odd = order.iter().copied().find(|&k| !parity(k));
        even.into_iter().chain(odd).collect()
    };
    let vectors = picked
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(GroundState {
        spec: *spec,
        energy: e0,
        vectors,
        degenerate,
        mixed,
        gap,
    })
}

impl GroundState {
    /// Two-site reduced density matrix of sites `j` and `j + r` (1-based,
    /// periodic), in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn reduced_pair(&self, j: usize, r: usize) -> Result<Matrix4<C64>> {
        let n = self.spec.n;
        if !(1..=n).contains(&j) || !(1..=n / 2).contains(&r) {
            return Err(Error::Oracle(format!(
                "site {j} / separation {r} out of range for N = {n}"
            )));
        }
        let (s1, s2) = (j - 1, (j - 1 + r) % n);
        let mask = (1usize << s1) | (1usize << s2);
        let weight = 1.0 / self.vectors.len() as f64;
        let mut rho = Matrix4::zeros();
        for psi in &self.vectors {
            for s in 0..self.spec.dim() {
                if s & mask != 0 {
                    continue;
                }
                let mut amps = [C64::new(0.0, 0.0); 4];
                for (idx, amp) in amps.iter_mut().enumerate() {
                    let (a, b) = (idx >> 1, idx & 1);
                    *amp = psi[s | (a << s1) | (b << s2)];
                }
                for x in 0..4 {
                    for y in 0..4 {
                        rho[(x, y)] += amps[x] * amps[y].conj() * weight;
                    }
                }
            }
        }
        Ok(rho)
    }

    /// `⟨σᶻ⟩` at site `j`.
    pub fn magnetization(&self, j: usize) -> Result<f64> {
        let rho = self.reduced_pair(j, 1)?;
        Ok(pair_expectation(&rho, 3, 0))
    }

    pub fn energy_per_site(&self) -> f64 {
        self.energy / self.spec.n as f64
    }
}

pub fn reduced_pair(spec: &FiniteChainSpec, j: usize, r: usize) -> Result<Matrix4<C64>> {
    ground_state(spec)?.reduced_pair(j, r)
}

/// Pair state of the finite chain and its derivative along `tag`, by the
/// five-point stencil applied entrywise.
pub fn pair_state_derivative(
    spec: &FiniteChainSpec,
    tag: crate::chain::ParameterTag,
    r: usize,
    h: f64,
) -> Result<(Matrix4<C64>, Matrix4<C64>)> {
    let x = spec.params.get(tag);
    let at = |v: f64| -> Result<Matrix4<C64>> {
        let shifted = FiniteChainSpec::new(spec.n, spec.params.with(tag, v))?;
        reduced_pair(&shifted, 1, r)
    };
    let rho = reduced_pair(spec, 1, r)?;
    let c = |k: f64| C64::new(k / (12.0 * h), 0.0);
    let drho =
        at(x - 2.0 * h)? * c(1.0) - at(x - h)? * c(8.0) + at(x + h)? * c(8.0) - at(x + 2.0 * h)? * c(1.0);
    Ok((rho, drho))
}

/// `Tr[ρ (σ^α ⊗ σ^β)]` with `0` the identity.
pub fn pair_expectation(rho: &Matrix4<C64>, alpha: usize, beta: usize) -> f64 {
    let (pa, pb) = (pauli(alpha), pauli(beta));
    let op = Matrix4::from_fn(|x, y| pa[(x >> 1, y >> 1)] * pb[(x & 1, y & 1)]);
    (rho * op).trace().re
}

pub fn correlators_from_pair(rho: &Matrix4<C64>, r: usize) -> CorrelationSet {
    CorrelationSet {
        r: Separation::Finite(r as u32),
        m: pair_expectation(rho, 3, 0),
        sxx: pair_expectation(rho, 1, 1),
        syy: pair_expectation(rho, 2, 2),
        szz: pair_expectation(rho, 3, 3),
    }
}

pub fn oracle_correlators(spec: &FiniteChainSpec, r: usize) -> Result<CorrelationSet> {
    Ok(correlators_from_pair(&reduced_pair(spec, 1, r)?, r))
}

/// Largest modulus outside the X pattern (diagonal and anti-diagonal).
pub fn off_x_magnitude(rho: &Matrix4<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for x in 0..4 {
        for y in 0..4 {
            if x != y && x + y != 3 {
                worst = worst.max(rho[(x, y)].norm());
            }
        }
    }
    worst
}

/// Solves `∂ρ = ½{𝓛, ρ}` in the eigenbasis of `ρ`. Entries with
/// `p_i + p_j ≤ 1e−12` are set to zero.
pub fn sld_dense(rho: &Matrix4<C64>, drho: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = SymmetricEigen::new(*rho);
    let v = eig.eigenvectors;
    let p = eig.eigenvalues;
    let d = v.adjoint() * drho * v;
    let l = Matrix4::from_fn(|i, j| {
        let s = p[i] + p[j];
        if s > 1e-12 {
            d[(i, j)] * (2.0 / s)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    v * l * v.adjoint()
}

/// `Tr[ρ 𝓛²]`.
pub fn qfi_dense(rho: &Matrix4<C64>, drho: &Matrix4<C64>) -> f64 {
    let l = sld_dense(rho, drho);
    (rho * l * l).trace().re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifference {
    pub value: f64,
    /// `|D(h/2) − D(h)| / 15`, the Richardson correction magnitude.
    pub truncation_error: f64,
}

fn five_point<F>(f: &F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
}

/// Five-point central difference at steps `h` and `h/2`, combined by
/// Richardson extrapolation.
pub fn finite_difference<F>(f: F, at: f64, h: f64) -> Result<FiniteDifference>
where
    F: Fn(f64) -> Result<f64>,
{
    let coarse = five_point(&f, at, h)?;
    let fine = five_point(&f, at, 0.5 * h)?;
    let correction = (fine - coarse) / 15.0;
    Ok(FiniteDifference {
        value: fine + correction,
        truncation_error: correction.abs(),
    })
}

/// Comparison of one library value against an oracle value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub library: f64,
    pub oracle: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    /// Chain length for exact-diagonalization comparisons.
    pub n: Option<usize>,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, library: f64, oracle: f64, n: Option<usize>) -> Self {
        let abs_dev = (library - oracle).abs();
        let rel_dev = if oracle == 0.0 {
            abs_dev
        } else {
            abs_dev / oracle.abs()
        };
        OracleReport {
            quantity: quantity.into(),
            library,
            oracle,
            abs_dev,
            rel_dev,
            n,
        }
    }

    /// Passes if either deviation is within its tolerance.
    pub fn within(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.abs_dev <= abs_tol || self.rel_dev <= rel_tol
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`
/// (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Correlators from a fixed composite Gauss–Legendre rule and cofactor
/// (Laplace) determinants. Shares no code with the adaptive path.
pub struct QuadratureReference {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureReference {
    pub fn new(panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = std::f64::consts::PI / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        QuadratureReference { nodes, weights }
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum();
        s / std::f64::consts::PI
    }

    fn ab(p: &ChainParams, phi: f64) -> (f64, f64, f64) {
        let a = p.j * (phi.cos() - 2.0 * p.d * phi.sin()) - 1.0;
        let b = p.j * p.gamma * phi.sin();
        (a, b, (a * a + b * b).sqrt())
    }

    pub fn magnetization(&self, p: &ChainParams) -> f64 {
        self.integrate(|phi| {
            let (a, _, delta) = Self::ab(p, phi);
            -a / delta
        })
    }

    pub fn g(&self, p: &ChainParams, k: i32) -> f64 {
        self.integrate(|phi| {
            let (a, b, delta) = Self::ab(p, phi);
            let kp = k as f64 * phi;
            (-kp.cos() * a + kp.sin() * b) / delta
        })
    }

    pub fn correlations(&self, p: &ChainParams, r: u32) -> CorrelationSet {
        let r_i = r as i32;
        let g: Vec<f64> = (-r_i..=r_i).map(|k| self.g(p, k)).collect();
        let gk = |k: i32| g[(k + r_i) as usize];
        let n = r as usize;
        let sx: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| gk(j as i32 - i as i32 - 1)).collect())
            .collect();
        let sy: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| gk(i as i32 - j as i32 + 1)).collect())
            .collect();
        let m = self.magnetization(p);
        CorrelationSet {
            r: Separation::Finite(r),
            m,
            sxx: cofactor_determinant(&sx),
            syy: cofactor_determinant(&sy),
            szz: m * m - gk(r_i) * gk(-r_i),
        }
    }
}

/// Laplace expansion along the first row. Exponential cost; intended for
/// `n ≤ 8`.
pub fn cofactor_determinant(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|col| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != col)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][col] * cofactor_determinant(&minor)
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, j: f64, gamma: f64, d: f64) -> FiniteChainSpec {
        FiniteChainSpec::new(n, ChainParams::new(j, gamma, d).unwrap()).unwrap()
    }

    #[test]
    fn spec_validation() {
        let p = ChainParams::new(0.5, 1.0, 0.0).unwrap();
        assert!(FiniteChainSpec::new(5, p).is_err());
        assert!(FiniteChainSpec::new(2, p).is_err());
        assert!(FiniteChainSpec::new(16, p).is_err());
    }

    #[test]
    fn zero_coupling_is_all_up() {
        let gs = ground_state(&spec(6, 0.0, 1.0, 0.0)).unwrap();
        assert!((gs.energy + 6.0).abs() < 1e-12);
        assert!((gs.vectors[0][0].norm() - 1.0).abs() < 1e-12);
        let rho = gs.reduced_pair(2, 3).unwrap();
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-12);
        let set = correlators_from_pair(&rho, 3);
        assert!((set.m - 1.0).abs() < 1e-12 && (set.szz - 1.0).abs() < 1e-12);
        assert!(set.sxx.abs() < 1e-12 && set.syy.abs() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        for (j, g, d) in [(0.5, 1.0, 0.0), (1.5, 0.25, 0.1), (-0.8, 0.6, 0.3)] {
            for n in [4, 8] {
                let s = spec(n, j, g, d);
                let a = ground_state(&s).unwrap();
                let b = ground_state_dense(&s).unwrap();
                assert!(
                    (a.energy - b.energy).abs() < 1e-9,
                    "{n} {j}: {} {}",
                    a.energy,
                    b.energy
                );
                let ra = a.reduced_pair(1, 1).unwrap();
                let rb = b.reduced_pair(1, 1).unwrap();
                assert!((ra - rb).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-7);
            }
        }
    }

    #[test]
    fn state_is_normalized_and_pair_is_physical() {
        let gs = ground_state(&spec(10, 0.5, 1.0, 0.0)).unwrap();
        assert!((gs.vectors[0].norm() - 1.0).abs() < 1e-12);
        for r in 1..=5 {
            let rho = gs.reduced_pair(1, r).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            assert!((rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
            assert!(off_x_magnitude(&rho) < 1e-10);
            let eig = SymmetricEigen::new(rho);
            assert!(eig.eigenvalues.iter().all(|&p| p > -1e-10));
        }
    }

    #[test]
    fn translation_invariance() {
        let gs = ground_state(&spec(8, 1.5, 0.25, 0.1)).unwrap();
        let reference = gs.reduced_pair(1, 2).unwrap();
        for j in 2..=8 {
            let rho = gs.reduced_pair(j, 2).unwrap();
            assert!((rho - reference).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn sld_of_maximally_mixed_state() {
        let rho = Matrix4::identity() * C64::new(0.25, 0.0);
        let eps = 0.01;
        let drho =
            Matrix4::from_diagonal(&nalgebra::Vector4::new(eps, -eps, 0.0, 0.0).map(|x| C64::new(x, 0.0)));
        let l = sld_dense(&rho, &drho);
        assert!(
            (l - drho * C64::new(4.0, 0.0))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                < 1e-14
        );
    }

    #[test]
    fn finite_difference_examples() {
        let id = finite_difference(Ok, 0.7, 0.1).unwrap();
        assert!((id.value - 1.0).abs() < 1e-14);
        let sq = finite_difference(|x| Ok(x * x), 3.0, 0.1).unwrap();
        assert!((sq.value - 6.0).abs() < 1e-12);
        let failing = finite_difference(
            |x| if x > 1.0 { Err(Error::ZeroCoupling) } else { Ok(x) },
            0.95,
            0.1,
        );
        assert_eq!(failing.unwrap_err(), Error::ZeroCoupling);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cofactor_determinant_small_cases() {
        assert_eq!(cofactor_determinant(&[vec![2.0, 1.0], vec![1.0, 3.0]]), 5.0);
        let m = vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0], vec![5.0, 6.0, 0.0]];
        assert_eq!(cofactor_determinant(&m), 1.0);
    }

    #[test]
    fn report_deviations() {
        let r = OracleReport::new("m", 1.01, 1.0, Some(8));
        assert!((r.abs_dev - 0.01).abs() < 1e-15);
        assert!(r.within(0.0, 0.02) && !r.within(0.001, 0.001));
        assert_eq!(OracleReport::new("x", 1e-3, 0.0, None).rel_dev, 1e-3);
    }
}
