//! Adaptive Gauss–Kronrod (G10/K21) quadrature for vector-valued integrands.
//!
//! All components share one panel partition. The panel with the largest
//! error relative to its component tolerance is bisected until every
//! component meets `max(abs_tol, rel_tol * |I|)` or the subdivision budget
//! runs out.

use crate::chain::QuadratureConfig;
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of a converged integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub subdivisions: usize,
}

struct Panel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
}

/// One 21-point Kronrod sweep over `[a, b]` with QUADPACK's error scaling.
fn kronrod21<F>(f: &F, a: f64, b: f64, dim: usize, scratch: &mut [Vec<f64>; 2]) -> Result<Panel>
where
    F: Fn(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut resabs = vec![0.0; dim];
    // f at each of the 21 nodes is needed twice (sums and resasc), keep them.
    let mut samples = vec![0.0; 21 * dim];

    let [lo, hi] = scratch;
    f(center, lo);
    check_finite(lo)?;
    samples[20 * dim..21 * dim].copy_from_slice(lo);
    for i in 0..dim {
        kronrod[i] = WGK[10] * lo[i];
        resabs[i] = kronrod[i].abs();
    }

    for j in 0..10 {
        let dx = half * XGK[j];
        f(center - dx, lo);
        check_finite(lo)?;
        f(center + dx, hi);
        check_finite(hi)?;
        samples[2 * j * dim..(2 * j + 1) * dim].copy_from_slice(lo);
        samples[(2 * j + 1) * dim..(2 * j + 2) * dim].copy_from_slice(hi);
        for i in 0..dim {
            let sum = lo[i] + hi[i];
            kronrod[i] += WGK[j] * sum;
            resabs[i] += WGK[j] * (lo[i].abs() + hi[i].abs());
            // Gauss nodes are the odd-indexed Kronrod nodes.
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * sum;
            }
        }
    }

    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    for i in 0..dim {
        let mean = 0.5 * kronrod[i];
        let mut resasc = WGK[10] * (samples[20 * dim + i] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j]
                * ((samples[2 * j * dim + i] - mean).abs() + (samples[(2 * j + 1) * dim + i] - mean).abs());
        }
        let resasc = resasc * abs_half;
        let resabs = resabs[i] * abs_half;
        values[i] = kronrod[i] * half;

        let mut err = ((kronrod[i] - gauss[i]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        errors[i] = err;
    }

    Ok(Panel { a, b, values, errors })
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            estimate: f64::NAN,
            error_estimate: f64::INFINITY,
            subdivisions: 0,
        })
    }
}

/// Integrates a `dim`-component integrand over `[a, b]`.
///
/// `f(x, out)` must write all `dim` components into `out`.
pub fn integrate<F>(f: F, dim: usize, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64, &mut [f64]),
{
    let mut scratch = [vec![0.0; dim], vec![0.0; dim]];
    let mut panels = vec![kronrod21(&f, a, b, dim, &mut scratch)?];
    let min_width = 1e-13 * (b - a).abs();

    let mut totals = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    loop {
        totals.iter_mut().for_each(|t| *t = 0.0);
        errors.iter_mut().for_each(|e| *e = 0.0);
        for p in &panels {
            for i in 0..dim {
                totals[i] += p.values[i];
                errors[i] += p.errors[i];
            }
        }
        let tolerances: Vec<f64> = totals
            .iter()
            .map(|t| cfg.abs_tol.max(cfg.rel_tol * t.abs()))
            .collect();
        let converged = errors.iter().zip(&tolerances).all(|(e, t)| e <= t);
        if converged {
            return Ok(Integral {
                values: totals,
                errors,
                subdivisions: panels.len(),
            });
        }

        let fail = |panels: &Vec<Panel>| {
            let worst = (0..dim)
                .max_by(|&i, &j| (errors[i] / tolerances[i]).total_cmp(&(errors[j] / tolerances[j])))
                .unwrap_or(0);
            Error::NonConvergence {
                estimate: totals[worst],
                error_estimate: errors[worst],
                subdivisions: panels.len(),
            }
        };
        if panels.len() >= cfg.max_subdivisions {
            return Err(fail(&panels));
        }

        let score = |p: &Panel| {
            p.errors
                .iter()
                .zip(&tolerances)
                .map(|(e, t)| e / t)
                .fold(0.0_f64, f64::max)
        };
        let (worst, _) = panels
            .iter()
            .enumerate()
            .map(|(k, p)| (k, score(p)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("at least one panel");
        let panel = panels.swap_remove(worst);
        if (panel.b - panel.a).abs() < min_width {
            panels.push(panel);
            return Err(fail(&panels));
        }
        let mid = 0.5 * (panel.a + panel.b);
        panels.push(kronrod21(&f, panel.a, mid, dim, &mut scratch)?);
        panels.push(kronrod21(&f, mid, panel.b, dim, &mut scratch)?);
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|x, out: &mut [f64]| out[0] = f(x), 1, a, b, cfg).map(|r| r.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate_scalar(|x| 3.0 * x * x - x + 2.0, 0.0, 2.0, &cfg()).unwrap();
        assert!((v - 10.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let v = integrate_scalar(|x| (20.0 * x).cos(), 0.0, PI, &cfg()).unwrap();
        assert!(v.abs() < 1e-10);
        // Lorentzian with width 1e-3 centred near the left endpoint.
        let eps: f64 = 1e-3;
        let v = integrate_scalar(|x| eps / (x * x + eps * eps), 0.0, 1.0, &cfg()).unwrap();
        assert!((v - (1.0 / eps).atan()).abs() < 1e-9);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // Without extrapolation the leftmost panel limits accuracy to ~sqrt(width).
        let loose = QuadratureConfig {
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            ..cfg()
        };
        let v = integrate_scalar(|x| 1.0 / x.sqrt(), 0.0, 1.0, &loose).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }

    #[test]
    fn vector_components_share_panels() {
        let r = integrate(
            |x, out: &mut [f64]| {
                out[0] = x.sin();
                out[1] = x.cos();
                out[2] = 0.0;
            },
            3,
            0.0,
            PI,
            &cfg(),
        )
        .unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-12);
        assert!(r.values[1].abs() < 1e-12);
        assert_eq!(r.values[2], 0.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tight = QuadratureConfig {
            max_subdivisions: 2,
            ..cfg()
        };
        let err = integrate_scalar(|x| 1.0 / x.sqrt(), 0.0, 1.0, &tight).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate_scalar(|_| f64::NAN, 0.0, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
