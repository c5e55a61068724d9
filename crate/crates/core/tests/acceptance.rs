//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix4, Vector4};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xyfisher::chain::{self, CoefficientTable};
use xyfisher::correlations::{self, asymptotic_decay_check};
use xyfisher::exec::Executor;
use xyfisher::fisher;
use xyfisher::multiparam::{self, invertibility_threshold, uhlmann_from_dense, C64};
use xyfisher::oracle::{self, finite_difference, FiniteChainSpec};
use xyfisher::scan::{self, ScanRecord, ScanSpec};
use xyfisher::states::PairPoint;
use xyfisher::{ChainParams, ParameterTag, QuadratureConfig, Separation};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn p(j: f64, gamma: f64, d: f64) -> ChainParams {
    ChainParams::new(j, gamma, d).unwrap()
}

fn finite_and_inf(max: u32) -> Vec<Separation> {
    Separation::standard_set(max)
}

/// Random point with `|J ∓ 1| > 0.1` and `|J| > 0.05`.
fn random_point(rng: &mut StdRng) -> ChainParams {
    loop {
        let j: f64 = rng.gen_range(-2.0..2.0);
        let gamma: f64 = rng.gen_range(0.1..0.95);
        let d: f64 = rng.gen_range(0.0..0.5);
        let params = p(j, gamma, d);
        if j.abs() > 0.05 && !params.is_near_critical(0.1) {
            return params;
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn err<E: std::fmt::Display>(ctx: impl std::fmt::Display) -> impl FnOnce(E) -> String {
    move |e| format!("{ctx}: {e}")
}

fn within_time(started: Instant, limit: Duration, summary: String) -> Outcome {
    let took = started.elapsed();
    if took > limit {
        Err(format!("{summary}; took {took:.1?} > {limit:?}"))
    } else {
        Ok(format!("{summary}; {took:.1?}"))
    }
}

fn preset_rows(name: &str) -> Result<Vec<ScanRecord>, String> {
    let spec = ScanSpec::preset(name).map_err(err(name))?;
    scan::run(&spec, &Executor::default())
        .map(|o| o.records)
        .map_err(err(name))
}

fn infinite_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let (mut worst_h, mut worst_f) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let params = random_point(&mut rng);
        for tag in ParameterTag::ALL {
            let h = fisher::qfi_pair(&params, Separation::Infinite, tag, &cfg()).map_err(err(params.j))?;
            let f = fisher::fi_pair_magnetization(&params, Separation::Infinite, tag, &cfg())
                .map_err(err(params.j))?;
            let single = fisher::qfi_single(&params, tag, &cfg()).map_err(err(params.j))?;
            worst_h = worst_h.max(rel(h, 2.0 * single));
            worst_f = worst_f.max(rel(f, h));
        }
    }
    let summary = format!("max rel |H(inf) - 2H1| = {worst_h:.2e}, |F(inf) - H(inf)| = {worst_f:.2e}");
    if worst_h > 1e-6 || worst_f > 1e-6 {
        return Err(summary);
    }
    within_time(start, Duration::from_secs(10), summary)
}

fn closed_form_vs_spectral() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut at = String::new();
    for _ in 0..30 {
        let params = random_point(&mut rng);
        let table = CoefficientTable::compute(&params, 6, &cfg()).map_err(err(params.j))?;
        for r in 1..=6 {
            let point = PairPoint::from_table(&table, Separation::Finite(r)).map_err(err(r))?;
            for tag in ParameterTag::ALL {
                let a = fisher::qfi_closed_form_at(&point, tag).map_err(err(r))?;
                let b = fisher::qfi_spectral_at(&point, tag).map_err(err(r))?;
                if rel(a, b) > worst {
                    worst = rel(a, b);
                    at = format!("{params:?} r={r} {tag}");
                }
            }
        }
    }
    let summary = format!("max rel deviation {worst:.2e} at {at}");
    if worst > 1e-8 {
        return Err(summary);
    }
    within_time(start, Duration::from_secs(120), summary)
}

fn bound_ordering() -> Outcome {
    let mut rows = 0;
    let mut worst = f64::NEG_INFINITY;
    for name in ["fig2", "fig3-4"] {
        for row in preset_rows(name)? {
            if let Some(e) = row.error.as_deref() {
                if e.contains("exceeds") || e.contains("bound") {
                    return Err(format!("{name} J={} r={:?}: {e}", row.j, row.r));
                }
            }
            if let (Some(f), Some(h)) = (row.fi, row.qfi) {
                rows += 1;
                worst = worst.max(f - h);
            }
        }
    }
    let summary = format!("{rows} rows, max F - H = {worst:.2e}");
    if worst > 1e-9 {
        Err(summary)
    } else {
        Ok(summary)
    }
}

fn saturation_floors() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, floor) in [("fig2", 0.9), ("fig3-4", 0.835)] {
        let mut min = f64::INFINITY;
        let mut at = (0.0, 0);
        for row in preset_rows(name)? {
            let Some(Separation::Finite(r)) = row.r else {
                continue;
            };
            if row.tag != Some(ParameterTag::J) || r > 6 {
                continue;
            }
            if let Some(s) = row.saturation {
                if s < min {
                    min = s;
                    at = (row.j, r);
                }
            }
        }
        ok &= min >= floor;
        parts.push(format!(
            "{name}: min {min:.4} (floor {floor}) at J={} r={}",
            at.0, at.1
        ));
    }
    let summary = parts.join("; ");
    if !ok {
        return Err(summary);
    }
    within_time(start, Duration::from_secs(600), summary)
}

fn divergence_proxy() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [0.0, 0.3] {
        let h = |j: f64| fisher::qfi_single(&p(j, 1.0, d), ParameterTag::J, &cfg()).map_err(err(j));
        let (h80, h90, h95, h99) = (h(0.80)?, h(0.90)?, h(0.95)?, h(0.99)?);
        let ratio = h99 / h80;
        let increasing = h90 < h95 && h95 < h99;
        ok &= ratio >= 10.0 && increasing;
        parts.push(format!(
            "D={d}: H(0.99)/H(0.80) = {ratio:.2}, increasing {increasing}"
        ));
    }
    let summary = parts.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn parity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    while pairs < 10 {
        let j: f64 = rng.gen_range(0.05..2.0);
        let gamma: f64 = rng.gen_range(0.1..1.0);
        if p(j, gamma, 0.0).is_near_critical(0.1) {
            continue;
        }
        pairs += 1;
        for r in [Separation::Finite(1), Separation::Finite(3), Separation::Infinite] {
            let h = |j: f64| fisher::qfi_pair(&p(j, gamma, 0.0), r, ParameterTag::J, &cfg()).map_err(err(j));
            worst = worst.max(rel(h(j)?, h(-j)?));
        }
    }
    let summary = format!("max rel |H(J) - H(-J)| = {worst:.2e}");
    if worst <= 1e-6 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn argmax_ratio(j: f64, use_fi: bool) -> Result<(Separation, Vec<(Separation, f64)>), String> {
    let params = p(j, 1.0, 0.0);
    let table = CoefficientTable::compute(&params, 6, &cfg()).map_err(err(j))?;
    let inf = PairPoint::from_table(&table, Separation::Infinite).map_err(err(j))?;
    let mut values = Vec::new();
    for r in finite_and_inf(6) {
        let at = PairPoint::from_table(&table, r).map_err(err(r))?;
        let (rh, rf) = fisher::ratios_at(&at, &inf, ParameterTag::J).map_err(err(r))?;
        values.push((r, if use_fi { rf } else { rh }));
    }
    let best = values
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|x| x.0)
        .unwrap();
    Ok((best, values))
}

fn optimal_distance() -> Outcome {
    let checks = [
        (0.95, false, Separation::Finite(1), "R_H"),
        (1.1, false, Separation::Finite(5), "R_H"),
        (0.5, true, Separation::Infinite, "R_F"),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (j, use_fi, expected, label) in checks {
        let (best, values) = argmax_ratio(j, use_fi)?;
        ok &= best == expected;
        let listed: Vec<String> = values.iter().map(|(r, v)| format!("{r}:{v:.4}")).collect();
        parts.push(format!(
            "{label} J={j}: argmax r={best} (want {expected}) [{}]",
            listed.join(" ")
        ));
    }
    let summary = parts.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// Two-qubit state with a complex anti-diagonal coherence and a tangent
/// family that rotates its phase.
fn complex_fixture() -> (Matrix4<C64>, [Matrix4<C64>; 3]) {
    let (b, theta) = (0.15, 1.3);
    let z = |re: f64| C64::new(re, 0.0);
    let coh = C64::from_polar(b, theta);
    let mut rho = Matrix4::from_diagonal(&Vector4::new(z(0.4), z(0.2), z(0.2), z(0.2)));
    rho[(1, 2)] = coh;
    rho[(2, 1)] = coh.conj();
    rho[(0, 3)] = z(0.05);
    rho[(3, 0)] = z(0.05);
    let mut d1 = Matrix4::zeros();
    d1[(1, 2)] = C64::from_polar(0.05, theta);
    d1[(2, 1)] = d1[(1, 2)].conj();
    let mut d2 = Matrix4::zeros();
    d2[(1, 2)] = coh * C64::new(0.0, 1.0);
    d2[(2, 1)] = d2[(1, 2)].conj();
    let d3 = Matrix4::from_diagonal(&Vector4::new(z(0.1), z(-0.05), z(0.05), z(-0.1)));
    (rho, [d1, d2, d3])
}

fn multiparam_rows() -> Result<Vec<ScanRecord>, String> {
    let mut rows = preset_rows("fig5-7a")?;
    rows.extend(preset_rows("fig5-7b")?);
    Ok(rows)
}

fn uhlmann_nullity() -> Outcome {
    let rows = multiparam_rows()?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for row in &rows {
        if let Some(u) = row.uhlmann_max_abs {
            worst = worst.max(u);
            count += 1;
        }
    }
    let (rho, drho) = complex_fixture();
    let slds = drho.map(|d| oracle::sld_dense(&rho, &d));
    let fixture = uhlmann_from_dense(&rho, &slds).max_abs;
    let summary = format!("{count} rows, max |U| = {worst:.2e}; complex fixture |U| = {fixture:.3e}");
    if count > 0 && worst <= 1e-10 && fixture >= 1e-3 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn weak_commutativity() -> Outcome {
    let rows = multiparam_rows()?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for row in &rows {
        if let Some(c) = row.commutator_max_abs {
            worst = worst.max(c);
            count += 1;
        }
    }
    let summary = format!("{count} rows, max |Tr[rho [L_mu, L_nu]]| = {worst:.2e}");
    if count > 0 && worst <= 1e-10 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn sloppiness() -> Outcome {
    let rows = preset_rows("fig5-7a")?;
    let mut js: Vec<f64> = rows
        .iter()
        .filter(|row| row.r.is_some())
        .map(|row| row.j)
        .collect();
    js.dedup();
    let mut parts = Vec::new();
    let mut ok = true;
    for r in 1..=6 {
        // det relative to the trace-scaled threshold, so the median is
        // below one exactly when most grid points are sloppy.
        let mut scaled = Vec::with_capacity(js.len());
        for &j in &js {
            let h = multiparam::qfim_pair(&p(j, 1.0, 0.0), Separation::Finite(r), &cfg()).map_err(err(j))?;
            scaled.push(h.det / invertibility_threshold(h.trace));
        }
        let m = median(scaled);
        ok &= m < 1.0;
        parts.push(format!("r={r}: median det/threshold {m:.2e}"));
    }
    let inf = multiparam::qfim_pair(&p(0.5, 1.0, 0.0), Separation::Infinite, &cfg()).map_err(err("r=inf"))?;
    let inf_threshold = invertibility_threshold(inf.trace);
    ok &= inf.det > inf_threshold;
    parts.push(format!(
        "r=inf J=0.5: det {:.2e} vs threshold {inf_threshold:.2e}",
        inf.det
    ));
    let r1_defined = rows
        .iter()
        .filter(|row| row.r == Some(Separation::Finite(1)) && row.trace_inverse.is_some())
        .count();
    ok &= r1_defined == 0;
    parts.push(format!("r=1 rows with a defined bound: {r1_defined}"));
    let summary = parts.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn bound_gap() -> Outcome {
    let params = p(0.5, 1.0, 0.0);
    let bound = |r: Separation| multiparam::scalar_bound(&params, r, &cfg()).map_err(err(r));
    let inf = bound(Separation::Infinite)?;
    let Some(inf_value) = inf.value() else {
        return Err(format!("r=inf bound undefined ({inf:?})"));
    };
    let mut parts = vec![format!("r=inf: {inf_value:.3e}")];
    let mut ok = true;
    let mut defined = 0;
    for r in 2..=6 {
        if let Some(v) = bound(Separation::Finite(r))?.value() {
            defined += 1;
            ok &= inf_value <= v / 10.0;
            parts.push(format!("r={r}: {v:.3e}"));
        }
    }
    parts.push(format!("{defined} finite r with a defined bound"));
    let summary = parts.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn oracle_convergence() -> Outcome {
    let start = Instant::now();
    let params = p(0.5, 1.0, 0.0);
    let lib =
        correlations::correlation_set(&params, Separation::Finite(1), &cfg()).map_err(err("library"))?;
    let names = ["m", "sxx", "syy", "szz"];
    let lib_values = [lib.m, lib.sxx, lib.syy, lib.szz];
    let mut devs = vec![Vec::new(); 4];
    for n in [8, 10, 12] {
        let spec = FiniteChainSpec::new(n, params).map_err(err(n))?;
        let ed = oracle::oracle_correlators(&spec, 1).map_err(err(n))?;
        for (k, v) in [ed.m, ed.sxx, ed.syy, ed.szz].into_iter().enumerate() {
            devs[k].push((lib_values[k] - v).abs());
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 0..4 {
        let d = &devs[k];
        let monotone = d.windows(2).all(|w| w[1] < w[0]);
        let last = d[2];
        let small = last <= 0.02 || last <= 0.05 * lib_values[k].abs();
        ok &= monotone && small;
        parts.push(format!("{}: {:.2e} {:.2e} {:.2e}", names[k], d[0], d[1], d[2]));
    }
    let summary = parts.join("; ");
    if !ok {
        return Err(summary);
    }
    within_time(start, Duration::from_secs(300), summary)
}

fn derivative_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(13);
    let h = 1e-3;
    let mut worst = 0.0f64;
    let mut at = String::new();
    let mut check = |what: String, analytic: f64, fd: f64| {
        let dev = (analytic - fd).abs() / fd.abs().max(1e-8);
        if dev > worst {
            worst = dev;
            at = what;
        }
    };
    for _ in 0..20 {
        let params = random_point(&mut rng);
        for tag in ParameterTag::ALL {
            let x = params.get(tag);
            let analytic = chain::magnetization_partial(&params, tag, &cfg()).map_err(err(x))?;
            let fd = finite_difference(|v| chain::magnetization(&params.with(tag, v), &cfg()), x, h)
                .map_err(err(x))?;
            check(format!("dm/d{tag} at {params:?}"), analytic, fd.value);
            for k in [-3, -1, 0, 1, 2, 4] {
                let analytic = chain::g_coefficient_partial(&params, k, tag, &cfg()).map_err(err(k))?;
                let fd = finite_difference(|v| chain::g_coefficient(&params.with(tag, v), k, &cfg()), x, h)
                    .map_err(err(k))?;
                check(format!("dG_{k}/d{tag} at {params:?}"), analytic, fd.value);
            }
        }
    }
    let summary = format!("max rel deviation {worst:.2e} at {at}");
    if worst <= 1e-6 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn asymptotic_decay() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for params in [p(0.9, 1.0, 0.0), p(1.1, 0.25, 0.1)] {
        let fit = asymptotic_decay_check(&params, &[8, 16, 32, 64], &cfg()).map_err(err(params.j));
        match fit {
            Ok(fit) => {
                ok &= (fit.slope + 1.0).abs() <= 0.15;
                parts.push(format!(
                    "J={} gamma={} D={}: slope {:.3}",
                    params.j, params.gamma, params.d, fit.slope
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(e);
            }
        }
    }
    let summary = parts.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("infinite-separation identity", infinite_identity),
        ("closed form vs spectral QFI", closed_form_vs_spectral),
        ("bound ordering F <= H", bound_ordering),
        ("saturation floors", saturation_floors),
        ("criticality divergence proxy", divergence_proxy),
        ("D=0 parity", parity),
        ("optimal-distance ordinals", optimal_distance),
        ("Uhlmann nullity", uhlmann_nullity),
        ("weak commutativity", weak_commutativity),
        ("sloppiness structure", sloppiness),
        ("bound magnitude gap", bound_gap),
        ("oracle convergence", oracle_convergence),
        ("derivative correctness", derivative_correctness),
        ("asymptotic decay", asymptotic_decay),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS {label}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
