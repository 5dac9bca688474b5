use std::fmt::Write as _;

use serde_json::json;

use super::{Failure, Outcome, Settings};
use crate::averaging::{
    harmonic, sarnak_sum, tail_estimates, LogNormalization, PrefixAverages, RealTrace,
};
use crate::equicontinuity::{
    default_eps_grid, dichotomy_classify, gap_values, modulus_profile, oxtoby_experiment,
    sensitivity_at_quantile, unique_ergodicity_test, write_modulus_csv, DichotomyConfig, GapScheme,
    PairSampler, UniqueErgodicityReport,
};
use crate::measures::{hausdorff, vset_estimate, EmpiricalMeasure, MeasureSet, Scheme, TestFamily};
use crate::systems::{PointRef, SystemSpec};

type Run = Result<Outcome, Failure>;

pub(crate) fn dispatch(s: &Settings) -> Run {
    match s.experiment.as_str() {
        "average" => average(s),
        "vset" => vset(s),
        "defect" => defect(s),
        "modulus" => modulus(s),
        "sensitivity" => sensitivity(s),
        "dichotomy" => dichotomy(s),
        "unique-ergodicity" => unique_ergodicity(s),
        "oxtoby" => oxtoby(s),
        "sarnak" => sarnak(s),
        "report" => report(s),
        other => Err(Failure::Internal(format!("unhandled experiment {other}"))),
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(internal)
}

/// Gap schemes selected by `--scheme` (both = Cesàro and logarithmic).
fn gap_schemes(s: &Settings) -> Vec<GapScheme> {
    match s.scheme.as_str() {
        "both" => vec![GapScheme::Cesaro, GapScheme::Logarithmic],
        other => vec![other.parse().expect("validated when resolving")],
    }
}

/// The one gap scheme an experiment needs; `both` means Cesàro.
fn single_gap_scheme(s: &Settings) -> GapScheme {
    gap_schemes(s)[0]
}

fn measure_schemes(s: &Settings) -> Result<Vec<Scheme>, Failure> {
    match s.scheme.as_str() {
        "cesaro" => Ok(vec![Scheme::Arithmetic]),
        "log" => Ok(vec![Scheme::Logarithmic]),
        "both" => Ok(vec![Scheme::Arithmetic, Scheme::Logarithmic]),
        other => Err(config(format!(
            "{} takes --scheme cesaro, log or both, not {other}",
            s.experiment
        ))),
    }
}

fn csv_header(cols: &[&str]) -> String {
    let mut out = cols.join(",");
    out.push('\n');
    out
}

fn average(s: &Settings) -> Run {
    let y = s.y.as_ref().ok_or_else(|| config("average needs --y"))?;
    let schedule = s.schedule.schedule(s.n)?;
    let d = s.system.pair_distances(&s.x, y, s.n)?;
    let schemes = gap_schemes(s);
    let columns = schemes
        .iter()
        .map(|g| gap_values(&d, &schedule, *g))
        .collect::<crate::Result<Vec<_>>>()?;

    let names: Vec<&str> = schemes.iter().map(|g| g.name()).collect();
    let mut csv = csv_header(&[&["n"], names.as_slice()].concat());
    for (i, n) in schedule.iter().enumerate() {
        write!(csv, "{n}").expect("string write");
        for col in &columns {
            write!(csv, ",{:.16e}", col[i]).expect("string write");
        }
        csv.push('\n');
    }
    let mut tails = serde_json::Map::new();
    let mut summary = format!("average: {} n={}", s.system.kind_name(), s.n);
    for (name, col) in names.iter().zip(&columns) {
        let t = tail_estimates(&schedule, col, s.schedule.window_fraction)?;
        write!(summary, " {name}={:.6}", col[col.len() - 1]).expect("string write");
        tails.insert(
            name.to_string(),
            json!({ "final": col[col.len() - 1], "tail_sup": t.sup_est, "tail_inf": t.inf_est }),
        );
    }
    Ok(Outcome {
        summary,
        report: json!({ "schedule_len": schedule.len(), "averages": tails }),
        csv: Some(csv),
    })
}

fn vset(s: &Settings) -> Run {
    let schedule = s.schedule.schedule(s.n)?;
    let family = TestFamily::canonical(&s.system, s.depth)?;
    let mut sets: Vec<(Scheme, MeasureSet)> = Vec::new();
    for scheme in measure_schemes(s)? {
        let set = vset_estimate(
            &s.system,
            &s.x,
            &schedule,
            scheme,
            s.cluster_tol,
            &family,
            s.schedule.window_fraction,
        )?;
        sets.push((scheme, set));
    }
    let mut csv = csv_header(&["scheme", "n", "cluster", "rho_to_representative"]);
    let mut summary = format!("vset: {} n={}", s.system.kind_name(), s.n);
    let mut report = serde_json::Map::new();
    for (scheme, set) in &sets {
        for a in set.assignments() {
            writeln!(
                csv,
                "{},{},{},{:.16e}",
                scheme.name(),
                a.horizon,
                a.cluster,
                a.rho_to_representative
            )
            .expect("string write");
        }
        write!(summary, " {}_clusters={}", scheme.name(), set.len()).expect("string write");
        report.insert(scheme.name().to_string(), to_json(&set.summary())?);
    }
    if let [(_, a), (_, b)] = sets.as_slice() {
        let h = hausdorff(a, b, &family)?;
        write!(summary, " hausdorff={h:.6}").expect("string write");
        report.insert("hausdorff_arithmetic_logarithmic".into(), json!(h));
    }
    Ok(Outcome {
        summary,
        report: report.into(),
        csv: Some(csv),
    })
}

fn defect(s: &Settings) -> Run {
    let schedule = s.schedule.schedule(s.n)?;
    let family = TestFamily::canonical(&s.system, s.depth)?;
    let mut csv = csv_header(&[
        "n",
        "arithmetic",
        "logarithmic",
        "arithmetic_bound",
        "logarithmic_bound",
    ]);
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in &schedule {
        let a = family.pushforward_defect(&EmpiricalMeasure::streamed(
            &s.system,
            &s.x,
            0,
            n,
            Scheme::Arithmetic,
        )?)?;
        let l = family.pushforward_defect(&EmpiricalMeasure::streamed(
            &s.system,
            &s.x,
            0,
            n,
            Scheme::Logarithmic,
        )?)?;
        let (ab, lb) = (2.0 / n as f64, 3.0 / harmonic(n)?);
        writeln!(csv, "{n},{a:.16e},{l:.16e},{ab:.16e},{lb:.16e}").expect("string write");
        rows.push(json!({ "n": n, "arithmetic": a, "logarithmic": l, "arithmetic_bound": ab, "logarithmic_bound": lb }));
    }
    let last = rows.last().cloned().unwrap_or_default();
    let within = rows.iter().all(|r| {
        r["arithmetic"].as_f64() <= r["arithmetic_bound"].as_f64()
            && r["logarithmic"].as_f64() <= r["logarithmic_bound"].as_f64()
    });
    let summary = format!(
        "defect: {} n={} arithmetic={:.3e} logarithmic={:.3e} within_bounds={within}",
        s.system.kind_name(),
        s.n,
        last["arithmetic"].as_f64().unwrap_or(f64::NAN),
        last["logarithmic"].as_f64().unwrap_or(f64::NAN)
    );
    Ok(Outcome {
        summary,
        report: json!({ "rows": rows, "within_bounds": within }),
        csv: Some(csv),
    })
}

fn modulus(s: &Settings) -> Run {
    let scheme = single_gap_scheme(s);
    let profile = modulus_profile(
        &s.system,
        &default_eps_grid(s.eps_count),
        &PairSampler::natural(s.seed),
        s.n,
        scheme,
        s.samples,
        &s.schedule,
    )?;
    let mut csv = Vec::new();
    write_modulus_csv(&profile, &mut csv).map_err(internal)?;
    let summary = format!(
        "modulus: {} n={} scheme={} complete={} failures={}",
        s.system.kind_name(),
        s.n,
        scheme,
        profile.is_complete(),
        profile.failures().len()
    );
    Ok(Outcome {
        summary,
        report: to_json(&profile)?,
        csv: Some(String::from_utf8(csv).map_err(internal)?),
    })
}

fn sampler(s: &Settings) -> PairSampler {
    match s.sampler.as_str() {
        "natural" => PairSampler::natural(s.seed),
        _ => PairSampler::ball(s.radius, s.seed),
    }
}

fn sensitivity(s: &Settings) -> Run {
    let scheme = single_gap_scheme(s);
    let r = sensitivity_at_quantile(
        &s.system,
        &sampler(s),
        s.n,
        scheme,
        s.pairs,
        &s.schedule,
        s.quantile,
    )?;
    let summary = format!(
        "sensitivity: {} n={} scheme={} eps_estimate={:.6}",
        s.system.kind_name(),
        s.n,
        scheme,
        r.eps_estimate
    );
    Ok(Outcome {
        summary,
        report: to_json(&r)?,
        csv: None,
    })
}

fn dichotomy(s: &Settings) -> Run {
    let cfg = DichotomyConfig {
        eps_grid: default_eps_grid(s.eps_count),
        n_eval: s.n,
        scheme: single_gap_scheme(s),
        samples_per_delta: s.samples,
        pair_count: s.pairs,
        ball_radius: s.radius,
        threshold: s.threshold,
        seed: s.seed,
        schedule: s.schedule,
    };
    let v = dichotomy_classify(&s.system, &cfg)?;
    let mut csv = Vec::new();
    write_modulus_csv(&v.profile, &mut csv).map_err(internal)?;
    let summary = format!(
        "dichotomy: {} n={} verdict={:?} eps_estimate={:.6} complete_profile={}",
        s.system.kind_name(),
        s.n,
        v.verdict,
        v.sensitivity.eps_estimate,
        v.profile.is_complete()
    );
    Ok(Outcome {
        summary,
        report: to_json(&v)?,
        csv: Some(String::from_utf8(csv).map_err(internal)?),
    })
}

fn start_points(s: &Settings, count: usize) -> crate::Result<Vec<PointRef>> {
    if !s.start.is_empty() {
        return Ok(s.start.clone());
    }
    let sampler = PairSampler::natural(s.seed);
    (0..count as u64)
        .map(|i| sampler.sample(&s.system, i).map(|p| p.0))
        .collect()
}

fn ue_reports(
    s: &Settings,
    count: usize,
    family: &TestFamily,
) -> Result<Vec<UniqueErgodicityReport>, Failure> {
    let starts = start_points(s, count)?;
    measure_schemes(s)?
        .into_iter()
        .map(|scheme| {
            unique_ergodicity_test(&s.system, &starts, s.n, scheme, family, s.tol)
                .map_err(Failure::from)
        })
        .collect()
}

fn unique_ergodicity(s: &Settings) -> Run {
    let family = TestFamily::canonical(&s.system, s.depth)?;
    let reports = ue_reports(s, s.starts, &family)?;
    let mut summary = format!("unique-ergodicity: {} n={}", s.system.kind_name(), s.n);
    for r in &reports {
        write!(
            summary,
            " {}={:?}(max_rho={:.3e})",
            r.scheme.name(),
            r.verdict,
            r.max_pairwise_rho
        )
        .expect("string write");
    }
    let agree = reports.windows(2).all(|w| w[0].verdict == w[1].verdict);
    Ok(Outcome {
        summary,
        report: json!({ "reports": to_json(&reports)?, "schemes_agree": agree }),
        csv: None,
    })
}

fn oxtoby(s: &Settings) -> Run {
    let r = oxtoby_experiment(s.alpha, s.n, s.mc, s.seed)?;
    let summary = format!(
        "oxtoby: alpha={} n={} avg_at_zero={:.6} m_of_u={:.6}±{:.6} gap={:.6}",
        s.alpha, s.n, r.avg_at_zero, r.m_of_u_estimate, r.sigma, r.gap
    );
    Ok(Outcome {
        summary,
        report: to_json(&r)?,
        csv: None,
    })
}

/// A mean-zero-ish observable per system: cos 2πx on circles, ±1 by head
/// symbol on shifts, the left factor on products.
fn observable(sys: &SystemSpec, p: &PointRef) -> f64 {
    match (sys, p) {
        (SystemSpec::BinaryShift { .. }, PointRef::Shift(sp)) => {
            1.0 - 2.0 * f64::from(sp.head_symbol())
        }
        (SystemSpec::ProductSystem { left, .. }, PointRef::Pair { left: l, .. }) => {
            observable(left, l)
        }
        _ => (2.0 * std::f64::consts::PI * sys.coordinate(p).unwrap_or(0.0)).cos(),
    }
}

fn sarnak(s: &Settings) -> Run {
    if s.n < 2 {
        return Err(config("sarnak needs --n >= 2"));
    }
    let normalization = match s.normalization.as_str() {
        "harmonic" => LogNormalization::Harmonic,
        _ => LogNormalization::NaturalLog,
    };
    // trace[k] = f(T^k x), k = 1..=n
    let start = s.system.step(&s.x)?;
    let values: Vec<f64> = s
        .system
        .orbit(start)
        .take(s.n)
        .map(|p| observable(&s.system, &p))
        .collect();
    let trace = RealTrace::new(values, 1.0)?;
    let schedule: Vec<usize> = s
        .schedule
        .schedule(s.n)?
        .into_iter()
        .filter(|&n| n >= 2)
        .collect();
    let mut csv = csv_header(&["n", "cesaro", "log"]);
    for &n in &schedule {
        let c = sarnak_sum(&trace, n, false, normalization)?;
        let l = sarnak_sum(&trace, n, true, normalization)?;
        writeln!(csv, "{n},{c:.16e},{l:.16e}").expect("string write");
    }
    let c = sarnak_sum(&trace, s.n, false, normalization)?;
    let l = sarnak_sum(&trace, s.n, true, normalization)?;
    let summary = format!(
        "sarnak: {} n={} cesaro={c:.6} log={l:.6}",
        s.system.kind_name(),
        s.n
    );
    Ok(Outcome {
        summary,
        report: json!({ "cesaro": c, "log": l, "normalization": s.normalization }),
        csv: Some(csv),
    })
}

fn report(s: &Settings) -> Run {
    let schedule = s.schedule.schedule(s.n)?;
    let family = TestFamily::canonical(&s.system, s.depth)?;
    let mut out = serde_json::Map::new();
    let mut summary = format!("report: {} n={}", s.system.kind_name(), s.n);

    if let Some(y) = &s.y {
        let d = s.system.pair_distances(&s.x, y, s.n)?;
        let (ces, log) = PrefixAverages::new(&d).at_schedule(&schedule)?;
        let tc = tail_estimates(&schedule, &ces, s.schedule.window_fraction)?;
        let tl = tail_estimates(&schedule, &log, s.schedule.window_fraction)?;
        write!(
            summary,
            " gap_cesaro={:.6} gap_log={:.6}",
            ces[ces.len() - 1],
            log[log.len() - 1]
        )
        .expect("string write");
        out.insert(
            "pair_gap".into(),
            json!({ "cesaro": to_json(&tc)?, "log": to_json(&tl)? }),
        );
    }
    for scheme in [Scheme::Arithmetic, Scheme::Logarithmic] {
        let mu = EmpiricalMeasure::streamed(&s.system, &s.x, 0, s.n, scheme)?;
        let defect = family.pushforward_defect(&mu)?;
        let set = vset_estimate(
            &s.system,
            &s.x,
            &schedule,
            scheme,
            s.cluster_tol,
            &family,
            s.schedule.window_fraction,
        )?;
        write!(summary, " {}_clusters={}", scheme.name(), set.len()).expect("string write");
        out.insert(
            scheme.name().to_string(),
            json!({ "defect": defect, "vset": to_json(&set.summary())? }),
        );
    }
    let ue = ue_reports(
        &Settings {
            scheme: "both".into(),
            ..s.clone()
        },
        4,
        &family,
    )?;
    write!(summary, " unique_ergodicity={:?}", ue[0].verdict).expect("string write");
    out.insert("unique_ergodicity".into(), to_json(&ue)?);
    Ok(Outcome {
        summary,
        report: out.into(),
        csv: None,
    })
}
