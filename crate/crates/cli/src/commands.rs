use std::path::PathBuf;

use anyhow::{bail, Result};
use chebfit::active::{fit_constant_factor, fit_linf, fit_relative_error};
use chebfit::measures::{density, MeasureSpec};
use chebfit::verify::{
    adversary_lower_bound, ratio_stability_checks, runge_comparison, sensitivity_stability_checks, standard_grid,
    verify_ratio_bounds, verify_sensitivity_bounds, verify_unclipped_endcap_decay, AdversaryConfig, CellOutcome,
    RatioReport, SensitivityReport,
};
use chebfit::weights::{operator_reweighted_leverage, ReweightedGram};
use chebfit::FitReport64;
use serde_json::{json, Value};

use crate::config::{parse_oracle, show_p, RunConfig};
use crate::io::{fmt_f64, to_csv, to_json, Outputs, FORMAT_VERSION};

/// Process exit status of a command that produced its outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    CellsFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::CellsFailed => 3,
        }
    }
}

fn p_value(p: f64) -> Value {
    if p.is_finite() {
        json!(p)
    } else {
        json!(show_p(p))
    }
}

fn cells_status(cells: &[CellOutcome]) -> Status {
    if cells.iter().all(|c| c.passed) {
        Status::Ok
    } else {
        Status::CellsFailed
    }
}

fn report_cells(cells: &[CellOutcome]) {
    for c in cells.iter().filter(|c| !c.passed) {
        match &c.error {
            Some(e) => eprintln!("FAIL {} {}: {e}", c.cell, c.check),
            None => eprintln!("FAIL {} {}: {} vs bound {}", c.cell, c.check, c.value, c.bound),
        }
    }
    println!("{} of {} checks passed", cells.iter().filter(|c| c.passed).count(), cells.len());
}

pub struct FitArgs {
    pub oracle: String,
    pub d: usize,
    pub p: f64,
    pub n: usize,
    pub seed: u64,
    pub constant: bool,
    pub linf_p: Option<f64>,
    pub out: PathBuf,
}

pub fn fit(a: &FitArgs) -> Result<Status> {
    let oracle = parse_oracle(&a.oracle)?;
    let (mode, rep): (&str, FitReport64) = if a.p.is_infinite() {
        ("linf", fit_linf(&oracle, a.d, a.n, a.seed, a.linf_p)?)
    } else if a.constant {
        ("constant", fit_constant_factor(&oracle, a.d, a.p, a.n, a.seed)?)
    } else {
        ("relative", fit_relative_error(&oracle, a.d, a.p, a.n, a.seed)?)
    };
    let mut config = RunConfig::new("fit")
        .set("oracle", &a.oracle)
        .set("d", a.d)
        .set("p", show_p(a.p))
        .set("n", a.n)
        .set("seed", a.seed)
        .set("mode", mode);
    if let Some(lp) = a.linf_p {
        config = config.set("linf_p", lp);
    }
    let stages: Vec<Value> = rep
        .stage_results
        .iter()
        .map(|s| {
            json!({
                "iterations": s.iterations,
                "converged": s.converged,
                "objective": s.objective,
                "smoothing_final": s.smoothing_final,
            })
        })
        .collect();
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "oracle": a.oracle,
        "mode": mode,
        "d": a.d,
        "p": p_value(a.p),
        "n": a.n,
        "seed": a.seed,
        "converged": rep.converged(),
        "n_queries": rep.n_queries,
        "est_error": rep.est_error,
        "coefficients": {
            "chebyshev_t": rep.poly.coeffs,
            "monomial": rep.poly_monomial.as_ref().map(|m| &m.coeffs),
        },
        "stages": stages,
    });
    let rows = rep.samples.iter().enumerate().flat_map(|(stage, s)| {
        (0..s.len()).map(move |i| {
            vec![
                fmt_f64(s.points[i]),
                fmt_f64(s.values[i]),
                fmt_f64(s.probs[i]),
                fmt_f64(s.rescales[i]),
                stage.to_string(),
            ]
        })
    });
    let mut out = Outputs::default();
    out.add(a.out.join("fit.json"), to_json(&doc)?);
    out.add(a.out.join("samples.csv"), to_csv(&["t", "b", "prob", "rescale", "stage"], rows)?);
    let paths = out.paths().iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
    out.commit()?;
    println!("seed {}", a.seed);
    println!("est_error {} ({} queries, {mode})", fmt_f64(rep.est_error), rep.n_queries);
    println!("wrote {paths}");
    Ok(if rep.converged() { Status::Ok } else { Status::NotConverged })
}

pub struct WeightsArgs {
    pub d: usize,
    pub p: f64,
    pub clip: f64,
    pub grid: usize,
    pub out: PathBuf,
}

/// Header of the `weights` CSV.
pub const WEIGHTS_HEADER: [&str; 5] = ["t", "v", "w", "tau_v", "tau_w"];

pub fn weights(a: &WeightsArgs) -> Result<Status> {
    let cheb = MeasureSpec::<f64>::chebyshev(a.d);
    let clipped = MeasureSpec::clipped(a.d, a.clip)?;
    let gram = ReweightedGram::new(clipped, a.p, None)?;
    let mut rows = Vec::new();
    for t in standard_grid::<f64>(a.grid) {
        rows.push(vec![
            fmt_f64(t),
            fmt_f64(density(&cheb, t)?),
            fmt_f64(density(&clipped, t)?),
            fmt_f64(operator_reweighted_leverage(t, a.d, a.p, &cheb)?),
            fmt_f64(gram.eval(t)?),
        ]);
    }
    let mut out = Outputs::default();
    out.add(&a.out, to_csv(&WEIGHTS_HEADER, rows)?);
    out.commit()?;
    println!("wrote {}", a.out.display());
    Ok(Status::Ok)
}

pub struct VerifyArgs {
    pub d: Vec<usize>,
    pub p: Vec<f64>,
    pub clip: Vec<f64>,
    pub grid: usize,
    pub sens_d: Vec<usize>,
    pub sens_p: Vec<f64>,
    pub sens_grid: usize,
    pub out: PathBuf,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn verify(a: &VerifyArgs) -> Result<Status> {
    let mut cells = Vec::new();

    let mut ratio_reports: Vec<RatioReport<f64>> = Vec::new();
    for &clip in &a.clip {
        let cell_params = a.d.iter().flat_map(|&d| a.p.iter().map(move |&p| (d, p)));
        for ((d, p), res) in cell_params.zip(verify_ratio_bounds(&a.d, &a.p, a.grid, clip)) {
            match res {
                Ok(r) => {
                    cells.extend(r.checks());
                    ratio_reports.push(r);
                }
                Err(e) => cells.push(CellOutcome::failed(&format!("d={d} p={} C={clip}", show_p(p)), "ratio", &e)),
            }
        }
    }
    cells.extend(ratio_stability_checks(&ratio_reports));

    let mut endcap_rows = Vec::new();
    for &d in &a.d {
        for &p in &a.p {
            match verify_unclipped_endcap_decay(d, p) {
                Ok(r) => {
                    cells.extend(r.checks());
                    for (t, v) in r.points.iter().zip(&r.ratios) {
                        endcap_rows.push(vec![d.to_string(), show_p(p), fmt_f64(*t), fmt_f64(*v)]);
                    }
                }
                Err(e) => cells.push(CellOutcome::failed(&format!("d={d} p={}", show_p(p)), "endcap", &e)),
            }
        }
    }

    let mut sens_reports: Vec<SensitivityReport<f64>> = Vec::new();
    for &d in &a.sens_d {
        for &p in &a.sens_p {
            match verify_sensitivity_bounds(d, p, a.sens_grid) {
                Ok(r) => {
                    cells.extend(r.checks());
                    sens_reports.push(r);
                }
                Err(e) => cells.push(CellOutcome::failed(&format!("d={d} p={}", show_p(p)), "sensitivity", &e)),
            }
        }
    }
    cells.extend(sensitivity_stability_checks(&sens_reports));

    let ratio_rows = ratio_reports.iter().flat_map(|r| {
        r.grid.iter().zip(&r.ratios).map(move |(t, v)| {
            vec![r.d.to_string(), show_p(r.p), fmt_f64(r.clip), fmt_f64(*t), fmt_f64(*v)]
        })
    });
    let sens_rows = sens_reports.iter().flat_map(|r| {
        r.grid
            .iter()
            .zip(&r.sensitivities)
            .map(move |(t, v)| vec![r.d.to_string(), show_p(r.p), fmt_f64(*t), fmt_f64(*v)])
    });
    let ratio_summary: Vec<Value> = ratio_reports
        .iter()
        .map(|r| {
            json!({
                "d": r.d, "p": r.p, "clip": r.clip,
                "max_ratio": r.max_ratio, "min_ratio": r.min_ratio,
                "min_ratio_times_log3d": r.min_ratio_times_log3d,
                "mid_min_ratio": r.mid_min_ratio, "mid_max_ratio": r.mid_max_ratio,
                "band_min_ratio": r.band_min_ratio,
            })
        })
        .collect();
    let sens_summary: Vec<Value> = sens_reports
        .iter()
        .map(|r| {
            json!({
                "d": r.d, "p": r.p, "global_bound": r.global_bound,
                "max_over_bound": r.max_over_bound, "min_sensitivity": r.min_sensitivity,
                "kappa": r.kappa,
            })
        })
        .collect();
    let config = RunConfig::new("verify")
        .set("d", join(&a.d))
        .set("p", a.p.iter().map(|&p| show_p(p)).collect::<Vec<_>>().join(","))
        .set("clip", join(&a.clip))
        .set("grid", a.grid)
        .set("sens_d", join(&a.sens_d))
        .set("sens_p", a.sens_p.iter().map(|&p| show_p(p)).collect::<Vec<_>>().join(","))
        .set("sens_grid", a.sens_grid);
    let all_passed = cells.iter().all(|c| c.passed);
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "all_passed": all_passed,
        "ratio": ratio_summary,
        "sensitivity": sens_summary,
        "cells": cells,
    });
    let mut out = Outputs::default();
    out.add(a.out.join("ratios.csv"), to_csv(&["d", "p", "clip", "t", "ratio"], ratio_rows)?);
    out.add(a.out.join("endcap.csv"), to_csv(&["d", "p", "t", "ratio"], endcap_rows)?);
    out.add(a.out.join("sensitivity.csv"), to_csv(&["d", "p", "t", "psi"], sens_rows)?);
    out.add(a.out.join("summary.json"), to_json(&summary)?);
    out.commit()?;
    report_cells(&cells);
    Ok(cells_status(&cells))
}

pub struct AdversaryArgs {
    pub p: f64,
    pub eps: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub degree: Option<usize>,
    pub half_width: Option<f64>,
    pub out: PathBuf,
}

pub fn adversary(a: &AdversaryArgs) -> Result<Status> {
    let config = AdversaryConfig {
        degree: a.degree,
        half_width: a.half_width,
        ..AdversaryConfig::new(a.p, a.eps, a.n, a.trials, a.seed)
    };
    let rep = adversary_lower_bound(&config)?;
    let cell = format!("p={} eps={} n={}", show_p(a.p), a.eps, a.n);
    // the failure claim applies once a miss is more likely than not
    let cells: Vec<CellOutcome> = if rep.analytic_miss_prob >= 0.5 {
        vec![CellOutcome {
            cell,
            check: "failure_rate".into(),
            value: rep.failure_rate,
            bound: 0.4,
            passed: rep.failure_rate >= 0.4,
            error: None,
        }]
    } else {
        Vec::new()
    };
    let mut run = RunConfig::new("adversary")
        .set("p", show_p(a.p))
        .set("eps", a.eps)
        .set("n", a.n)
        .set("trials", a.trials)
        .set("seed", a.seed);
    if let Some(d) = a.degree {
        run = run.set("degree", d);
    }
    if let Some(h) = a.half_width {
        run = run.set("half_width", h);
    }
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "config": run,
        "seed": a.seed,
        "degree": rep.degree,
        "interval": [rep.interval.0, rep.interval.1],
        "height": rep.height,
        "interval_mass": rep.interval_mass,
        "analytic_miss_prob": rep.analytic_miss_prob,
        "guarantee_constant": rep.guarantee_constant,
        "opt_pow": rep.opt_pow,
        "miss_rate": rep.miss_rate,
        "failure_rate": rep.failure_rate,
        "failure_rate_given_miss": rep.failure_rate_given_miss,
        "all_passed": cells.iter().all(|c| c.passed),
        "cells": cells,
    });
    let rows = rep.trials.iter().map(|t| {
        vec![
            t.trial.to_string(),
            t.seed.to_string(),
            t.sign.to_string(),
            u8::from(t.missed).to_string(),
            fmt_f64(t.error_pow),
            u8::from(t.failed).to_string(),
        ]
    });
    let mut out = Outputs::default();
    out.add(a.out.join("trials.csv"), to_csv(&["trial", "seed", "sign", "missed", "error_pow", "failed"], rows)?);
    out.add(a.out.join("summary.json"), to_json(&summary)?);
    out.commit()?;
    println!("seed {}", a.seed);
    println!(
        "miss_rate {:.3} (analytic {:.3}), failure_rate {:.3}",
        rep.miss_rate, rep.analytic_miss_prob, rep.failure_rate
    );
    report_cells(&cells);
    Ok(cells_status(&cells))
}

pub struct BenchArgs {
    pub which: String,
    pub d: usize,
    pub n: usize,
    pub seeds: usize,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn bench(a: &BenchArgs) -> Result<Status> {
    if a.which != "runge" {
        bail!("unknown benchmark {:?} (available: runge)", a.which);
    }
    let reports = (0..a.seeds.max(1) as u64)
        .map(|k| runge_comparison(a.d, a.n, a.seed.wrapping_add(k)))
        .collect::<chebfit::Result<Vec<_>>>()?;
    let mut ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let cell = format!("d={} n={}", a.d, a.n);
    let check = if a.n == a.d + 1 {
        CellOutcome {
            cell,
            check: "uniform_over_chebyshev".into(),
            value: median,
            bound: 10.0,
            passed: median >= 10.0,
            error: None,
        }
    } else {
        CellOutcome {
            cell,
            check: "median_uniform_over_chebyshev".into(),
            value: median,
            bound: 1.0,
            passed: median >= 1.0,
            error: None,
        }
    };
    let cells = vec![check];
    let rows = reports
        .iter()
        .map(|r| vec![r.seed.to_string(), fmt_f64(r.uniform_error), fmt_f64(r.chebyshev_error)]);
    let config = RunConfig::new("bench")
        .set("which", &a.which)
        .set("d", a.d)
        .set("n", a.n)
        .set("seeds", a.seeds)
        .set("seed", a.seed);
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "seed": a.seed,
        "nodes": reports[0].nodes,
        "median_ratio": median,
        "all_passed": cells.iter().all(|c| c.passed),
        "cells": cells,
    });
    let mut out = Outputs::default();
    out.add(a.out.join("runge.csv"), to_csv(&["seed", "uniform_error", "chebyshev_error"], rows)?);
    out.add(a.out.join("summary.json"), to_json(&summary)?);
    out.commit()?;
    println!("seed {}", a.seed);
    println!("median uniform/chebyshev error ratio {median:.4e}");
    report_cells(&cells);
    Ok(cells_status(&cells))
}
