use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use periodyn::certify::{
    certify, check_condition_2_1, check_cor1_2_14, check_cor2_2_18, check_l_3_4, find_xi, search_condition_3_3,
    search_thm_a_3_1, weighted_norm, Certificate, CertifyError, CertifyOptions, ConstantDelayForm, Criterion,
    CriterionReport, ThmASearch, Witness,
};
use periodyn::ensemble::run_ensemble;
use periodyn::integrate::{simulate, InitialCondition, SimError, SimOptions};
use periodyn::model::{NetworkModel, Term, Wave};
use periodyn::periodic::{find_periodic_orbit, fit_decay, verify_periodicity, PeriodicError, PeriodicOptions};

use crate::args::{CertifyArgs, CompareArgs, FindPeriodArgs, RateArgs, SimulateArgs};
use crate::config::{parse_config, to_config};
use crate::plot::line_chart;
use crate::report::{sha256_hex, ConfigInfo, CriterionEntry, EnsembleCounts, NamedFit, OutputFile, PeriodicResult, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Marks a report as finished with a non-zero exit code.
struct Stop;

type Step<T> = Result<T, Stop>;

fn input_error(report: &mut RunReport, message: String) -> Stop {
    report.fail("input-error", EXIT_INPUT, "input", message);
    Stop
}

fn load(path: &Path, report: &mut RunReport) -> Step<NetworkModel> {
    let bytes = fs::read(path).map_err(|e| input_error(report, format!("{}: {e}", path.display())))?;
    report.config = Some(ConfigInfo {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    let text = String::from_utf8(bytes).map_err(|e| input_error(report, format!("{}: {e}", path.display())))?;
    let model = parse_config(&text).map_err(|e| input_error(report, format!("{}: {e}", path.display())))?;
    report.model = Some(to_config(&model));
    let validation = model.validate();
    report.validation = validation.violations.iter().map(|v| v.to_string()).collect();
    if !validation.is_admissible() {
        let msg = format!("{}: model is not admissible: {}", path.display(), report.validation.join("; "));
        return Err(input_error(report, msg));
    }
    Ok(model)
}

fn parse_ic(text: Option<&str>, n: usize, report: &mut RunReport) -> Step<InitialCondition> {
    let Some(text) = text else {
        return Ok(InitialCondition::zeros(n));
    };
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(InitialCondition::Constant(v)),
        Ok(v) if v.len() != n => Err(input_error(report, format!("--ic has {} values, model has {n}", v.len()))),
        _ => Err(input_error(report, format!("--ic '{text}' is not a list of finite numbers"))),
    }
}

fn certify_into(model: &NetworkModel, opts: &CertifyOptions, report: &mut RunReport) -> Result<Certificate, CertifyError> {
    report.unit_weights = Some(check_condition_2_1(model, &vec![1.0; model.n], opts.grid_points));
    let result = certify(model, opts);
    if let Ok(cert) = &result {
        report.certificate = Some(cert.clone());
    }
    result
}

/// Certificate when the model has one; otherwise stops unless `force`.
fn require_certificate(model: &NetworkModel, grid: usize, force: bool, report: &mut RunReport) -> Step<Option<Certificate>> {
    let opts = CertifyOptions {
        grid_points: grid,
        ..CertifyOptions::default()
    };
    match certify_into(model, &opts, report) {
        Ok(cert) => Ok(Some(cert)),
        Err(e) if force => {
            log::warn!("model not certified ({e}); continuing because of --force");
            Ok(None)
        }
        Err(e) => {
            report.fail(
                "not-certified",
                EXIT_NOT_CERTIFIED,
                "not-certified",
                format!("{e}; pass --force to run anyway"),
            );
            Err(Stop)
        }
    }
}

fn sim_failure(report: &mut RunReport, e: SimError) -> Stop {
    match e {
        SimError::Divergence { t } => {
            report.fail("diverged", EXIT_NO_CONVERGENCE, "divergence", e.to_string());
            if let Some(err) = report.error.as_mut() {
                err.time = Some(t);
            }
        }
        other => report.fail("input-error", EXIT_INPUT, "simulation", other.to_string()),
    }
    Stop
}

fn write_output(report: &mut RunReport, kind: &'static str, path: &Path, bytes: &[u8], rows: Option<usize>) -> Step<()> {
    fs::write(path, bytes).map_err(|e| input_error(report, format!("{}: {e}", path.display())))?;
    report.outputs.push(OutputFile {
        kind,
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
        rows,
    });
    Ok(())
}

fn finish(mut report: RunReport, body: impl FnOnce(&mut RunReport) -> Step<()>) -> RunReport {
    let _ = body(&mut report);
    report
}

pub fn cmd_certify(args: &CertifyArgs) -> RunReport {
    finish(RunReport::new("certify"), |report| {
        report.param("config", args.config.display().to_string());
        report.param("grid", args.grid);
        report.param("tol", args.tol);
        let model = load(&args.config, report)?;
        let opts = CertifyOptions {
            grid_points: args.grid,
            alpha_tol: args.tol,
        };
        if let Err(e) = certify_into(&model, &opts, report) {
            report.fail("infeasible", EXIT_NOT_CERTIFIED, "infeasible", e.to_string());
            return Err(Stop);
        }
        report.status = "certified";
        Ok(())
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> RunReport {
    finish(RunReport::new("simulate"), |report| {
        report.param("config", args.config.display().to_string());
        report.param("t_end", args.t_end);
        report.param("h", args.h);
        report.param("ic", args.ic.as_deref().unwrap_or("0"));
        report.param("force", args.force);
        report.param("grid", args.grid);
        let model = load(&args.config, report)?;
        let ic = parse_ic(args.ic.as_deref(), model.n, report)?;
        require_certificate(&model, args.grid, args.force, report)?;
        let traj = simulate(&model, &ic, &SimOptions::new(args.t_end, args.h)).map_err(|e| sim_failure(report, e))?;

        let mut csv = Vec::new();
        traj.write_csv(&mut csv).map_err(|e| input_error(report, e.to_string()))?;
        write_output(report, "trajectory-csv", &args.out, &csv, Some(traj.len()))?;
        if let Some(plot) = &args.plot {
            let times: Vec<f64> = (0..traj.len()).map(|k| traj.time(k)).collect();
            let series: Vec<(String, Vec<f64>)> = (0..model.n)
                .map(|i| (format!("u_{}", i + 1), (0..traj.len()).map(|k| traj.state(k)[i]).collect()))
                .collect();
            let title = format!("trajectory, omega = {}", model.omega);
            let svg = line_chart(&title, "t", "u_i(t)", &times, &series);
            write_output(report, "plot-svg", plot, svg.as_bytes(), None)?;
        }
        Ok(())
    })
}

/// Periodic solution of `u_i' = -d_i u_i + I_i(t)` for constant `d_i > 0`,
/// when every coupling is inert and the inputs are built from
/// constants, `sin`, `cos`, `sin2` and `cos2`.
pub fn decoupled_linear_orbit(model: &NetworkModel) -> Option<impl Fn(f64, usize) -> f64 + '_> {
    use periodyn::model::ActivationKind::Zero;
    let n = model.n;
    for i in 0..n {
        for j in 0..n {
            if !model.a[(i, j)].is_zero() && model.g[j].kind != Zero {
                return None;
            }
            if !model.kernels[(i, j)].is_empty() && model.f[j].kind != Zero {
                return None;
            }
        }
        if !model.d[i].is_constant() || !model.d[i].eval(0.0).is_finite() || model.d[i].eval(0.0) <= 0.0 {
            return None;
        }
        let supported = model.inputs[i].terms().iter().all(|t| match t {
            Term::Const(_) => true,
            Term::Wave { wave, .. } => matches!(wave, Wave::Sin | Wave::Cos | Wave::Sin2 | Wave::Cos2),
        });
        if !supported {
            return None;
        }
    }
    Some(move |t: f64, i: usize| {
        let d = model.d[i].eval(0.0);
        // response to c*cos(wt) + s*sin(wt)
        let harmonic = |c: f64, s: f64, w: f64| {
            let (sn, cs) = (w * t).sin_cos();
            (c * (d * cs + w * sn) + s * (d * sn - w * cs)) / (d * d + w * w)
        };
        model.inputs[i]
            .terms()
            .iter()
            .map(|term| match *term {
                Term::Const(c) => c / d,
                Term::Wave { amp, wave, k } => {
                    let w = k as f64 * PI;
                    match wave {
                        Wave::Sin => harmonic(0.0, amp, w),
                        Wave::Cos => harmonic(amp, 0.0, w),
                        Wave::Sin2 => 0.5 * amp / d + harmonic(-0.5 * amp, 0.0, 2.0 * w),
                        Wave::Cos2 => 0.5 * amp / d + harmonic(0.5 * amp, 0.0, 2.0 * w),
                        _ => f64::NAN,
                    }
                }
            })
            .sum()
    })
}

pub fn cmd_find_period(args: &FindPeriodArgs) -> RunReport {
    finish(RunReport::new("find-period"), |report| {
        report.param("config", args.config.display().to_string());
        report.param("fp_tol", args.fp_tol);
        report.param("max_iters", args.max_iters);
        report.param("h", args.h);
        report.param("ic", args.ic.as_deref().unwrap_or("0"));
        report.param("verify_periods", args.verify_periods);
        report.param("force", args.force);
        report.param("grid", args.grid);
        let model = load(&args.config, report)?;
        let ic = parse_ic(args.ic.as_deref(), model.n, report)?;
        let cert = require_certificate(&model, args.grid, args.force, report)?;
        let opts = PeriodicOptions {
            h: args.h,
            fp_tol: args.fp_tol,
            max_iters: args.max_iters,
            xi: cert.as_ref().map(|c| c.xi.clone()),
            ..PeriodicOptions::default()
        };
        let orbit = match find_periodic_orbit(&model, &ic, &opts) {
            Ok(o) => o,
            Err(PeriodicError::NoConvergence {
                iterations,
                residual_history,
            }) => {
                let last = residual_history.last().copied().unwrap_or(f64::NAN);
                report.fail(
                    "no-convergence",
                    EXIT_NO_CONVERGENCE,
                    "no-convergence",
                    format!("fixed-point iteration stopped after {iterations} iterations with residual {last:e}"),
                );
                if let Some(err) = report.error.as_mut() {
                    err.residual_history = Some(residual_history);
                }
                return Err(Stop);
            }
            Err(PeriodicError::Sim(e)) => return Err(sim_failure(report, e)),
            Err(e) => return Err(input_error(report, e.to_string())),
        };
        let deviation = if args.verify_periods > 0 {
            Some(verify_periodicity(&model, &orbit.segment, args.verify_periods, &opts).map_err(|e| match e {
                PeriodicError::Sim(e) => sim_failure(report, e),
                e => input_error(report, e.to_string()),
            })?)
        } else {
            None
        };
        let closed_form_error = decoupled_linear_orbit(&model).map(|exact| {
            let mut worst = 0.0f64;
            for k in 0..orbit.segment.nodes() {
                let t = k as f64 * args.h;
                for (i, v) in orbit.segment.state(k).iter().enumerate() {
                    worst = worst.max((v - exact(t, i)).abs());
                }
            }
            worst
        });
        report.periodic = Some(PeriodicResult {
            residual: orbit.residual,
            iterations: orbit.iterations,
            residual_history: orbit.residual_history.clone(),
            nodes_per_period: orbit.segment.nodes(),
            seam_gap: orbit.segment.seam_gap(),
            verify_periods: args.verify_periods,
            deviation,
            closed_form_error,
        });
        if let Some(out) = &args.out {
            let mut csv = Vec::new();
            orbit.segment.write_csv(&mut csv).map_err(|e| input_error(report, e.to_string()))?;
            write_output(report, "period-csv", out, &csv, Some(orbit.segment.nodes()))?;
        }
        report.status = "converged";
        Ok(())
    })
}

fn paper_entry(model: &NetworkModel, grid: usize) -> (CriterionEntry, Option<Vec<f64>>) {
    match find_xi(model, grid) {
        Ok(cert) => {
            let entry = CriterionEntry {
                criterion: Criterion::Paper2_1,
                satisfied: Some(true),
                worst_row_residual: Some(-cert.eta),
                worst_row: None,
                witness: Some(Witness {
                    weights: cert.xi.clone(),
                    alpha: 0.0,
                    a_exp: None,
                    b_exp: None,
                }),
                note: None,
            };
            (entry, Some(cert.xi))
        }
        Err(e) => {
            let (worst_row, eta) = match &e {
                CertifyError::Infeasible { worst_row, best_eta, .. } => (Some(worst_row + 1), Some(-best_eta)),
                CertifyError::Solver(_) => (None, None),
            };
            let entry = CriterionEntry {
                criterion: Criterion::Paper2_1,
                satisfied: Some(false),
                worst_row_residual: eta,
                worst_row,
                witness: None,
                note: Some(e.to_string()),
            };
            (entry, None)
        }
    }
}

fn shape_entry(criterion: Criterion, r: Result<CriterionReport, periodyn::certify::ShapeError>) -> CriterionEntry {
    match r {
        Ok(r) => CriterionEntry::from_report(&r),
        Err(e) => CriterionEntry::not_applicable(criterion, e.to_string()),
    }
}

pub fn cmd_compare(args: &CompareArgs) -> RunReport {
    finish(RunReport::new("compare"), |report| {
        report.param("config", args.config.as_ref().map(|p| p.display().to_string()));
        report.param("grid", args.grid);
        report.param("ensemble", args.ensemble);
        report.param("seed", args.seed);
        report.param("draws", args.draws);
        if let Some(path) = &args.config {
            let model = load(path, report)?;
            let (paper, xi) = paper_entry(&model, args.grid);
            report.criteria.push(paper);
            let weights = xi.clone().unwrap_or_else(|| vec![1.0; model.n]);
            report
                .criteria
                .push(shape_entry(Criterion::Cor1_2_14, check_cor1_2_14(&model, &weights, args.grid)));
            report
                .criteria
                .push(shape_entry(Criterion::Cor2_2_18, check_cor2_2_18(&model, &weights, args.grid)));
            match ConstantDelayForm::from_model(&model, args.grid) {
                Ok(form) => {
                    let candidates: Vec<Vec<f64>> = xi.into_iter().collect();
                    let search = ThmASearch {
                        draws: args.draws,
                        seed: args.seed,
                    };
                    let rivals = [
                        search_thm_a_3_1(&form, 0.0, &candidates, search),
                        search_condition_3_3(&form, 0.0),
                        check_l_3_4(&form),
                    ];
                    report.criteria.extend(rivals.iter().map(CriterionEntry::from_report));
                }
                Err(e) => {
                    for c in [Criterion::ThmA3_1, Criterion::ThmB3_3, Criterion::L3_4] {
                        report.criteria.push(CriterionEntry::not_applicable(c, e.to_string()));
                    }
                }
            }
        }
        if let Some(count) = args.ensemble {
            let summary = run_ensemble(count, args.seed, args.grid);
            report.ensemble = Some(EnsembleCounts::from(&summary));
        }
        Ok(())
    })
}

struct CsvSeries {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

fn read_csv(path: &Path, report: &mut RunReport) -> Step<CsvSeries> {
    let text = fs::read_to_string(path).map_err(|e| input_error(report, format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(input_error(report, format!("{}:1: expected header 't,u_1,...'", path.display())));
    }
    let mut out = CsvSeries {
        times: Vec::new(),
        states: Vec::new(),
    };
    for (row, line) in lines.enumerate() {
        let vals: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == cols.len() => {
                out.times.push(v[0]);
                out.states.push(v[1..].to_vec());
            }
            _ => {
                let msg = format!("{}:{}: expected {} numbers", path.display(), row + 2, cols.len());
                return Err(input_error(report, msg));
            }
        }
    }
    Ok(out)
}

pub fn cmd_rate(args: &RateArgs) -> RunReport {
    finish(RunReport::new("rate"), |report| {
        report.param("first", args.first.display().to_string());
        report.param("second", args.second.display().to_string());
        report.param("config", args.config.as_ref().map(|p| p.display().to_string()));
        report.param("grid", args.grid);
        report.param("from", args.from);
        let a = read_csv(&args.first, report)?;
        let b = read_csv(&args.second, report)?;
        if a.times != b.times || a.states.first().map(Vec::len) != b.states.first().map(Vec::len) {
            return Err(input_error(report, "the two CSV files do not share a time grid and dimension".into()));
        }
        let n = a.states.first().map_or(0, Vec::len);
        let mut xi = vec![1.0; n];
        let mut certified_alpha = None;
        if let Some(path) = &args.config {
            let model = load(path, report)?;
            if model.n != n {
                return Err(input_error(report, format!("model has {} states, CSV has {n}", model.n)));
            }
            let opts = CertifyOptions {
                grid_points: args.grid,
                ..CertifyOptions::default()
            };
            match certify_into(&model, &opts, report) {
                Ok(cert) => {
                    xi = cert.xi.clone();
                    certified_alpha = Some(cert.alpha);
                }
                Err(e) => log::warn!("no certified rate to compare with: {e}"),
            }
        }
        let t_end = a.times.last().copied().unwrap_or(0.0);
        let window = (args.from.unwrap_or(t_end / 4.0), t_end);
        let gaps = a.times.iter().zip(a.states.iter().zip(&b.states)).map(|(&t, (u, v))| {
            let diff: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
            (t, weighted_norm(&diff, &xi))
        });
        match fit_decay(gaps, window) {
            Ok(fit) => report.rate_fits.push(NamedFit {
                name: "trajectory-gap".into(),
                fit,
                certified_alpha,
            }),
            Err(e) => {
                report.fail("degenerate-fit", EXIT_INPUT, "fit", e.to_string());
                return Err(Stop);
            }
        }
        Ok(())
    })
}

/// One-paragraph account of a report for stderr.
pub fn summary(report: &RunReport) -> String {
    let mut lines = Vec::new();
    if let Some(err) = &report.error {
        lines.push(format!("{}: {} (exit {})", report.command, err.message, report.exit_code));
    } else {
        lines.push(format!("{}: {}", report.command, report.status));
    }
    if let Some(u) = &report.unit_weights {
        lines.push(format!(
            "  unit weights: margin {:.6} ({}; tightest row {} at t={})",
            u.eta,
            if u.satisfied { "holds" } else { "fails" },
            u.worst_row + 1,
            u.worst_t
        ));
    }
    if let Some(c) = &report.certificate {
        let xi: Vec<String> = c.xi.iter().map(|x| format!("{x:.6}")).collect();
        lines.push(format!("  xi = [{}], eta = {:.6}, alpha = {:.6}", xi.join(", "), c.eta, c.alpha));
        lines.push(format!("  bounds: J = {:.6}, M = {:.6}, N = {:.6}", c.bounds.j, c.bounds.m, c.bounds.n));
    }
    for c in &report.criteria {
        let state = match c.satisfied {
            Some(true) => "satisfied".to_string(),
            Some(false) => "not satisfied".to_string(),
            None => "n/a".to_string(),
        };
        let residual = c.worst_row_residual.map_or(String::new(), |r| format!(", worst residual {r:.6}"));
        let note = c.note.as_ref().map_or(String::new(), |n| format!(" ({n})"));
        lines.push(format!("  {:<10} {state}{residual}{note}", c.criterion.label()));
    }
    if let Some(e) = &report.ensemble {
        lines.push(format!(
            "  ensemble seed {} x {}: weights {}, cor1 {}, thmA {}, thmB {}, L {}; thmA without weights {}, weights without thmA {}",
            e.seed, e.instances, e.paper, e.cor1, e.thm_a, e.thm_b, e.l, e.thm_a_without_paper, e.paper_without_thm_a
        ));
    }
    if let Some(p) = &report.periodic {
        lines.push(format!("  residual {:.3e} after {} iterations", p.residual, p.iterations));
        if let Some(d) = p.deviation {
            lines.push(format!("  periodicity deviation over {} periods: {d:.3e}", p.verify_periods));
        }
        if let Some(e) = p.closed_form_error {
            lines.push(format!("  max node error vs closed form: {e:.3e}"));
        }
    }
    for f in &report.rate_fits {
        let cert = f.certified_alpha.map_or(String::new(), |a| format!(", certified {a:.6}"));
        lines.push(format!(
            "  {}: alpha_emp {:.6} (r^2 {:.4}, {} points){cert}",
            f.name, f.fit.alpha_emp, f.fit.r_squared, f.fit.points
        ));
    }
    for o in &report.outputs {
        let rows = o.rows.map_or(String::new(), |r| format!(", {r} rows"));
        lines.push(format!("  wrote {} ({}{rows})", o.path, o.kind));
    }
    lines.join("\n")
}
