use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use sbridge_core::io::{self, format_float};
use sbridge_core::metrics::{emd_samples, ks_samples, ReportOptions};
use sbridge_core::ot::{brownian_cost, mccann_interpolant, sinkhorn as solve_sinkhorn};
use sbridge_core::rng::derive_seed;
use sbridge_core::sde::{make_prior_drift, simulate, InitialLaw};
use sbridge_core::{
    generate_preset, marginal_report, run_ipml_with, Direction, MarginalSamples, Metric, MetricReport, PresetName,
    PriorSpec, TimeGrid,
};

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::{CliError, CommonArgs};

const DEFAULT_OUT: &str = "sbridge_out";
const SINKHORN_MAX_ITERS: usize = 2000;
const SINKHORN_TOL: f64 = 1e-9;

/// Config file merged with command-line flags; flags win.
fn settings(common: &CommonArgs, preset: Option<&str>) -> Result<RunConfig, CliError> {
    let mut c = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = preset.or(common.preset.as_deref()) {
        p.parse::<PresetName>().map_err(|e| CliError::Usage(e.to_string()))?;
        c.preset = Some(p.to_string());
    }
    if let Some(s) = common.seed {
        c.seed = Some(s);
    }
    if let Some(n) = common.n {
        if n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        c.n = Some(n);
    }
    if let Some(o) = &common.out {
        c.out = Some(o.clone());
    }
    Ok(c)
}

struct Problem {
    pi0: MarginalSamples,
    pi1: Option<MarginalSamples>,
    preset_prior: Option<PriorSpec>,
}

fn load_problem(c: &RunConfig, need_pi1: bool) -> Result<Problem, CliError> {
    let seed = c.seed.unwrap_or(0);
    let from_files = (&c.data.pi0, &c.data.pi1);
    let problem = match (c.preset_name(), from_files) {
        (_, (Some(a), b)) => Problem {
            pi0: io::load_marginal(a, "pi0")?,
            pi1: b.as_ref().map(|b| io::load_marginal(b, "pi1")).transpose()?,
            preset_prior: None,
        },
        (Some(name), (None, _)) => {
            let p = generate_preset(name, seed, c.n.unwrap_or(name.default_size()))?;
            Problem {
                pi0: p.pi0,
                pi1: Some(p.pi1),
                preset_prior: Some(p.prior),
            }
        }
        (None, (None, _)) => {
            return Err(CliError::Usage(
                "no marginals: pass --preset <name> or set data.pi0 / data.pi1 in the config".into(),
            ))
        }
    };
    if need_pi1 && problem.pi1.is_none() {
        return Err(CliError::Usage("this command needs a target marginal (data.pi1)".into()));
    }
    if let Some(pi1) = &problem.pi1 {
        if pi1.dim() != problem.pi0.dim() {
            return Err(sbridge_core::Error::DimensionMismatch {
                context: "marginal dimensions (pi0 vs pi1)",
                expected: problem.pi0.dim(),
                found: pi1.dim(),
            }
            .into());
        }
    }
    Ok(problem)
}

fn out_dir(c: &RunConfig) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs `body` against a fresh output directory, deleting what it wrote if
/// it fails.
fn with_outputs<F>(dir: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Outputs) -> Result<(), CliError>,
{
    let mut out = Outputs::create(dir)?;
    match body(&mut out) {
        Ok(()) => Ok(()),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn io_err(path: PathBuf) -> impl FnOnce(std::io::Error) -> CliError {
    move |source| CliError::Io { path, source }
}

fn print_report(report: &MetricReport) {
    println!("{:<12} {:<6} {:>12}", "label", "metric", "value");
    for e in &report.entries {
        println!("{:<12} {:<6} {:>12.6}", e.label, e.metric, e.value);
    }
}

fn load_frames(c: &RunConfig) -> Result<Vec<(f64, MarginalSamples)>, CliError> {
    c.data
        .frames
        .iter()
        .zip(&c.data.frame_times)
        .enumerate()
        .map(|(i, (path, &t))| Ok((t, io::load_marginal(path, &format!("frame_{i}"))?)))
        .collect()
}

/// McCann interpolants of the Brownian entropic coupling at each frame time,
/// scored against the frames.
fn ot_frame_baseline(
    pi0: &MarginalSamples,
    pi1: &MarginalSamples,
    gamma: f64,
    frames: &[(f64, MarginalSamples)],
    seed: u64,
    report: &mut MetricReport,
) -> Result<(), CliError> {
    let cost = brownian_cost(pi0.data().view(), pi1.data().view(), gamma)?;
    let (n, m) = (pi0.len(), pi1.len());
    let plan = solve_sinkhorn(
        cost.view(),
        1.0,
        &vec![1.0 / n as f64; n],
        &vec![1.0 / m as f64; m],
        SINKHORN_MAX_ITERS,
        SINKHORN_TOL,
    )?;
    if !plan.converged {
        eprintln!(
            "warning: Sinkhorn stopped after {} iterations with marginal violation {:e}",
            plan.iterations, plan.marginal_violation
        );
    }
    for (i, (t, frame)) in frames.iter().enumerate() {
        let s = derive_seed(seed, 100 + i as u64);
        let interp = mccann_interpolant(&plan, pi0.data().view(), pi1.data().view(), *t, n, s)?;
        let v = emd_samples(interp.data().view(), frame.data().view(), derive_seed(s, 1))?;
        report.push(format!("ot_frame_{i}"), Metric::Emd, v)?;
    }
    Ok(())
}

pub fn solve(common: &CommonArgs, preset: Option<&str>) -> Result<(), CliError> {
    let c = settings(common, preset)?;
    let problem = load_problem(&c, true)?;
    let pi1 = problem.pi1.expect("checked");
    let pi0 = problem.pi0;
    let seed = c.seed.unwrap_or(0);
    let prior = c.prior(problem.preset_prior.as_ref(), pi0.dim())?;
    let config = c.ipml_config(prior, seed)?;
    let frames = load_frames(&c)?;

    with_outputs(&out_dir(&c), |out| {
        let mut diag = out.file("diagnostics.jsonl")?;
        let diag_path = out.path("diagnostics.jsonl");
        let mut write_err = None;
        let result = run_ipml_with(&pi0, &pi1, &config, |record| {
            let line = serde_json::to_string(record).expect("plain record");
            if let Err(e) = writeln!(diag, "{line}").and_then(|_| diag.flush()) {
                write_err.get_or_insert(e);
            }
            eprintln!(
                "iteration {}: drift_mse {:.4}  emd_pi0 {:.4}  emd_pi1 {:.4}  ({} ms)",
                record.iteration, record.drift_mse, record.emd_pi0, record.emd_pi1, record.wall_ms
            );
        })?;
        if let Some(e) = write_err {
            return Err(io_err(diag_path)(e));
        }

        let options = ReportOptions {
            frames: frames.clone(),
            seed,
        };
        let mut report = marginal_report(&result, &pi0, &pi1, &config, &options)?;
        if !frames.is_empty() {
            ot_frame_baseline(&pi0, &pi1, config.gamma, &frames, seed, &mut report)?;
        }
        out.write_with("report.csv", |w| Ok(io::write_report(&report, w)?))?;
        out.write_with("trajectories_forward.csv", |w| {
            Ok(io::write_trajectories(&result.forward_paths, w)?)
        })?;
        out.write_with("trajectories_backward.csv", |w| {
            Ok(io::write_trajectories(&result.backward_paths, w)?)
        })?;

        print_report(&report);
        if let Some(name) = preset.or(c.preset.as_deref()) {
            let get = |label: &str, m: Metric| report.get(label, m).unwrap_or(f64::NAN);
            let row = [
                get("pi0", Metric::Ks),
                get("pi0", Metric::Emd),
                get("pi1", Metric::Ks),
                get("pi1", Metric::Emd),
            ];
            out.write_with("summary.csv", |w| {
                let header = "preset,method,seed,pi0_ks,pi0_emd,pi1_ks,pi1_emd";
                let values: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
                writeln!(w, "{header}\n{name},IPML,{seed},{}", values.join(","))
                    .map_err(io_err(PathBuf::from("summary.csv")))
            })?;
            println!();
            println!("| {:<20} | {:>8} | {:>8} | {:>8} | {:>8} |", "", "pi0 KS", "pi0 EMD", "pi1 KS", "pi1 EMD");
            println!("|{:-<22}|{:->10}|{:->10}|{:->10}|{:->10}|", "", "", "", "", "");
            println!(
                "| {:<20} | {:>8.4} | {:>8.4} | {:>8.4} | {:>8.4} |",
                format!("IPML {name}"),
                row[0],
                row[1],
                row[2],
                row[3]
            );
        }
        eprintln!("wrote {} files to {}", out.written().len(), out.dir().display());
        Ok(())
    })
}

pub fn prior_sim(common: &CommonArgs) -> Result<(), CliError> {
    let c = settings(common, None)?;
    let problem = load_problem(&c, false)?;
    let seed = c.seed.unwrap_or(0);
    let prior = c.prior(problem.preset_prior.as_ref(), problem.pi0.dim())?;
    let config = c.ipml_config(prior.clone(), seed)?;
    let grid = TimeGrid::new(config.dt)?;
    let n = problem.pi0.len();
    let x0 = match &prior.initial {
        Some(InitialLaw::Gaussian(g)) => g.sample(n, &mut sbridge_core::rng::seeded(derive_seed(seed, 1)), "x0")?,
        _ => problem.pi0.clone(),
    };
    let drift = make_prior_drift(&prior)?;
    let paths = simulate(drift.as_ref(), prior.gamma, &x0, &grid, derive_seed(seed, 2), Direction::Forward)?;

    with_outputs(&out_dir(&c), |out| {
        out.write_with("trajectories_prior.csv", |w| Ok(io::write_trajectories(&paths, w)?))?;
        let terminal = MarginalSamples::new(paths.terminal(), "prior_terminal")?;
        out.write_with("prior_terminal.csv", |w| Ok(io::write_marginal(&terminal, w)?))?;
        if let Some(pi1) = &problem.pi1 {
            let mut report = MetricReport::default();
            report.push("pi1", Metric::Ks, ks_samples(terminal.data().view(), pi1.data().view())?)?;
            report.push(
                "pi1",
                Metric::Emd,
                emd_samples(terminal.data().view(), pi1.data().view(), derive_seed(seed, 3))?,
            )?;
            out.write_with("report.csv", |w| Ok(io::write_report(&report, w)?))?;
            print_report(&report);
        }
        Ok(())
    })
}

pub fn eval(a: &Path, b: &Path, common: &CommonArgs) -> Result<(), CliError> {
    let c = settings(common, None)?;
    let sa = io::load_marginal(a, "a")?;
    let sb = io::load_marginal(b, "b")?;
    if sa.dim() != sb.dim() {
        return Err(sbridge_core::Error::DimensionMismatch {
            context: "sample dimensions",
            expected: sa.dim(),
            found: sb.dim(),
        }
        .into());
    }
    let seed = c.seed.unwrap_or(0);
    let mut report = MetricReport::default();
    report.push("eval", Metric::Emd, emd_samples(sa.data().view(), sb.data().view(), seed)?)?;
    report.push("eval", Metric::Ks, ks_samples(sa.data().view(), sb.data().view())?)?;
    print_report(&report);
    if c.out.is_some() {
        with_outputs(&out_dir(&c), |out| {
            out.write_with("report.csv", |w| Ok(io::write_report(&report, w)?))
        })?;
    }
    Ok(())
}

pub fn sinkhorn(a: Option<&Path>, b: Option<&Path>, common: &CommonArgs) -> Result<(), CliError> {
    let mut c = settings(common, None)?;
    match (a, b) {
        (Some(a), Some(b)) => {
            c.data.pi0 = Some(a.to_path_buf());
            c.data.pi1 = Some(b.to_path_buf());
        }
        (None, None) => {}
        _ => return Err(CliError::Usage("sinkhorn takes two CSV paths or none".into())),
    }
    let problem = load_problem(&c, true)?;
    let (pi0, pi1) = (problem.pi0, problem.pi1.expect("checked"));
    let gamma = c
        .gamma
        .or(problem.preset_prior.as_ref().map(|p| p.gamma))
        .unwrap_or(1.0);
    let s = &c.sinkhorn;
    let epsilon = s.epsilon.unwrap_or(1.0);
    let cost = brownian_cost(pi0.data().view(), pi1.data().view(), gamma)?;
    let (n, m) = (pi0.len(), pi1.len());
    let plan = solve_sinkhorn(
        cost.view(),
        epsilon,
        &vec![1.0 / n as f64; n],
        &vec![1.0 / m as f64; m],
        s.max_iters.unwrap_or(SINKHORN_MAX_ITERS),
        s.tol.unwrap_or(SINKHORN_TOL),
    )?;
    if !plan.converged {
        eprintln!(
            "warning: not converged after {} iterations (marginal violation {:e})",
            plan.iterations, plan.marginal_violation
        );
    }
    let transport: f64 = plan.coupling.iter().zip(cost.iter()).map(|(q, c)| q * c).sum();
    let times = s.times.clone().unwrap_or_else(|| vec![0.5]);
    if let Some(t) = times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::Config(format!("invalid value for `sinkhorn.times`: {t} is outside [0, 1]")));
    }
    let n_out = s.n_out.unwrap_or(n);
    let seed = c.seed.unwrap_or(0);

    with_outputs(&out_dir(&c), |out| {
        let summary: Vec<(&str, String)> = vec![
            ("n", n.to_string()),
            ("m", m.to_string()),
            ("gamma", format_float(gamma)),
            ("epsilon", format_float(epsilon)),
            ("converged", plan.converged.to_string()),
            ("iterations", plan.iterations.to_string()),
            ("marginal_violation", format_float(plan.marginal_violation)),
            ("transport_cost", format_float(transport)),
            ("objective", format_float(plan.primal_objective(cost.view()))),
        ];
        out.write_with("sinkhorn_summary.csv", |w| {
            let mut text = String::from("key,value\n");
            for (k, v) in &summary {
                text.push_str(&format!("{k},{v}\n"));
            }
            w.write_all(text.as_bytes()).map_err(io_err(PathBuf::from("sinkhorn_summary.csv")))
        })?;
        let row_sums: Array1<f64> = plan.coupling.sum_axis(ndarray::Axis(1));
        out.write_with("sinkhorn_duals.csv", |w| {
            let mut text = String::from("index,log_u,log_v,row_mass\n");
            for i in 0..n.max(m) {
                let cell = |v: Option<&f64>| v.map(|x| format_float(*x)).unwrap_or_default();
                text.push_str(&format!(
                    "{i},{},{},{}\n",
                    cell(plan.log_u.get(i)),
                    cell(plan.log_v.get(i)),
                    cell(row_sums.get(i))
                ));
            }
            w.write_all(text.as_bytes()).map_err(io_err(PathBuf::from("sinkhorn_duals.csv")))
        })?;
        for (i, &t) in times.iter().enumerate() {
            let samples = mccann_interpolant(&plan, pi0.data().view(), pi1.data().view(), t, n_out, derive_seed(seed, i as u64))?;
            out.write_with(&format!("interpolant_{i}.csv"), |w| Ok(io::write_marginal(&samples, w)?))?;
        }
        for (k, v) in &summary {
            println!("{k:<20} {v}");
        }
        Ok(())
    })
}
