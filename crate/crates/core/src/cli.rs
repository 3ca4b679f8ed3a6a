//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 on any runtime or validation failure, 2 on a
//! usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{parse_config, parse_pole, Config};
use crate::linearizer::lie_relative_degree_check;
use crate::model::ExtendedState;
use crate::sim::{simulate_batch, summarize, MetricsOptions, TimeSeries};
use crate::tracker::place_gains;
use crate::verify::{decoupling_suite, linearization_check, relative_degree_suite};

#[derive(Debug, Parser)]
#[command(name = "adiol", version, about = "Adaptive linearizing control of a planar bicopter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run closed-loop simulations; arguments are CONFIG OUT.csv pairs
    Simulate {
        #[arg(value_name = "CONFIG OUT", num_args = 2.., required = true)]
        pairs: Vec<PathBuf>,
    },
    /// Place the error-dynamics poles and print the resulting gains
    Gains {
        #[arg(value_name = "POLE", num_args = 4, allow_hyphen_values = true, value_parser = pole_arg)]
        poles: Vec<Complex64>,
    },
    /// Run the numeric oracle suite for a configuration
    Verify { config: PathBuf },
    /// Recompute summary metrics from a simulation CSV
    Report {
        csv: PathBuf,
        /// Start of the RMSE window (s)
        #[arg(long, default_value_t = MetricsOptions::default().rmse_from)]
        rmse_from: f64,
    },
}

fn pole_arg(s: &str) -> Result<Complex64, String> {
    parse_pole(s).ok_or_else(|| format!("`{s}` is not a real or complex number"))
}

type CmdResult = Result<bool, String>;

fn load_config(path: &Path) -> Result<Config, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_simulate(pairs: &[PathBuf], out: &mut dyn Write) -> CmdResult {
    if pairs.len() % 2 != 0 {
        return Err("simulate expects CONFIG OUT pairs".into());
    }
    let jobs: Vec<(Config, &PathBuf)> = pairs
        .chunks(2)
        .map(|p| load_config(&p[0]).map(|c| (c, &p[1])))
        .collect::<Result<_, _>>()?;
    let cfgs: Vec<_> = jobs.iter().map(|(c, _)| c.sim.clone()).collect();
    let results = simulate_batch(&cfgs);
    let many = jobs.len() > 1;
    for ((_, path), result) in jobs.iter().zip(results) {
        let ts = result.map_err(|e| e.to_string())?;
        let file = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        ts.write_csv(BufWriter::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
        let metrics = summarize(&ts, &MetricsOptions::default()).map_err(|e| e.to_string())?;
        if many {
            writeln!(out, "run: {}", path.display()).map_err(|e| e.to_string())?;
        }
        write!(out, "{}", metrics.to_lines()).map_err(|e| e.to_string())?;
    }
    Ok(true)
}

fn cmd_gains(poles: &[Complex64], out: &mut dyn Write) -> CmdResult {
    let arr: [Complex64; 4] = poles.try_into().map_err(|_| "gains expects exactly 4 poles".to_string())?;
    let g = place_gains(arr).map_err(|e| e.to_string())?;
    let fmt = |z: &Complex64| {
        if z.im == 0.0 {
            format!("{}", z.re)
        } else {
            format!("{}{:+}i", z.re, z.im)
        }
    };
    let mags = g.magnitudes();
    let eig: Vec<String> = g.closed_loop_eigenvalues().iter().map(fmt).collect();
    let body = format!(
        "k1: {}\nk2: {}\nk3: {}\nk4: {}\nclosed_loop_eigenvalues: {}\n",
        mags[0],
        mags[1],
        mags[2],
        mags[3],
        eig.join(", ")
    );
    out.write_all(body.as_bytes()).map_err(|e| e.to_string())?;
    Ok(true)
}

fn cmd_verify(path: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config(path)?;
    let opts = cfg.verify;
    let p = cfg.sim.plant;
    let mut lines = Vec::new();

    let rd = relative_degree_suite(&p, opts.samples, opts.seed, opts.lie_step).map_err(|e| e.to_string())?;
    lines.push(format!("relative_degree.samples: {}", rd.samples));
    lines.push(format!("relative_degree.passed: {}", rd.passed));
    lines.push(format!("relative_degree.worst_lower_scaled: {:e}", rd.worst_lower));
    lines.push(format!("relative_degree.worst_beta_rel_err: {:e}", rd.worst_beta_rel));

    let mut hover = ExtendedState::zeros();
    hover[6] = p.m * p.g;
    let hv = lie_relative_degree_check(&hover, &p, opts.lie_step).map_err(|e| e.to_string())?;
    lines.push(format!("relative_degree.hover_det: {:e}", hv.det));

    let dc = decoupling_suite(1000, opts.seed, cfg.sim.u_min).map_err(|e| e.to_string())?;
    lines.push(format!("decoupling.inverse_err: {:e}", dc.inverse_err));
    lines.push(format!("decoupling.det_rel_err: {:e}", dc.det_rel_err));

    let lin = linearization_check(&cfg.sim, opts.transient).map_err(|e| e.to_string())?;
    lines.push(format!("linearization.rel_err: {:e}", lin.rel_err));
    lines.push(format!("linearization.compared: {}", lin.compared));

    let ok = rd.ok() && hv.passed() && dc.ok() && lin.ok() && lin.compared > 0;
    lines.push(format!("relative_degree: {}", verdict(rd.ok() && hv.passed())));
    lines.push(format!("decoupling: {}", verdict(dc.ok())));
    lines.push(format!("linearization: {}", verdict(lin.ok())));
    lines.push(format!("verify: {}", verdict(ok)));
    writeln!(out, "{}", lines.join("\n")).map_err(|e| e.to_string())?;
    Ok(ok)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn cmd_report(csv: &Path, rmse_from: f64, out: &mut dyn Write) -> CmdResult {
    let file = fs::File::open(csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    let ts = TimeSeries::read_csv(file).map_err(|e| format!("{}: {e}", csv.display()))?;
    let opts = MetricsOptions { rmse_from, ..Default::default() };
    let metrics = summarize(&ts, &opts).map_err(|e| e.to_string())?;
    write!(out, "{}", metrics.to_lines()).map_err(|e| e.to_string())?;
    Ok(true)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate { pairs } => cmd_simulate(pairs, out),
        Command::Gains { poles } => cmd_gains(poles, out),
        Command::Verify { config } => cmd_verify(config, out),
        Command::Report { csv, rmse_from } => cmd_report(csv, *rmse_from, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}
