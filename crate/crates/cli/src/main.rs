use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_ee::metrics::BeamformerSolution;
use isac_ee::scenario::{self, draw_channels_seeded, make_config, parse_config_text, RawConfig};
use isac_ee::solvers::AlgorithmOptions;
use isac_ee_cli::sweep::{run_pareto, run_sweep, Algorithm, SweepResult, SweepSpec, SweptParam, ThresholdScale};
use isac_ee_cli::verify::{self, VerifyOptions};
use isac_ee_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "isac-ee", version, about = "Energy-efficient ISAC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize communication EE for a point target.
    EecPoint(RunArgs),
    /// Maximize communication EE for an extended target.
    EecExtended(RunArgs),
    /// Maximize sensing EE for a point target.
    EesPoint(RunArgs),
    /// Maximize sensing EE for an extended target.
    EesExtended(RunArgs),
    /// EE_C versus EE_S tradeoff curve.
    Pareto(ParetoArgs),
    /// Power-minimization and sum-rate baselines.
    Baselines(RunArgs),
    /// Run the acceptance checks; exits nonzero if any fails.
    Verify(VerifyArgs),
}

/// Scenario parameters. Values may carry units, e.g. `30dBm`, `0.15deg`, `10dB`.
#[derive(Args, Clone, Default)]
struct ScenarioArgs {
    /// Flat key = value TOML file with scenario parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antennas.
    #[arg(long = "M", value_name = "M")]
    m: Option<String>,
    /// Receive antennas.
    #[arg(long = "N-rx", value_name = "N")]
    n_rx: Option<String>,
    /// Snapshots per frame.
    #[arg(long = "L", value_name = "L")]
    l: Option<String>,
    /// Number of users.
    #[arg(long = "K", value_name = "K")]
    k: Option<String>,
    /// Power-amplifier efficiency.
    #[arg(long)]
    eps_pa: Option<String>,
    /// Circuit power.
    #[arg(long = "P0", value_name = "POWER")]
    p0: Option<String>,
    /// Transmit power budget.
    #[arg(long = "Pmax", value_name = "POWER")]
    pmax: Option<String>,
    /// Communication noise power.
    #[arg(long)]
    sigma_c2: Option<String>,
    /// Sensing noise power.
    #[arg(long)]
    sigma_s2: Option<String>,
    /// SINR threshold, one value or a comma-separated list per user.
    #[arg(long)]
    gamma: Option<String>,
    /// Root-CRB threshold of the point target.
    #[arg(long)]
    rho: Option<String>,
    /// CRB threshold of the extended target.
    #[arg(long)]
    tau: Option<String>,
    /// Target angle.
    #[arg(long)]
    theta: Option<String>,
    /// Reflection coefficient, `re`, `re,im` or `a+bj`.
    #[arg(long)]
    alpha: Option<String>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn raw(&self) -> Result<RawConfig> {
        let mut raw = scenario::default_raw();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            raw.extend(parse_config_text(&text)?);
        }
        let flags = [
            ("M", &self.m),
            ("N_rx", &self.n_rx),
            ("L", &self.l),
            ("K", &self.k),
            ("eps_pa", &self.eps_pa),
            ("P0", &self.p0),
            ("Pmax", &self.pmax),
            ("sigma_c2", &self.sigma_c2),
            ("sigma_s2", &self.sigma_s2),
            ("gamma", &self.gamma),
            ("rho", &self.rho),
            ("tau", &self.tau),
            ("theta", &self.theta),
            ("alpha", &self.alpha),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                raw.insert(key.to_string(), v.clone());
            }
        }
        if let Some(s) = self.seed {
            raw.insert("seed".into(), s.to_string());
        }
        make_config(&raw)?;
        Ok(raw)
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output directory for CSV and SVG files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep this parameter: rho (deg), gamma (dB), Pmax (dBm) or K.
    #[arg(long, requires = "grid")]
    sweep: Option<String>,
    /// Comma-separated sweep values, ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Vec<f64>,
    /// Monte-Carlo trials per sweep point.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Run trials one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Clone)]
struct ParetoArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// EE_S thresholds, ascending. Fractions of each trial's largest EE_S
    /// unless --absolute is given.
    #[arg(long, value_delimiter = ',', default_value = "0,0.125,0.25,0.375,0.5,0.625,0.75,0.875,1")]
    grid: Vec<f64>,
    /// Treat grid values as absolute thresholds.
    #[arg(long)]
    absolute: bool,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Trials per point of the trend sweeps.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep the CSV and SVG output of the trend sweeps here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn seed_of(raw: &RawConfig) -> u64 {
    raw.get("seed").and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn print_summary(r: &SweepResult) {
    println!("{:>16} {:>12} {:>12} {:>9} {:>7} {:>9}", r.param.name(), "mean_ee_c", "mean_ee_s", "feasible", "iters", "wall_s");
    for row in &r.rows {
        println!(
            "{:>16} {:>12.5} {:>12.4} {:>9.2} {:>7.1} {:>9.3}",
            row.param, row.mean_ee_c, row.mean_ee_s, row.feasible_fraction, row.mean_iterations, row.mean_wall_s
        );
    }
    if r.all_infeasible() {
        eprintln!("warning: no trial was feasible at any grid point");
    }
}

fn print_solution(name: &str, s: &BeamformerSolution) {
    println!("[{name}]");
    for (k, v) in &s.achieved {
        if *v != 0.0 && v.abs() < 1e-3 {
            println!("  {k:<28} {v:.6e}");
        } else {
            println!("  {k:<28} {v:.6}");
        }
    }
}

fn write_solution(dir: &Path, name: &str, s: &BeamformerSolution) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{name}_metrics.csv")))?;
    w.write_record(["key", "value"])?;
    for (k, v) in &s.achieved {
        w.write_record([k.clone(), format!("{v}")])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(format!("{name}_beams.csv")))?;
    w.write_record(["user", "antenna", "re", "im"])?;
    for (k, col) in s.w.column_iter().enumerate() {
        for (m, z) in col.iter().enumerate() {
            w.write_record([k.to_string(), m.to_string(), format!("{}", z.re), format!("{}", z.im)])?;
        }
    }
    w.flush()?;
    if let Some(r) = &s.rprobe {
        let mut w = csv::Writer::from_path(dir.join(format!("{name}_probe.csv")))?;
        w.write_record(["row", "col", "re", "im"])?;
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                w.write_record([i.to_string(), j.to_string(), format!("{}", r[(i, j)].re), format!("{}", r[(i, j)].im)])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn run(alg: &[Algorithm], a: &RunArgs) -> Result<bool> {
    let raw = a.scenario.raw()?;
    let seed = seed_of(&raw);
    match &a.sweep {
        Some(p) => {
            let param = SweptParam::parse(p).filter(|p| *p != SweptParam::Threshold).ok_or_else(|| CliError::Invalid(format!("cannot sweep '{p}'")))?;
            let mut any = false;
            for &al in alg {
                let mut spec = SweepSpec::new(al, param, a.grid.clone());
                spec.trials = a.trials;
                spec.seed = seed;
                spec.base = raw.clone();
                spec.parallel = !a.sequential;
                spec.out_dir = a.out.as_ref().map(|d| if alg.len() > 1 { d.join(al.name()) } else { d.clone() });
                let r = run_sweep(&spec)?;
                println!("# {}", al.name());
                print_summary(&r);
                any |= !r.all_infeasible();
            }
            Ok(any)
        }
        None => {
            let cfg = make_config(&raw)?;
            let ch = draw_channels_seeded(&cfg, seed);
            let opts = AlgorithmOptions::default();
            let mut ok = true;
            for &al in alg {
                match al.solve(&cfg, &ch, &opts) {
                    Ok(s) => {
                        print_solution(al.name(), &s);
                        if let Some(d) = &a.out {
                            write_solution(d, al.name(), &s)?;
                        }
                    }
                    Err(e) => {
                        println!("[{}] {e}", al.name());
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
    }
}

fn pareto(a: &ParetoArgs) -> Result<bool> {
    let raw = a.scenario.raw()?;
    let mut spec = SweepSpec::new(Algorithm::EecPoint, SweptParam::Threshold, a.grid.clone());
    spec.trials = a.trials;
    spec.seed = seed_of(&raw);
    spec.base = raw;
    spec.parallel = !a.sequential;
    spec.threshold_scale = if a.absolute { ThresholdScale::Absolute } else { ThresholdScale::FractionOfMax };
    spec.out_dir = a.out.clone();
    let r = run_pareto(&spec)?;
    print_summary(&r);
    println!("# boundary (mean EE_S threshold, mean EE_C)");
    for (e, c) in r.boundary() {
        println!("{e:>16.4} {c:>12.5}");
    }
    Ok(!r.all_infeasible())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::EecPoint(a) => run(&[Algorithm::EecPoint], a),
        Command::EecExtended(a) => run(&[Algorithm::EecExtended], a),
        Command::EesPoint(a) => run(&[Algorithm::EesPoint], a),
        Command::EesExtended(a) => run(&[Algorithm::EesExtended], a),
        Command::Baselines(a) => run(&[Algorithm::PowerMin, Algorithm::SumRate], a),
        Command::Pareto(a) => pareto(a),
        Command::Verify(a) => {
            let opts = VerifyOptions {
                trend_trials: a.trials,
                seed: a.seed,
                out_dir: a.out.clone(),
            };
            let results = verify::run_with(&opts, |c| println!("{}", c.line()));
            Ok(results.iter().all(|c| c.pass))
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
