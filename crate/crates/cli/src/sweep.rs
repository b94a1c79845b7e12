use std::path::PathBuf;
use std::time::Instant;

use isac_ee::metrics::BeamformerSolution;
use isac_ee::scenario::{self, draw_channels_seeded, make_config, ChannelSet, RawConfig, SystemConfig};
use isac_ee::solvers::{self, AlgorithmOptions, PointSpec};
use rayon::prelude::*;

use crate::{CliError, Result};

/// Solver run for every trial of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    EecPoint,
    EecExtended,
    EesPoint,
    EesExtended,
    /// Power minimization baseline.
    PowerMin,
    /// Sum-rate maximization baseline.
    SumRate,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::EecPoint,
        Algorithm::EecExtended,
        Algorithm::EesPoint,
        Algorithm::EesExtended,
        Algorithm::PowerMin,
        Algorithm::SumRate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::EecPoint => "eec-point",
            Algorithm::EecExtended => "eec-extended",
            Algorithm::EesPoint => "ees-point",
            Algorithm::EesExtended => "ees-extended",
            Algorithm::PowerMin => "ba1",
            Algorithm::SumRate => "ba2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn solve(&self, cfg: &SystemConfig, ch: &ChannelSet, opts: &AlgorithmOptions) -> isac_ee::Result<BeamformerSolution> {
        match self {
            Algorithm::EecPoint => solvers::solve_eec_point(cfg, ch, opts),
            Algorithm::EecExtended => solvers::solve_eec_extended(cfg, ch, opts),
            Algorithm::EesPoint => solvers::solve_ees_point(cfg, ch, opts),
            Algorithm::EesExtended => solvers::solve_ees_extended(cfg, ch, opts),
            Algorithm::PowerMin => solvers::baseline_power_min(cfg, ch, opts),
            Algorithm::SumRate => solvers::baseline_sumrate_max(cfg, ch, opts),
        }
    }
}

/// Parameter varied along a sweep, in its display unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweptParam {
    /// Root-CRB threshold, degrees.
    Rho,
    /// SINR threshold for every user, dB.
    Gamma,
    /// Power budget, dBm.
    Pmax,
    /// Number of users.
    Users,
    /// EE_S threshold of the tradeoff problem.
    Threshold,
}

impl SweptParam {
    /// Column label used in CSV files and plots.
    pub fn name(&self) -> &'static str {
        match self {
            SweptParam::Rho => "rho_deg",
            SweptParam::Gamma => "gamma_db",
            SweptParam::Pmax => "pmax_dbm",
            SweptParam::Users => "k",
            SweptParam::Threshold => "ee_s_threshold",
        }
    }

    /// Accepts the column label or the configuration key.
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rho" | "rho_deg" => SweptParam::Rho,
            "gamma" | "gamma_db" => SweptParam::Gamma,
            "Pmax" | "pmax" | "pmax_dbm" => SweptParam::Pmax,
            "K" | "k" => SweptParam::Users,
            "E" | "ee_s_threshold" => SweptParam::Threshold,
            _ => return None,
        })
    }

    fn apply(&self, raw: &mut RawConfig, v: f64) -> Result<()> {
        let (key, text) = match self {
            SweptParam::Rho => ("rho", format!("{v} deg")),
            SweptParam::Gamma => ("gamma", format!("{v} dB")),
            SweptParam::Pmax => ("Pmax", format!("{v} dBm")),
            SweptParam::Users => {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(CliError::Invalid(format!("user count must be a positive integer, got {v}")));
                }
                ("K", format!("{}", v as usize))
            }
            SweptParam::Threshold => return Ok(()),
        };
        raw.insert(key.to_string(), text);
        Ok(())
    }
}

/// How tradeoff grid values are turned into EE_S thresholds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThresholdScale {
    /// Grid values are thresholds.
    Absolute,
    /// Grid values are fractions of each trial's largest EE_S, found without
    /// SINR or CRB requirements.
    #[default]
    FractionOfMax,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub algorithm: Algorithm,
    pub param: SweptParam,
    pub grid: Vec<f64>,
    pub trials: usize,
    /// Trial `i` draws its channels from seed `seed + i`.
    pub seed: u64,
    pub base: RawConfig,
    pub options: AlgorithmOptions,
    pub threshold_scale: ThresholdScale,
    /// Run trials on the rayon pool; results do not depend on this.
    pub parallel: bool,
    pub out_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(algorithm: Algorithm, param: SweptParam, grid: Vec<f64>) -> Self {
        Self {
            algorithm,
            param,
            grid,
            trials: 20,
            seed: 0,
            base: scenario::default_raw(),
            options: AlgorithmOptions::default(),
            threshold_scale: ThresholdScale::default(),
            parallel: true,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(CliError::Invalid("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Invalid("sweep grid must be finite and sorted ascending".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Invalid("at least one trial is required".into()));
        }
        self.options.validate()?;
        for &v in &self.grid {
            self.config_at(v)?;
        }
        Ok(())
    }

    fn config_at(&self, v: f64) -> Result<SystemConfig> {
        let mut raw = self.base.clone();
        self.param.apply(&mut raw, v)?;
        Ok(make_config(&raw)?)
    }
}

/// Outcome of one solve.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub param: f64,
    pub trial: usize,
    pub seed: u64,
    /// `"ok"` or the error message.
    pub status: String,
    /// EE_S threshold actually imposed (NaN outside tradeoff sweeps).
    pub threshold: f64,
    pub ee_c: f64,
    pub ee_s: f64,
    pub sum_rate: f64,
    pub p_total: f64,
    pub crb: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_s: f64,
}

impl TrialRecord {
    pub fn feasible(&self) -> bool {
        self.status == "ok"
    }

    fn new(param: f64, trial: usize, seed: u64, threshold: f64, outcome: isac_ee::Result<BeamformerSolution>, wall_s: f64) -> Self {
        let mut r = TrialRecord {
            param,
            trial,
            seed,
            status: "ok".into(),
            threshold,
            ee_c: f64::NAN,
            ee_s: f64::NAN,
            sum_rate: f64::NAN,
            p_total: f64::NAN,
            crb: f64::NAN,
            iterations: 0,
            converged: false,
            wall_s,
        };
        match outcome {
            Ok(s) => {
                let get = |k: &str| s.achieved.get(k).copied().unwrap_or(f64::NAN);
                r.ee_c = get("ee_c");
                r.ee_s = get("ee_s");
                r.sum_rate = get("sum_rate");
                r.p_total = get("p_total");
                r.crb = get("crb");
                r.iterations = get("iterations") as usize;
                r.converged = get("converged") == 1.0;
            }
            Err(e) => r.status = e.to_string(),
        }
        r
    }

    /// Equality of every field, comparing floats bit for bit.
    pub fn same(&self, o: &Self) -> bool {
        let f = |a: f64, b: f64| a.to_bits() == b.to_bits();
        f(self.param, o.param)
            && self.trial == o.trial
            && self.seed == o.seed
            && self.status == o.status
            && f(self.threshold, o.threshold)
            && f(self.ee_c, o.ee_c)
            && f(self.ee_s, o.ee_s)
            && f(self.sum_rate, o.sum_rate)
            && f(self.p_total, o.p_total)
            && f(self.crb, o.crb)
            && self.iterations == o.iterations
            && self.converged == o.converged
            && f(self.wall_s, o.wall_s)
    }
}

/// Averages over the trials of one grid point; metric means use feasible
/// trials only and are NaN when there are none.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub param: f64,
    pub mean_ee_c: f64,
    pub mean_ee_s: f64,
    pub feasible_fraction: f64,
    pub mean_iterations: f64,
    pub mean_wall_s: f64,
}

impl SummaryRow {
    pub fn same(&self, o: &Self) -> bool {
        let f = |a: f64, b: f64| a.to_bits() == b.to_bits();
        f(self.param, o.param)
            && f(self.mean_ee_c, o.mean_ee_c)
            && f(self.mean_ee_s, o.mean_ee_s)
            && f(self.feasible_fraction, o.feasible_fraction)
            && f(self.mean_iterations, o.mean_iterations)
            && f(self.mean_wall_s, o.mean_wall_s)
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Algorithm name, or `"pareto"` for tradeoff sweeps.
    pub algorithm: String,
    pub param: SweptParam,
    pub rows: Vec<SummaryRow>,
    /// Per-trial table, grid-major.
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn all_infeasible(&self) -> bool {
        self.rows.iter().all(|r| r.feasible_fraction == 0.0)
    }

    pub fn mean_ee_c(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_ee_c).collect()
    }

    pub fn mean_ee_s(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_ee_s).collect()
    }

    /// Mean (EE_S threshold, EE_C) per grid point over feasible trials.
    pub fn boundary(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|row| {
                let ok: Vec<&TrialRecord> = self.trials.iter().filter(|t| t.param.to_bits() == row.param.to_bits() && t.feasible()).collect();
                (mean(ok.iter().map(|t| t.threshold)), row.mean_ee_c)
            })
            .collect()
    }

    pub fn same(&self, o: &Self) -> bool {
        self.algorithm == o.algorithm
            && self.param == o.param
            && self.rows.len() == o.rows.len()
            && self.trials.len() == o.trials.len()
            && self.rows.iter().zip(&o.rows).all(|(a, b)| a.same(b))
            && self.trials.iter().zip(&o.trials).all(|(a, b)| a.same(b))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in it {
        s += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn summarize(grid: &[f64], trials: &[TrialRecord], per_point: usize) -> Vec<SummaryRow> {
    grid.iter()
        .zip(trials.chunks(per_point))
        .map(|(&param, chunk)| {
            let ok = || chunk.iter().filter(|t| t.feasible());
            let n_ok = ok().count();
            SummaryRow {
                param,
                mean_ee_c: mean(ok().map(|t| t.ee_c)),
                mean_ee_s: mean(ok().map(|t| t.ee_s)),
                feasible_fraction: n_ok as f64 / chunk.len() as f64,
                mean_iterations: mean(ok().map(|t| t.iterations as f64)),
                mean_wall_s: mean(chunk.iter().map(|t| t.wall_s)),
            }
        })
        .collect()
}

fn map_tasks<T: Sync, R: Send>(tasks: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        tasks.par_iter().map(f).collect()
    } else {
        tasks.iter().map(f).collect()
    }
}

/// Monte-Carlo sweep of one solver over one parameter. Failed trials are
/// recorded, not fatal. Output files are written when `out_dir` is set.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.param == SweptParam::Threshold {
        return Err(CliError::Invalid("EE_S threshold sweeps go through run_pareto".into()));
    }
    spec.validate()?;
    let tasks: Vec<(f64, usize)> = spec.grid.iter().flat_map(|&v| (0..spec.trials).map(move |t| (v, t))).collect();
    let records = map_tasks(&tasks, spec.parallel, |&(v, trial)| {
        let cfg = spec.config_at(v).expect("validated");
        let seed = spec.seed.wrapping_add(trial as u64);
        let ch = draw_channels_seeded(&cfg, seed);
        let start = Instant::now();
        let out = spec.algorithm.solve(&cfg, &ch, &spec.options);
        TrialRecord::new(v, trial, seed, f64::NAN, out, start.elapsed().as_secs_f64())
    });
    let result = SweepResult {
        algorithm: spec.algorithm.name().to_string(),
        param: spec.param,
        rows: summarize(&spec.grid, &records, spec.trials),
        trials: records,
    };
    if let Some(dir) = &spec.out_dir {
        crate::csvio::write_result(&result, dir)?;
    }
    Ok(result)
}

/// Tradeoff curve: EE_C maximized under each EE_S threshold of the grid,
/// averaged over trials. Every point is a cold start. Writes the boundary
/// pairs and plot in addition to the usual files.
pub fn run_pareto(spec: &SweepSpec) -> Result<SweepResult> {
    let mut spec = spec.clone();
    spec.param = SweptParam::Threshold;
    spec.validate()?;
    if spec.grid[0] < 0.0 {
        return Err(CliError::Invalid("EE_S thresholds must be non-negative".into()));
    }
    let cfg = spec.config_at(0.0)?;
    let per_trial = map_tasks(&(0..spec.trials).collect::<Vec<_>>(), spec.parallel, |&trial| {
        let seed = spec.seed.wrapping_add(trial as u64);
        let ch = draw_channels_seeded(&cfg, seed);
        let scale = match spec.threshold_scale {
            ThresholdScale::Absolute => Ok(1.0),
            ThresholdScale::FractionOfMax => {
                let free = PointSpec {
                    sinr: false,
                    crb: false,
                    ee_s_min: None,
                };
                solvers::solve_ees_point_with(&cfg, &ch, &free, &spec.options).map(|s| s.achieved["ee_s"])
            }
        };
        spec.grid
            .iter()
            .map(|&v| match &scale {
                Ok(s) => {
                    let threshold = v * s;
                    let start = Instant::now();
                    let out = solvers::solve_pareto_single(&cfg, &ch, threshold, &spec.options);
                    TrialRecord::new(v, trial, seed, threshold, out, start.elapsed().as_secs_f64())
                }
                Err(e) => TrialRecord::new(v, trial, seed, f64::NAN, Err(e.clone()), 0.0),
            })
            .collect::<Vec<_>>()
    });
    // grid-major order
    let mut records = Vec::with_capacity(spec.grid.len() * spec.trials);
    for g in 0..spec.grid.len() {
        for t in &per_trial {
            records.push(t[g].clone());
        }
    }
    let result = SweepResult {
        algorithm: "pareto".into(),
        param: SweptParam::Threshold,
        rows: summarize(&spec.grid, &records, spec.trials),
        trials: records,
    };
    if let Some(dir) = &spec.out_dir {
        crate::csvio::write_result(&result, dir)?;
    }
    Ok(result)
}
