//! WebAssembly bindings behind `www/index.html`.
//!
//! Every entry point takes plain numbers and returns flat `f64` arrays so the
//! page needs no serialization layer. Infeasible points come back as `NaN`.

use isac_ee::metrics::crb_point;
use isac_ee::scenario::{self, draw_channels_seeded, make_config, SystemConfig};
use isac_ee::solvers::{self, AlgorithmOptions, PointSpec};
use isac_ee::steering::steering;
use isac_ee::C64;
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

const MAX_ANTENNAS: usize = 16;

fn config(m: usize, k: usize, pmax_dbm: f64, gamma_db: f64, seed: u64) -> Result<SystemConfig, JsError> {
    if !(1..=MAX_ANTENNAS).contains(&m) {
        return Err(JsError::new(&format!("M must be between 1 and {MAX_ANTENNAS}")));
    }
    let mut raw = scenario::default_raw();
    raw.insert("M".into(), m.to_string());
    raw.insert("N_rx".into(), m.to_string());
    raw.insert("K".into(), k.to_string());
    raw.insert("Pmax".into(), format!("{pmax_dbm} dBm"));
    raw.insert("gamma".into(), format!("{gamma_db} dB"));
    raw.insert("seed".into(), seed.to_string());
    make_config(&raw).map_err(|e| JsError::new(&e.to_string()))
}

/// CRB and transmit beampattern of a fixed covariance.
#[wasm_bindgen]
pub struct Pattern {
    crb: f64,
    angles_deg: Vec<f64>,
    gain: Vec<f64>,
}

#[wasm_bindgen]
impl Pattern {
    /// Point-target CRB in rad², `Infinity` when undefined.
    #[wasm_bindgen(getter)]
    pub fn crb(&self) -> f64 {
        self.crb
    }

    #[wasm_bindgen(getter)]
    pub fn angles_deg(&self) -> Vec<f64> {
        self.angles_deg.clone()
    }

    /// `aᴴ(φ) R a(φ)` in watts.
    #[wasm_bindgen(getter)]
    pub fn gain(&self) -> Vec<f64> {
        self.gain.clone()
    }
}

/// Isotropic (`steered = false`) or single-beam covariance with total power
/// `pmax_dbm`, evaluated towards a target at `theta_deg`.
#[wasm_bindgen]
pub fn beampattern(m: usize, theta_deg: f64, beam_deg: f64, pmax_dbm: f64, steered: bool) -> Result<Pattern, JsError> {
    let mut cfg = config(m, 1, pmax_dbm, 0.0, 0)?;
    cfg.theta = theta_deg.to_radians();
    let p = cfg.pmax;
    let rx = if steered {
        let a = steering(beam_deg.to_radians(), m);
        &a * a.adjoint() * C64::from(p / m as f64)
    } else {
        DMatrix::identity(m, m) * C64::from(p / m as f64)
    };
    let crb = crb_point(&rx, cfg.theta, cfg.alpha, &cfg).unwrap_or(f64::INFINITY);
    let angles_deg: Vec<f64> = (0..=180).map(f64::from).collect();
    let gain = angles_deg
        .iter()
        .map(|d| {
            let a = steering(d.to_radians(), m);
            (a.adjoint() * &rx * &a)[(0, 0)].re
        })
        .collect();
    Ok(Pattern { crb, angles_deg, gain })
}

/// Communication EE of the optimized point-target design at each power
/// budget in `pmax_dbm`, for one channel draw.
#[wasm_bindgen]
pub fn ee_c_vs_pmax(m: usize, k: usize, gamma_db: f64, seed: u64, pmax_dbm: Vec<f64>) -> Result<Vec<f64>, JsError> {
    let opts = AlgorithmOptions::default();
    pmax_dbm
        .iter()
        .map(|&p| {
            let cfg = config(m, k, p, gamma_db, seed)?;
            let ch = draw_channels_seeded(&cfg, seed);
            Ok(solvers::solve_eec_point(&cfg, &ch, &opts).map_or(f64::NAN, |s| s.achieved["ee_c"]))
        })
        .collect()
}

/// EE_C / EE_S tradeoff for one channel draw: `points` thresholds spread
/// evenly from 0 to the largest achievable EE_S. Returns the thresholds
/// followed by the EE_C values (`2 * points` numbers).
#[wasm_bindgen]
pub fn tradeoff(m: usize, k: usize, pmax_dbm: f64, seed: u64, points: usize) -> Result<Vec<f64>, JsError> {
    if points < 2 {
        return Err(JsError::new("need at least two points"));
    }
    let cfg = config(m, k, pmax_dbm, 0.0, seed)?;
    let ch = draw_channels_seeded(&cfg, seed);
    let opts = AlgorithmOptions::default();
    let free = PointSpec {
        sinr: false,
        crb: false,
        ee_s_min: None,
    };
    let emax = solvers::solve_ees_point_with(&cfg, &ch, &free, &opts)
        .map_err(|e| JsError::new(&e.to_string()))?
        .achieved["ee_s"];
    let thresholds: Vec<f64> = (0..points).map(|i| emax * i as f64 / (points - 1) as f64).collect();
    let ee_c: Vec<f64> = thresholds
        .iter()
        .map(|&t| solvers::solve_pareto_single(&cfg, &ch, t, &opts).map_or(f64::NAN, |s| s.achieved["ee_c"]))
        .collect();
    Ok(thresholds.into_iter().chain(ee_c).collect())
}
