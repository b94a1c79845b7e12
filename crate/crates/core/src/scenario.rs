//! Scenario configuration, unit handling and seeded channel generation.
//!
//! Configuration arrives as a flat key/value map whose values may carry a
//! unit suffix (`"30 dBm"`, `"0.15 deg"`, `"10 dB"`). Everything is
//! converted once, here, into watts, radians and linear ratios.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::C64;

/// Raw configuration: key → value text (optionally with unit).
pub type RawConfig = BTreeMap<String, String>;

/// All physical parameters of one scenario, in SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas.
    pub m: usize,
    /// Receive antennas.
    pub n_rx: usize,
    /// Snapshots per frame.
    pub l: usize,
    /// Communication users.
    pub k: usize,
    /// Power-amplifier efficiency in (0, 1].
    pub eps_pa: f64,
    /// Circuit power, watts.
    pub p0: f64,
    /// Transmit power budget, watts.
    pub pmax: f64,
    /// Communication noise power, watts.
    pub sigma_c2: f64,
    /// Sensing noise power, watts.
    pub sigma_s2: f64,
    /// Per-user SINR thresholds (linear).
    pub gamma: Vec<f64>,
    /// Root-CRB threshold for the target angle, radians.
    pub root_crb: f64,
    /// Threshold on the extended-target CRB (trace form).
    pub crb_ext: f64,
    /// Target angle, radians.
    pub theta: f64,
    /// Complex reflection coefficient of the point target.
    pub alpha: C64,
    pub rng_seed: u64,
}

impl SystemConfig {
    /// CRB threshold in rad² (square of the root-CRB threshold).
    pub fn rho(&self) -> f64 {
        self.root_crb * self.root_crb
    }

    /// Total consumed power for a given radiated power.
    pub fn consumed_power(&self, radiated: f64) -> f64 {
        radiated / self.eps_pa + self.p0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidConfig(s));
        if self.m < 1 {
            return bad("M must be at least 1".into());
        }
        if self.k < 1 {
            return bad("K must be at least 1".into());
        }
        if self.k > self.m {
            return bad(format!("K exceeds M ({} > {})", self.k, self.m));
        }
        if self.n_rx < self.m {
            return bad(format!("N_rx must be at least M ({} < {})", self.n_rx, self.m));
        }
        if self.l < 1 {
            return bad("L must be at least 1".into());
        }
        if !(self.eps_pa > 0.0 && self.eps_pa <= 1.0) {
            return bad(format!("eps_pa must lie in (0, 1], got {}", self.eps_pa));
        }
        for (name, v) in [
            ("P0", self.p0),
            ("Pmax", self.pmax),
            ("sigma_c2", self.sigma_c2),
            ("sigma_s2", self.sigma_s2),
            ("rho", self.root_crb),
            ("tau", self.crb_ext),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.gamma.len() != self.k {
            return bad(format!(
                "gamma has {} entries but K = {}",
                self.gamma.len(),
                self.k
            ));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad(format!("gamma entries must be positive, got {g}"));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return bad(format!("theta must lie in [0, pi], got {}", self.theta));
        }
        if !(self.alpha.norm() > 0.0) {
            return bad("alpha must be nonzero".into());
        }
        Ok(())
    }
}

/// Target and user channels of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Per-user channel vectors, each of length M.
    pub h: Vec<DVector<C64>>,
    pub theta: f64,
    pub alpha: C64,
    /// Optional scatterers `(angle, coefficient)` of an extended target.
    pub scatterers: Vec<(f64, C64)>,
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Every key understood by [`make_config`].
pub const CONFIG_KEYS: &[&str] = &[
    "M", "N_rx", "L", "K", "eps_pa", "P0", "Pmax", "sigma_c2", "sigma_s2", "gamma", "rho", "tau",
    "theta", "alpha", "seed",
];

/// Default scenario: 8 transmit antennas, 2 users, 30 dBm budget.
pub fn default_raw() -> RawConfig {
    [
        ("M", "8"),
        ("N_rx", "20"),
        ("L", "30"),
        ("K", "2"),
        ("eps_pa", "0.35"),
        ("P0", "33 dBm"),
        ("Pmax", "30 dBm"),
        ("sigma_c2", "10 dBm"),
        ("sigma_s2", "20 dBm"),
        ("gamma", "10 dB"),
        ("rho", "0.15 deg"),
        ("tau", "5"),
        ("theta", "90 deg"),
        ("alpha", "1"),
        ("seed", "0"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn split_unit(v: &str) -> (&str, &str) {
    let v = v.trim();
    let idx = v
        .char_indices()
        .find(|&(i, c)| {
            c.is_ascii_alphabetic()
                && !(matches!(c, 'e' | 'E')
                    && i > 0
                    && v[..i].chars().last().is_some_and(|p| p.is_ascii_digit() || p == '.')
                    && v[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(v.len());
    (v[..idx].trim(), v[idx..].trim())
}

fn parse_num(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse number from '{s}'")))
}

fn parse_power(key: &str, v: &str) -> Result<f64> {
    let (num, unit) = split_unit(v);
    let x = parse_num(key, num)?;
    match unit.to_ascii_lowercase().as_str() {
        "" | "w" => Ok(x),
        "mw" => Ok(x * 1e-3),
        "dbm" => Ok(dbm_to_watt(x)),
        "dbw" => Ok(db_to_linear(x)),
        u => Err(Error::InvalidConfig(format!("{key}: unknown power unit '{u}'"))),
    }
}

fn parse_angle(key: &str, v: &str) -> Result<f64> {
    let (num, unit) = split_unit(v);
    let x = parse_num(key, num)?;
    match unit.to_ascii_lowercase().as_str() {
        "" | "rad" => Ok(x),
        "deg" => Ok(x.to_radians()),
        u => Err(Error::InvalidConfig(format!("{key}: unknown angle unit '{u}'"))),
    }
}

fn parse_ratio(key: &str, v: &str) -> Result<f64> {
    let (num, unit) = split_unit(v);
    let x = parse_num(key, num)?;
    match unit.to_ascii_lowercase().as_str() {
        "" => Ok(x),
        "db" => Ok(db_to_linear(x)),
        u => Err(Error::InvalidConfig(format!("{key}: unknown ratio unit '{u}'"))),
    }
}

fn parse_count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected a non-negative integer, got '{v}'")))
}

/// Parses `"a"`, `"a,b"` (real, imaginary) or `"a+bj"`.
fn parse_complex(key: &str, v: &str) -> Result<C64> {
    let t = v.trim();
    if let Some((re, im)) = t.split_once(',') {
        return Ok(C64::new(parse_num(key, re)?, parse_num(key, im)?));
    }
    if let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !body[..i].ends_with(['e', 'E']))
            .map(|(i, _)| i)
            .last();
        return match split {
            Some(i) => Ok(C64::new(parse_num(key, &body[..i])?, parse_num(key, &body[i..])?)),
            None => Ok(C64::new(0.0, parse_num(key, body)?)),
        };
    }
    Ok(C64::new(parse_num(key, t)?, 0.0))
}

/// Builds a validated [`SystemConfig`] from a raw key/value map.
///
/// Power values accept `W`, `mW`, `dBm`, `dBW`; angles `rad` or `deg`;
/// `gamma` accepts `dB` or linear values, either one value for all users or
/// a comma-separated list of K values.
pub fn make_config(raw: &RawConfig) -> Result<SystemConfig> {
    for key in raw.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidConfig(format!("unknown key '{key}'")));
        }
    }
    let get = |k: &str| {
        raw.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidConfig(format!("missing key '{k}'")))
    };
    let m = parse_count("M", get("M")?)?;
    let k = parse_count("K", get("K")?)?;
    let gamma_items: Vec<f64> = get("gamma")?
        .split(',')
        .map(|g| parse_ratio("gamma", g))
        .collect::<Result<_>>()?;
    let gamma = if gamma_items.len() == 1 {
        vec![gamma_items[0]; k]
    } else {
        gamma_items
    };
    let seed_txt = get("seed")?;
    let cfg = SystemConfig {
        m,
        n_rx: parse_count("N_rx", get("N_rx")?)?,
        l: parse_count("L", get("L")?)?,
        k,
        eps_pa: parse_num("eps_pa", get("eps_pa")?)?,
        p0: parse_power("P0", get("P0")?)?,
        pmax: parse_power("Pmax", get("Pmax")?)?,
        sigma_c2: parse_power("sigma_c2", get("sigma_c2")?)?,
        sigma_s2: parse_power("sigma_s2", get("sigma_s2")?)?,
        gamma,
        root_crb: parse_angle("rho", get("rho")?)?,
        crb_ext: parse_num("tau", get("tau")?)?,
        theta: parse_angle("theta", get("theta")?)?,
        alpha: parse_complex("alpha", get("alpha")?)?,
        rng_seed: seed_txt
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("seed: expected an integer, got '{seed_txt}'")))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a flat TOML document into a raw map. Numbers, booleans, strings and
/// arrays of those are accepted; arrays become comma-separated lists.
pub fn parse_config_text(text: &str) -> Result<RawConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("config file: {}", e.message())))?;
    let mut out = RawConfig::new();
    for (k, v) in table {
        out.insert(k.clone(), toml_value_text(&k, &v)?);
    }
    Ok(out)
}

fn toml_value_text(key: &str, v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => format!("{f:?}"),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| toml_value_text(key, i))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => {
            return Err(Error::InvalidConfig(format!(
                "config key '{key}' must be a scalar or an array"
            )))
        }
    })
}

/// Renders a configuration back into raw form (SI units, no suffixes).
pub fn to_raw(cfg: &SystemConfig) -> RawConfig {
    let mut r = RawConfig::new();
    let mut put = |k: &str, v: String| {
        r.insert(k.to_string(), v);
    };
    put("M", cfg.m.to_string());
    put("N_rx", cfg.n_rx.to_string());
    put("L", cfg.l.to_string());
    put("K", cfg.k.to_string());
    put("eps_pa", format!("{:?}", cfg.eps_pa));
    put("P0", format!("{:?}", cfg.p0));
    put("Pmax", format!("{:?}", cfg.pmax));
    put("sigma_c2", format!("{:?}", cfg.sigma_c2));
    put("sigma_s2", format!("{:?}", cfg.sigma_s2));
    put(
        "gamma",
        cfg.gamma
            .iter()
            .map(|g| format!("{g:?}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    put("rho", format!("{:?}", cfg.root_crb));
    put("tau", format!("{:?}", cfg.crb_ext));
    put("theta", format!("{:?}", cfg.theta));
    put("alpha", format!("{:?},{:?}", cfg.alpha.re, cfg.alpha.im));
    put("seed", cfg.rng_seed.to_string());
    r
}

/// Draws K i.i.d. CN(0, 1) channel vectors, deterministically from `cfg.rng_seed`.
pub fn draw_channels(cfg: &SystemConfig) -> ChannelSet {
    draw_channels_seeded(cfg, cfg.rng_seed)
}

/// Same as [`draw_channels`] with an explicit seed (used for Monte-Carlo trials).
pub fn draw_channels_seeded(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = (0..cfg.k)
        .map(|_| {
            DVector::from_fn(cfg.m, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(s * re, s * im)
            })
        })
        .collect();
    ChannelSet {
        h,
        theta: cfg.theta,
        alpha: cfg.alpha,
        scatterers: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_suffix_split() {
        assert_eq!(split_unit("30 dBm"), ("30", "dBm"));
        assert_eq!(split_unit("1e-3W"), ("1e-3", "W"));
        assert_eq!(split_unit("2.5e+2 mW"), ("2.5e+2", "mW"));
        assert_eq!(split_unit("0.15deg"), ("0.15", "deg"));
        assert_eq!(split_unit("-7"), ("-7", ""));
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("a", "1").unwrap(), C64::new(1.0, 0.0));
        assert_eq!(parse_complex("a", "0.5,-2").unwrap(), C64::new(0.5, -2.0));
        assert_eq!(parse_complex("a", "1-2j").unwrap(), C64::new(1.0, -2.0));
        assert_eq!(parse_complex("a", "1e-1+2e-1j").unwrap(), C64::new(0.1, 0.2));
        assert_eq!(parse_complex("a", "3j").unwrap(), C64::new(0.0, 3.0));
    }
}
