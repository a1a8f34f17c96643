//! Flat `key = value` run configuration with defaults, strict key checking,
//! and typed error messages naming the offending key.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub p: f64,
    pub r: f64,
    pub r_ladder: Vec<f64>,
    /// frequency oversampling factor of the lattice models
    pub oversample: f64,
    pub curve: String,
    pub seed: u64,
    pub seeds: usize,
    pub out: String,
    /// comparability constant
    pub c_const: f64,
    /// separation constant
    pub k_const: f64,
    /// weight decay order
    pub d: usize,
    /// curvature band |kappa| in [1/band, band]
    pub eps_band: f64,
    pub workers: usize,
    pub probes: usize,
    pub atoms: usize,
    pub samples: usize,
    pub input: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            n: 2,
            p: 4.0,
            r: 1024.0,
            r_ladder: Vec::new(),
            oversample: 1.0,
            curve: "model".into(),
            seed: 0,
            seeds: 1,
            out: "out".into(),
            c_const: 4.0,
            k_const: 32.0,
            d: 1,
            eps_band: 16.0,
            workers: 0,
            probes: 10_000,
            atoms: 24,
            samples: 20_000,
            input: String::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("malformed value for key `{key}`: `{value}`")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => self.command = value.trim().to_string(),
            "n" => {
                self.n = parse_num(key, value)?;
                if self.n < 2 || self.n > 5 {
                    return Err(Error::Parse(format!(
                        "key `n` out of range: {} (supported 2..=5)",
                        self.n
                    )));
                }
            }
            "p" => {
                self.p = parse_num(key, value)?;
                if self.p < 2.0 {
                    return Err(Error::Parse("key `p` out of range: need p >= 2".into()));
                }
            }
            "R" => {
                self.r = parse_num(key, value)?;
                if self.r < 4.0 {
                    return Err(Error::Parse("key `R` out of range: need R >= 4".into()));
                }
            }
            "R_ladder" => {
                self.r_ladder = value
                    .split(',')
                    .map(|t| parse_num::<f64>(key, t))
                    .collect::<Result<Vec<f64>>>()?;
            }
            "oversample" => self.oversample = parse_num(key, value)?,
            "curve" => self.curve = value.trim().to_string(),
            "seed" => self.seed = parse_num(key, value)?,
            "seeds" => self.seeds = parse_num(key, value)?,
            "out" => self.out = value.trim().to_string(),
            "C" => self.c_const = parse_num(key, value)?,
            "K" => self.k_const = parse_num(key, value)?,
            "d" => {
                self.d = parse_num(key, value)?;
                if self.d != 1 {
                    return Err(Error::Parse(
                        "key `d` out of range: this build tabulates the weight profiles at decay order 1".into(),
                    ));
                }
            }
            "eps_band" => self.eps_band = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "probes" => self.probes = parse_num(key, value)?,
            "atoms" => self.atoms = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "input" => self.input = value.trim().to_string(),
            other => {
                return Err(Error::Parse(format!("unknown config key `{other}`")));
            }
        }
        Ok(())
    }

    /// R-ladder with the single R as fallback.
    pub fn ladder(&self) -> Vec<f64> {
        if self.r_ladder.is_empty() {
            vec![self.r]
        } else {
            self.r_ladder.clone()
        }
    }
}

/// Parse a flat `key = value` file with `#` comments.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        cfg.set(key.trim(), value)?;
    }
    Ok(cfg)
}
