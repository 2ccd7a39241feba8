use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use timebin_core::params::{EmitterPair, RunOptions};
use timebin_core::phase::Coeff;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Flat key=value configuration. Frequencies are entered in Hz and converted
/// to angular units when the emitter parameters are built; rates stay 1/s.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "wbar1_hz",
    "wbar2_hz",
    "laser1_hz",
    "laser2_hz",
    "dg1_hz",
    "dg2_hz",
    "de1_hz",
    "de2_hz",
    "zeeman_g1_hz",
    "zeeman_g2_hz",
    "zeeman_e1_hz",
    "zeeman_e2_hz",
    "gamma_b",
    "gamma_a",
    "sigma_f_hz",
    "x1_m",
    "x2_m",
    "eps_s",
    "alpha",
    "wait_t_s",
    "r",
    "fa",
    "n",
    "seed",
    "target_f",
    "kappa_hz",
    "delta_split_hz",
    "assume_correlated",
    "normalized_eq11",
    "alpha_as_amplitude",
    "classify_path_term_unknown",
];

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_assignment(&mut self, kv: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = kv.split_once('=') else {
            return Err(ConfigError(format!("`{kv}` is not of the form key=value")));
        };
        self.set(key.trim(), value.trim())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("`{key}` must be an integer, got `{v}`"))),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true") | Some("1") => Ok(Some(true)),
            Some("false") | Some("0") => Ok(Some(false)),
            Some(v) => Err(ConfigError(format!("`{key}` must be a boolean, got `{v}`"))),
        }
    }

    fn rational(&self, key: &str) -> Result<Option<Coeff>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => parse_rational(v)
                .map(Some)
                .map_err(|_| ConfigError(format!("`{key}` must be rational (p/q or decimal), got `{v}`"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        Ok(self.u64(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self.bool(key)?.unwrap_or(default))
    }

    /// Build the emitter parameters, applying the Hz → rad/s conversion at
    /// this boundary. Lasers default to the mean frequencies.
    pub fn emitter_pair(&self) -> Result<EmitterPair, ConfigError> {
        let mut p = EmitterPair::default();
        let ang = |hz: f64| TWO_PI * hz;
        p.omega_bar = [
            ang(self.f64_or("wbar1_hz", 0.0)?),
            ang(self.f64_or("wbar2_hz", 0.0)?),
        ];
        p.laser = [
            self.f64("laser1_hz")?.map(ang).unwrap_or(p.omega_bar[0]),
            self.f64("laser2_hz")?.map(ang).unwrap_or(p.omega_bar[1]),
        ];
        p.delta_g = [ang(self.f64_or("dg1_hz", 0.0)?), ang(self.f64_or("dg2_hz", 0.0)?)];
        p.delta_e = [ang(self.f64_or("de1_hz", 0.0)?), ang(self.f64_or("de2_hz", 0.0)?)];
        p.zeeman_g = [
            ang(self.f64_or("zeeman_g1_hz", 0.0)?),
            ang(self.f64_or("zeeman_g2_hz", 0.0)?),
        ];
        p.zeeman_e = [
            ang(self.f64_or("zeeman_e1_hz", 0.0)?),
            ang(self.f64_or("zeeman_e2_hz", 0.0)?),
        ];
        p.gamma_b = self.f64_or("gamma_b", 1.0)?;
        p.gamma_a = self.f64_or("gamma_a", 0.0)?;
        p.sigma_f = self.f64_or("sigma_f_hz", 0.0)?;
        p.path = [self.f64_or("x1_m", 0.0)?, self.f64_or("x2_m", 0.0)?];
        p.eps = self.f64_or("eps_s", 0.0)?;
        p.alpha = self.f64_or("alpha", 0.1)?;
        p.wait_t = self.f64_or("wait_t_s", 0.0)?;
        if let Some(r) = self.rational("r")? {
            p.moment_ratio = r;
        }
        Ok(p)
    }

    pub fn run_options(&self) -> Result<RunOptions, ConfigError> {
        Ok(RunOptions {
            assume_correlated: self.bool_or("assume_correlated", false)?,
            path_term_unknown: self.bool_or("classify_path_term_unknown", false)?,
            alpha_as_amplitude: self.bool_or("alpha_as_amplitude", false)?,
            ..RunOptions::default()
        })
    }

    pub fn normalized_eq(&self) -> Result<bool, ConfigError> {
        self.bool_or("normalized_eq11", true)
    }
}

/// Exact rational from `p/q`, an integer, or a decimal literal.
pub fn parse_rational(s: &str) -> Result<Coeff, ConfigError> {
    timebin_core::parse_coeff(s)
        .ok_or_else(|| ConfigError(format!("`{s}` is not a rational number")))
}
