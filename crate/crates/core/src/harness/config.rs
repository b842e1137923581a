//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::model::SystemParams;

/// Methods a sweep can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Cnoma,
    Anoma,
    Zf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cnoma => "cnoma",
            Method::Anoma => "anoma",
            Method::Zf => "zf",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cnoma" => Ok(Method::Cnoma),
            "anoma" => Ok(Method::Anoma),
            "zf" => Ok(Method::Zf),
            other => Err(HarnessError::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Settings shared by every experiment kind. Keys not relevant to a given
/// experiment are ignored by it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub antennas: usize,
    pub users: usize,
    pub gamma: f64,
    pub max_distance: f64,
    pub sigma: f64,
    pub tx_snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub variants: Vec<Method>,
    pub convergence_delta: f64,
    pub max_iterations: usize,
    /// Message index (one-based) for the decoding-order probability.
    pub prob_k: usize,
    /// Distance of the user whose SINR is compared against the swept one.
    pub prob_d_fixed: f64,
    /// Swept distances.
    pub prob_distances: Vec<f64>,
    /// Noise powers, one curve each.
    pub prob_sigma2: Vec<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: "fig3".into(),
            antennas: 3,
            users: 3,
            gamma: 2.0,
            max_distance: 50.0,
            sigma: 2.0,
            tx_snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0],
            trials: 100,
            seed: 1,
            variants: vec![Method::Cnoma, Method::Anoma, Method::Zf],
            convergence_delta: 1e-2,
            max_iterations: 100,
            prob_k: 1,
            prob_d_fixed: 1.0,
            prob_distances: vec![1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
            prob_sigma2: vec![0.1, 1.0],
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Built-in setups for the standard figures.
    pub fn preset(name: &str) -> Result<Self, HarnessError> {
        let base = Self::default();
        let cfg = match name {
            "fig2" => Self {
                scenario: "fig2".into(),
                antennas: 6,
                users: 4,
                trials: 100_000,
                ..base
            },
            "fig3" => base,
            "fig5" => Self {
                scenario: "fig5".into(),
                antennas: 4,
                users: 4,
                max_distance: 10.0,
                sigma: 1.0,
                ..base
            },
            "fig6" => Self {
                scenario: "fig6".into(),
                antennas: 5,
                users: 5,
                max_distance: 10.0,
                sigma: 1.0,
                tx_snr_db: vec![10.0, 20.0, 30.0],
                trials: 1,
                variants: vec![Method::Cnoma],
                ..base
            },
            "fig7" => Self {
                scenario: "fig7".into(),
                antennas: 3,
                users: 6,
                sigma: 1.0,
                ..base
            },
            other => return Err(HarnessError::Config(format!("unknown preset `{other}`"))),
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
            v.split(',').map(|s| num(s.trim())).collect()
        }
        match key {
            "scenario" => self.scenario = value.to_string(),
            "antennas" => self.antennas = num(value)?,
            "users" => self.users = num(value)?,
            "gamma" => self.gamma = num(value)?,
            "max_distance" => self.max_distance = num(value)?,
            "sigma" => self.sigma = num(value)?,
            "tx_snr_db" => self.tx_snr_db = list(value)?,
            "trials" => self.trials = num(value)?,
            "seed" => self.seed = num(value)?,
            "variants" => {
                self.variants = value
                    .split(',')
                    .map(Method::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?
            }
            "convergence_delta" => self.convergence_delta = num(value)?,
            "max_iterations" => self.max_iterations = num(value)?,
            "prob_k" => self.prob_k = num(value)?,
            "prob_d_fixed" => self.prob_d_fixed = num(value)?,
            "prob_distances" => self.prob_distances = list(value)?,
            "prob_sigma2" => self.prob_sigma2 = list(value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.scenario.is_empty() || self.scenario.contains(',') {
            return bad("scenario must be a nonempty name without commas");
        }
        if self.tx_snr_db.is_empty() || self.tx_snr_db.iter().any(|x| !x.is_finite()) {
            return bad("tx_snr_db must be a nonempty list of finite values");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.variants.is_empty() {
            return bad("variants must not be empty");
        }
        if !(self.convergence_delta > 0.0) {
            return bad("convergence_delta must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if self.prob_distances.is_empty() || self.prob_sigma2.is_empty() {
            return bad("probability grids must not be empty");
        }
        self.system_params(self.tx_snr_db[0])?;
        Ok(())
    }

    /// System parameters at one transmit SNR (`P = sigma^2 10^(dB/10)`).
    pub fn system_params(&self, tx_snr_db: f64) -> Result<SystemParams, HarnessError> {
        SystemParams::new(self.antennas, self.users, self.gamma, self.max_distance, self.sigma, 1.0)
            .map(|p| p.with_tx_snr_db(tx_snr_db))
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let text = "# setup\nscenario = demo\nusers = 4 # inline\nantennas=4\ntx_snr_db = 0, 10,20\nvariants = cnoma, zf\n\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.scenario, "demo");
        assert_eq!(cfg.users, 4);
        assert_eq!(cfg.tx_snr_db, vec![0.0, 10.0, 20.0]);
        assert_eq!(cfg.variants, vec![Method::Cnoma, Method::Zf]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("users 3").is_err());
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("trials = 0").is_err());
        assert!(ExperimentConfig::parse("tx_snr_db = ").is_err());
        assert!(ExperimentConfig::parse("variants = mmse").is_err());
        assert!(ExperimentConfig::parse("sigma = -1").is_err());
    }

    #[test]
    fn presets_are_valid() {
        for name in ["fig2", "fig3", "fig5", "fig6", "fig7"] {
            ExperimentConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("fig9").is_err());
    }
}
