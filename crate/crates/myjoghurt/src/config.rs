use std::collections::BTreeMap;

use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

/// Clog injections: each one multiplies the filling valve's clog factor by
/// `factor` just before the fill.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Injection {
    /// Chance per order, drawn from the seeded generator.
    pub probability: f64,
    pub factor: f64,
    /// 1-based order numbers that always get an injection.
    pub at: Vec<usize>,
}

impl Default for Injection {
    fn default() -> Self {
        Injection { probability: 0.0, factor: 0.85, at: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub orders: usize,
    pub order_interval_ms: u64,
    pub units: usize,
    /// One valve per unit; must equal `units`.
    pub valves: usize,
    /// Orders cycle through these liquids.
    pub liquids: Vec<String>,
    pub target: f64,
    /// Half-width of the tolerance window around `target`.
    pub tolerance: f64,
    pub alpha: f64,
    pub image_threshold: f64,
    pub initial_image: f64,
    pub clean_threshold: u32,
    pub remove_threshold: u32,
    /// Fire S5 together with S4.
    pub alarm_with_disregard: bool,
    pub clog_decay: f64,
    pub true_rate: f64,
    pub estimated_rate: f64,
    pub viscosity: BTreeMap<String, f64>,
    pub injection: Injection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            orders: 20,
            order_interval_ms: 1000,
            units: 2,
            valves: 2,
            liquids: vec!["yogurt".into(), "milk".into()],
            target: 200.0,
            tolerance: 5.0,
            alpha: 0.3,
            image_threshold: 0.5,
            initial_image: 0.5,
            clean_threshold: 3,
            remove_threshold: 5,
            alarm_with_disregard: true,
            clog_decay: 0.98,
            true_rate: 50.0,
            estimated_rate: 50.0,
            viscosity: BTreeMap::from([("yogurt".into(), 1.0), ("milk".into(), 1.2)]),
            injection: Injection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ScenarioConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// A run with nothing that can go wrong: exact estimate, no clogging.
    pub fn compliant() -> Self {
        ScenarioConfig { clog_decay: 1.0, ..ScenarioConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.units == 0 {
            return bad("units must be at least 1".into());
        }
        if self.valves != self.units {
            return bad(format!("each unit drives one valve: valves = {} but units = {}", self.valves, self.units));
        }
        if self.liquids.is_empty() {
            return bad("liquids must not be empty".into());
        }
        if !(self.target > 0.0) || !(self.tolerance > 0.0) || self.tolerance >= self.target {
            return bad(format!("need 0 < tolerance < target, got target {} tolerance {}", self.target, self.tolerance));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.image_threshold > 0.0 && self.image_threshold <= 1.0) {
            return bad(format!("image_threshold must be in (0, 1], got {}", self.image_threshold));
        }
        if !(0.0..=1.0).contains(&self.initial_image) {
            return bad(format!("initial_image must be in [0, 1], got {}", self.initial_image));
        }
        if self.clean_threshold == 0 || self.remove_threshold == 0 {
            return bad("clean_threshold and remove_threshold must be positive".into());
        }
        if !(self.clog_decay > 0.0 && self.clog_decay <= 1.0) {
            return bad(format!("clog_decay must be in (0, 1], got {}", self.clog_decay));
        }
        if !(self.true_rate > 0.0) || !(self.estimated_rate > 0.0) {
            return bad("flow rates must be positive".into());
        }
        if let Some((l, v)) = self.viscosity.iter().find(|(_, v)| !(**v > 0.0)) {
            return bad(format!("viscosity of {l} must be positive, got {v}"));
        }
        let inj = &self.injection;
        if !(0.0..=1.0).contains(&inj.probability) {
            return bad(format!("injection.probability must be in [0, 1], got {}", inj.probability));
        }
        if !(inj.factor > 0.0 && inj.factor <= 1.0) {
            return bad(format!("injection.factor must be in (0, 1], got {}", inj.factor));
        }
        if let Some(n) = inj.at.iter().find(|n| **n == 0 || **n > self.orders) {
            return bad(format!("injection.at entry {n} is not an order number 1..={}", self.orders));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn partial_file_overrides() {
        let c = ScenarioConfig::from_toml("seed = 9\nunits = 3\nvalves = 3\n[injection]\nat = [2, 3]\n").unwrap();
        assert_eq!((c.seed, c.units), (9, 3));
        assert_eq!(c.injection.at, [2, 3]);
        assert_eq!(c.injection.factor, 0.85);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["alpha = 0.0", "units = 3", "tolerance = -1.0", "[injection]\nat = [99]", "colour = 1"] {
            assert!(ScenarioConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
