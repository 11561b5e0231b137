//! Flat `key = value` run settings. The same keys are accepted from a file
//! and from command-line flags; later assignments override earlier ones.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::SimConfig;
use crate::error::ConfigError;
use crate::model::Mechanism;
use crate::traffic::Pattern;

/// Everything a command-line run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub sim: SimConfig,
    pub loads: Vec<f64>,
    pub mechanisms: Vec<Mechanism>,
    pub out: Option<PathBuf>,
    pub scenario: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunSettings {
            loads: vec![sim.load],
            mechanisms: vec![sim.mechanism],
            sim,
            out: None,
            scenario: None,
        }
    }
}

pub const KEYS: [&str; 22] = [
    "topology",
    "k",
    "concentration",
    "mechanism",
    "vcs",
    "buffer",
    "link-latency",
    "packet-sizes",
    "pattern",
    "hotspot-fraction",
    "load",
    "deadlock-rule",
    "la-priority",
    "la-threshold",
    "sa-input-mode",
    "cycles",
    "warmup-fraction",
    "seed",
    "check",
    "watchdog-horizon",
    "out",
    "scenario",
];

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("{key}: cannot parse '{value}'")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::Invalid(format!("{key}: empty list")));
    }
    Ok(items)
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(ConfigError::Invalid(format!("{key}: '{other}' is not a boolean"))),
    }
}

impl RunSettings {
    /// Applies one assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize(key);
        let s = &mut self.sim;
        match key.as_str() {
            "topology" => s.topology = value.parse()?,
            "k" => s.k = parse(&key, value)?,
            "concentration" => s.concentration = parse(&key, value)?,
            "mechanism" | "mechanisms" => {
                self.mechanisms = list::<Mechanism>(&key, value)?;
                s.mechanism = self.mechanisms[0];
            }
            "vcs" => s.vcs = parse(&key, value)?,
            "buffer" => s.buffer = value.parse()?,
            "link-latency" => s.link_latency = parse(&key, value)?,
            "packet-sizes" => s.packet_sizes = value.parse()?,
            "pattern" => {
                let fraction = match &s.pattern {
                    Pattern::Hotspot { fraction, .. } => Some(*fraction),
                    _ => None,
                };
                s.pattern = value.parse()?;
                if let (Pattern::Hotspot { fraction: f, .. }, Some(old)) = (&mut s.pattern, fraction)
                {
                    *f = old;
                }
            }
            "hotspot-fraction" => {
                let v: f64 = parse(&key, value)?;
                match &mut s.pattern {
                    Pattern::Hotspot { fraction, .. } => *fraction = v,
                    _ => {
                        s.pattern = Pattern::Hotspot {
                            nodes: Vec::new(),
                            fraction: v,
                        }
                    }
                }
            }
            "load" | "loads" => {
                self.loads = list(&key, value)?;
                s.load = self.loads[0];
            }
            "deadlock-rule" => {
                s.deadlock_rule = match value.trim().to_ascii_lowercase().as_str() {
                    "auto" | "default" => None,
                    _ => Some(value.parse()?),
                }
            }
            "la-priority" => s.la_priority = value.parse()?,
            "la-threshold" => {
                s.la_threshold = match value.trim().to_ascii_lowercase().as_str() {
                    "off" | "none" => None,
                    _ => Some(parse(&key, value)?),
                }
            }
            "sa-input-mode" => s.sa_input_mode = value.parse()?,
            "cycles" => s.cycles = parse(&key, value)?,
            "warmup-fraction" => s.warmup_fraction = parse(&key, value)?,
            "seed" => s.seed = parse(&key, value)?,
            "check" => s.check = flag(&key, value)?,
            "watchdog-horizon" => s.watchdog_horizon = parse(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "scenario" => self.scenario = Some(value.trim().to_ascii_lowercase()),
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "unknown setting '{key}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies every assignment of a config file's text. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| ConfigError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        self.apply_text(&text)
    }

    /// Validates the run for every requested mechanism and load.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.loads.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError::Invalid("loads must be ascending".into()));
        }
        for &l in &self.loads {
            if !(0.0..=1.0).contains(&l) {
                return Err(ConfigError::Invalid(format!("load {l} outside [0, 1]")));
            }
        }
        self.sim.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buffers::BufferOrganization;
    use crate::topology::TopologyKind;
    use crate::traffic::SizeDist;

    #[test]
    fn file_then_override() {
        let mut s = RunSettings::default();
        s.apply_text(
            "# table defaults\n\
             topology = torus\n\
             buffer = private:4\n\
             packet_sizes = 1\n\
             load = 0.02, 0.04\n\
             mechanism = nebb-hybrid,wh-baseline\n\
             la-threshold = 30\n\
             check = true\n",
        )
        .unwrap();
        assert_eq!(s.sim.topology, TopologyKind::Torus);
        assert_eq!(s.sim.buffer, BufferOrganization::Private { slots_per_vc: 4 });
        assert_eq!(s.sim.packet_sizes, SizeDist::SingleFlit);
        assert_eq!(s.loads, vec![0.02, 0.04]);
        assert_eq!(s.mechanisms.len(), 2);
        assert_eq!(s.sim.la_threshold, Some(30));
        assert!(s.sim.check);
        s.set("la-threshold", "off").unwrap();
        s.set("topology", "mesh").unwrap();
        assert_eq!(s.sim.la_threshold, None);
        assert_eq!(s.sim.topology, TopologyKind::Mesh);
    }

    #[test]
    fn errors_name_the_line() {
        let mut s = RunSettings::default();
        let e = s.apply_text("vcs = 2\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e}");
        let e = s.apply_text("vcs two\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }));
        assert!(s.set("vcs", "two").is_err());
    }

    #[test]
    fn hotspot_fraction_survives_pattern_order() {
        let mut s = RunSettings::default();
        s.set("hotspot-fraction", "0.4").unwrap();
        s.set("pattern", "hotspot").unwrap();
        assert!(matches!(s.sim.pattern, Pattern::Hotspot { fraction, .. } if fraction == 0.4));
    }

    #[test]
    fn descending_loads_rejected() {
        let mut s = RunSettings::default();
        s.set("load", "0.1,0.05").unwrap();
        assert!(s.validate().is_err());
    }
}
