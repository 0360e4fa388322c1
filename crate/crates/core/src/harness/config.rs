use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::{PeDuration, PeMode, PeSchedule};
use crate::grid::EnvFamily;

/// When to post-explore after reaching a goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeModeKind {
    Always,
    /// Post-explore with probability `(1/n(g))^beta`.
    Gated,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationKind {
    Fixed,
    Proportional,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(Error::config(format!(concat!("unknown ", $what, " {:?}"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(PeModeKind, "pe_mode", PeModeKind::Always => "always", PeModeKind::Gated => "gated", PeModeKind::Off => "off");
keyword_enum!(DurationKind, "pe_duration", DurationKind::Fixed => "fixed", DurationKind::Proportional => "proportional");

/// Full parameterisation of one training run.
///
/// The text form is one `key = value` pair per line; keys are the field
/// names. `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env_family: EnvFamily,
    pub env_seed: u64,
    pub master_seed: u64,
    /// Global environment-step budget, post-exploration steps included.
    pub budget: u64,
    /// Exploration rate while reaching for a goal.
    pub epsilon: f64,
    pub pe_mode: PeModeKind,
    pub beta: f64,
    pub pe_duration: DurationKind,
    pub n_pe: usize,
    pub p_pe: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub episodic: bool,
    /// Step cap for one goal-reaching attempt.
    pub step_cap: usize,
    pub eval_interval: u64,
    pub eval_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env_family: EnvFamily::FourRooms,
            env_seed: 0,
            master_seed: 0,
            budget: 200_000,
            epsilon: 0.1,
            pe_mode: PeModeKind::Always,
            beta: 0.0,
            pe_duration: DurationKind::Proportional,
            n_pe: 10,
            p_pe: 0.5,
            alpha: 0.1,
            gamma: 0.99,
            episodic: true,
            step_cap: 100,
            eval_interval: 2000,
            eval_cap: 100,
        }
    }
}

pub const KEYS: [&str; 16] = [
    "env_family",
    "env_seed",
    "master_seed",
    "budget",
    "epsilon",
    "pe_mode",
    "beta",
    "pe_duration",
    "n_pe",
    "p_pe",
    "alpha",
    "gamma",
    "episodic",
    "step_cap",
    "eval_interval",
    "eval_cap",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "env_family" => self.env_family = v.parse()?,
            "env_seed" => self.env_seed = parse(key, v)?,
            "master_seed" => self.master_seed = parse(key, v)?,
            "budget" => self.budget = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "pe_mode" => self.pe_mode = v.parse()?,
            "beta" => self.beta = parse(key, v)?,
            "pe_duration" => self.pe_duration = v.parse()?,
            "n_pe" => self.n_pe = parse(key, v)?,
            "p_pe" => self.p_pe = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "episodic" => self.episodic = parse(key, v)?,
            "step_cap" => self.step_cap = parse(key, v)?,
            "eval_interval" => self.eval_interval = parse(key, v)?,
            "eval_cap" => self.eval_cap = parse(key, v)?,
            other => return Err(Error::config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "env_family" => self.env_family.to_string(),
            "env_seed" => self.env_seed.to_string(),
            "master_seed" => self.master_seed.to_string(),
            "budget" => self.budget.to_string(),
            "epsilon" => self.epsilon.to_string(),
            "pe_mode" => self.pe_mode.to_string(),
            "beta" => self.beta.to_string(),
            "pe_duration" => self.pe_duration.to_string(),
            "n_pe" => self.n_pe.to_string(),
            "p_pe" => self.p_pe.to_string(),
            "alpha" => self.alpha.to_string(),
            "gamma" => self.gamma.to_string(),
            "episodic" => self.episodic.to_string(),
            "step_cap" => self.step_cap.to_string(),
            "eval_interval" => self.eval_interval.to_string(),
            "eval_cap" => self.eval_cap.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.apply_text(text, "<text>")?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = RunConfig::default();
        config.apply_text(&text, &path.display().to_string())?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        prob("epsilon", self.epsilon)?;
        prob("alpha", self.alpha)?;
        prob("gamma", self.gamma)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "beta = {} must be finite and non-negative",
                self.beta
            )));
        }
        if !(self.p_pe > 0.0 && self.p_pe <= 1.0) {
            return Err(Error::config(format!(
                "p_pe = {} is outside (0, 1]",
                self.p_pe
            )));
        }
        for (name, v) in [
            ("n_pe", self.n_pe),
            ("step_cap", self.step_cap),
            ("eval_cap", self.eval_cap),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if self.eval_interval == 0 {
            return Err(Error::config("eval_interval must be at least 1"));
        }
        if self.budget != 0 && self.budget <= self.eval_interval {
            return Err(Error::config(format!(
                "budget {} must exceed eval_interval {}",
                self.budget, self.eval_interval
            )));
        }
        Ok(())
    }

    pub fn pe_schedule(&self) -> PeSchedule {
        PeSchedule {
            mode: match self.pe_mode {
                PeModeKind::Always => PeMode::Always,
                PeModeKind::Gated => PeMode::NoveltyGated(self.beta),
                PeModeKind::Off => PeMode::Off,
            },
            duration: match self.pe_duration {
                DurationKind::Fixed => PeDuration::Fixed(self.n_pe),
                DurationKind::Proportional => PeDuration::Proportional(self.p_pe),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let c = RunConfig::default();
        assert_eq!(
            (c.alpha, c.gamma, c.epsilon, c.beta, c.p_pe),
            (0.1, 0.99, 0.1, 0.0, 0.5)
        );
        assert!(c.validate().is_ok());
        assert!(c.to_text().contains("alpha = 0.1\n"));
        assert!(c.to_text().contains("gamma = 0.99\n"));
    }

    #[test]
    fn text_round_trip() {
        let c = RunConfig {
            env_family: EnvFamily::LavaGap,
            pe_mode: PeModeKind::Gated,
            beta: 0.05,
            episodic: false,
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parses_comments_and_reports_lines() {
        let c = RunConfig::from_text("# header\nbudget = 10000 # short\n\nepsilon=0.3\n").unwrap();
        assert_eq!((c.budget, c.epsilon), (10_000, 0.3));
        let err = RunConfig::from_text("budget = 10\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        assert!(RunConfig::from_text("epsilon 0.3").is_err());
        assert!(RunConfig::from_text("pe_mode = sometimes").is_err());
    }

    #[test]
    fn validation() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.epsilon = 1.5));
        assert!(bad(|c| c.beta = -1.0));
        assert!(bad(|c| c.p_pe = 0.0));
        assert!(bad(|c| c.n_pe = 0));
        assert!(bad(|c| c.budget = 2000));
        assert!(!bad(|c| c.budget = 0));
    }
}
