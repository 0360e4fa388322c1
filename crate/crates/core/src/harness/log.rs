use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::error::{Error, Result};
use crate::eval::Heatmap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// All environment steps, initialisation episode included.
    pub env_steps: u64,
    pub init_steps: u64,
    pub goal_steps: u64,
    pub pe_steps: u64,
    /// Episodes that post-explored at all.
    pub pe_episodes: u64,
    pub relabel_goals: u64,
    pub relabel_updates: u64,
    pub episodes: u64,
    pub goal_successes: u64,
    pub lava_deaths: u64,
    pub goals_discovered: u64,
    /// Training stopped early because no episode could take a step.
    pub stalled: bool,
}

/// Everything a training run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: RunConfig,
    pub checkpoints: Vec<Checkpoint>,
    pub counters: Counters,
    #[serde(skip_serializing, default)]
    pub heatmap: Option<Heatmap>,
}

impl RunLog {
    pub fn new(config: RunConfig) -> Self {
        RunLog {
            config,
            checkpoints: Vec::new(),
            counters: Counters::default(),
            heatmap: None,
        }
    }

    pub fn final_coverage(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.coverage)
    }

    /// `step,coverage` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,coverage")?;
        for c in &self.checkpoints {
            writeln!(w, "{},{}", c.step, c.coverage)?;
        }
        Ok(())
    }
}

/// Reads back the checkpoints written by [`RunLog::write_csv`].
pub fn read_checkpoints<R: BufRead>(r: R, origin: &str) -> Result<Vec<Checkpoint>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if n == 0 {
            if line.trim() != "step,coverage" {
                return Err(parse_err(origin, 1, "expected header `step,coverage`"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (step, coverage) = line
            .split_once(',')
            .ok_or_else(|| parse_err(origin, n + 1, "expected two columns"))?;
        out.push(Checkpoint {
            step: step
                .parse()
                .map_err(|_| parse_err(origin, n + 1, "bad step"))?,
            coverage: coverage
                .parse()
                .map_err(|_| parse_err(origin, n + 1, "bad coverage"))?,
        });
    }
    Ok(out)
}

fn parse_err(origin: &str, line: usize, msg: &str) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        msg: msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut log = RunLog::new(RunConfig::default());
        log.checkpoints = vec![
            Checkpoint {
                step: 2000,
                coverage: 0.1,
            },
            Checkpoint {
                step: 4000,
                coverage: 1.0 / 3.0,
            },
        ];
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = read_checkpoints(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, log.checkpoints);
        assert!(read_checkpoints("step,cov\n".as_bytes(), "mem").is_err());
    }
}
