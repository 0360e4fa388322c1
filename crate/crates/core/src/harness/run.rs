use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use super::{RunConfig, RunLog};
use crate::error::Result;
use crate::explorer;
use crate::grid::GridMap;

/// Validates `config`, trains, and writes the result files to `out_dir` when
/// one is given.
pub fn run(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunLog> {
    config.validate()?;
    let map = config.env_family.build(config.env_seed)?;
    let log = explorer::train_on(&map, config)?;
    if let Some(dir) = out_dir {
        write_run(&log, &map, dir)?;
    }
    Ok(log)
}

/// Writes `run.csv`, `run.json`, `map.txt` and, if the log carries one,
/// `heatmap.csv` and `heatmap.svg` into `dir`.
pub fn write_run(log: &RunLog, map: &GridMap, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    log.write_csv(BufWriter::new(File::create(dir.join("run.csv"))?))?;
    let mut json = serde_json::to_string_pretty(log)?;
    json.push('\n');
    fs::write(dir.join("run.json"), json)?;
    fs::write(dir.join("map.txt"), map.to_text())?;
    if let Some(heat) = &log.heatmap {
        heat.write_csv(BufWriter::new(File::create(dir.join("heatmap.csv"))?))?;
        fs::write(dir.join("heatmap.svg"), heat.to_svg(map))?;
    }
    Ok(())
}
