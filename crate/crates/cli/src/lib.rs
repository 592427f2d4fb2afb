//! Scenario runner: reads scenario files, runs one task each and writes
//! deterministic CSV or JSON artifacts.

pub mod error;
pub mod scenario;
pub mod table;
pub mod tasks;

use error::CliError;
use rayon::prelude::*;
use scenario::{Format, Scenario};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;
use table::{write_atomic, Cell, Table};

/// Printed after every run; the data files themselves carry no timing.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub task: String,
    pub output: String,
    pub config_hash: String,
    pub wall_time_s: f64,
    pub headline_name: String,
    pub headline: f64,
}

pub fn config_hash(sc: &Scenario) -> String {
    let canonical = serde_json::to_string(sc).expect("scenario serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })
}

pub fn run_scenario(sc: &Scenario, output_dir: &Path, format: Option<Format>) -> Result<Summary, CliError> {
    let start = Instant::now();
    sc.validate()?;
    let artifact = tasks::run_task(sc)?;
    let format = sc.format(format);
    let target = output_dir.join(sc.output_file(format));
    write_atomic(&target, &artifact.table.encode(format, &sc.name, &artifact.headline))?;
    Ok(Summary {
        scenario: sc.name.clone(),
        task: sc.task.name().into(),
        output: target.display().to_string(),
        config_hash: config_hash(sc),
        wall_time_s: start.elapsed().as_secs_f64(),
        headline_name: artifact.headline.name,
        headline: artifact.headline.value,
    })
}

pub fn run_file(path: &Path, output_dir: &Path, format: Option<Format>) -> Result<Summary, CliError> {
    let sc = Scenario::from_json(&read(path)?)?;
    run_scenario(&sc, output_dir, format)
}

/// Replace the scalar at a dotted path such as `system.gamma` or
/// `task.wavepacket.width_rate`; list entries are addressed by index.
pub fn set_parameter(doc: &mut Value, path: &str, value: f64) -> Result<(), CliError> {
    let unknown = || CliError::UnknownParameterPath(path.to_string());
    let mut node = doc;
    for seg in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(seg).ok_or_else(unknown)?,
            Value::Array(list) => {
                let i: usize = seg.parse().map_err(|_| unknown())?;
                list.get_mut(i).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    match node {
        Value::Number(_) | Value::String(_) => {
            *node = serde_json::Number::from_f64(value).map(Value::Number).ok_or_else(unknown)?;
            Ok(())
        }
        _ => Err(unknown()),
    }
}

/// Run one scenario per value in parallel and write an index of
/// (value, headline) sorted by value.
pub fn sweep_file(
    path: &Path,
    param: &str,
    values: &[f64],
    output_dir: &Path,
    format: Option<Format>,
) -> Result<(PathBuf, Vec<Summary>), CliError> {
    let doc: Value = serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(e.to_string()))?;
    let base = Scenario::from_json(&doc.to_string())?;
    set_parameter(&mut doc.clone(), param, 0.0)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let runs: Vec<Summary> = sorted
        .par_iter()
        .map(|&v| {
            let mut d = doc.clone();
            set_parameter(&mut d, param, v)?;
            let mut sc = Scenario::from_json(&d.to_string())?;
            sc.name = format!("{}__{param}={v}", base.name);
            sc.output.path = None;
            run_scenario(&sc, output_dir, format)
        })
        .collect::<Result<_, _>>()?;
    let mut index = Table::new(["value", "headline_name", "headline"]);
    for (v, s) in sorted.iter().zip(&runs) {
        index.push(vec![Cell::Num(*v), Cell::Text(s.headline_name.clone()), Cell::Num(s.headline)]);
    }
    let format = base.format(format);
    let target = output_dir.join(format!("{}__sweep_index.{}", base.name, format.extension()));
    let headline = table::Headline::new(param, f64::NAN);
    write_atomic(&target, &index.encode(format, &base.name, &headline))?;
    Ok((target, runs))
}
