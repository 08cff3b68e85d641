//! Sweep CSV with header `t,lower,upper,lower_rigorous,upper_rigorous`.

use hausdorff_forge::search::SweepPoint;
use serde::{Deserialize, Serialize};

use crate::{CliError, Exit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_rigorous: bool,
    pub upper_rigorous: bool,
}

impl From<&SweepPoint<f64>> for SweepRow {
    fn from(p: &SweepPoint<f64>) -> Self {
        Self {
            t: p.t,
            lower: p.estimate.lower,
            upper: p.estimate.upper,
            lower_rigorous: p.estimate.lower_rigorous,
            upper_rigorous: p.estimate.upper_rigorous,
        }
    }
}

pub fn sweep_csv(points: &[SweepPoint<f64>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(SweepRow::from(p))
            .map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
    }
    if points.is_empty() {
        w.write_record(["t", "lower", "upper", "lower_rigorous", "upper_rigorous"])
            .map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>, CliError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<SweepRow>, _>>()
        .map_err(|e| CliError::new(Exit::Io, format!("sweep csv: {e}")))
}
