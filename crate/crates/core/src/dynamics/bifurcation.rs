use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map1d::Map1D;
use super::period::{detect_period_in_series, Period};
use crate::error::{Error, Result};
use crate::operator::format_g17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub transient: usize,
    /// Samples kept per parameter value; period detection looks for periods
    /// up to `keep / 4`.
    pub keep: usize,
    pub tol: f64,
    pub x0: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            transient: 1000,
            keep: 256,
            tol: 1e-6,
            // generic: avoids 0, 1/2 and the low-period points
            x0: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub param: f64,
    pub samples: Vec<f64>,
    pub period: Period,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub parameter: String,
    pub cells: Vec<ScanCell>,
}

impl BifurcationScan {
    /// `param,sample_index,value,period`, one row per kept sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "param,sample_index,value,period")?;
        for cell in &self.cells {
            for (i, v) in cell.samples.iter().enumerate() {
                writeln!(out, "{},{i},{},{}", format_g17(cell.param), format_g17(*v), cell.period)?;
            }
        }
        Ok(())
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn parameter_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput("grid bounds must be finite".into()));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// For each parameter value, iterates the map built by `family` from
/// `config.x0`, drops the transient, keeps `config.keep` samples and detects
/// their period. Cells are computed in parallel; the output does not depend
/// on scheduling.
pub fn bifurcation_scan<M, F>(parameter: &str, values: &[f64], family: F, config: &ScanConfig) -> Result<BifurcationScan>
where
    M: Map1D,
    F: Fn(f64) -> Result<M> + Sync,
{
    if config.keep < 4 {
        return Err(Error::InvalidInput(format!("keep must be at least 4, got {}", config.keep)));
    }
    let max_period = config.keep / 4;
    let cells = values
        .par_iter()
        .map(|&param| {
            let map = family(param)?;
            let mut x = config.x0;
            for _ in 0..config.transient {
                x = map.eval(x);
            }
            let samples: Vec<f64> = (0..config.keep)
                .map(|_| {
                    x = map.eval(x);
                    x
                })
                .collect();
            let period = detect_period_in_series(&samples, max_period, config.tol)?;
            Ok(ScanCell { param, samples, period })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BifurcationScan {
        parameter: parameter.to_string(),
        cells,
    })
}
