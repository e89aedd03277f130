use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::instance::Instance;
use crate::run::{solve, Options};

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: f64,
    pub branch: Option<String>,
    pub root: Option<f64>,
    pub iters: usize,
}

/// `steps` evenly spaced values from `from` to `to`, both ends included.
pub fn sweep_points(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(CliError::Schema("--steps must be at least 1".into()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Schema(format!(
            "sweep range [{from}, {to}] is not finite"
        )));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let h = (to - from) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + i as f64 * h
            }
        })
        .collect())
}

/// Solves one row per point; a row whose solve fails or does not verify is
/// kept with `value = NaN`. The returned count is the number of such rows.
pub fn sweep(
    inst: &Instance,
    param: &str,
    points: &[f64],
    opts: &Options,
) -> Result<(Vec<SweepRow>, usize), CliError> {
    inst.check_param(param)?;
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&x| {
            let solved = inst.with_param(param, x).and_then(|i| solve(&i, opts));
            match solved {
                Ok(env) if env.verified => SweepRow {
                    param: x,
                    value: env.optimal_value,
                    branch: env.branch,
                    root: env.root,
                    iters: env.iterations,
                },
                _ => SweepRow {
                    param: x,
                    value: f64::NAN,
                    branch: None,
                    root: None,
                    iters: 0,
                },
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.value.is_nan()).count();
    Ok((rows, failed))
}

pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
