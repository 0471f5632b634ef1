//! Growth probes for sub-critical exponents.
//!
//! For each `n`, draws random sign forms of shape `n^m`, records
//! `lp_coeff_norm(T, q) / ‖T‖` and fits the log-log slope of the best ratio
//! against `n`. Below the critical exponent the slope is positive; at the
//! critical exponent it stays near zero.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};
use crate::exponents::PVector;
use crate::norms::{sup_norm, NormConfig};
use crate::par;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::{random_tensor, CoeffTensor, Distribution};

pub const DEFAULT_N_LIST: [usize; 4] = [2, 4, 8, 16];
pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_PROBE_STARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub trials: usize,
    pub best_ratio: f64,
    pub mean_ratio: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_ratio: f64,
    pub certified_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub p: PVector,
    pub q: f64,
    pub rows: Vec<GrowthRow>,
    pub slope: f64,
    /// `None` with only two rows.
    pub slope_stderr: Option<f64>,
}

/// Least squares on `(log n, log y)`. Returns the slope and its standard
/// error.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, Option<f64>)> {
    if points.len() < 2 {
        return Err(HlError::invalid("slope fit needs at least two rows"));
    }
    if points.iter().any(|&(n, y)| !(n > 0.0 && y > 0.0)) {
        return Err(HlError::domain("log-log fit needs positive values"));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HlError::domain("slope fit needs at least two distinct n"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let stderr = (points.len() > 2).then(|| {
        let intercept = ym - slope * xm;
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    });
    Ok((slope, stderr))
}

struct Cell {
    ratio: f64,
    certified: bool,
}

/// Runs the probe. Cell `(n, trial)` draws its form from stream
/// `(seed, n, trial, 0)` and its norm starts from `(seed, n, trial, 1)`.
pub fn growth_probe<S: Scalar>(
    p: &PVector,
    q: f64,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    norm_cfg: &NormConfig,
) -> Result<GrowthTable> {
    if q.is_nan() || q < 1.0 {
        return Err(HlError::domain(format!(
            "probe exponent q = {q} is below 1"
        )));
    }
    if n_list.is_empty() {
        return Err(HlError::invalid("probe needs a nonempty n list"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(HlError::invalid(
            "n list must be positive and strictly increasing",
        ));
    }
    if trials < 1 {
        return Err(HlError::invalid("probe needs trials >= 1"));
    }
    let m = p.m();

    let cells = par::map_indexed(n_list.len() * trials, |c| -> Result<Cell> {
        let n = n_list[c / trials];
        let trial = c % trials;
        let path = [n as u64, trial as u64];
        let t: CoeffTensor<S> = random_tensor(
            &vec![n; m],
            Distribution::Signs,
            derive_seed(seed, &[path[0], path[1], 0]),
        )?;
        let cfg = norm_cfg.with_seed(derive_seed(seed, &[path[0], path[1], 1]));
        let norm = sup_norm(&t, p.entries(), &cfg)?;
        Ok(Cell {
            ratio: t.lp_coeff_norm(q)? / norm.value,
            certified: norm.certified_exact,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let rows: Vec<GrowthRow> = n_list
        .iter()
        .zip(cells.chunks_exact(trials))
        .map(|(&n, chunk)| {
            let k = chunk.len() as f64;
            let best = chunk
                .iter()
                .map(|c| c.ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            let mean = chunk.iter().map(|c| c.ratio).sum::<f64>() / k;
            let var = if chunk.len() > 1 {
                chunk.iter().map(|c| (c.ratio - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            GrowthRow {
                n,
                trials,
                best_ratio: best,
                mean_ratio: mean,
                std_ratio: var.sqrt(),
                certified_fraction: chunk.iter().filter(|c| c.certified).count() as f64 / k,
            }
        })
        .collect();

    let (slope, slope_stderr) = if rows.len() >= 2 {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.best_ratio)).collect();
        fit_loglog_slope(&pts)?
    } else {
        (0.0, None)
    };

    Ok(GrowthTable {
        p: p.clone(),
        q,
        rows,
        slope,
        slope_stderr,
    })
}

impl GrowthTable {
    /// Header `n,trials,best_ratio,mean_ratio,std_ratio,certified_fraction`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}
