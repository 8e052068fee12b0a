use serde::Serialize;

use super::lm::LmHistory;
use crate::error::{Error, Result};

/// Relative errors at or below this are treated as converged to roundoff.
pub const ERROR_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateReport {
    /// Fit of log e_{k+1} = p log e_k + log C over the final converging window.
    Converging { order: f64, constant: f64, window: Vec<f64> },
    /// The error reached the roundoff floor in a single step.
    SingleStep { from: f64 },
    /// The error stopped decreasing above the floor.
    Plateau { level: f64 },
}

pub fn rate_diagnostics(history: &LmHistory) -> Result<RateReport> {
    let errors: Vec<f64> = history
        .records
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.rel_param_err.ok_or_else(|| Error::InvalidArgument("true parameters unknown".into())))
        .collect::<Result<_>>()?;
    let last = *errors.last().expect("history has iteration 0");
    if last > ERROR_FLOOR * 1e3 {
        let stalled = errors.len() < 2 || last > 0.5 * errors[errors.len() - 2];
        if stalled || history.stagnated() {
            return Ok(RateReport::Plateau { level: last });
        }
    }
    let above: Vec<f64> = errors.iter().copied().take_while(|&e| e > ERROR_FLOOR).collect();
    if above.len() == 1 && last <= ERROR_FLOOR {
        return Ok(RateReport::SingleStep { from: above[0] });
    }
    let mut start = above.len().saturating_sub(1);
    while start > 0 && above[start - 1] > above[start] && above.len() - start < 4 {
        start -= 1;
    }
    let window = above[start..].to_vec();
    if window.len() < 3 {
        return Err(Error::TooFewIterations(window.len()));
    }
    let xs: Vec<f64> = window[..window.len() - 1].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = window[1..].iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let order = sxy / sxx;
    let constant = (my - order * mx).exp();
    Ok(RateReport::Converging { order, constant, window })
}
