//! Tracking-quality metrics computed from a simulation trace.

use crate::scenario::runner::SimTrace;

/// Summary statistics of the position error `e1` over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Root-mean-square position error, rad.
    pub rms_error: f64,
    /// Largest absolute position error, rad.
    pub max_abs_error: f64,
    /// First time after which |e1| stays within 2% of the peak reference
    /// magnitude; `None` when the error never settles.
    pub settling_time_2pct: Option<f64>,
    /// Mean |e1| over the final tenth of the trace, rad.
    pub steady_state_error: f64,
}

/// Computes the error metrics for a finished trace. An empty trace yields
/// all zeros with a settling time of zero.
pub fn compute_metrics(trace: &SimTrace) -> Metrics {
    let rows = &trace.rows;
    if rows.is_empty() {
        return Metrics {
            rms_error: 0.0,
            max_abs_error: 0.0,
            settling_time_2pct: Some(0.0),
            steady_state_error: 0.0,
        };
    }

    let mut sum_sq = 0.0;
    let mut max_abs = 0.0f64;
    let mut peak_ref = 0.0f64;
    for row in rows {
        sum_sq += row.e1 * row.e1;
        max_abs = max_abs.max(row.e1.abs());
        peak_ref = peak_ref.max(row.r.abs());
    }
    let rms = (sum_sq / rows.len() as f64).sqrt();

    // Settling: scan from the end for the last sample outside the 2% band.
    let band = 0.02 * peak_ref;
    let settling = match rows.iter().rposition(|row| row.e1.abs() > band) {
        None => Some(rows[0].t),
        Some(last_outside) if last_outside + 1 < rows.len() => Some(rows[last_outside + 1].t),
        Some(_) => None,
    };

    // Steady state: mean |e1| over the final tenth of the samples.
    let tail_start = (rows.len() * 9) / 10;
    let tail = &rows[tail_start.min(rows.len() - 1)..];
    let steady = tail.iter().map(|row| row.e1.abs()).sum::<f64>() / tail.len() as f64;

    Metrics {
        rms_error: rms,
        max_abs_error: max_abs,
        settling_time_2pct: settling,
        steady_state_error: steady,
    }
}
