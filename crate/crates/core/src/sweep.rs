//! Parameter sweeps: served licensees against the number of returning
//! incumbents, and revenue against the spectrum-to-antenna cost ratio.
//!
//! Sweep points are independent and solved in parallel; rows always come
//! back in grid order.

use rayon::prelude::*;
use thiserror::Error;

use crate::allocator::{allocate_dynamic, allocate_static, Allocation, CostModel, MvnoRequest};
use crate::band::BandPlan;
use crate::scenario::Scenario;
use crate::units::{Bps, Micros};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncumbentRow {
    pub active_incumbents: usize,
    pub dynamic: Allocation,
    pub baseline: Allocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRatioRow {
    /// Cost of 1 MHz of spectrum divided by the cost of one antenna.
    pub ratio: f64,
    pub cost: CostModel,
    pub dynamic: Allocation,
    pub baseline: Allocation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("ratio bounds must satisfy 0 < min <= max, got [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },
    #[error("a sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("the scenario's spectrum cost is zero, so no ratio can be realized")]
    ZeroSpectrumCost,
}

/// Solves both systems for one set of requests, band and costs.
pub fn evaluate(scenario: &Scenario, requests: &[MvnoRequest], plan: &BandPlan, cost: &CostModel) -> (Allocation, Allocation) {
    let (p, l) = (&scenario.rate_model, &scenario.limits);
    (
        allocate_dynamic(requests, plan, p, l, cost),
        allocate_static(requests, plan, p, l, cost),
    )
}

/// For k = 0..=incumbents, allocates with exactly the first k incumbents
/// active. `min_rate` replaces every licensee's requirement when given.
pub fn sweep_incumbents(scenario: &Scenario, min_rate: Option<Bps>) -> Vec<IncumbentRow> {
    let scenario = match min_rate {
        Some(r) => scenario.with_min_rate(r),
        None => scenario.clone(),
    };
    (0..=scenario.band.incumbents().len())
        .into_par_iter()
        .map(|k| {
            let plan = scenario.band.with_active_prefix(k);
            let (dynamic, baseline) = evaluate(&scenario, &scenario.mvnos, &plan, &scenario.cost);
            IncumbentRow {
                active_incumbents: k,
                dynamic,
                baseline,
            }
        })
        .collect()
}

/// `steps` log-spaced points from `min` to `max`, both inclusive.
pub fn log_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let (lo, hi) = (min.ln(), max.ln());
    (0..steps)
        .map(|i| match i {
            0 => min,
            _ if i == steps - 1 => max,
            _ => (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp(),
        })
        .collect()
}

/// Antenna cost (micros) realizing `ratio` for a fixed cost per Hz.
pub fn antenna_cost_for_ratio(per_hz: Micros, ratio: f64) -> Micros {
    Micros((per_hz.0 as f64 * 1e6 / ratio).round() as i128)
}

/// Holds the spectrum cost fixed and varies the antenna cost over a
/// log-spaced grid of spectrum-to-antenna cost ratios. Uses the scenario's
/// licensees and its band as configured at t = 0.
pub fn sweep_cost_ratio(
    scenario: &Scenario,
    ratio_min: f64,
    ratio_max: f64,
    steps: usize,
) -> Result<Vec<CostRatioRow>, SweepError> {
    if !(ratio_min > 0.0 && ratio_min <= ratio_max && ratio_max.is_finite()) {
        return Err(SweepError::InvalidRange {
            min: ratio_min,
            max: ratio_max,
        });
    }
    if steps < 2 {
        return Err(SweepError::TooFewSteps(steps));
    }
    let per_hz = scenario.cost.per_hz;
    if per_hz.0 == 0 {
        return Err(SweepError::ZeroSpectrumCost);
    }
    Ok(log_grid(ratio_min, ratio_max, steps)
        .into_par_iter()
        .map(|ratio| {
            let cost = CostModel {
                per_antenna: antenna_cost_for_ratio(per_hz, ratio),
                per_hz,
            };
            let (dynamic, baseline) = evaluate(scenario, &scenario.mvnos, &scenario.band, &cost);
            CostRatioRow {
                ratio,
                cost,
                dynamic,
                baseline,
            }
        })
        .collect())
}
