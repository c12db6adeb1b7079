//! Historical-simulation tail estimators and the MES-based pairwise impact.
//!
//! Quantiles are empirical order statistics: with `T` observations and tail
//! probability `alpha`, the quantile is the `k`-th smallest value where
//! `k = max(1, floor(alpha * T))`. Tail sets are `{t : r(t) <= q}`, so ties at the
//! quantile all belong to the tail.
//!
//! Sign conventions: `var_q` is stored in return space (a negative number for a
//! loss), while `es` and MES are loss-positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail probability matching a 95% confidence level.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Smallest sample accepted by the estimators: one tail point and one more.
pub const MIN_SAMPLE: usize = 2;

/// Order-statistic rank (1-based) of the `alpha` quantile of a `len`-sample.
pub fn tail_rank(len: usize, alpha: f64) -> usize {
    ((alpha * len as f64).floor() as usize).max(1)
}

fn validate(series: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Estimation(format!("alpha {alpha} outside (0, 0.5)")));
    }
    if series.len() < MIN_SAMPLE {
        return Err(Error::Estimation(format!(
            "{} observations, need at least {MIN_SAMPLE}",
            series.len()
        )));
    }
    if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::Estimation(format!("non-finite observation {bad}")));
    }
    Ok(())
}

/// Empirical `alpha` quantile of `series` (return space).
pub fn estimate_var(series: &[f64], alpha: f64) -> Result<f64> {
    validate(series, alpha)?;
    let k = tail_rank(series.len(), alpha);
    let mut scratch = series.to_vec();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Negative mean of `target` over the days where `condition <= threshold`.
fn conditional_loss(target: &[f64], condition: &[f64], threshold: f64) -> Option<f64> {
    let mut sum = CompensatedSum::default();
    let mut count = 0usize;
    for (&x, &c) in target.iter().zip(condition) {
        if c <= threshold {
            sum.add(x);
            count += 1;
        }
    }
    (count > 0).then(|| -(sum.value() / count as f64))
}

/// Neumaier summation.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn mean(series: &[f64]) -> f64 {
    let mut sum = CompensatedSum::default();
    series.iter().for_each(|&x| sum.add(x));
    sum.value() / series.len() as f64
}

/// Expected shortfall as a loss-positive number.
pub fn estimate_es(series: &[f64], alpha: f64) -> Result<f64> {
    let q = estimate_var(series, alpha)?;
    conditional_loss(series, series, q)
        .ok_or_else(|| Error::Estimation("empty tail set".into()))
}

/// Marginal expected shortfall of `target` given `source` is in its tail:
/// `-E(target | source <= q_source)`. Both vectors must be aligned day by day.
pub fn estimate_mes(target: &[f64], source: &[f64], alpha: f64) -> Result<f64> {
    if target.len() != source.len() {
        return Err(Error::Estimation(format!(
            "misaligned series: {} vs {} observations",
            target.len(),
            source.len()
        )));
    }
    validate(target, alpha)?;
    let q = estimate_var(source, alpha)?;
    conditional_loss(target, source, q)
        .ok_or_else(|| Error::Estimation("empty conditioning set".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub firm: String,
    pub mean_return: f64,
    pub var_q: f64,
    pub es: f64,
    pub tail_days: Vec<usize>,
}

impl RiskProfile {
    pub fn estimate(firm: impl Into<String>, series: &[f64], alpha: f64) -> Result<Self> {
        let var_q = estimate_var(series, alpha)?;
        let es = conditional_loss(series, series, var_q)
            .ok_or_else(|| Error::Estimation("empty tail set".into()))?;
        let tail_days = series
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= var_q)
            .map(|(t, _)| t)
            .collect();
        let mean_return = mean(series);
        Ok(RiskProfile {
            firm: firm.into(),
            mean_return,
            var_q,
            es,
            tail_days,
        })
    }

    /// `E(r) - E(r | r <= q)`, the scale of the impact ratio.
    pub fn tail_spread(&self) -> f64 {
        self.mean_return + self.es
    }

    fn is_degenerate(&self) -> bool {
        let scale = self.mean_return.abs().max(self.es.abs());
        self.tail_spread() <= 64.0 * f64::EPSILON * scale
    }
}

/// Share of the target's tail risk not explained by the source, clipped to [0, 1].
///
/// `(ES_i - MES_i|j) / (E(r_i) + ES_i)`.
pub fn impact(target: &RiskProfile, mes: f64) -> Result<f64> {
    if target.is_degenerate() {
        return Err(Error::DegenerateDenominator(target.firm.clone()));
    }
    let raw = (target.es - mes) / target.tail_spread();
    Ok(raw.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDiagnostic {
    /// Too few common observation days.
    Inestimable,
    /// Target's mean does not exceed its tail mean (e.g. a constant series).
    DegenerateDenominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairImpact {
    pub source: String,
    pub target: String,
    pub mes: f64,
    pub impact: f64,
    pub weight: f64,
    /// The target reacts positively to the source's distress.
    pub positive_reaction: bool,
    pub diagnostic: Option<PairDiagnostic>,
}

impl PairImpact {
    pub fn inestimable(source: &str, target: &str) -> Self {
        PairImpact {
            source: source.to_string(),
            target: target.to_string(),
            mes: f64::NAN,
            impact: f64::NAN,
            weight: 0.0,
            positive_reaction: false,
            diagnostic: Some(PairDiagnostic::Inestimable),
        }
    }
}

/// Directed weight of the impact of `source` (j) on `target` (i):
/// `1 - I_i|j` when `E(r_i) >= E(r_i | r_j <= q_j)`, else 0.
pub fn edge_weight(target: &RiskProfile, source: &RiskProfile, mes: f64) -> Result<PairImpact> {
    if target.firm == source.firm {
        return Err(Error::Estimation(format!(
            "self-pair for firm {}",
            target.firm
        )));
    }
    if !mes.is_finite() {
        return Err(Error::Estimation(format!("non-finite MES {mes}")));
    }
    let mut pair = PairImpact {
        source: source.firm.clone(),
        target: target.firm.clone(),
        mes,
        impact: f64::NAN,
        weight: 0.0,
        positive_reaction: false,
        diagnostic: None,
    };
    // E(r_i | r_j <= q_j) = -MES
    if target.mean_return < -mes {
        pair.positive_reaction = true;
    }
    match impact(target, mes) {
        Ok(i) => {
            pair.impact = i;
            if !pair.positive_reaction {
                pair.weight = 1.0 - i;
            }
        }
        Err(Error::DegenerateDenominator(_)) => {
            pair.diagnostic = Some(PairDiagnostic::DegenerateDenominator);
        }
        Err(e) => return Err(e),
    }
    Ok(pair)
}
