//! Seeded synthetic return panels from a factor model, for demos and tests.
//!
//! Every firm loads on a Gaussian market factor and on a common tail factor. One
//! designated firm is driven almost entirely by the tail factor. In the stress
//! regime some days are crisis days: every firm drops a little and a few firms
//! crash hard.

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::YearMonth;
use crate::error::{Error, Result};
use crate::panel::ReturnPanel;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanelSpec {
    pub n_firms: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    /// Index of the firm that carries the tail factor.
    pub tail_firm: usize,
    pub stress_start: YearMonth,
    pub stress_end: YearMonth,
    pub market_vol: f64,
    pub tail_factor_scale: f64,
    pub idio_vol: f64,
    /// Probability that a stress-regime day is a crisis day.
    pub crisis_probability: f64,
    /// Mean loss of every firm on a crisis day.
    pub crisis_drop: f64,
    /// Probability that a firm crashes on a given crisis day.
    pub crash_probability: f64,
    pub crash_size: f64,
    /// Probability that any single observation is missing.
    pub missing_rate: f64,
    /// Every `late_listing_every`-th firm has no data before `late_listing_from`.
    pub late_listing_every: usize,
    pub late_listing_from: NaiveDate,
}

impl Default for FactorPanelSpec {
    fn default() -> Self {
        FactorPanelSpec {
            n_firms: 120,
            start: NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2015, 12, 31).expect("valid date"),
            seed: 20_011_231,
            tail_firm: 57,
            stress_start: YearMonth::new(2008, 1),
            stress_end: YearMonth::new(2009, 12),
            market_vol: 0.002,
            tail_factor_scale: 0.008,
            idio_vol: 0.012,
            crisis_probability: 0.4,
            crisis_drop: 0.015,
            crash_probability: 0.12,
            crash_size: 0.1,
            missing_rate: 0.01,
            late_listing_every: 15,
            late_listing_from: NaiveDate::from_ymd_opt(2004, 1, 1).expect("valid date"),
        }
    }
}

impl FactorPanelSpec {
    pub fn firm_name(index: usize) -> String {
        format!("F{index:03}")
    }

    pub fn tail_firm_name(&self) -> String {
        Self::firm_name(self.tail_firm)
    }

    pub fn in_stress(&self, date: NaiveDate) -> bool {
        let m = YearMonth::new(date.year(), date.month());
        self.stress_start <= m && m <= self.stress_end
    }
}

/// Business days (Monday to Friday) in `[start, end]`.
pub fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| d.weekday().number_from_monday() <= 5)
        .collect()
}

pub fn factor_panel(spec: &FactorPanelSpec) -> Result<ReturnPanel> {
    if spec.n_firms < 2 || spec.tail_firm >= spec.n_firms {
        return Err(Error::Config(format!(
            "need at least two firms and a tail firm below {}",
            spec.n_firms
        )));
    }
    let dist = |e: rand_distr::NormalError| Error::Config(e.to_string());
    let std_normal = Normal::new(0.0, 1.0).map_err(dist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let n = spec.n_firms;
    let betas: Vec<f64> = (0..n).map(|_| rng.random_range(0.6..1.2)).collect();
    let gammas: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.0)).collect();
    let drifts: Vec<f64> = (0..n).map(|_| rng.random_range(-0.0002..0.0006)).collect();
    let vols: Vec<f64> = (0..n)
        .map(|_| spec.idio_vol * rng.random_range(0.8..1.25))
        .collect();

    let dates = business_days(spec.start, spec.end);
    let mut rows = Vec::with_capacity(dates.len());
    let mut shocks = vec![0.0; n];
    for &date in &dates {
        let market = spec.market_vol * std_normal.sample(&mut rng);
        let tail = spec.tail_factor_scale * std_normal.sample(&mut rng);
        let crisis = spec.in_stress(date) && rng.random_bool(spec.crisis_probability);
        for s in shocks.iter_mut() {
            *s = 0.0;
            if crisis {
                *s -= spec.crisis_drop * rng.random_range(0.5..1.5);
                if rng.random_bool(spec.crash_probability) {
                    *s -= spec.crash_size * rng.random_range(0.7..1.3);
                }
            }
        }
        let row = (0..n)
            .map(|f| {
                let eps = std_normal.sample(&mut rng);
                let missing = rng.random_bool(spec.missing_rate);
                let r = if f == spec.tail_firm {
                    drifts[f] + tail + 0.1 * vols[f] * eps
                } else {
                    drifts[f]
                        + betas[f] * market
                        + gammas[f] * tail
                        + vols[f] * eps
                };
                let r = r + shocks[f];
                let listed = spec.late_listing_every == 0
                    || f % spec.late_listing_every != spec.late_listing_every - 1
                    || date >= spec.late_listing_from;
                (listed && !missing).then_some(r)
            })
            .collect();
        rows.push(row);
    }
    let firms = (0..n).map(FactorPanelSpec::firm_name).collect();
    ReturnPanel::new(dates, firms, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_panel() {
        let spec = FactorPanelSpec {
            n_firms: 5,
            tail_firm: 1,
            end: NaiveDate::from_ymd_opt(2001, 3, 31).unwrap(),
            ..FactorPanelSpec::default()
        };
        let a = factor_panel(&spec).unwrap();
        let b = factor_panel(&spec).unwrap();
        assert_eq!(a, b);
        let c = factor_panel(&FactorPanelSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn late_listed_firms_are_masked() {
        let spec = FactorPanelSpec {
            n_firms: 15,
            tail_firm: 1,
            end: NaiveDate::from_ymd_opt(2004, 2, 28).unwrap(),
            ..FactorPanelSpec::default()
        };
        let p = factor_panel(&spec).unwrap();
        assert!((0..p.n_dates())
            .filter(|&d| p.dates()[d] < spec.late_listing_from)
            .all(|d| !p.is_observed(d, 14)));
    }
}
