//! End-to-end study: window networks, robustness reports, sub-period rankings and
//! the exported file tree.
//!
//! ```text
//! <out>/networks/window_<t>.json
//! <out>/reports/window_<t>.json
//! <out>/rankings/<period>.csv
//! <out>/timeseries.csv
//! <out>/charts/*.svg
//! ```

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts;
pub use crate::config::{StudyConfig, SubPeriod, YearMonth, ALL_PERIODS};
use crate::error::{Error, Result};
use crate::network::{build_directed, symmetrize, NetworkDocument, RiskNetwork};
use crate::panel::{load_returns, window_panel, LoadOptions, ReturnPanel, WindowConfig, WindowSlice};
use crate::serde_inf;
use crate::spectral::{analyze, RobustnessReport};

/// Share of a period's windows a firm must be present in to be ranked.
pub const MIN_COVERAGE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedWindow {
    pub window_id: usize,
    pub label: String,
    pub reason: String,
}

/// Builds the symmetrized network of every non-degenerate window.
pub fn build_networks(
    slices: &[WindowSlice],
    alpha: f64,
) -> (Vec<RiskNetwork>, Vec<SkippedWindow>) {
    let results: Vec<(&WindowSlice, Result<RiskNetwork>)> = slices
        .par_iter()
        .map(|s| (s, build_directed(s, alpha).and_then(|d| symmetrize(&d))))
        .collect();
    let mut networks = Vec::new();
    let mut skipped = Vec::new();
    for (slice, result) in results {
        match result {
            Ok(net) => networks.push(net),
            Err(e) => {
                log::warn!("window {} skipped: {e}", slice.label);
                skipped.push(SkippedWindow {
                    window_id: slice.window_id,
                    label: slice.label.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    (networks, skipped)
}

pub fn analyze_networks(networks: &[RiskNetwork]) -> (Vec<RobustnessReport>, Vec<SkippedWindow>) {
    let results: Vec<Result<RobustnessReport>> = networks.par_iter().map(analyze).collect();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (net, result) in networks.iter().zip(results) {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => {
                log::warn!("window {} not analyzed: {e}", net.label);
                skipped.push(SkippedWindow {
                    window_id: net.window_id,
                    label: net.label.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    (reports, skipped)
}

fn label_month(label: &str) -> Option<YearMonth> {
    label.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    pub firm: String,
    #[serde(with = "serde_inf")]
    pub mean_werc: f64,
    pub quartile: u8,
    /// Windows of the period in which the firm was analyzed.
    pub coverage: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub period: String,
    /// Reports falling inside the period.
    pub windows: usize,
    pub rows: Vec<RankingRow>,
    /// Firms present in some window but below the coverage floor.
    pub excluded: Vec<(String, usize)>,
}

#[derive(Default)]
struct Accumulator {
    sum: f64,
    count: usize,
    infinite: usize,
    survivor_sum_when_infinite: f64,
}

/// Ranks firms by their mean WERC over the reports of one period.
///
/// Means are taken with equal weight over the windows in which a firm was
/// analyzed. A single disconnecting window makes the mean `+inf`; ties among
/// `+inf` go to the smaller mean surviving component, then to the firm
/// identifier.
pub fn rank_period(period: &str, reports: &[&RobustnessReport]) -> RankingTable {
    let mut acc: BTreeMap<&str, Accumulator> = BTreeMap::new();
    for report in reports {
        for f in &report.firms {
            let a = acc.entry(f.firm.as_str()).or_default();
            a.count += 1;
            if f.werc == f64::INFINITY {
                a.infinite += 1;
                a.survivor_sum_when_infinite += f.largest_survivor as f64;
            } else {
                a.sum += f.werc;
            }
        }
    }
    let windows = reports.len();
    let floor = MIN_COVERAGE * windows as f64;
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (firm, a) in acc {
        if (a.count as f64) < floor {
            excluded.push((firm.to_string(), a.count));
            continue;
        }
        let (mean, survivor) = if a.infinite > 0 {
            (f64::INFINITY, a.survivor_sum_when_infinite / a.infinite as f64)
        } else {
            (a.sum / a.count as f64, 0.0)
        };
        kept.push((firm.to_string(), mean, survivor, a.count));
    }
    kept.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| {
                if a.1 == f64::INFINITY {
                    a.2.total_cmp(&b.2)
                } else {
                    Ordering::Equal
                }
            })
            .then_with(|| a.0.cmp(&b.0))
    });
    let top = kept.len().div_ceil(4).max(1);
    let rows = kept
        .into_iter()
        .enumerate()
        .map(|(k, (firm, mean_werc, _, coverage))| RankingRow {
            rank: k + 1,
            firm,
            mean_werc,
            quartile: (k / top + 1).min(4) as u8,
            coverage,
        })
        .collect();
    RankingTable {
        period: period.to_string(),
        windows,
        rows,
        excluded,
    }
}

/// One table per sub-period followed by the "All periods" table.
pub fn rank_all(reports: &[RobustnessReport], periods: &[SubPeriod]) -> Vec<RankingTable> {
    let mut tables: Vec<RankingTable> = periods
        .iter()
        .map(|p| {
            let inside: Vec<&RobustnessReport> = reports
                .iter()
                .filter(|r| label_month(&r.label).is_some_and(|m| p.contains(m)))
                .collect();
            rank_period(&p.name, &inside)
        })
        .collect();
    let all: Vec<&RobustnessReport> = reports.iter().collect();
    tables.push(rank_period(ALL_PERIODS, &all));
    tables
}

impl RankingTable {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["rank", "firm", "mean_werc", "quartile", "coverage"])?;
        for row in &self.rows {
            w.write_record([
                row.rank.to_string(),
                row.firm.clone(),
                serde_inf::format(row.mean_werc),
                row.quartile.to_string(),
                row.coverage.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<ranking>", e))?;
        Ok(())
    }

    pub fn first_quartile(&self) -> impl Iterator<Item = &RankingRow> {
        self.rows.iter().filter(|r| r.quartile == 1)
    }
}

/// File name for a period's ranking table: lowercase, spaces to dashes.
pub fn period_slug(period: &str) -> String {
    period
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBand {
    pub group: i32,
    pub count: usize,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Linear-interpolation sample quantile of sorted data.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and 5%/95% quantiles of the positive weights, grouped by calendar year.
pub fn weight_distribution_stats(networks: &[RiskNetwork]) -> Vec<WeightBand> {
    let mut groups: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for net in networks {
        let Some(month) = label_month(&net.label) else {
            log::warn!("network {:?} has no YYYY-MM label; left out of weight bands", net.label);
            continue;
        };
        let bucket = groups.entry(month.year).or_default();
        bucket.extend(net.edges().into_iter().map(|e| e.2));
    }
    groups
        .into_iter()
        .filter_map(|(year, mut w)| {
            if w.is_empty() {
                log::info!("year {year} has no positive weights; omitted");
                return None;
            }
            w.sort_by(f64::total_cmp);
            Some(WeightBand {
                group: year,
                count: w.len(),
                mean: w.iter().sum::<f64>() / w.len() as f64,
                q05: interpolated_quantile(&w, 0.05),
                q95: interpolated_quantile(&w, 0.95),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub window: usize,
    pub label: String,
    /// Sub-period containing the window, empty when none does.
    pub period: String,
    /// 1 on the first window of a sub-period.
    pub period_start: u8,
    pub n: usize,
    pub density: f64,
    pub normalized_kirchhoff: f64,
    pub median_clustering: f64,
}

pub fn timeseries_rows(reports: &[RobustnessReport], periods: &[SubPeriod]) -> Vec<TimeseriesRow> {
    let mut sorted: Vec<&RobustnessReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.window_id);
    let mut previous = String::new();
    sorted
        .into_iter()
        .map(|r| {
            let period = label_month(&r.label)
                .and_then(|m| periods.iter().find(|p| p.contains(m)))
                .map(|p| p.name.clone())
                .unwrap_or_default();
            let period_start = (!period.is_empty() && period != previous) as u8;
            previous = period.clone();
            TimeseriesRow {
                window: r.window_id,
                label: r.label.clone(),
                period,
                period_start,
                n: r.n,
                density: r.density,
                normalized_kirchhoff: r.normalized_kirchhoff,
                median_clustering: r.median_clustering(),
            }
        })
        .collect()
}

const TIMESERIES_HEADER: [&str; 8] = [
    "window",
    "label",
    "period",
    "period_start",
    "n",
    "density",
    "normalized_kirchhoff",
    "median_clustering",
];

/// Chronological per-window CSV; header-only when there are no reports.
pub fn timeseries_export<W: Write>(
    reports: &[RobustnessReport],
    periods: &[SubPeriod],
    sink: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(TIMESERIES_HEADER)?;
    for row in timeseries_rows(reports, periods) {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<timeseries>", e))?;
    Ok(())
}

pub fn read_timeseries<R: Read>(source: R) -> Result<Vec<TimeseriesRow>> {
    let mut r = csv::Reader::from_reader(source);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub windows: usize,
    pub networks: Vec<RiskNetwork>,
    pub reports: Vec<RobustnessReport>,
    pub rankings: Vec<RankingTable>,
    pub skipped: Vec<SkippedWindow>,
    pub sub_periods: Vec<SubPeriod>,
}

pub fn load_panel(config: &StudyConfig) -> Result<ReturnPanel> {
    let file = fs::File::open(&config.input).map_err(|e| Error::io(&config.input, e))?;
    load_returns(
        std::io::BufReader::new(file),
        &LoadOptions {
            delimiter: config.delimiter,
        },
    )
}

fn window_config(config: &StudyConfig) -> WindowConfig {
    WindowConfig {
        min_obs: config.min_obs,
        ..WindowConfig::default()
    }
}

/// Networks only, as produced by the `build` subcommand.
pub fn build_study_networks(
    config: &StudyConfig,
    panel: &ReturnPanel,
) -> Result<(Vec<RiskNetwork>, Vec<SkippedWindow>)> {
    config.validate()?;
    let slices = window_panel(panel, &window_config(config))?;
    let (networks, skipped) = build_networks(&slices, config.alpha);
    if networks.is_empty() {
        return Err(Error::Empty(format!(
            "all {} windows are degenerate or failed",
            slices.len()
        )));
    }
    Ok((networks, skipped))
}

/// Runs the full study on an in-memory panel.
pub fn run_study_on(config: &StudyConfig, panel: &ReturnPanel) -> Result<StudyOutput> {
    config.validate()?;
    let slices = window_panel(panel, &window_config(config))?;
    let (networks, mut skipped) = build_networks(&slices, config.alpha);
    let (reports, failed) = analyze_networks(&networks);
    skipped.extend(failed);
    skipped.sort_by_key(|s| s.window_id);
    if reports.is_empty() {
        return Err(Error::Empty(format!(
            "none of the {} windows could be analyzed",
            slices.len()
        )));
    }
    let rankings = rank_all(&reports, &config.sub_periods);
    Ok(StudyOutput {
        windows: slices.len(),
        networks,
        reports,
        rankings,
        skipped,
        sub_periods: config.sub_periods.clone(),
    })
}

/// Loads the configured input and runs the full study.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    let panel = load_panel(config)?;
    run_study_on(config, &panel)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn window_file_name(window_id: usize) -> String {
    format!("window_{window_id}.json")
}

pub fn write_networks(dir: &Path, networks: &[RiskNetwork]) -> Result<()> {
    let sub = dir.join("networks");
    create_dir(&sub)?;
    for net in networks {
        write_json(&sub.join(window_file_name(net.window_id)), &net.to_document())?;
    }
    Ok(())
}

pub fn write_reports(dir: &Path, reports: &[RobustnessReport]) -> Result<()> {
    let sub = dir.join("reports");
    create_dir(&sub)?;
    for r in reports {
        write_json(&sub.join(window_file_name(r.window_id)), r)?;
    }
    Ok(())
}

pub fn write_rankings(dir: &Path, tables: &[RankingTable]) -> Result<()> {
    let sub = dir.join("rankings");
    create_dir(&sub)?;
    for t in tables {
        let mut buf = Vec::new();
        t.write_csv(&mut buf)?;
        write_file(&sub.join(format!("{}.csv", period_slug(&t.period))), &buf)?;
        for (firm, coverage) in &t.excluded {
            log::info!(
                "{}: {firm} excluded (present in {coverage} of {} windows)",
                t.period,
                t.windows
            );
        }
    }
    Ok(())
}

pub fn write_timeseries(dir: &Path, reports: &[RobustnessReport], periods: &[SubPeriod]) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join("timeseries.csv");
    let mut buf = Vec::new();
    timeseries_export(reports, periods, &mut buf)?;
    write_file(&path, &buf)?;
    Ok(path)
}

impl StudyOutput {
    pub fn write(&self, dir: &Path, with_charts: bool) -> Result<()> {
        write_networks(dir, &self.networks)?;
        write_reports(dir, &self.reports)?;
        write_rankings(dir, &self.rankings)?;
        write_timeseries(dir, &self.reports, &self.sub_periods)?;
        if with_charts {
            let rows = timeseries_rows(&self.reports, &self.sub_periods);
            let bands = weight_distribution_stats(&self.networks);
            charts::emit_charts(&dir.join("charts"), &rows, &bands)?;
        }
        Ok(())
    }

    pub fn ranking(&self, period: &str) -> Option<&RankingTable> {
        self.rankings.iter().find(|t| t.period == period)
    }
}

fn read_window_documents<T: for<'de> Deserialize<'de>>(dir: &Path) -> Result<Vec<T>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("window_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(Error::from)
        })
        .collect()
}

/// Reads `reports/window_*.json`, sorted by window id.
pub fn read_reports(dir: &Path) -> Result<Vec<RobustnessReport>> {
    let mut reports: Vec<RobustnessReport> = read_window_documents(dir)?;
    reports.sort_by_key(|r| r.window_id);
    Ok(reports)
}

/// Reads `networks/window_*.json`, sorted by window id.
pub fn read_networks(dir: &Path) -> Result<Vec<RiskNetwork>> {
    let docs: Vec<NetworkDocument> = read_window_documents(dir)?;
    let mut nets = docs
        .iter()
        .map(RiskNetwork::from_document)
        .collect::<Result<Vec<_>>>()?;
    nets.sort_by_key(|n| n.window_id);
    Ok(nets)
}
