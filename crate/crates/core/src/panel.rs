//! Return panels: wide CSV ingestion, serialization and calendar-month windowing.
//!
//! A panel is a dates × firms matrix of daily simple returns with an observation
//! mask. Windows group the panel's dates by calendar month and keep only the firms
//! with enough observed days in that month.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum number of observed days a firm needs inside a window.
pub const DEFAULT_MIN_OBS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    firms: Vec<String>,
    /// Row-major `dates × firms`. Unobserved entries hold `0.0`.
    returns: Vec<f64>,
    mask: Vec<bool>,
}

impl ReturnPanel {
    /// Builds a panel from row-major values where `None` marks a missing cell.
    ///
    /// Rows are sorted by date. Duplicate dates or firm identifiers, non-finite
    /// observed values and ragged rows are rejected.
    pub fn new(
        dates: Vec<NaiveDate>,
        firms: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if rows.len() != dates.len() {
            return Err(Error::InvalidPanel(format!(
                "{} rows for {} dates",
                rows.len(),
                dates.len()
            )));
        }
        let mut seen = HashSet::new();
        for firm in &firms {
            if !seen.insert(firm.as_str()) {
                return Err(Error::DuplicateFirm(firm.clone()));
            }
        }

        let mut order: Vec<usize> = (0..dates.len()).collect();
        order.sort_by_key(|&r| dates[r]);
        for pair in order.windows(2) {
            if dates[pair[0]] == dates[pair[1]] {
                return Err(Error::DuplicateDate(dates[pair[0]].to_string()));
            }
        }

        let width = firms.len();
        let mut returns = Vec::with_capacity(dates.len() * width);
        let mut mask = Vec::with_capacity(dates.len() * width);
        for &r in &order {
            let row = &rows[r];
            if row.len() != width {
                return Err(Error::InvalidPanel(format!(
                    "row for {} has {} values, expected {}",
                    dates[r],
                    row.len(),
                    width
                )));
            }
            for (c, cell) in row.iter().enumerate() {
                match cell {
                    Some(v) if !v.is_finite() => {
                        return Err(Error::InvalidPanel(format!(
                            "non-finite value for {} on {}",
                            firms[c], dates[r]
                        )));
                    }
                    Some(v) => {
                        returns.push(*v);
                        mask.push(true);
                    }
                    None => {
                        returns.push(0.0);
                        mask.push(false);
                    }
                }
            }
        }
        let dates = order.iter().map(|&r| dates[r]).collect();
        Ok(ReturnPanel {
            dates,
            firms,
            returns,
            mask,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn get(&self, date: usize, firm: usize) -> Option<f64> {
        let idx = date * self.firms.len() + firm;
        self.mask[idx].then(|| self.returns[idx])
    }

    pub fn is_observed(&self, date: usize, firm: usize) -> bool {
        self.mask[date * self.firms.len() + firm]
    }

    pub fn firm_index(&self, firm: &str) -> Option<usize> {
        self.firms.iter().position(|f| f == firm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { delimiter: b',' }
    }
}

/// Reads a wide-format table: a header row, then one row per date with the
/// ISO-8601 date in the first column and one return per firm. Empty cells are
/// missing observations.
///
/// Row numbers in errors count the header as row 1; columns are 1-based.
pub fn load_returns<R: Read>(source: R, options: &LoadOptions) -> Result<ReturnPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Empty("header must name a date column and at least one firm".into()));
    }
    let firms: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for (c, firm) in firms.iter().enumerate() {
        if firm.is_empty() {
            return Err(Error::Parse {
                row: 1,
                column: c + 2,
                message: "empty firm identifier".into(),
            });
        }
        if !seen.insert(firm.as_str()) {
            return Err(Error::DuplicateFirm(firm.clone()));
        }
    }

    let mut dates = Vec::new();
    let mut rows = Vec::new();
    let mut first_row_of: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 2;
        if record.len() != firms.len() + 1 {
            return Err(Error::Parse {
                row,
                column: record.len().min(firms.len() + 1),
                message: format!("expected {} cells, found {}", firms.len() + 1, record.len()),
            });
        }
        let raw_date = record[0].trim();
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            column: 1,
            message: format!("malformed date {raw_date:?}: {e}"),
        })?;
        if let Some(prev) = first_row_of.insert(date, row) {
            return Err(Error::DuplicateDate(format!("{date} (rows {prev} and {row})")));
        }
        let mut values = Vec::with_capacity(firms.len());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: c + 2,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: c + 2,
                    message: format!("non-finite cell {cell:?}"),
                });
            }
            values.push(Some(v));
        }
        dates.push(date);
        rows.push(values);
    }
    if dates.is_empty() {
        return Err(Error::Empty("table has no data rows".into()));
    }
    ReturnPanel::new(dates, firms, rows)
}

/// Writes the panel in the same wide format `load_returns` reads. Observed values
/// use the shortest representation that parses back to the same `f64`.
pub fn write_returns<W: Write>(panel: &ReturnPanel, sink: W, options: &LoadOptions) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_writer(sink);
    let mut header = vec!["date".to_string()];
    header.extend(panel.firms.iter().cloned());
    writer.write_record(&header)?;
    for (d, date) in panel.dates.iter().enumerate() {
        let mut record = Vec::with_capacity(panel.n_firms() + 1);
        record.push(date.format("%Y-%m-%d").to_string());
        for f in 0..panel.n_firms() {
            record.push(panel.get(d, f).map(|v| v.to_string()).unwrap_or_default());
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<returns>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowScheme {
    #[default]
    CalendarMonth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub scheme: WindowScheme,
    pub min_obs: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            scheme: WindowScheme::CalendarMonth,
            min_obs: DEFAULT_MIN_OBS,
        }
    }
}

/// One calendar window restricted to its eligible firms.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSlice {
    /// 1-based month offset from the panel's first month.
    pub window_id: usize,
    /// `YYYY-MM`.
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub firms: Vec<String>,
    /// One column per eligible firm, aligned with `dates`.
    pub returns: Vec<Vec<Option<f64>>>,
    pub min_obs: usize,
    /// Fewer than two eligible firms; no network can be built.
    pub degenerate: bool,
}

impl WindowSlice {
    pub fn firm_index(&self, firm: &str) -> Option<usize> {
        self.firms.iter().position(|f| f == firm)
    }

    /// Observed returns of one firm, missing days dropped.
    pub fn observed(&self, firm: usize) -> Vec<f64> {
        self.returns[firm].iter().flatten().copied().collect()
    }

    pub fn year(&self) -> i32 {
        self.dates[0].year()
    }
}

/// Partitions the panel into calendar months and applies the `min_obs` filter.
///
/// Months in which no firm is eligible produce no slice; their ids are still
/// consumed so that `window_id` always tracks calendar time.
pub fn window_panel(panel: &ReturnPanel, config: &WindowConfig) -> Result<Vec<WindowSlice>> {
    if panel.n_dates() == 0 || panel.n_firms() == 0 {
        return Err(Error::Empty("panel has no dates or no firms".into()));
    }
    let WindowScheme::CalendarMonth = config.scheme;
    let first = panel.dates[0];
    let month_index = |d: NaiveDate| {
        (d.year() - first.year()) as i64 * 12 + d.month() as i64 - first.month() as i64
    };

    let mut slices = Vec::new();
    let mut start = 0;
    while start < panel.n_dates() {
        let month = month_index(panel.dates[start]);
        let mut end = start;
        while end < panel.n_dates() && month_index(panel.dates[end]) == month {
            end += 1;
        }

        let mut firms = Vec::new();
        let mut returns = Vec::new();
        for f in 0..panel.n_firms() {
            let observed = (start..end).filter(|&d| panel.is_observed(d, f)).count();
            if observed >= config.min_obs {
                firms.push(panel.firms[f].clone());
                returns.push((start..end).map(|d| panel.get(d, f)).collect());
            }
        }
        if !firms.is_empty() {
            let date = panel.dates[start];
            let degenerate = firms.len() < 2;
            if degenerate {
                log::warn!(
                    "window {:04}-{:02} has {} eligible firm(s); flagged degenerate",
                    date.year(),
                    date.month(),
                    firms.len()
                );
            }
            slices.push(WindowSlice {
                window_id: month as usize + 1,
                label: format!("{:04}-{:02}", date.year(), date.month()),
                dates: panel.dates[start..end].to_vec(),
                firms,
                returns,
                min_obs: config.min_obs,
                degenerate,
            });
        }
        start = end;
    }
    Ok(slices)
}

/// Days on which both firms are observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonDays {
    pub days: Vec<usize>,
    /// `false` when fewer than `min_obs` days are shared.
    pub estimable: bool,
}

pub fn pairwise_common_days(slice: &WindowSlice, i: &str, j: &str) -> Result<CommonDays> {
    let a = slice.firm_index(i).ok_or_else(|| Error::UnknownFirm(i.to_string()))?;
    let b = slice.firm_index(j).ok_or_else(|| Error::UnknownFirm(j.to_string()))?;
    Ok(common_days_by_index(slice, a, b))
}

pub(crate) fn common_days_by_index(slice: &WindowSlice, a: usize, b: usize) -> CommonDays {
    let days: Vec<usize> = slice.returns[a]
        .iter()
        .zip(&slice.returns[b])
        .enumerate()
        .filter(|(_, (x, y))| x.is_some() && y.is_some())
        .map(|(d, _)| d)
        .collect();
    let estimable = days.len() >= slice.min_obs;
    CommonDays { days, estimable }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn business_days(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
        from.iter_days()
            .take_while(|d| *d <= to)
            .filter(|d| d.weekday().number_from_monday() <= 5)
            .collect()
    }

    #[test]
    fn one_empty_cell_gives_one_masked_entry() {
        let csv = "date,A,B\n2001-01-02,0.01,-0.02\n2001-01-03,,0.03\n2001-01-04,0.0,0.01\n";
        let panel = load_returns(csv.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(panel.n_dates(), 3);
        let missing = (0..3)
            .flat_map(|d| (0..2).map(move |f| (d, f)))
            .filter(|&(d, f)| !panel.is_observed(d, f))
            .collect::<Vec<_>>();
        assert_eq!(missing, vec![(1, 0)]);
    }

    #[test]
    fn duplicate_date_is_named() {
        let csv = "date,A\n2001-01-02,0.01\n2001-01-02,0.02\n";
        let err = load_returns(csv.as_bytes(), &LoadOptions::default()).unwrap_err();
        match err {
            Error::DuplicateDate(msg) => assert!(msg.contains("2001-01-02")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_table_has_full_mask() {
        let mut csv = String::from("date,A,B,C\n");
        for d in business_days(date(2001, 1, 1), date(2001, 1, 29)).iter().take(21) {
            csv.push_str(&format!("{d},0.01,0.02,-0.01\n"));
        }
        let panel = load_returns(csv.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!((panel.n_dates(), panel.n_firms()), (21, 3));
        assert!((0..21).all(|d| (0..3).all(|f| panel.is_observed(d, f))));
    }

    #[test]
    fn parse_errors_name_row_and_column() {
        let bad_date = "date,A\n2001-13-02,0.01\n";
        match load_returns(bad_date.as_bytes(), &LoadOptions::default()).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (2, 1)),
            other => panic!("unexpected {other:?}"),
        }
        let bad_cell = "date,A,B\n2001-01-02,0.01,0.2\n2001-01-03,0.01,abc\n";
        match load_returns(bad_cell.as_bytes(), &LoadOptions::default()).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let dup = "date,A,A\n2001-01-02,0.01,0.2\n";
        assert!(matches!(
            load_returns(dup.as_bytes(), &LoadOptions::default()),
            Err(Error::DuplicateFirm(_))
        ));
        assert!(matches!(
            load_returns("date,A\n".as_bytes(), &LoadOptions::default()),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            load_returns("date,A\n2001-01-02,NaN\n".as_bytes(), &LoadOptions::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn unsorted_rows_are_sorted_and_delimiter_is_configurable() {
        let csv = "date;A\n2001-01-03;0.02\n2001-01-02;0.01\n";
        let panel = load_returns(csv.as_bytes(), &LoadOptions { delimiter: b';' }).unwrap();
        assert_eq!(panel.dates(), &[date(2001, 1, 2), date(2001, 1, 3)]);
        assert_eq!(panel.get(0, 0), Some(0.01));
    }

    fn full_panel(days: &[NaiveDate], firms: usize) -> ReturnPanel {
        let names = (0..firms).map(|f| format!("F{f}")).collect();
        let rows = days
            .iter()
            .enumerate()
            .map(|(d, _)| (0..firms).map(|f| Some((d * firms + f) as f64 * 1e-4)).collect())
            .collect();
        ReturnPanel::new(days.to_vec(), names, rows).unwrap()
    }

    #[test]
    fn fifteen_years_give_180_windows() {
        let days = business_days(date(2001, 1, 1), date(2015, 12, 31));
        let panel = full_panel(&days, 2);
        let slices = window_panel(&panel, &WindowConfig::default()).unwrap();
        assert_eq!(slices.len(), 180);
        assert_eq!(slices[0].label, "2001-01");
        assert_eq!(slices[179].label, "2015-12");
        assert!(slices.iter().enumerate().all(|(k, s)| s.window_id == k + 1));
        let covered: usize = slices.iter().map(|s| s.dates.len()).sum();
        assert_eq!(covered, days.len());
    }

    #[test]
    fn sparse_firm_is_excluded() {
        let days = business_days(date(2001, 3, 1), date(2001, 3, 31));
        assert_eq!(days.len(), 22);
        let rows = days
            .iter()
            .enumerate()
            .map(|(d, _)| vec![Some(0.01), if d < 10 { Some(0.02) } else { None }, Some(0.0)])
            .collect();
        let panel =
            ReturnPanel::new(days, vec!["A".into(), "B".into(), "C".into()], rows).unwrap();
        let slices = window_panel(&panel, &WindowConfig::default()).unwrap();
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].firms, vec!["A".to_string(), "C".to_string()]);
    }

    #[test]
    fn two_months_keep_all_firms() {
        let days = business_days(date(2002, 5, 1), date(2002, 6, 30));
        let panel = full_panel(&days, 4);
        let slices = window_panel(&panel, &WindowConfig::default()).unwrap();
        assert_eq!(slices.len(), 2);
        for s in &slices {
            assert_eq!(s.firms, panel.firms());
            assert!(!s.degenerate);
        }
    }

    #[test]
    fn single_firm_window_is_degenerate() {
        let days = business_days(date(2002, 5, 1), date(2002, 5, 31));
        let panel = full_panel(&days, 1);
        let slices = window_panel(&panel, &WindowConfig::default()).unwrap();
        assert!(slices[0].degenerate);
    }

    fn slice_with_masks(a: &[bool], b: &[bool]) -> WindowSlice {
        let dates = business_days(date(2003, 1, 1), date(2003, 2, 28))[..a.len()].to_vec();
        let col = |m: &[bool]| m.iter().map(|&o| o.then_some(0.01)).collect();
        WindowSlice {
            window_id: 1,
            label: "2003-01".into(),
            dates,
            firms: vec!["A".into(), "B".into()],
            returns: vec![col(a), col(b)],
            min_obs: 15,
            degenerate: false,
        }
    }

    #[test]
    fn common_days_cases() {
        let all = [true; 21];
        let s = slice_with_masks(&all, &all);
        let cd = pairwise_common_days(&s, "A", "B").unwrap();
        assert_eq!(cd.days, (0..21).collect::<Vec<_>>());
        assert!(cd.estimable);

        let even: Vec<bool> = (0..21).map(|d| d % 2 == 0).collect();
        let odd: Vec<bool> = even.iter().map(|b| !b).collect();
        let cd = pairwise_common_days(&slice_with_masks(&even, &odd), "A", "B").unwrap();
        assert!(cd.days.is_empty());
        assert!(!cd.estimable);

        let mut a = [true; 21];
        let mut b = [true; 21];
        a[0] = false;
        a[5] = false;
        b[20] = false;
        let cd = pairwise_common_days(&slice_with_masks(&a, &b), "A", "B").unwrap();
        assert_eq!(cd.days.len(), 18);

        assert!(pairwise_common_days(&s, "A", "Z").is_err());
    }
}
