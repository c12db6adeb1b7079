//! Study configuration: sub-periods, estimator settings and the TOML config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::panel::{WindowScheme, DEFAULT_MIN_OBS};
use crate::risk::DEFAULT_ALPHA;

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        YearMonth { year, month }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) || y.len() != 4 {
            return Err(bad());
        }
        Ok(YearMonth { year, month })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPeriod {
    pub name: String,
    pub start: YearMonth,
    pub end: YearMonth,
}

impl SubPeriod {
    pub fn new(name: &str, start: &str, end: &str) -> Result<Self> {
        Ok(SubPeriod {
            name: name.to_string(),
            start: start.parse()?,
            end: end.parse()?,
        })
    }

    pub fn contains(&self, month: YearMonth) -> bool {
        self.start <= month && month <= self.end
    }
}

pub const ALL_PERIODS: &str = "All periods";

pub fn default_sub_periods() -> Vec<SubPeriod> {
    [
        ("Pre-crisis", "2003-01", "2007-12"),
        ("Lehman", "2008-01", "2009-12"),
        ("Sovereign", "2010-01", "2012-12"),
        ("Post-crisis", "2013-01", "2015-12"),
    ]
    .iter()
    .map(|(n, s, e)| SubPeriod::new(n, s, e).expect("valid default period"))
    .collect()
}

/// Parses `Name:YYYY-MM..YYYY-MM` entries separated by commas.
pub fn parse_periods(spec: &str) -> Result<Vec<SubPeriod>> {
    let periods = spec
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (name, range) = p
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("period {p:?} lacks NAME:")))?;
            let (start, end) = range
                .split_once("..")
                .ok_or_else(|| Error::Config(format!("period {p:?} lacks START..END")))?;
            SubPeriod::new(name.trim(), start, end)
        })
        .collect::<Result<Vec<_>>>()?;
    validate_periods(&periods)?;
    Ok(periods)
}

/// Periods must be non-empty ranges, chronologically ordered, non-overlapping
/// and uniquely named.
pub fn validate_periods(periods: &[SubPeriod]) -> Result<()> {
    for p in periods {
        if p.start > p.end {
            return Err(Error::Config(format!("period {} ends before it starts", p.name)));
        }
        if p.name.is_empty() || p.name == ALL_PERIODS {
            return Err(Error::Config(format!("reserved or empty period name {:?}", p.name)));
        }
    }
    for pair in periods.windows(2) {
        if pair[1].start <= pair[0].end {
            return Err(Error::Config(format!(
                "periods {} and {} overlap or are out of order",
                pair[0].name, pair[1].name
            )));
        }
    }
    let mut names: Vec<&str> = periods.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate period names".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub input: PathBuf,
    pub delimiter: u8,
    pub alpha: f64,
    pub min_obs: usize,
    pub sub_periods: Vec<SubPeriod>,
    pub output_dir: PathBuf,
    pub charts: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            input: PathBuf::new(),
            delimiter: b',',
            alpha: DEFAULT_ALPHA,
            min_obs: DEFAULT_MIN_OBS,
            sub_periods: default_sub_periods(),
            output_dir: PathBuf::from("out"),
            charts: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!("alpha {} outside (0, 0.5)", self.alpha)));
        }
        if self.min_obs < crate::risk::MIN_SAMPLE {
            return Err(Error::Config(format!(
                "min_obs {} below {}",
                self.min_obs,
                crate::risk::MIN_SAMPLE
            )));
        }
        validate_periods(&self.sub_periods)
    }

    /// Applies the keys present in a config file on top of `self`.
    pub fn merge_file(&mut self, file: &ConfigFile) -> Result<()> {
        if let Some(min_obs) = file.min_obs {
            self.min_obs = min_obs;
        }
        if let (Some(_), Some(_)) = (file.alpha, file.confidence) {
            return Err(Error::Config("set either alpha or confidence, not both".into()));
        }
        if let Some(alpha) = file.alpha {
            self.alpha = alpha;
        }
        if let Some(confidence) = file.confidence {
            self.alpha = 1.0 - confidence;
        }
        if let Some(d) = &file.delimiter {
            self.delimiter = parse_delimiter(d)?;
        }
        if let Some(input) = &file.input {
            self.input = input.clone();
        }
        if let Some(out) = &file.out {
            self.output_dir = out.clone();
        }
        if let Some(charts) = file.charts {
            self.charts = charts;
        }
        if let Some(periods) = &file.periods {
            self.sub_periods = periods
                .iter()
                .map(|p| SubPeriod::new(&p.name, &p.start, &p.end))
                .collect::<Result<_>>()?;
        }
        Ok(())
    }
}

pub fn parse_delimiter(text: &str) -> Result<u8> {
    match text {
        "\\t" | "tab" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(Error::Config(format!("delimiter must be one ASCII character, got {s:?}"))),
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct PeriodEntry {
    pub name: String,
    pub start: String,
    pub end: String,
}

/// Keys accepted in the TOML config file. All are optional.
///
/// ```toml
/// min_obs = 15
/// window = "calendar_month"
/// confidence = 0.95
///
/// [[periods]]
/// name = "Lehman"
/// start = "2008-01"
/// end = "2009-12"
/// ```
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub min_obs: Option<usize>,
    pub window: Option<WindowScheme>,
    pub confidence: Option<f64>,
    pub alpha: Option<f64>,
    pub delimiter: Option<String>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub charts: Option<bool>,
    pub periods: Option<Vec<PeriodEntry>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
