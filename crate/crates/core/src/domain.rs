//! Shared data types: firm panels, supervised samples, temporal splits and
//! company-group filters.

use std::cmp::Ordering;
use std::fmt;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque firm key (the join key between quarterly and daily files).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FirmId(String);

impl FirmId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::Config("firm id must be non-empty".into()));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirmGroup {
    Financial,
    Nonfinancial,
}

impl FirmGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FirmGroup::Financial => "financial",
            FirmGroup::Nonfinancial => "nonfinancial",
        }
    }

    /// Accepts the textual labels plus the usual 0/1 flag encoding.
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "financial" | "fin" | "1" | "true" => Some(FirmGroup::Financial),
            "nonfinancial" | "nofin" | "0" | "false" => Some(FirmGroup::Nonfinancial),
            _ => None,
        }
    }
}

/// One quarterly report. Missing numeric cells are `None`, never a sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlyRecord {
    pub firm: FirmId,
    pub report_date: NaiveDate,
    pub eps: Option<f64>,
    pub total_assets: Option<f64>,
    /// Fundamentals in schema order; includes the eps and total-assets columns.
    pub features: Vec<Option<f64>>,
    pub group: FirmGroup,
    /// Consensus analyst estimate of the next quarter's eps, published at this quarter.
    pub analyst_mean_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub firm: FirmId,
    pub date: NaiveDate,
    pub features: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmPanel {
    pub firm: FirmId,
    pub quarters: Vec<QuarterlyRecord>,
    pub days: Vec<DailyRecord>,
}

impl FirmPanel {
    /// Group label of the firm, taken from its most recent quarterly record.
    pub fn group(&self) -> Option<FirmGroup> {
        self.quarters.last().map(|q| q.group)
    }

    /// Checks ordering, ownership and feature-count invariants.
    pub fn validate(&self, quarterly_features: usize, daily_features: usize) -> Result<()> {
        for pair in self.quarters.windows(2) {
            if pair[0].report_date >= pair[1].report_date {
                return Err(Error::Config(format!(
                    "firm {}: quarterly report dates not strictly increasing at {}",
                    self.firm, pair[1].report_date
                )));
            }
        }
        for pair in self.days.windows(2) {
            if pair[0].date >= pair[1].date {
                return Err(Error::Config(format!(
                    "firm {}: daily dates not strictly increasing at {}",
                    self.firm, pair[1].date
                )));
            }
        }
        for q in &self.quarters {
            if q.firm != self.firm {
                return Err(Error::Config(format!(
                    "quarterly record of {} stored in panel {}",
                    q.firm, self.firm
                )));
            }
            if q.features.len() != quarterly_features {
                return Err(Error::Shape(format!(
                    "firm {} on {}: {} quarterly features, expected {}",
                    self.firm,
                    q.report_date,
                    q.features.len(),
                    quarterly_features
                )));
            }
        }
        for d in &self.days {
            if d.firm != self.firm {
                return Err(Error::Config(format!(
                    "daily record of {} stored in panel {}",
                    d.firm, self.firm
                )));
            }
            if d.features.len() != daily_features {
                return Err(Error::Shape(format!(
                    "firm {} on {}: {} daily features, expected {}",
                    self.firm,
                    d.date,
                    d.features.len(),
                    daily_features
                )));
            }
        }
        Ok(())
    }

    /// Copy of the panel keeping only records dated on or before `end`.
    pub fn truncated(&self, end: NaiveDate) -> FirmPanel {
        FirmPanel {
            firm: self.firm.clone(),
            quarters: self
                .quarters
                .iter()
                .filter(|q| q.report_date <= end)
                .cloned()
                .collect(),
            days: self.days.iter().filter(|d| d.date <= end).cloned().collect(),
        }
    }
}

/// One supervised example in transformed space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub firm: FirmId,
    pub group: FirmGroup,
    /// Report date of quarter t.
    pub anchor_date: NaiveDate,
    pub window_len: usize,
    pub quarter_features: usize,
    /// Row-major `[window_len, quarter_features]`; the last row is quarter t.
    pub quarter_window: Vec<f64>,
    /// Row-major `[daily_steps, daily_features]`, oldest day first.
    pub market_window: Vec<f64>,
    pub label: f64,
    pub label_date: NaiveDate,
    pub analyst_forecast: Option<f64>,
    pub persistent_prediction: f64,
}

impl Sample {
    pub fn quarter_row(&self, row: usize) -> &[f64] {
        let w = self.quarter_features;
        &self.quarter_window[row * w..(row + 1) * w]
    }

    /// Ordering used for chronological splits: label date, then firm id, then anchor.
    pub fn chronological_cmp(&self, other: &Sample) -> Ordering {
        self.label_date
            .cmp(&other.label_date)
            .then_with(|| self.firm.cmp(&other.firm))
            .then_with(|| self.anchor_date.cmp(&other.anchor_date))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_label_start: NaiveDate,
    pub train_label_end: NaiveDate,
    pub validation_fraction: f64,
    pub test_span_months: u32,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_label_start >= self.train_label_end {
            return Err(Error::Config(format!(
                "split: train_label_start {} must precede train_label_end {}",
                self.train_label_start, self.train_label_end
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split: validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if self.test_span_months == 0 {
            return Err(Error::Config("split: test span must be positive".into()));
        }
        self.test_end()?;
        Ok(())
    }

    pub fn test_end(&self) -> Result<NaiveDate> {
        self.train_label_end
            .checked_add_months(Months::new(self.test_span_months))
            .ok_or_else(|| Error::Config("split: test window overflows the calendar".into()))
    }

    /// The same split with the training window extended by `months`.
    pub fn extended(&self, months: u32) -> Result<SplitSpec> {
        let end = self
            .train_label_end
            .checked_add_months(Months::new(months))
            .ok_or_else(|| Error::Config("split: extension overflows the calendar".into()))?;
        Ok(SplitSpec {
            train_label_end: end,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalSplit {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Chronological train / validation / test partition by label date.
///
/// Samples outside `[train_label_start, train_label_end + test_span]` are
/// discarded. The validation set is the chronologically last
/// `ceil(fraction * n)` samples of the training window.
pub fn split_temporal(samples: &[Sample], spec: &SplitSpec) -> Result<TemporalSplit> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no samples to split".into()));
    }
    let test_end = spec.test_end()?;

    let mut sorted: Vec<&Sample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.chronological_cmp(b));

    let mut window = Vec::new();
    let mut test = Vec::new();
    for s in sorted {
        if s.label_date < spec.train_label_start {
            continue;
        }
        if s.label_date <= spec.train_label_end {
            window.push(s.clone());
        } else if s.label_date <= test_end {
            test.push(s.clone());
        }
    }

    let n_validation = validation_count(window.len(), spec.validation_fraction);
    let validation = window.split_off(window.len() - n_validation);
    let train = window;
    if train.is_empty() {
        return Err(Error::InsufficientSamples(
            "empty training set after filtering".into(),
        ));
    }
    if test.is_empty() {
        return Err(Error::InsufficientSamples(
            "empty test set after filtering".into(),
        ));
    }
    Ok(TemporalSplit {
        train,
        validation,
        test,
    })
}

fn validation_count(n: usize, fraction: f64) -> usize {
    // guard against 0.1 * 90 = 9.000000000000002 rounding up to 10
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (count as usize).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFilter {
    All,
    Nofin,
    Onlyfin,
}

impl GroupFilter {
    pub const ALL_MODES: [GroupFilter; 3] =
        [GroupFilter::All, GroupFilter::Nofin, GroupFilter::Onlyfin];

    pub fn admits(self, group: FirmGroup) -> bool {
        match self {
            GroupFilter::All => true,
            GroupFilter::Nofin => group == FirmGroup::Nonfinancial,
            GroupFilter::Onlyfin => group == FirmGroup::Financial,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupFilter::All => "all",
            GroupFilter::Nofin => "nofin",
            GroupFilter::Onlyfin => "onlyfin",
        }
    }
}

impl fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GroupFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(GroupFilter::All),
            "nofin" => Ok(GroupFilter::Nofin),
            "onlyfin" => Ok(GroupFilter::Onlyfin),
            other => Err(Error::Config(format!("unknown group filter {other:?}"))),
        }
    }
}

pub fn filter_group(samples: &[Sample], filter: GroupFilter) -> Vec<Sample> {
    samples
        .iter()
        .filter(|s| filter.admits(s.group))
        .cloned()
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    pub(crate) fn sample(firm: &str, group: FirmGroup, label_date: NaiveDate) -> Sample {
        Sample {
            firm: FirmId::new(firm).unwrap(),
            group,
            anchor_date: label_date - chrono::Days::new(91),
            window_len: 1,
            quarter_features: 1,
            quarter_window: vec![0.0],
            market_window: vec![],
            label: 0.0,
            label_date,
            analyst_forecast: None,
            persistent_prediction: 0.0,
        }
    }

    fn paper_split() -> SplitSpec {
        SplitSpec {
            train_label_start: date(2012, 1, 1),
            train_label_end: date(2016, 12, 31),
            validation_fraction: 0.10,
            test_span_months: 6,
        }
    }

    /// 100 samples in the train window (2012-2016) plus 6 in 2017H1 and 2 after it.
    fn spread_samples() -> Vec<Sample> {
        let mut out = Vec::new();
        for i in 0..100u32 {
            let year = 2012 + (i / 20) as i32;
            let month = 1 + (i % 20) / 2;
            out.push(sample(
                &format!("F{:03}", i),
                FirmGroup::Nonfinancial,
                date(year, month, 1 + (i % 2) * 14),
            ));
        }
        for m in 1..=6 {
            out.push(sample("T", FirmGroup::Financial, date(2017, m, 15)));
        }
        out.push(sample("late", FirmGroup::Financial, date(2017, 7, 15)));
        out.push(sample("early", FirmGroup::Financial, date(2011, 12, 31)));
        out
    }

    #[test]
    fn split_matches_paper_window() {
        let split = split_temporal(&spread_samples(), &paper_split()).unwrap();
        assert_eq!(split.train.len(), 90);
        assert_eq!(split.validation.len(), 10);
        assert_eq!(split.test.len(), 6);
        assert!(split
            .test
            .iter()
            .all(|s| s.label_date > date(2016, 12, 31) && s.label_date <= date(2017, 6, 30)));
        let max_train = split
            .train
            .iter()
            .chain(&split.validation)
            .map(|s| s.label_date)
            .max()
            .unwrap();
        let min_val = split.validation.iter().map(|s| s.label_date).min().unwrap();
        let max_tr = split.train.iter().map(|s| s.label_date).max().unwrap();
        assert!(max_tr <= min_val);
        assert!(max_train < split.test.iter().map(|s| s.label_date).min().unwrap());
    }

    #[test]
    fn split_ten_samples_has_empty_test() {
        let samples: Vec<_> = (0..10)
            .map(|i| sample(&format!("F{i}"), FirmGroup::Financial, date(2013, 1 + i, 1)))
            .collect();
        let err = split_temporal(&samples, &paper_split()).unwrap_err();
        assert!(err.to_string().contains("insufficient samples for split"));

        // the boundary arithmetic itself: 9 train, 1 validation
        assert_eq!(validation_count(10, 0.10), 1);
        assert_eq!(validation_count(90, 0.10), 9);
        assert_eq!(validation_count(100, 0.10), 10);
        assert_eq!(validation_count(11, 0.10), 2);
    }

    #[test]
    fn split_ties_broken_by_firm_id() {
        let mut samples: Vec<_> = ["b", "a", "d", "c"]
            .iter()
            .map(|f| sample(f, FirmGroup::Financial, date(2016, 12, 31)))
            .collect();
        samples.push(sample("z", FirmGroup::Financial, date(2017, 3, 31)));
        let spec = SplitSpec {
            validation_fraction: 0.5,
            ..paper_split()
        };
        let split = split_temporal(&samples, &spec).unwrap();
        let names: Vec<_> = split.validation.iter().map(|s| s.firm.as_str()).collect();
        assert_eq!(names, ["c", "d"]);
    }

    #[test]
    fn split_rejects_empty_input() {
        assert!(matches!(
            split_temporal(&[], &paper_split()),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn filter_group_modes() {
        let d = date(2015, 3, 31);
        let samples = vec![
            sample("a", FirmGroup::Financial, d),
            sample("b", FirmGroup::Nonfinancial, d),
            sample("c", FirmGroup::Financial, d),
            sample("d", FirmGroup::Nonfinancial, d),
            sample("e", FirmGroup::Financial, d),
        ];
        let nofin = filter_group(&samples, GroupFilter::Nofin);
        assert_eq!(
            nofin.iter().map(|s| s.firm.as_str()).collect::<Vec<_>>(),
            ["b", "d"]
        );
        assert_eq!(filter_group(&samples, GroupFilter::All), samples);
        let nonfin_only: Vec<_> = samples
            .iter()
            .filter(|s| s.group == FirmGroup::Nonfinancial)
            .cloned()
            .collect();
        assert!(filter_group(&nonfin_only, GroupFilter::Onlyfin).is_empty());
    }

    #[test]
    fn split_spec_validation() {
        let mut spec = paper_split();
        spec.validation_fraction = 1.0;
        assert!(spec.validate().is_err());
        let mut spec = paper_split();
        spec.train_label_start = spec.train_label_end;
        assert!(spec.validate().is_err());
        let b = paper_split().extended(6).unwrap();
        assert_eq!(b.train_label_end, date(2017, 6, 30));
    }

    #[test]
    fn firm_id_rejects_empty() {
        assert!(FirmId::new("  ").is_err());
        assert_eq!(FirmId::new("0001").unwrap().as_str(), "0001");
    }
}
