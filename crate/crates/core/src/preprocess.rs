//! Feature preprocessing.
//!
//! Per panel the chain is: scale currency items by total assets, clip eps to
//! the training percentiles, linearly interpolate short gaps, studentize.
//! Every statistic is fitted once on training data and then frozen in a
//! [`TransformSet`], which is applied verbatim to validation and test data.

use serde::{Deserialize, Serialize};

use crate::domain::{FirmPanel, Sample};
use crate::error::{Error, Result};
use crate::ingest::SchemaConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub window_size: usize,
    pub horizon: usize,
    pub max_gap: usize,
    pub daily_steps: usize,
    pub percentiles: (f64, f64),
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            window_size: 20,
            horizon: 1,
            max_gap: 1,
            daily_steps: 20,
            percentiles: (1.0, 99.0),
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.horizon == 0 || self.daily_steps == 0 {
            return Err(Error::Config(
                "preprocess: window_size, horizon and daily_steps must be positive".into(),
            ));
        }
        let (lo, hi) = self.percentiles;
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!(
                "preprocess: percentiles ({lo}, {hi}) must satisfy 0 <= low < high <= 100"
            )));
        }
        Ok(())
    }
}

/// `x / max(1, atq)`.
pub fn scale_by_assets(x: f64, atq: f64) -> Result<f64> {
    if !x.is_finite() || !atq.is_finite() {
        return Err(Error::NonFinite(format!("scale_by_assets({x}, {atq})")));
    }
    Ok(x / atq.max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentizeStats {
    pub mean: f64,
    pub population_std: f64,
}

impl StudentizeStats {
    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        (z - self.mean) / self.population_std
    }
}

/// Mean and population (1/n) standard deviation.
pub fn fit_studentize(values: &[f64]) -> Result<StudentizeStats> {
    if values.len() < 2 {
        return Err(Error::TooFewValues(format!(
            "studentization needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("studentization input {bad}")));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::ZeroVariance(format!("constant series of {first}")));
    }
    let n = values.len() as f64;
    let mut mean = values.iter().sum::<f64>() / n;
    // second pass removes most of the rounding error of the naive mean
    mean += values.iter().map(|v| v - mean).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let population_std = var.sqrt();
    if population_std == 0.0 {
        return Err(Error::ZeroVariance("population std underflowed to zero".into()));
    }
    Ok(StudentizeStats {
        mean,
        population_std,
    })
}

pub fn apply_studentize(values: &[f64], stats: &StudentizeStats) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v.is_finite() {
                Ok(stats.apply(v))
            } else {
                Err(Error::NonFinite(format!("studentization input {v}")))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Percentile with linear interpolation between order statistics at rank
/// `p / 100 * (n - 1)`. `values` is reordered in place.
fn percentile_in_place(values: &mut [f64], p: f64) -> f64 {
    let n = values.len();
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (rank.ceil() as usize).min(n - 1);
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let (_, lo_val, upper) = values.select_nth_unstable_by(lo, cmp);
    let lo_val = *lo_val;
    let hi_val = if hi == lo {
        lo_val
    } else {
        // the (lo+1)-th order statistic is the minimum of the upper partition
        upper.iter().copied().min_by(cmp).unwrap_or(lo_val)
    };
    lo_val + (rank - lo as f64) * (hi_val - lo_val)
}

pub fn fit_clip_bounds(eps_values: &[f64], percentiles: (f64, f64)) -> Result<ClipBounds> {
    if eps_values.is_empty() {
        return Err(Error::TooFewValues("clip bounds need at least one value".into()));
    }
    if let Some(bad) = eps_values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("clip input {bad}")));
    }
    let (lo, hi) = percentiles;
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
        return Err(Error::Config(format!("bad percentiles ({lo}, {hi})")));
    }
    let mut scratch = eps_values.to_vec();
    let lower = percentile_in_place(&mut scratch, lo);
    let upper = percentile_in_place(&mut scratch, hi);
    Ok(ClipBounds { lower, upper })
}

#[inline]
pub fn clip(eps: f64, bounds: &ClipBounds) -> f64 {
    eps.max(bounds.lower).min(bounds.upper)
}

/// Fills interior runs of at most `max_gap` missing cells by linear
/// interpolation. Returns, per cell, whether it is still unresolved (a
/// leading/trailing gap or part of an over-long run).
pub fn interpolate_series(series: &mut [Option<f64>], max_gap: usize) -> Vec<bool> {
    let n = series.len();
    let mut unresolved = vec![false; n];
    let mut i = 0;
    while i < n {
        if series[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && series[i].is_none() {
            i += 1;
        }
        let end = i; // exclusive
        let run = end - start;
        let left = start.checked_sub(1).and_then(|j| series[j]);
        let right = if end < n { series[end] } else { None };
        match (left, right) {
            (Some(a), Some(b)) if run <= max_gap => {
                let span = (run + 1) as f64;
                for (k, cell) in series[start..end].iter_mut().enumerate() {
                    let w = (k + 1) as f64 / span;
                    *cell = Some(a + w * (b - a));
                }
            }
            _ => unresolved[start..end].iter_mut().for_each(|u| *u = true),
        }
    }
    unresolved
}

/// A panel after gap filling, with the quarters that still hold an
/// unresolved gap in any feature.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedPanel {
    pub panel: FirmPanel,
    pub rejected_quarters: Vec<bool>,
}

impl InterpolatedPanel {
    /// True when any quarter in `range` is rejected.
    pub fn window_rejected(&self, range: std::ops::Range<usize>) -> bool {
        self.rejected_quarters[range].iter().any(|&r| r)
    }
}

/// Interpolates each quarterly feature column of `panel`. The eps and
/// total-assets fields are refreshed from their feature columns when the
/// schema lists them.
pub fn interpolate_gaps(
    panel: &FirmPanel,
    max_gap: usize,
    schema: &SchemaConfig,
) -> InterpolatedPanel {
    let n = panel.quarters.len();
    let n_feat = panel.quarters.first().map_or(0, |q| q.features.len());
    let mut out = panel.clone();
    let mut rejected = vec![false; n];
    for k in 0..n_feat {
        let mut column: Vec<Option<f64>> = panel.quarters.iter().map(|q| q.features[k]).collect();
        let unresolved = interpolate_series(&mut column, max_gap);
        for (t, (value, bad)) in column.into_iter().zip(unresolved).enumerate() {
            out.quarters[t].features[k] = value;
            rejected[t] |= bad;
        }
    }
    let eps = schema.eps_feature_index();
    let atq = schema.assets_feature_index();
    for q in &mut out.quarters {
        if let Some(i) = eps {
            q.eps = q.features[i];
        }
        if let Some(i) = atq {
            q.total_assets = q.features[i];
        }
    }
    InterpolatedPanel {
        panel: out,
        rejected_quarters: rejected,
    }
}

/// Studentization of one column, or `None` when the column was dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub name: String,
    pub stats: Option<StudentizeStats>,
}

/// Everything fitted on the training data, frozen for reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSet {
    pub config: PreprocessConfig,
    pub schema: SchemaConfig,
    pub clip: ClipBounds,
    pub quarterly: Vec<FeatureTransform>,
    pub daily: Vec<FeatureTransform>,
    pub dropped_quarterly: Vec<String>,
    pub dropped_daily: Vec<String>,
}

impl TransformSet {
    pub fn quarterly_width(&self) -> usize {
        self.quarterly.iter().filter(|f| f.stats.is_some()).count()
    }

    pub fn daily_width(&self) -> usize {
        self.daily.iter().filter(|f| f.stats.is_some()).count()
    }

    pub fn market_width(&self) -> usize {
        self.daily_width() * self.config.daily_steps
    }

    fn eps_stats(&self) -> StudentizeStats {
        let idx = self.schema.eps_feature_index().expect("validated schema");
        self.quarterly[idx].stats.expect("eps column is never dropped")
    }

    /// Position of the eps column among the retained quarterly features.
    pub fn eps_retained_index(&self) -> usize {
        let idx = self.schema.eps_feature_index().expect("validated schema");
        self.quarterly[..idx]
            .iter()
            .filter(|f| f.stats.is_some())
            .count()
    }

    /// Clip + studentize with the eps statistics (labels, persistent and analyst values).
    pub fn transform_eps(&self, raw_scaled_eps: f64) -> f64 {
        self.eps_stats().apply(clip(raw_scaled_eps, &self.clip))
    }
}

/// Quarterly feature columns after asset scaling and eps clipping, still with gaps.
fn scaled_columns(panel: &FirmPanel, schema: &SchemaConfig, clip_bounds: Option<&ClipBounds>) -> Vec<Vec<Option<f64>>> {
    let eps_idx = schema.eps_feature_index();
    schema
        .quarterly_features
        .iter()
        .enumerate()
        .map(|(k, col)| {
            panel
                .quarters
                .iter()
                .map(|q| {
                    let raw = q.features[k]?;
                    let v = if col.scale_by_assets {
                        scale_by_assets(raw, q.total_assets?).ok()?
                    } else {
                        raw
                    };
                    Some(match (clip_bounds, Some(k) == eps_idx) {
                        (Some(b), true) => clip(v, b),
                        _ => v,
                    })
                })
                .collect()
        })
        .collect()
}

fn scaled_eps(q: &crate::domain::QuarterlyRecord, schema: &SchemaConfig, value: f64) -> Option<f64> {
    let idx = schema.eps_feature_index()?;
    if schema.quarterly_features[idx].scale_by_assets {
        scale_by_assets(value, q.total_assets?).ok()
    } else {
        Some(value)
    }
}

fn fit_column(name: &str, pool: &[f64], kind: &str) -> Option<StudentizeStats> {
    match fit_studentize(pool) {
        Ok(stats) => Some(stats),
        Err(e) => {
            log::warn!("dropping {kind} feature {name:?}: {e}");
            None
        }
    }
}

/// Fits clip bounds and studentization statistics on training panels.
///
/// Callers pass panels already restricted to the training period.
pub fn fit_pipeline(
    train_panels: &[FirmPanel],
    schema: &SchemaConfig,
    config: &PreprocessConfig,
) -> Result<TransformSet> {
    schema.validate()?;
    config.validate()?;
    if train_panels.iter().all(|p| p.quarters.is_empty()) {
        return Err(Error::InsufficientSamples(
            "no training quarters to fit transforms on".into(),
        ));
    }
    let eps_idx = schema.eps_feature_index().expect("validated schema");

    let eps_pool: Vec<f64> = train_panels
        .iter()
        .flat_map(|p| scaled_columns(p, schema, None).swap_remove(eps_idx))
        .flatten()
        .collect();
    let clip_bounds = fit_clip_bounds(&eps_pool, config.percentiles)?;

    let n_feat = schema.quarterly_feature_count();
    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); n_feat];
    for panel in train_panels {
        for (k, column) in scaled_columns(panel, schema, Some(&clip_bounds))
            .into_iter()
            .enumerate()
        {
            pools[k].extend(column.into_iter().flatten());
        }
    }
    let quarterly: Vec<FeatureTransform> = schema
        .quarterly_features
        .iter()
        .zip(&pools)
        .map(|(col, pool)| FeatureTransform {
            name: col.name.clone(),
            stats: fit_column(&col.name, pool, "quarterly"),
        })
        .collect();
    if quarterly[eps_idx].stats.is_none() {
        return Err(Error::ZeroVariance(format!(
            "eps column {:?} cannot be studentized",
            schema.eps_column
        )));
    }

    let n_daily = schema.daily_feature_count();
    let mut daily_pools: Vec<Vec<f64>> = vec![Vec::new(); n_daily];
    for panel in train_panels {
        for d in &panel.days {
            for (k, v) in d.features.iter().enumerate() {
                if let Some(v) = v {
                    daily_pools[k].push(*v);
                }
            }
        }
    }
    let daily: Vec<FeatureTransform> = schema
        .daily_features
        .iter()
        .zip(&daily_pools)
        .map(|(name, pool)| FeatureTransform {
            name: name.clone(),
            stats: fit_column(name, pool, "daily"),
        })
        .collect();
    if daily.iter().all(|f| f.stats.is_none()) {
        return Err(Error::ZeroVariance("every daily feature was dropped".into()));
    }

    let dropped = |v: &[FeatureTransform]| {
        v.iter()
            .filter(|f| f.stats.is_none())
            .map(|f| f.name.clone())
            .collect()
    };
    Ok(TransformSet {
        config: config.clone(),
        schema: schema.clone(),
        clip: clip_bounds,
        dropped_quarterly: dropped(&quarterly),
        dropped_daily: dropped(&daily),
        quarterly,
        daily,
    })
}

/// Builds every admissible sample of one firm with a fitted transform set.
pub fn build_samples(panel: &FirmPanel, transforms: &TransformSet) -> Vec<Sample> {
    let schema = &transforms.schema;
    let config = &transforms.config;
    let n = panel.quarters.len();
    let (window, horizon) = (config.window_size, config.horizon);
    if n < window + horizon {
        return Vec::new();
    }
    let group = match panel.group() {
        Some(g) => g,
        None => return Vec::new(),
    };
    let eps_idx = schema.eps_feature_index().expect("validated schema");

    let mut columns = scaled_columns(panel, schema, Some(&transforms.clip));
    let eps_observed: Vec<bool> = columns[eps_idx].iter().map(Option::is_some).collect();

    let mut rejected = vec![false; n];
    let mut retained: Vec<Vec<f64>> = Vec::new();
    for (column, transform) in columns.iter_mut().zip(&transforms.quarterly) {
        let Some(stats) = transform.stats else { continue };
        let unresolved = interpolate_series(column, config.max_gap);
        for (r, u) in rejected.iter_mut().zip(unresolved) {
            *r |= u;
        }
        retained.push(
            column
                .iter()
                .map(|v| v.map_or(f64::NAN, |x| stats.apply(x)))
                .collect(),
        );
    }
    let width = retained.len();
    let eps_pos = transforms.eps_retained_index();

    let daily_width = transforms.daily_width();
    let daily: Vec<Option<Vec<f64>>> = panel
        .days
        .iter()
        .map(|d| {
            let mut row = Vec::with_capacity(daily_width);
            for (v, t) in d.features.iter().zip(&transforms.daily) {
                if let Some(stats) = t.stats {
                    row.push(stats.apply((*v)?));
                }
            }
            Some(row)
        })
        .collect();

    let mut samples = Vec::new();
    for t in (window - 1)..(n - horizon) {
        let label_idx = t + horizon;
        let first = t + 1 - window;
        if rejected[first..=t].iter().any(|&r| r) || !eps_observed[label_idx] {
            continue;
        }
        let anchor = &panel.quarters[t];
        let n_days = panel.days.partition_point(|d| d.date <= anchor.report_date);
        if n_days < config.daily_steps {
            continue;
        }
        let day_rows = &daily[n_days - config.daily_steps..n_days];
        if day_rows.iter().any(Option::is_none) {
            continue;
        }
        let market_window: Vec<f64> = day_rows.iter().flatten().flatten().copied().collect();

        let mut quarter_window = Vec::with_capacity(window * width);
        for row in first..=t {
            quarter_window.extend(retained.iter().map(|col| col[row]));
        }
        let analyst_forecast = anchor
            .analyst_mean_eps
            .and_then(|a| scaled_eps(anchor, schema, a))
            .map(|a| transforms.transform_eps(a));

        samples.push(Sample {
            firm: panel.firm.clone(),
            group,
            anchor_date: anchor.report_date,
            window_len: window,
            quarter_features: width,
            persistent_prediction: retained[eps_pos][t],
            label: retained[eps_pos][label_idx],
            label_date: panel.quarters[label_idx].report_date,
            quarter_window,
            market_window,
            analyst_forecast,
        });
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{DailyRecord, FirmGroup, FirmId, QuarterlyRecord};
    use crate::ingest::FeatureColumn;
    use chrono::{Days, NaiveDate};

    #[test]
    fn scale_examples() {
        assert_eq!(scale_by_assets(10.0, 100.0).unwrap(), 0.1);
        assert_eq!(scale_by_assets(7.0, 0.5).unwrap(), 7.0);
        assert_eq!(scale_by_assets(0.0, 1234.0).unwrap(), 0.0);
        assert!(scale_by_assets(f64::NAN, 1.0).is_err());
        assert!(scale_by_assets(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn studentize_examples() {
        let s = fit_studentize(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        // sqrt(8/3) to 15 significant digits
        assert!((s.population_std - 1.632_993_161_855_452).abs() < 1e-12);
        let z = apply_studentize(&[2.0, 4.0, 6.0], &s).unwrap();
        for (got, want) in z.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((got - want).abs() < 1e-4);
        }
        assert!(matches!(
            fit_studentize(&[5.0, 5.0, 5.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(fit_studentize(&[1.0]).is_err());
        let s = fit_studentize(&[-1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.population_std), (0.0, 1.0));
        assert_eq!(apply_studentize(&[s.mean], &s).unwrap(), vec![0.0]);
    }

    #[test]
    fn clip_bound_examples() {
        let hundred: Vec<f64> = (0..=100).map(f64::from).collect();
        let b = fit_clip_bounds(&hundred, (1.0, 99.0)).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 99.0));
        let b = fit_clip_bounds(&[10.0, 0.0], (1.0, 99.0)).unwrap();
        assert!((b.lower - 0.1).abs() < 1e-15 && (b.upper - 9.9).abs() < 1e-15);
        let b = fit_clip_bounds(&[3.5; 7], (1.0, 99.0)).unwrap();
        assert_eq!((b.lower, b.upper), (3.5, 3.5));
        assert!(fit_clip_bounds(&[], (1.0, 99.0)).is_err());

        let b = ClipBounds { lower: -1.0, upper: 2.0 };
        assert_eq!(clip(0.5, &b), 0.5);
        assert_eq!(clip(-3.0, &b), -1.0);
        assert_eq!(clip(9.0, &b), 2.0);
    }

    #[test]
    fn interpolation_examples() {
        let mut s = vec![Some(1.0), None, Some(3.0)];
        assert_eq!(interpolate_series(&mut s, 1), vec![false; 3]);
        assert_eq!(s, vec![Some(1.0), Some(2.0), Some(3.0)]);

        let mut s = vec![Some(1.0), None, None, Some(4.0)];
        assert_eq!(interpolate_series(&mut s, 1), vec![false, true, true, false]);
        assert_eq!(s[1], None);

        let mut s = vec![None, Some(2.0), Some(3.0)];
        assert_eq!(interpolate_series(&mut s, 1), vec![true, false, false]);
        assert_eq!(s[0], None);

        let mut s = vec![Some(1.0), None, None, Some(4.0)];
        assert_eq!(interpolate_series(&mut s, 2), vec![false; 4]);
        assert_eq!(s, vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
    }

    pub(crate) fn schema_1f() -> SchemaConfig {
        SchemaConfig {
            analyst_column: None,
            quarterly_features: vec![
                FeatureColumn { name: "epsfiq".into(), scale_by_assets: false },
                FeatureColumn { name: "revtq".into(), scale_by_assets: true },
            ],
            daily_features: vec!["ret".into()],
            ..SchemaConfig::default()
        }
    }

    /// A firm with `n` quarters, eps = t mod 5, revenue = 3t, and 63 trading days per quarter.
    pub(crate) fn toy_panel(firm: &str, n: usize) -> FirmPanel {
        let firm_id = FirmId::new(firm).unwrap();
        let start = NaiveDate::from_ymd_opt(2000, 3, 31).unwrap();
        let quarters: Vec<QuarterlyRecord> = (0..n)
            .map(|t| {
                let eps = (t % 5) as f64;
                QuarterlyRecord {
                    firm: firm_id.clone(),
                    report_date: start + Days::new(91 * t as u64),
                    eps: Some(eps),
                    total_assets: Some(10.0),
                    features: vec![Some(eps), Some(3.0 * t as f64)],
                    group: FirmGroup::Nonfinancial,
                    analyst_mean_eps: Some(eps + 0.5),
                }
            })
            .collect();
        let days = (0..n * 63)
            .map(|d| DailyRecord {
                firm: firm_id.clone(),
                date: start - Days::new(90) + Days::new(d as u64 + 1),
                features: vec![Some((d % 7) as f64)],
            })
            .collect();
        FirmPanel { firm: firm_id, quarters, days }
    }

    fn toy_transforms(panels: &[FirmPanel]) -> TransformSet {
        fit_pipeline(panels, &schema_1f(), &PreprocessConfig::default()).unwrap()
    }

    #[test]
    fn sample_counts() {
        let panel = toy_panel("A", 25);
        let ts = toy_transforms(std::slice::from_ref(&panel));
        let samples = build_samples(&panel, &ts);
        // anchors at quarter indices 19..=23
        assert_eq!(samples.len(), 5);
        assert_eq!(samples[0].anchor_date, panel.quarters[19].report_date);
        let panel21 = toy_panel("B", 21);
        assert_eq!(build_samples(&panel21, &ts).len(), 1);
        assert_eq!(build_samples(&toy_panel("C", 20), &ts).len(), 0);
    }

    #[test]
    fn oversized_gap_rejects_every_window() {
        let mut panel = toy_panel("A", 25);
        let ts = toy_transforms(std::slice::from_ref(&panel));
        // a two-quarter hole at 19..=20 sits inside every candidate window (anchors 19..=23)
        for t in [19, 20] {
            panel.quarters[t].features[1] = None;
        }
        assert!(build_samples(&panel, &ts).is_empty());
    }

    #[test]
    fn persistent_prediction_is_last_eps_row() {
        let panel = toy_panel("A", 30);
        let ts = toy_transforms(std::slice::from_ref(&panel));
        let eps_pos = ts.eps_retained_index();
        for s in build_samples(&panel, &ts) {
            assert_eq!(s.persistent_prediction, s.quarter_row(19)[eps_pos]);
            assert!(s.label_date > s.anchor_date);
            assert_eq!(s.market_window.len(), 20);
            let raw_label = panel
                .quarters
                .iter()
                .find(|q| q.report_date == s.label_date)
                .unwrap()
                .eps
                .unwrap();
            assert_eq!(s.label, ts.transform_eps(raw_label));
            let anchor = panel
                .quarters
                .iter()
                .find(|q| q.report_date == s.anchor_date)
                .unwrap();
            assert_eq!(
                s.analyst_forecast,
                Some(ts.transform_eps(anchor.eps.unwrap() + 0.5))
            );
        }
    }

    #[test]
    fn frozen_transform_and_drop() {
        let mut train = toy_panel("A", 30);
        // constant revenue column: dropped, recorded
        for q in &mut train.quarters {
            q.features[1] = Some(4.0);
        }
        let ts = toy_transforms(std::slice::from_ref(&train));
        assert_eq!(ts.dropped_quarterly, vec!["revtq".to_string()]);
        assert_eq!(ts.quarterly_width(), 1);
        assert_eq!(toy_transforms(std::slice::from_ref(&train)), ts);

        let samples = build_samples(&train, &ts);
        assert!(samples.iter().all(|s| s.quarter_features == 1));
    }

    #[test]
    fn transforms_json_round_trip() {
        let ts = toy_transforms(&[toy_panel("A", 30)]);
        let text = serde_json::to_string(&ts).unwrap();
        let back: TransformSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ts);
    }
}
