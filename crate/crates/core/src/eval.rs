//! Skill scores against the persistent model and analyst consensus.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::domain::{filter_group, GroupFilter, Sample};
use crate::error::{Error, Result};
use crate::models::Predictor;

pub fn persistent_predict(sample: &Sample) -> f64 {
    sample.persistent_prediction
}

pub fn mse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::TooFewValues("mse of zero samples".into()));
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// `1 - mse_model / mse_base`.
pub fn skill_score(mse_model: f64, mse_base: f64) -> Result<f64> {
    if mse_base == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    if !mse_base.is_finite() || mse_base < 0.0 || !mse_model.is_finite() || mse_model < 0.0 {
        return Err(Error::NonFinite(format!(
            "skill score of model MSE {mse_model} against baseline {mse_base}"
        )));
    }
    Ok(1.0 - mse_model / mse_base)
}

/// Mean and population (1/n) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_repetition: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Self {
            per_repetition: values,
            mean,
            std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub group: GroupFilter,
    pub model: String,
    pub n_test_samples: usize,
    pub n_with_analyst: usize,
    pub mse_model: Summary,
    pub mse_persistent: f64,
    pub mse_analyst: f64,
    pub ss_vs_persistent: Summary,
    /// Absent when the analyst baseline is degenerate (zero MSE).
    pub ss_vs_analyst: Option<Summary>,
    pub notes: Vec<String>,
    /// All errors are measured on transformed (clipped, studentized) EPS.
    pub space: String,
}

/// Scores each predictor (one per repetition) on the analyst-covered test
/// samples of `group`. Both baselines use exactly the same subset.
pub fn evaluate(
    model_name: &str,
    predictors: &[&dyn Predictor],
    test: &[Sample],
    group: GroupFilter,
) -> Result<EvalReport> {
    if predictors.is_empty() {
        return Err(Error::MissingArtifact("no models to evaluate".into()));
    }
    let in_group = filter_group(test, group);
    let comparable: Vec<&Sample> = in_group
        .iter()
        .filter(|s| s.analyst_forecast.is_some())
        .collect();
    if comparable.is_empty() {
        return Err(Error::NoComparableSamples(format!(
            "group {group}: {} test samples, none with an analyst forecast",
            in_group.len()
        )));
    }
    let labels: Vec<f64> = comparable.iter().map(|s| s.label).collect();
    let persistent: Vec<f64> = comparable.iter().map(|s| persistent_predict(s)).collect();
    let analyst: Vec<f64> = comparable
        .iter()
        .map(|s| s.analyst_forecast.expect("filtered"))
        .collect();
    let mse_persistent = mse(&persistent, &labels)?;
    let mse_analyst = mse(&analyst, &labels)?;

    let mut mse_model = Vec::with_capacity(predictors.len());
    for p in predictors {
        let preds = p.predict(&comparable)?;
        mse_model.push(mse(&preds, &labels)?);
    }
    let ss_p = mse_model
        .iter()
        .map(|&m| skill_score(m, mse_persistent))
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    let ss_a = match mse_model
        .iter()
        .map(|&m| skill_score(m, mse_analyst))
        .collect::<Result<Vec<_>>>()
    {
        Ok(v) => Some(Summary::from_values(v)),
        Err(Error::DegenerateBaseline) => {
            notes.push("analyst baseline is degenerate (zero MSE); skill vs analysts undefined".into());
            None
        }
        Err(e) => return Err(e),
    };

    Ok(EvalReport {
        group,
        model: model_name.to_string(),
        n_test_samples: in_group.len(),
        n_with_analyst: comparable.len(),
        mse_model: Summary::from_values(mse_model),
        mse_persistent,
        mse_analyst,
        ss_vs_persistent: Summary::from_values(ss_p),
        ss_vs_analyst: ss_a,
        notes,
        space: "transformed".into(),
    })
}

fn pm(s: &Summary) -> String {
    format!("{:.4} ± {:.4}", s.mean, s.std)
}

/// Aligned plain-text table, one row per report.
pub fn render_table(reports: &[EvalReport]) -> String {
    let header = [
        "group",
        "model",
        "MSE",
        "SS vs persistent",
        "SS vs analyst",
        "n",
    ];
    let rows: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.group.to_string(),
                r.model.clone(),
                pm(&r.mse_model),
                pm(&r.ss_vs_persistent),
                r.ss_vs_analyst.as_ref().map_or_else(|| "undefined".into(), pm),
                r.n_with_analyst.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            let pad = w - cell.chars().count();
            // numbers right-aligned, labels left-aligned
            if i >= 2 {
                text.push_str(&" ".repeat(pad));
                text.push_str(cell);
            } else {
                text.push_str(cell);
                text.push_str(&" ".repeat(pad));
            }
        }
        let _ = writeln!(out, "{}", text.trim_end());
    };
    line(&header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::{date, sample};
    use crate::domain::FirmGroup;
    use crate::models::PersistentModel;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mse(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), 0.0);
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn skill_score_examples() {
        assert!((skill_score(0.7, 1.0).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(skill_score(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(skill_score(0.0, 2.0).unwrap(), 1.0);
        assert!(matches!(skill_score(1.0, 0.0), Err(Error::DegenerateBaseline)));
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_std(&[2.0, 4.0, 6.0]);
        assert_eq!(m, 4.0);
        assert!((s - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[0.2; 5]).1, 0.0);
    }

    fn fixture() -> Vec<Sample> {
        (0..6)
            .map(|i| {
                let group = if i % 3 == 0 {
                    FirmGroup::Financial
                } else {
                    FirmGroup::Nonfinancial
                };
                let mut s = sample(&format!("F{i}"), group, date(2017, 3, 31));
                s.label = i as f64 * 0.5;
                s.persistent_prediction = i as f64 * 0.5 - 0.3 * (i % 2) as f64 + 0.1;
                s.analyst_forecast = (i != 4).then_some(i as f64 * 0.5 + 0.05);
                s
            })
            .collect()
    }

    #[test]
    fn persistent_model_scores_zero() {
        let test = fixture();
        let r = evaluate("persistent", &[&PersistentModel], &test, GroupFilter::All).unwrap();
        assert_eq!(r.ss_vs_persistent.mean, 0.0);
        assert_eq!(r.n_test_samples, 6);
        assert_eq!(r.n_with_analyst, 5);
        assert!(r.ss_vs_analyst.unwrap().mean < 0.0);
    }

    #[test]
    fn identical_repetitions_have_zero_spread() {
        let test = fixture();
        let p = PersistentModel;
        let preds: Vec<&dyn Predictor> = vec![&p; 5];
        let r = evaluate("x", &preds, &test, GroupFilter::Nofin).unwrap();
        assert_eq!(r.ss_vs_persistent.std, 0.0);
        assert_eq!(r.ss_vs_analyst.unwrap().std, 0.0);
        assert_eq!(r.n_test_samples, 4);
    }

    #[test]
    fn perfect_analysts_are_flagged_not_fatal() {
        let mut test = fixture();
        for s in &mut test {
            s.analyst_forecast = Some(s.label);
        }
        let r = evaluate("persistent", &[&PersistentModel], &test, GroupFilter::All).unwrap();
        assert!(r.ss_vs_analyst.is_none());
        assert_eq!(r.mse_analyst, 0.0);
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn no_analyst_coverage_is_an_error() {
        let mut test = fixture();
        test.iter_mut().for_each(|s| s.analyst_forecast = None);
        assert!(matches!(
            evaluate("p", &[&PersistentModel], &test, GroupFilter::All),
            Err(Error::NoComparableSamples(_))
        ));
    }

    #[test]
    fn table_is_aligned_and_pure() {
        let test = fixture();
        let reports: Vec<_> = GroupFilter::ALL_MODES
            .iter()
            .map(|&g| evaluate("persistent", &[&PersistentModel], &test, g).unwrap())
            .collect();
        let a = render_table(&reports);
        assert_eq!(a, render_table(&reports));
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("group"));
    }
}
