//! Synthetic panels with known dynamics.
//!
//! EPS follows a per-firm AR(1) process with an additive four-quarter seasonal
//! term, `eps_t = phi * eps_{t-1} + A * s(t mod 4) + e_t`. The persistent
//! model cannot capture the seasonal term, so a network that learns it beats
//! the baseline by construction.

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{DailyRecord, FirmGroup, FirmId, FirmPanel, QuarterlyRecord};
use crate::error::{Error, Result};
use crate::ingest::SchemaConfig;

pub const SEASONAL_PATTERN: [f64; 4] = [1.0, -0.5, -1.0, 0.5];
pub const TRADING_DAYS_PER_QUARTER: usize = 63;

const BURN_IN_QUARTERS: usize = 8;
const _: () = assert!(BURN_IN_QUARTERS.is_multiple_of(4));
const FEATURE_NOISE_STD: f64 = 0.05;
const DAILY_STEP_STD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_firms: usize,
    pub n_quarters: usize,
    pub ar_coefficient: f64,
    pub seasonal_amplitude: f64,
    pub noise_std: f64,
    pub analyst_noise_std: f64,
    pub missing_rate: f64,
    pub seed: u64,
    /// Share of firms labelled financial.
    pub financial_share: f64,
    /// Calendar year of the first generated quarter.
    pub start_year: i32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_firms: 200,
            n_quarters: 40,
            ar_coefficient: 0.6,
            seasonal_amplitude: 0.5,
            noise_std: 0.2,
            analyst_noise_std: 0.3,
            missing_rate: 0.01,
            seed: 42,
            financial_share: 0.25,
            start_year: 2008,
        }
    }
}

impl SyntheticConfig {
    /// `min_quarters` is the window size plus the forecast horizon.
    pub fn validate(&self, min_quarters: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synthetic: {m}")));
        if self.n_firms == 0 {
            return bad("n_firms must be positive".into());
        }
        if self.n_quarters == 0 || self.n_quarters < min_quarters {
            return bad(format!(
                "n_quarters {} must be at least window size + horizon ({min_quarters})",
                self.n_quarters
            ));
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return bad(format!("ar_coefficient {} outside (-1, 1)", self.ar_coefficient));
        }
        for (name, v) in [
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("noise_std", self.noise_std),
            ("analyst_noise_std", self.analyst_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be a finite non-negative number"));
            }
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad(format!("missing_rate {} outside [0, 1)", self.missing_rate));
        }
        if !(0.0..=1.0).contains(&self.financial_share) {
            return bad(format!("financial_share {} outside [0, 1]", self.financial_share));
        }
        quarter_end(self.start_year, 0)
            .ok_or_else(|| Error::Config(format!("synthetic: bad start_year {}", self.start_year)))?;
        Ok(())
    }
}

fn quarter_end(start_year: i32, q: usize) -> Option<NaiveDate> {
    let year = start_year + (q / 4) as i32;
    let (month, day) = match q % 4 {
        0 => (3, 31),
        1 => (6, 30),
        2 => (9, 30),
        _ => (12, 31),
    };
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Per-feature loadings shared by every firm: (eps loading, next-season loading, offset).
fn feature_loadings(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64, f64)> {
    (0..n)
        .map(|_| {
            (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.5..0.5),
            )
        })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generates panels shaped for `schema` (the eps and total-assets columns are
/// placed where the schema lists them; remaining columns are asset-scaled
/// functions of the latent eps and season).
pub fn generate_synthetic(config: &SyntheticConfig, schema: &SchemaConfig) -> Result<Vec<FirmPanel>> {
    config.validate(1)?;
    schema.validate()?;
    let eps_idx = schema
        .eps_feature_index()
        .ok_or_else(|| Error::Schema("eps column missing from features".into()))?;
    let atq_idx = schema.assets_feature_index();
    let n_feat = schema.quarterly_feature_count();
    let n_daily = schema.daily_feature_count();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let loadings = feature_loadings(&mut rng, n_feat);
    let phi = config.ar_coefficient;
    let amp = config.seasonal_amplitude;
    let season = |t: usize| SEASONAL_PATTERN[t % 4];

    let mut panels = Vec::with_capacity(config.n_firms);
    for i in 0..config.n_firms {
        let firm = FirmId::new(format!("F{i:05}"))?;
        let group = if rng.random::<f64>() < config.financial_share {
            FirmGroup::Financial
        } else {
            FirmGroup::Nonfinancial
        };

        // latent eps path; one extra quarter so the last analyst forecast has a target
        let total = config.n_quarters + 1;
        let mut eps_path = Vec::with_capacity(total);
        let mut prev = 0.0;
        for t in 0..BURN_IN_QUARTERS + total {
            // burn-in is a whole number of years, so generated quarter 0 has phase 0
            let next = phi * prev + amp * season(t) + config.noise_std * normal(&mut rng);
            if t >= BURN_IN_QUARTERS {
                eps_path.push(next);
            }
            prev = next;
        }

        let asset_level = (7.0 + normal(&mut rng)).exp();
        let asset_growth = 0.01 + 0.005 * normal(&mut rng);

        let mut quarters = Vec::with_capacity(config.n_quarters);
        for t in 0..config.n_quarters {
            let report_date = quarter_end(config.start_year, t)
                .ok_or_else(|| Error::Config("synthetic: calendar overflow".into()))?;
            let eps = eps_path[t];
            let atq = asset_level * (asset_growth * t as f64 + 0.02 * normal(&mut rng)).exp();
            let next_season = season(t + 1);
            let mut features: Vec<Option<f64>> = loadings
                .iter()
                .map(|&(a, b, c)| {
                    let ratio =
                        a * eps + b * next_season + c + FEATURE_NOISE_STD * normal(&mut rng);
                    Some(atq * ratio)
                })
                .collect();
            features[eps_idx] = Some(eps);
            if let Some(a) = atq_idx {
                features[a] = Some(atq);
            }
            // columns the schema leaves unscaled carry the ratio itself
            for (k, cell) in features.iter_mut().enumerate() {
                let special = k == eps_idx || Some(k) == atq_idx;
                if !special && !schema.quarterly_features[k].scale_by_assets {
                    *cell = cell.map(|v| v / atq);
                }
            }
            for cell in features.iter_mut() {
                if config.missing_rate > 0.0 && rng.random::<f64>() < config.missing_rate {
                    *cell = None;
                }
            }
            let analyst = eps_path[t + 1] + config.analyst_noise_std * normal(&mut rng);
            let analyst = if config.missing_rate > 0.0 && rng.random::<f64>() < config.missing_rate {
                None
            } else {
                Some(analyst)
            };
            quarters.push(QuarterlyRecord {
                firm: firm.clone(),
                report_date,
                eps: features[eps_idx],
                total_assets: match atq_idx {
                    Some(a) => features[a],
                    None => Some(atq),
                },
                features,
                group,
                analyst_mean_eps: analyst,
            });
        }

        let drift: Vec<f64> = (0..n_daily).map(|_| 0.002 * normal(&mut rng)).collect();
        let mut level: Vec<f64> = (0..n_daily).map(|_| normal(&mut rng)).collect();
        let mut days = Vec::with_capacity(config.n_quarters * TRADING_DAYS_PER_QUARTER);
        let mut quarter_start = NaiveDate::from_ymd_opt(config.start_year, 1, 1)
            .ok_or_else(|| Error::Config("synthetic: calendar overflow".into()))?;
        for q in &quarters {
            let span = (q.report_date - quarter_start).num_days() as u64 + 1;
            for d in 0..TRADING_DAYS_PER_QUARTER as u64 {
                let date = quarter_start + Days::new(d * span / TRADING_DAYS_PER_QUARTER as u64);
                for (k, v) in level.iter_mut().enumerate() {
                    *v += drift[k] + DAILY_STEP_STD * normal(&mut rng);
                }
                days.push(DailyRecord {
                    firm: firm.clone(),
                    date,
                    features: level.iter().map(|&v| Some(v)).collect(),
                });
            }
            quarter_start = q.report_date + Days::new(1);
            debug_assert_eq!(quarter_start.day(), 1);
        }

        panels.push(FirmPanel {
            firm,
            quarters,
            days,
        });
    }
    Ok(panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(config: SyntheticConfig) -> SyntheticConfig {
        SyntheticConfig {
            n_firms: 3,
            n_quarters: 24,
            ..config
        }
    }

    #[test]
    fn same_seed_is_identical() {
        let cfg = quiet(SyntheticConfig::default());
        let schema = SchemaConfig::default();
        let a = generate_synthetic(&cfg, &schema).unwrap();
        let b = generate_synthetic(&cfg, &schema).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig { seed: 7, ..cfg }, &schema).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_dynamics_give_zero_eps() {
        let cfg = quiet(SyntheticConfig {
            ar_coefficient: 0.0,
            seasonal_amplitude: 0.0,
            noise_std: 0.0,
            missing_rate: 0.0,
            ..SyntheticConfig::default()
        });
        let panels = generate_synthetic(&cfg, &SchemaConfig::default()).unwrap();
        for p in &panels {
            for q in &p.quarters {
                assert_eq!(q.eps, Some(0.0));
                assert_eq!(q.features[0], Some(0.0));
            }
        }
    }

    #[test]
    fn missing_share_matches_rate() {
        let cfg = SyntheticConfig {
            n_firms: 10,
            n_quarters: 40,
            missing_rate: 0.05,
            ..SyntheticConfig::default()
        };
        let panels = generate_synthetic(&cfg, &SchemaConfig::default()).unwrap();
        let (mut gaps, mut cells) = (0usize, 0usize);
        for p in &panels {
            for q in &p.quarters {
                cells += q.features.len();
                gaps += q.features.iter().filter(|c| c.is_none()).count();
            }
        }
        let share = gaps as f64 / cells as f64;
        assert!((0.03..=0.07).contains(&share), "share {share}");
    }

    #[test]
    fn panels_satisfy_domain_invariants() {
        let cfg = quiet(SyntheticConfig::default());
        let schema = SchemaConfig::default();
        for p in generate_synthetic(&cfg, &schema).unwrap() {
            p.validate(19, 11).unwrap();
            assert_eq!(p.days.len(), 24 * TRADING_DAYS_PER_QUARTER);
            assert!(p.days.last().unwrap().date <= p.quarters.last().unwrap().report_date);
            for q in &p.quarters {
                assert_eq!(q.eps, q.features[0]);
                assert_eq!(q.total_assets, q.features[1]);
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let schema = SchemaConfig::default();
        for cfg in [
            SyntheticConfig { n_firms: 0, ..Default::default() },
            SyntheticConfig { ar_coefficient: 1.0, ..Default::default() },
            SyntheticConfig { missing_rate: 1.0, ..Default::default() },
            SyntheticConfig { noise_std: -1.0, ..Default::default() },
        ] {
            assert!(generate_synthetic(&cfg, &schema).is_err());
        }
        assert!(SyntheticConfig { n_quarters: 20, ..Default::default() }
            .validate(21)
            .is_err());
    }
}
