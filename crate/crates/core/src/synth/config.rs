use serde::{Deserialize, Serialize};

use crate::error::{HidamError, Result};

/// A named block of company attribute columns with a target missing rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub name: String,
    pub columns: usize,
    pub missing_rate: f64,
}

/// Contagion strength per view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ViewStrengths {
    pub fund: f64,
    pub equity: f64,
    pub industry: f64,
}

impl ViewStrengths {
    pub fn get(&self, view: &str) -> f64 {
        match view {
            "fund" => self.fund,
            "equity" => self.equity,
            "industry" => self.industry,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub companies: usize,
    pub persons: usize,
    pub industries: usize,

    /// Mean transfer out-degree; individual rates are Pareto distributed.
    pub transfer_degree: f64,
    /// Pareto shape of transfer activity and counterparty popularity.
    pub transfer_tail: f64,
    /// Fraction of companies with a controlling person.
    pub control_coverage: f64,
    /// Pareto shape of how many companies a person controls.
    pub control_tail: f64,
    /// Mean invest out-degree.
    pub invest_degree: f64,
    /// Fraction of companies assigned to an industry.
    pub belong_coverage: f64,
    /// Up/downstream links per industry.
    pub updownstream_degree: usize,

    pub contagion: ViewStrengths,
    pub base_rate: f64,
    /// Share of company columns entering the hidden risk score.
    pub risk_column_fraction: f64,
    /// Standard deviation of unobserved noise added to the risk score,
    /// relative to the unit-variance attribute signal.
    pub risk_noise: f64,

    pub feature_sets: Vec<FeatureSetSpec>,
    /// Correlation of missingness between columns of one company.
    pub missing_correlation: f64,

    pub person_attributes: usize,
    pub industry_attributes: usize,
    pub transfer_attributes: usize,
    pub belong_attributes: usize,
    pub updownstream_attributes: usize,
    pub control_attributes: usize,
    pub invest_attributes: usize,
    /// Labels carry a loan date drawn uniformly from `[0, horizon_days)`.
    pub horizon_days: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let fs = |name: &str, columns, missing_rate| FeatureSetSpec {
            name: name.into(),
            columns,
            missing_rate,
        };
        SynthConfig {
            seed: 0,
            companies: 5000,
            persons: 2500,
            industries: 40,
            transfer_degree: 1.5,
            transfer_tail: 1.8,
            control_coverage: 0.9,
            control_tail: 1.5,
            invest_degree: 0.4,
            belong_coverage: 1.0,
            updownstream_degree: 2,
            contagion: ViewStrengths {
                fund: 0.0,
                equity: 2.0,
                industry: 0.0,
            },
            base_rate: 0.025,
            risk_column_fraction: 0.5,
            risk_noise: 0.5,
            feature_sets: vec![
                fs("profile", 8, 0.184),
                fs("credit", 6, 0.487),
                fs("solvency", 4, 0.895),
                fs("operation", 4, 0.553),
                fs("activity", 6, 0.071),
            ],
            missing_correlation: 0.5,
            person_attributes: 3,
            industry_attributes: 0,
            transfer_attributes: 3,
            belong_attributes: 0,
            updownstream_attributes: 1,
            control_attributes: 2,
            invest_attributes: 2,
            horizon_days: 730,
        }
    }
}

impl SynthConfig {
    pub fn company_attributes(&self) -> usize {
        self.feature_sets.iter().map(|f| f.columns).sum()
    }

    /// Same structure at `factor` times the entity counts.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        SynthConfig {
            companies: s(self.companies),
            persons: s(self.persons),
            industries: s(self.industries),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HidamError::InvalidArgument(m));
        if self.companies < 2 || self.persons == 0 || self.industries == 0 {
            return bad("need at least 2 companies, 1 person and 1 industry".into());
        }
        for (name, v) in [
            ("control_coverage", self.control_coverage),
            ("belong_coverage", self.belong_coverage),
            ("base_rate", self.base_rate),
            ("risk_column_fraction", self.risk_column_fraction),
            ("missing_correlation", self.missing_correlation),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        for (name, v) in [
            ("transfer_degree", self.transfer_degree),
            ("invest_degree", self.invest_degree),
            ("risk_noise", self.risk_noise),
            ("contagion.fund", self.contagion.fund),
            ("contagion.equity", self.contagion.equity),
            ("contagion.industry", self.contagion.industry),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if !(self.transfer_tail > 1.0 && self.control_tail > 1.0) {
            return bad("Pareto tails must exceed 1 so degrees have a mean".into());
        }
        if self.feature_sets.is_empty() || self.feature_sets.iter().any(|f| f.columns == 0) {
            return bad("every feature set needs at least one column".into());
        }
        if let Some(f) = self
            .feature_sets
            .iter()
            .find(|f| !(0.0..=1.0).contains(&f.missing_rate))
        {
            return bad(format!("missing rate of `{}` must lie in [0, 1]", f.name));
        }
        if self.horizon_days < 1 {
            return bad("horizon_days must be at least 1".into());
        }
        let c = self.contagion;
        let fund_links = self.transfer_degree > 0.0;
        let equity_links = self.control_coverage > 0.0 || self.invest_degree > 0.0;
        let industry_links = self.belong_coverage > 0.0;
        for (view, gamma, present) in [
            ("fund", c.fund, fund_links),
            ("equity", c.equity, equity_links),
            ("industry", c.industry, industry_links),
        ] {
            if gamma > 0.0 && !present {
                return bad(format!(
                    "contagion along the {view} view requested but that view has no links"
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_roundtrips() {
        let c = SynthConfig::default();
        c.validate().unwrap();
        assert_eq!(c.company_attributes(), 28);
        let back: SynthConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn contagion_without_links_is_infeasible() {
        let c = SynthConfig {
            transfer_degree: 0.0,
            contagion: ViewStrengths {
                fund: 1.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rates_outside_unit_interval_rejected() {
        let c = SynthConfig {
            base_rate: 1.5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
