use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesRole {
    Truth,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level_id: u32,
    pub pass_rate: f64,
    pub churn_rate: f64,
}

/// Per-level pass and churn rates, ordered by strictly increasing level id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSeries {
    pub role: SeriesRole,
    pub levels: Vec<LevelRecord>,
}

impl LevelSeries {
    pub fn new(role: SeriesRole, levels: Vec<LevelRecord>) -> Result<Self> {
        let series = LevelSeries { role, levels };
        series.validate()?;
        Ok(series)
    }

    /// Builds a series with level ids `1..=n`.
    pub fn from_rates(role: SeriesRole, pass: &[f64], churn: &[f64]) -> Result<Self> {
        if pass.len() != churn.len() {
            return Err(Error::invalid("pass and churn rates differ in length"));
        }
        let levels = pass
            .iter()
            .zip(churn)
            .enumerate()
            .map(|(i, (&p, &c))| LevelRecord {
                level_id: i as u32 + 1,
                pass_rate: p,
                churn_rate: c,
            })
            .collect();
        Self::new(role, levels)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.levels.iter().enumerate() {
            if !(0.0..=1.0).contains(&r.pass_rate) || !(0.0..=1.0).contains(&r.churn_rate) {
                return Err(Error::invalid(format!(
                    "level {} has rates outside [0, 1]",
                    r.level_id
                )));
            }
            if i > 0 && self.levels[i - 1].level_id >= r.level_id {
                return Err(Error::invalid(format!(
                    "level ids not strictly increasing at {}",
                    r.level_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level_ids(&self) -> Vec<u32> {
        self.levels.iter().map(|r| r.level_id).collect()
    }

    pub fn pass_rates(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.pass_rate).collect()
    }

    pub fn churn_rates(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.churn_rate).collect()
    }
}
