//! The four frontier scoring terms and their linear combination
//! `H = α·H1 − β·H2 + γ·H3 + δ·H4`.

use serde::{Deserialize, Serialize};

use crate::astar::PathResult;
use crate::error::{Error, Result};
use crate::frontier::FrontierPoint;
use crate::grid::Mask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for HeuristicConfig {
    /// The full planner, 1:12:1:20.
    fn default() -> Self {
        Self::full()
    }
}

impl HeuristicConfig {
    /// Information gain against movement cost only, 1:15.
    pub fn baseline() -> Self {
        Self {
            alpha: 1.0,
            beta: 15.0,
            gamma: 0.0,
            delta: 0.0,
        }
    }

    /// Adds the learned future return, 1:12:1.
    pub fn with_future_return() -> Self {
        Self {
            alpha: 1.0,
            beta: 12.0,
            gamma: 1.0,
            delta: 0.0,
        }
    }

    pub fn full() -> Self {
        Self {
            alpha: 1.0,
            beta: 12.0,
            gamma: 1.0,
            delta: 20.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor,
            beta: self.beta * factor,
            gamma: self.gamma * factor,
            delta: self.delta * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// A square ring kernel (all ones, zero at the center) with its activation
/// threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub size: usize,
    pub threshold: u32,
}

impl FilterSpec {
    pub fn new(size: usize, threshold: u32) -> Result<Self> {
        let spec = Self { size, threshold };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 3 || self.size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "filter size {} must be odd and >= 3",
                self.size
            )));
        }
        if self.threshold == 0 || self.threshold as usize > self.size * self.size - 1 {
            return Err(Error::Config(format!(
                "threshold {} must lie in [1, {}] for a {}x{} filter",
                self.threshold,
                self.size * self.size - 1,
                self.size,
                self.size
            )));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Vec<Vec<u8>> {
        let mut k = vec![vec![1u8; self.size]; self.size];
        k[self.size / 2][self.size / 2] = 0;
        k
    }

    /// Explored cells of `temp_mask` under the kernel centred at `fp`;
    /// out-of-bounds cells count as unexplored.
    pub fn response(&self, temp_mask: &Mask, fp: FrontierPoint) -> u32 {
        let half = (self.size / 2) as isize;
        let n = temp_mask.size() as isize;
        let (r0, c0) = (fp.row as isize, fp.col as isize);
        let mut sum = 0u32;
        for r in (r0 - half).max(0)..=(r0 + half).min(n - 1) {
            let row = &temp_mask.cells()[(r * n) as usize..((r + 1) * n) as usize];
            for c in (c0 - half).max(0)..=(c0 + half).min(n - 1) {
                sum += row[c as usize] as u32;
            }
        }
        sum - temp_mask.get(fp) as u32
    }

    pub fn is_active(&self, temp_mask: &Mask, fp: FrontierPoint) -> bool {
        self.response(temp_mask, fp) >= self.threshold
    }
}

/// The 5×5, 7×7 and 9×9 ring filters with thresholds 24, 47 and 78.
pub fn default_filters() -> Vec<FilterSpec> {
    vec![
        FilterSpec {
            size: 5,
            threshold: 24,
        },
        FilterSpec {
            size: 7,
            threshold: 47,
        },
        FilterSpec {
            size: 9,
            threshold: 78,
        },
    ]
}

/// H1: number of cells explored in `temp_mask` but not in `mask`.
pub fn h1_info_gain(mask: &Mask, temp_mask: &Mask) -> Result<usize> {
    mask.check_same_size(temp_mask, "h1_info_gain")?;
    Ok(mask
        .cells()
        .iter()
        .zip(temp_mask.cells())
        .filter(|(a, b)| a != b)
        .count())
}

/// H2: path length.
pub fn h2_move_cost(path: &PathResult) -> usize {
    path.len()
}

/// H4: 1 if any filter's response reaches its threshold.
pub fn h4_filters(temp_mask: &Mask, fp: FrontierPoint, filters: &[FilterSpec]) -> u8 {
    filters.iter().any(|f| f.is_active(temp_mask, fp)) as u8
}

pub fn combine(h1: f64, h2: f64, h3: f64, h4: f64, cfg: &HeuristicConfig) -> f64 {
    cfg.alpha * h1 - cfg.beta * h2 + cfg.gamma * h3 + cfg.delta * h4
}
