//! Staircase pacing: the easiest third of the data, then two thirds, then
//! everything, each for a third of the epochs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subset size for each epoch, in epoch order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacingSchedule(Vec<usize>);

impl PacingSchedule {
    /// A schedule of arbitrary sizes; each must be in `1..=n`.
    pub fn custom(sizes: Vec<usize>, n: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::ZeroLength);
        }
        if let Some(&k) = sizes.iter().find(|&&k| k == 0 || k > n) {
            return Err(Error::Infeasible { k, n });
        }
        Ok(Self(sizes))
    }

    /// Every epoch sees all `n` samples.
    pub fn full(n: usize, epochs: usize) -> Self {
        Self(vec![n; epochs])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn epochs(&self) -> usize {
        self.0.len()
    }

    pub fn size_at(&self, epoch: usize) -> usize {
        self.0[epoch]
    }

    /// Total sample presentations across the run.
    pub fn presentations(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Sizes are `N/3` for epochs `1..=T/3`, `2N/3` up to epoch `2T/3`, and
/// `N` afterwards (all divisions floored). The final stage absorbs any
/// remainder in both `N` and `T`.
pub fn staircase_pacing(n: usize, t: usize) -> Result<PacingSchedule> {
    if n < 3 || t < 3 {
        return Err(Error::TooSmall { n, t });
    }
    let (first_end, second_end) = (t / 3, 2 * t / 3);
    let sizes = (1..=t)
        .map(|epoch| {
            if epoch <= first_end {
                n / 3
            } else if epoch <= second_end {
                2 * n / 3
            } else {
                n
            }
        })
        .collect();
    Ok(PacingSchedule(sizes))
}
