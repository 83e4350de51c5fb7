//! Neighborhood-size schedules: the ordered set of k values that defines the
//! clustering resolutions.

use crate::error::{Error, Result};

pub const DEFAULT_BASE: usize = 2;
pub const DEFAULT_RATIO: f64 = 1.21;
pub const DEFAULT_CAP_FRACTION: f64 = 0.1;

/// Strictly increasing list of neighborhood sizes, each in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSchedule {
    sizes: Vec<usize>,
}

impl NeighborhoodSchedule {
    /// Geometric schedule: real-valued terms `base * ratio^(i-1)` are
    /// generated while they stay below `n * cap_fraction`, each term is
    /// rounded to the nearest integer independently, and duplicates produced
    /// by rounding are dropped. Rounded values that reach the cap are dropped
    /// as well, so the maximum stays strictly below it. When nothing survives
    /// (tiny n or cap) the schedule clamps to the single size `min(base, n)`.
    pub fn geometric(n: usize, base: usize, ratio: f64, cap_fraction: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "dataset size must be at least 1"));
        }
        if base < 1 {
            return Err(Error::param("base", "must be at least 1"));
        }
        if !(ratio > 1.0) {
            return Err(Error::param("ratio", format!("must be > 1, got {ratio}")));
        }
        if !(cap_fraction > 0.0 && cap_fraction <= 1.0) {
            return Err(Error::param(
                "cap_fraction",
                format!("must be in (0, 1], got {cap_fraction}"),
            ));
        }

        let cap = n as f64 * cap_fraction;
        let mut sizes = Vec::new();
        let mut term = base as f64;
        while term < cap {
            let rounded = term.round() as usize;
            if (rounded as f64) < cap && sizes.last() != Some(&rounded) {
                sizes.push(rounded);
            }
            term *= ratio;
        }
        if sizes.is_empty() {
            sizes.push(base.min(n));
        }
        debug_assert!(sizes.windows(2).all(|w| w[0] < w[1]));
        Ok(Self { sizes })
    }

    /// Explicit schedule; must be strictly increasing with every size in `1..=n`.
    pub fn from_sizes(n: usize, sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::param("sizes", "schedule must not be empty"));
        }
        if !sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("sizes", "schedule must be strictly increasing"));
        }
        if sizes[0] < 1 || *sizes.last().unwrap() > n {
            return Err(Error::param(
                "sizes",
                format!("every size must lie in 1..={n}"),
            ));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn max_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }
}
