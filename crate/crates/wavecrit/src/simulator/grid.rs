use serde::Serialize;

use super::SimError;
use crate::scalar::Real;

/// Shared node set for `u` and `v`.
///
/// Nodes are `k h` on `|x| <= uniform_radius`; beyond that the spacing is
/// `max(h, stretch · x)`. `stretch = 0` gives a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid<F> {
    pub h: F,
    pub u_max: F,
    pub v_max: F,
    pub stretch: F,
    pub uniform_radius: F,
}

impl<F: Real> Grid<F> {
    pub fn uniform(h: F, u_max: F, v_max: F) -> Self {
        Self { h, u_max, v_max, stretch: F::zero(), uniform_radius: v_max.max(u_max) }
    }

    pub fn stretched(h: F, u_max: F, v_max: F, stretch: F, uniform_radius: F) -> Self {
        Self { h, u_max, v_max, stretch, uniform_radius }
    }

    /// Same layout with `h` and `stretch` divided by `factor`.
    pub fn refined(&self, factor: F) -> Self {
        Self { h: self.h / factor, stretch: self.stretch / factor, ..*self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.h > F::zero()
            && self.h.is_finite()
            && self.v_max > F::zero()
            && self.u_max.is_finite()
            && self.v_max.is_finite()
            && self.stretch >= F::zero()
            && self.uniform_radius > F::zero();
        if !ok {
            return Err(SimError::Config(format!("invalid grid {self:?}")));
        }
        if self.stretch >= F::one() {
            return Err(SimError::Config("stretch must be below 1".into()));
        }
        Ok(())
    }

    /// Ascending nodes from just outside the data support to `max(u_max, v_max)`.
    pub fn nodes(&self, support: F) -> Result<Vec<F>, SimError> {
        let h = self.h;
        let k_min = (support * F::c(0.5) / h).ceil().to_i64().unwrap_or(0) + 2;
        let top = self.u_max.max(self.v_max);
        let k_uni = (self.uniform_radius.max(support) / h).ceil().to_i64().unwrap_or(0).max(k_min);
        let count = (k_min + k_uni + 1) as usize;
        if count > 50_000_000 {
            return Err(SimError::Config(format!("grid needs {count} uniform nodes")));
        }
        let mut nodes: Vec<F> = (-k_min..=k_uni).map(|k| h * F::c(k as f64)).collect();
        let mut x = *nodes.last().expect("non-empty");
        while x < top {
            x = x + h.max(self.stretch * x);
            nodes.push(x);
            if nodes.len() > 50_000_000 {
                return Err(SimError::Config("grid too large".into()));
            }
        }
        Ok(nodes)
    }
}
