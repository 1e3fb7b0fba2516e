use serde::{Deserialize, Serialize};

use crate::bandit::c_of_n;
use crate::environment::{oracle_quantities, HottTopicsInstance};
use crate::error::{Error, Result};

/// Leading constant of the gap-dependent regret bound.
pub const LEADING_CONSTANT: f64 = 3072.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComponents {
    pub k: usize,
    pub l: usize,
    pub d: usize,
    pub n: u64,
    pub c_min: f64,
    pub c_max: f64,
    pub delta_min: f64,
    pub c_n: f64,
    /// `c_bar = exp(min(c_bar_U, c_bar_V))`.
    pub c_bar: f64,
    pub leading_constant: f64,
    /// `96 * 32`, the product of the constants in the proof chain.
    pub recomputed_product: f64,
}

impl BoundComponents {
    fn evaluate(&self, c_min: f64) -> f64 {
        let d3 = (self.d as f64).powi(3);
        self.leading_constant * d3 * (self.k + self.l) as f64
            / (self.c_max * c_min * c_min * self.delta_min)
            * self.c_n
            + 4.0
    }
}

/// Gap-dependent regret bound of an instance at horizon `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem1_value: f64,
    /// Same bound with `c_bar` substituted for `c_min` (chain exploration).
    pub chain_variant_value: f64,
    pub empirical_regret: Option<f64>,
    /// `empirical_regret / theorem1_value`.
    pub ratio: Option<f64>,
    pub components: BoundComponents,
}

impl BoundReport {
    pub fn with_empirical(mut self, regret: f64) -> Self {
        self.empirical_regret = Some(regret);
        self.ratio = Some(regret / self.theorem1_value);
        self
    }

    /// Bound recomputed from [`Self::components`].
    pub fn recompute(&self) -> f64 {
        self.components.evaluate(self.components.c_min)
    }

    /// The stored value matches the recomputation to `1e-9` relative, and the
    /// stored constant equals the proof's product.
    pub fn is_consistent(&self) -> bool {
        let r = self.recompute();
        (r - self.theorem1_value).abs() <= 1e-9 * r.abs()
            && self.components.leading_constant == self.components.recomputed_product
    }
}

pub fn theorem1_bound(inst: &HottTopicsInstance, n: u64) -> Result<BoundReport> {
    let o = oracle_quantities(inst)?;
    if o.delta_min == 0.0 {
        return Err(Error::Degenerate("minimum gap is zero".into()));
    }
    if o.c_min == 0.0 {
        return Err(Error::Degenerate("minimum squared volume is zero".into()));
    }
    let components = BoundComponents {
        k: inst.k(),
        l: inst.l(),
        d: inst.d(),
        n,
        c_min: o.c_min,
        c_max: o.c_max,
        delta_min: o.delta_min,
        c_n: c_of_n(inst.k(), inst.l(), inst.d(), n)?,
        c_bar: o.c_bar,
        leading_constant: LEADING_CONSTANT,
        recomputed_product: 96.0 * 32.0,
    };
    Ok(BoundReport {
        theorem1_value: components.evaluate(components.c_min),
        chain_variant_value: components.evaluate(components.c_bar),
        empirical_regret: None,
        ratio: None,
        components,
    })
}
