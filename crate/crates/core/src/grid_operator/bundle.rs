use serde::{Deserialize, Serialize};

use super::Profile;
use crate::{Error, Result};

const CHECK_SAMPLES: usize = 2001;

/// Coefficients of the `x`-direction: `-a2 d_x^2 + a1 d_x + a0 + g L2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBundleX {
    pub a2: Profile,
    pub a1: Profile,
    pub a0: Profile,
    pub g: Profile,
    pub x0: f64,
    /// Working interval around `x0`; invariants are checked on it.
    #[serde(default = "default_interval_radius")]
    pub radius: f64,
}

fn default_interval_radius() -> f64 {
    1.0
}

impl CoefficientBundleX {
    pub fn new(a2: Profile, a1: Profile, a0: Profile, g: Profile, x0: f64) -> Result<Self> {
        let bundle = CoefficientBundleX { a2, a1, a0, g, x0, radius: default_interval_radius() };
        bundle.validate()?;
        Ok(bundle)
    }

    /// `a2 = 1`, `a1 = a0 = 0` and the given `g`.
    pub fn with_g(g: Profile, x0: f64) -> Self {
        CoefficientBundleX {
            a2: Profile::constant(1.0),
            a1: Profile::constant(0.0),
            a0: Profile::constant(0.0),
            g,
            x0,
            radius: default_interval_radius(),
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.x0 - self.radius, self.x0 + self.radius)
    }

    pub fn check_points(&self) -> Vec<f64> {
        let (lo, hi) = self.interval();
        (0..CHECK_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (CHECK_SAMPLES - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.a2, &self.a1, &self.a0, &self.g] {
            p.validate()?;
        }
        if !(self.radius > 0.0) {
            return Err(Error::OutOfRange(format!("working radius must be positive, got {}", self.radius)));
        }
        let a2 = self.a2.eval(self.x0);
        if !(a2 > 0.0) {
            return Err(Error::NonPositiveLeading { x: self.x0, value: a2 });
        }
        if let Some(x) = self.check_points().into_iter().find(|&x| !(self.g.eval(x) >= 0.0)) {
            return Err(Error::InvalidInput(format!("g is negative at x = {x} ({})", self.g.eval(x))));
        }
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        self.a2.is_constant() == Some(1.0)
    }

    /// `a(x) = a0(x) + g(x) lambda`.
    pub fn potential(&self, x: f64, lambda: f64) -> f64 {
        self.a0.eval(x) + self.g.eval(x) * lambda
    }
}

fn divide(num: &Profile, den: &Profile) -> Profile {
    match (num.is_constant(), den.is_constant()) {
        (Some(a), Some(b)) => Profile::constant(a / b),
        (Some(a), _) if a == 0.0 => Profile::constant(0.0),
        _ => Profile::Quotient { num: Box::new(num.clone()), den: Box::new(den.clone()) },
    }
}

/// Divides the bundle through by `a2`, so that the leading coefficient is one.
pub fn normalize_a2(bundle: &CoefficientBundleX) -> Result<CoefficientBundleX> {
    if let Some(x) = bundle.check_points().into_iter().find(|&x| !(bundle.a2.eval(x) > 0.0)) {
        return Err(Error::NonPositiveLeading { x, value: bundle.a2.eval(x) });
    }
    if bundle.is_normalized() {
        return Ok(bundle.clone());
    }
    Ok(CoefficientBundleX {
        a2: Profile::constant(1.0),
        a1: divide(&bundle.a1, &bundle.a2),
        a0: divide(&bundle.a0, &bundle.a2),
        g: divide(&bundle.g, &bundle.a2),
        x0: bundle.x0,
        radius: bundle.radius,
    })
}
