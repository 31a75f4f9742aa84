//! Scalar coefficient profiles: named presets and tables.
//!
//! JSON accepts a bare number (constant), a preset string such as
//! `"constant"`, `"constant(2)"`, `"kusuoka(0.5)"`, `"power(1)"`, `"sin"`,
//! `"sin(2)"`, a table `{"x": [...], "y": [...]}`, or the tagged form that
//! [`Profile`] serializes to.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `|x - center|^(2p)`.
    Power { p: f64, center: f64 },
    /// `exp(-1 / |x - center|^(1 - kappa))`, zero at `x = center`.
    Kusuoka { kappa: f64, center: f64 },
    /// `amplitude * sin(frequency * x)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `sum_i coeffs[i] * x^i`.
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise linear through `(x, y)`, constant outside.
    Table { x: Vec<f64>, y: Vec<f64> },
    Quotient { num: Box<Profile>, den: Box<Profile> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn kusuoka(kappa: f64) -> Self {
        Profile::Kusuoka { kappa, center: 0.0 }
    }

    pub fn power(p: f64) -> Self {
        Profile::Power { p, center: 0.0 }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Profile::Sine { amplitude, frequency }
    }

    /// Parses a preset name like `kusuoka(0.5)`.
    pub fn parse_preset(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, arg) = match text.find('(') {
            Some(open) => {
                let close = text
                    .rfind(')')
                    .filter(|&c| c > open)
                    .ok_or_else(|| Error::InvalidInput(format!("unbalanced preset `{text}`")))?;
                let inner = text[open + 1..close].trim();
                let value: f64 = inner
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad preset argument `{inner}`")))?;
                (text[..open].trim(), Some(value))
            }
            None => (text, None),
        };
        let profile = match (name, arg) {
            ("constant", v) => Profile::constant(v.unwrap_or(1.0)),
            ("zero", None) => Profile::constant(0.0),
            ("kusuoka", Some(kappa)) => Profile::kusuoka(kappa),
            ("power", Some(p)) => Profile::power(p),
            ("sin", a) => Profile::sine(a.unwrap_or(1.0), 1.0),
            _ => return Err(Error::InvalidInput(format!("unknown coefficient preset `{text}`"))),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Kusuoka { kappa, .. } if !(*kappa < 1.0) => Err(Error::InvalidInput(format!(
                "kusuoka weight needs kappa < 1, got {kappa}"
            ))),
            Profile::Power { p, .. } if *p < 0.0 => {
                Err(Error::InvalidInput(format!("power preset needs p >= 0, got {p}")))
            }
            Profile::Table { x, y } => {
                if x.len() != y.len() || x.is_empty() {
                    return Err(Error::InvalidInput("table x and y must be nonempty and equally long".into()));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("table x must be strictly increasing".into()));
                }
                Ok(())
            }
            Profile::Quotient { num, den } => {
                num.validate()?;
                den.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Power { p, center } => (x - center).abs().powf(2.0 * p),
            Profile::Kusuoka { kappa, center } => {
                let r = (x - center).abs();
                if r == 0.0 {
                    0.0
                } else {
                    (-1.0 / r.powf(1.0 - kappa)).exp()
                }
            }
            Profile::Sine { amplitude, frequency } => amplitude * (frequency * x).sin(),
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Profile::Table { x: xs, y: ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let i = xs.partition_point(|&t| t <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
            Profile::Quotient { num, den } => num.eval(x) / den.eval(x),
        }
    }

    /// `order`-th derivative. Analytic for the closed-form presets, centered
    /// finite differences otherwise.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        if order == 0 {
            return self.eval(x);
        }
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Sine { amplitude, frequency } => {
                let phase = (frequency * x) + order as f64 * std::f64::consts::FRAC_PI_2;
                amplitude * frequency.powi(order as i32) * phase.sin()
            }
            Profile::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (i, c) in coeffs.iter().enumerate().skip(order) {
                    let falling: f64 = (0..order).map(|m| (i - m) as f64).product();
                    acc += c * falling * x.powi((i - order) as i32);
                }
                acc
            }
            Profile::Power { p, center } => {
                let q = 2.0 * p;
                let r = x - center;
                if r == 0.0 {
                    // smooth only when q is a nonnegative integer
                    return if (q - order as f64).abs() < 1e-12 {
                        (1..=order).map(|m| m as f64).product()
                    } else {
                        0.0
                    };
                }
                let falling: f64 = (0..order).map(|m| q - m as f64).product();
                falling * r.abs().powf(q - order as f64) * r.signum().powi(order as i32)
            }
            _ => finite_difference(|t| self.eval(t), x, order),
        }
    }

    pub fn sample(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

fn finite_difference(f: impl Fn(f64) -> f64, x: f64, order: usize) -> f64 {
    let h = if order <= 2 { 1e-3 } else { 1e-2 } * x.abs().max(1.0);
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        4 => {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / (h * h * h * h)
        }
        _ => f64::NAN,
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileRepr {
    Number(f64),
    Preset(String),
    Table { x: Vec<f64>, y: Vec<f64> },
    Tagged(TaggedProfile),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TaggedProfile {
    Constant { value: f64 },
    Power { p: f64, #[serde(default)] center: f64 },
    Kusuoka { kappa: f64, #[serde(default)] center: f64 },
    Sine { amplitude: f64, frequency: f64 },
    Polynomial { coeffs: Vec<f64> },
    Quotient { num: Box<Profile>, den: Box<Profile> },
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ProfileRepr::deserialize(deserializer)?;
        let profile = match repr {
            ProfileRepr::Number(value) => Profile::Constant { value },
            ProfileRepr::Preset(name) => return Profile::parse_preset(&name).map_err(serde::de::Error::custom),
            ProfileRepr::Table { x, y } => Profile::Table { x, y },
            ProfileRepr::Tagged(t) => match t {
                TaggedProfile::Constant { value } => Profile::Constant { value },
                TaggedProfile::Power { p, center } => Profile::Power { p, center },
                TaggedProfile::Kusuoka { kappa, center } => Profile::Kusuoka { kappa, center },
                TaggedProfile::Sine { amplitude, frequency } => Profile::Sine { amplitude, frequency },
                TaggedProfile::Polynomial { coeffs } => Profile::Polynomial { coeffs },
                TaggedProfile::Quotient { num, den } => Profile::Quotient { num, den },
            },
        };
        profile.validate().map_err(serde::de::Error::custom)?;
        Ok(profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        assert_eq!(Profile::parse_preset("constant").unwrap(), Profile::constant(1.0));
        assert_eq!(Profile::parse_preset("constant(2.5)").unwrap(), Profile::constant(2.5));
        assert_eq!(Profile::parse_preset(" kusuoka(0.5) ").unwrap(), Profile::kusuoka(0.5));
        assert_eq!(Profile::parse_preset("power(1)").unwrap(), Profile::power(1.0));
        assert!(Profile::parse_preset("kusuoka").is_err());
        assert!(Profile::parse_preset("kusuoka(1.5)").is_err());
        assert!(Profile::parse_preset("bogus(1)").is_err());
    }

    #[test]
    fn json_forms() {
        let p: Profile = serde_json::from_str("3.0").unwrap();
        assert_eq!(p, Profile::constant(3.0));
        let p: Profile = serde_json::from_str("\"power(2)\"").unwrap();
        assert_eq!(p.eval(2.0), 16.0);
        let p: Profile = serde_json::from_str(r#"{"x":[0,1],"y":[0,2]}"#).unwrap();
        assert_eq!(p.eval(0.25), 0.5);
        let p: Profile = serde_json::from_str(r#"{"kind":"sine","amplitude":2,"frequency":1}"#).unwrap();
        assert!((p.eval(std::f64::consts::FRAC_PI_2) - 2.0).abs() < 1e-15);
        let round: Profile = serde_json::from_str(&serde_json::to_string(&Profile::kusuoka(0.5)).unwrap()).unwrap();
        assert_eq!(round, Profile::kusuoka(0.5));
    }

    #[test]
    fn kusuoka_is_continuous_at_zero() {
        let k = Profile::kusuoka(0.5);
        assert_eq!(k.eval(0.0), 0.0);
        assert!(k.eval(1e-4) < 1e-40);
        assert!((k.eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        // vanishes faster than any polynomial
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&y: &f64| k.eval(y) / y.powi(8)).collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2]);
        assert!(k.eval(1e-6) < 1e-48);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let cases = [
            Profile::sine(1.5, 2.0),
            Profile::Polynomial { coeffs: vec![1.0, -2.0, 0.5, 0.25] },
            Profile::power(1.5),
        ];
        for p in &cases {
            for order in 1..=3 {
                let exact = p.derivative(0.7, order);
                let fd = finite_difference(|t| p.eval(t), 0.7, order);
                assert!((exact - fd).abs() < 1e-3 * (1.0 + exact.abs()), "{p:?} order {order}: {exact} vs {fd}");
            }
        }
    }
}
