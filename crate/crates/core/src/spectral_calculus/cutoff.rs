use serde::{Deserialize, Serialize};
use std::f64::consts::E;

fn sigma(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth even cutoff: 1 on `[-1, 1]`, 0 outside `(-e, e)`, nonincreasing in `|t|`.
pub fn phi(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= E {
        0.0
    } else {
        let u = (E - a) / (E - 1.0);
        let p = sigma(u);
        p / (p + sigma(1.0 - u))
    }
}

/// `phi(lambda e^{-j})`, evaluated the same way for every `j` so that band
/// sums telescope exactly.
fn phi_scaled(lambda: f64, j: i64) -> f64 {
    phi(lambda * (-(j as f64)).exp())
}

/// Band function `psi_0 = phi`, `psi_j(l) = phi(l e^{-j}) - phi(l e^{-j+1})`.
pub fn psi(j: usize, lambda: f64) -> f64 {
    let j = j as i64;
    if j == 0 {
        phi(lambda)
    } else {
        phi_scaled(lambda, j) - phi_scaled(lambda, j - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub j_max: usize,
}

impl CutoffFamily {
    /// Bands `0..=j_max` with `j_max` the largest index satisfying
    /// `e^{j_max - 1} <= lambda_max`.
    pub fn for_spectrum(lambda_max: f64) -> Self {
        let j_max = if lambda_max >= 1.0 { lambda_max.ln().floor() as usize + 1 } else { 0 };
        CutoffFamily { j_max }
    }

    pub fn bands(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.j_max
    }

    pub fn psi(&self, j: usize, lambda: f64) -> f64 {
        if j > self.j_max {
            0.0
        } else {
            psi(j, lambda)
        }
    }

    /// Closed interval outside of which `psi_j` vanishes.
    pub fn support(j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, E)
        } else {
            (((j as f64) - 1.0).exp(), ((j as f64) + 1.0).exp())
        }
    }

    pub fn partition_sum(&self, lambda: f64) -> f64 {
        self.bands().map(|j| psi(j, lambda)).sum()
    }

    pub fn square_sum(&self, lambda: f64) -> f64 {
        self.bands().map(|j| psi(j, lambda).powi(2)).sum()
    }

    /// Bands with `psi_j(lambda) > 0`.
    pub fn active(&self, lambda: f64) -> Vec<usize> {
        self.bands().filter(|&j| psi(j, lambda) > 0.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_shape() {
        assert_eq!(phi(0.0), 1.0);
        assert_eq!(phi(1.0), 1.0);
        assert_eq!(phi(-1.0), 1.0);
        assert_eq!(phi(E), 0.0);
        assert_eq!(phi(3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let t = 1.0 + (E - 1.0) * i as f64 / 1000.0;
            let v = phi(t);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            assert_eq!(v, phi(-t));
            prev = v;
        }
        // symmetric transition: midpoint value 1/2
        assert!((phi(0.5 * (1.0 + E)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_is_one_at_band_centres() {
        let fam = CutoffFamily::for_spectrum(1e5);
        for j in 0..=fam.j_max {
            let lambda = (j as f64).exp();
            for k in fam.bands() {
                let expect = if k == j { 1.0 } else { 0.0 };
                assert!((fam.psi(k, lambda) - expect).abs() < 1e-12, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn j_max_rule() {
        assert_eq!(CutoffFamily::for_spectrum(1.0).j_max, 1);
        assert_eq!(CutoffFamily::for_spectrum(2.0).j_max, 1);
        assert_eq!(CutoffFamily::for_spectrum(E * E + 0.1).j_max, 3);
        let lam = 1234.5;
        let j = CutoffFamily::for_spectrum(lam).j_max;
        assert!(((j - 1) as f64).exp() <= lam && (j as f64).exp() > lam);
    }
}
