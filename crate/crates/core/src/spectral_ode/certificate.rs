use serde::Serialize;

use super::{growth_rates, rate_points, spectral_norm_2x2, SpectralOdeSolution};
use crate::{japanese_bracket, Error, Result};

const SLACK: f64 = 1e-10;
const BELL: [f64; 5] = [1.0, 1.0, 2.0, 5.0, 15.0];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub lambda: f64,
    /// `M = sup_x |Phi_s(x)|_2`.
    #[serde(rename = "M")]
    pub rate: f64,
    /// `sup_x |Phi(x)|_2` for the unscaled system.
    pub raw_rate: f64,
    /// `M / <lambda>^{1/2}`.
    #[serde(rename = "C_x0")]
    pub c_x0: f64,
    /// `<lambda> = sqrt(e^2 + lambda^2)`.
    pub bracket: f64,
    pub scale: f64,
    /// `max |(v, v'/s)| e^{-M|x - x0|}`.
    pub worst_ratio: f64,
    /// `max |v| e^{-M|x - x0|}`.
    pub worst_value_ratio: f64,
    /// `max |v'| / (s e^{M|x - x0|})`.
    pub worst_derivative_ratio: f64,
    /// `max |(v, v')| e^{-raw_rate |x - x0|}`.
    pub worst_raw_ratio: f64,
    pub violations: usize,
    pub certified: bool,
}

/// Checks the growth bounds at every sample of `sol`.
pub fn certify_growth(sol: &SpectralOdeSolution) -> GrowthCertificate {
    let (rate, raw_rate) = growth_rates(&sol.bundle, sol.lambda, sol.radius, &sol.x);
    let bracket = japanese_bracket(sol.lambda);
    let s = sol.scale;
    let mut cert = GrowthCertificate {
        lambda: sol.lambda,
        rate,
        raw_rate,
        c_x0: rate / bracket.sqrt(),
        bracket,
        scale: s,
        ..Default::default()
    };
    let limit = (1.0 + SLACK).ln();
    for i in 0..sol.x.len() {
        let t = sol.offset(i);
        let damp = sol.damping * t;
        let logs = [
            sol.log_energy_norm(i) - rate * t,
            sol.v[i].abs().ln() + damp - rate * t,
            sol.dv[i].abs().ln() - s.ln() + damp - rate * t,
            sol.log_state_norm(i) - raw_rate * t,
        ];
        if logs.iter().any(|l| l.is_nan()) {
            cert.violations += 1;
            continue;
        }
        if logs.iter().any(|&l| l > limit) {
            cert.violations += 1;
        }
        cert.worst_ratio = cert.worst_ratio.max(logs[0].exp());
        cert.worst_value_ratio = cert.worst_value_ratio.max(logs[1].exp());
        cert.worst_derivative_ratio = cert.worst_derivative_ratio.max(logs[2].exp());
        cert.worst_raw_ratio = cert.worst_raw_ratio.max(logs[3].exp());
    }
    cert.certified = sol.complete && cert.violations == 0;
    cert
}

impl GrowthCertificate {
    pub fn into_result(self) -> Result<Self> {
        if self.certified {
            Ok(self)
        } else {
            let worst = self.worst_ratio.max(self.worst_raw_ratio).max(self.worst_derivative_ratio);
            Err(Error::CertificateFailed { lambda: self.lambda, worst_ratio: worst })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CascadeResult {
    pub order: usize,
    /// `d^k v / dx^k` at the samples (same damping as the solution).
    pub values: Vec<f64>,
    /// `C(k) (1 + M_k)^k e^{M|x - x0|}` (same damping as the solution).
    pub bound: Vec<f64>,
    /// `C(k)`.
    pub constant: f64,
    /// `M_k = max_{i < k} sup |Phi_s^{(i)}|`.
    pub rate: f64,
    pub worst_ratio: f64,
    pub holds: bool,
}

/// `d^k v/dx^k` from `v'' = a1 v' + a v` differentiated `k - 2` times, with
/// the bound `C(k)(1 + M_k)^k e^{M|x - x0|}` on `|(v^{(k)}, v^{(k+1)}/s)|`.
pub fn derivative_cascade(sol: &SpectralOdeSolution, k: usize) -> Result<CascadeResult> {
    if k > 4 {
        return Err(Error::OutOfRange(format!("derivative order {k} exceeds 4")));
    }
    let b = &sol.bundle;
    let lambda = sol.lambda;
    let s = sol.scale;
    // derivatives of the potential a = a0 + g lambda and of a1
    let coeff = |x: f64, i: usize| -> (f64, f64) {
        (b.a0.derivative(x, i) + lambda * b.g.derivative(x, i), b.a1.derivative(x, i))
    };
    let mut rate = sol.certificate.rate;
    for i in 1..k {
        for &x in &rate_points(sol.x0, sol.radius, &sol.x) {
            let (a, a1) = coeff(x, i);
            rate = rate.max(spectral_norm_2x2(0.0, 0.0, a / s, a1));
        }
    }
    let constant = BELL[k];
    let mut values = Vec::with_capacity(sol.x.len());
    let mut bound = Vec::with_capacity(sol.x.len());
    let mut worst: f64 = 0.0;
    for i in 0..sol.x.len() {
        let x = sol.x[i];
        let mut d = vec![sol.v[i], sol.dv[i]];
        let coeffs: Vec<(f64, f64)> = (0..k).map(|j| coeff(x, j)).collect();
        for m in 0..k {
            // v^{(m+2)} = sum_j C(m, j) [a1^{(j)} v^{(m-j+1)} + a^{(j)} v^{(m-j)}]
            let mut acc = 0.0;
            let mut binom = 1.0;
            for j in 0..=m {
                let (a, a1) = coeffs[j];
                acc += binom * (a1 * d[m - j + 1] + a * d[m - j]);
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
            d.push(acc);
        }
        let t = sol.offset(i);
        let log_bound = constant.ln() + k as f64 * (1.0 + rate).ln() + (sol.certificate.rate - sol.damping) * t;
        let log_norm = d[k].hypot(d[k + 1] / s).ln();
        worst = worst.max((log_norm - log_bound).exp());
        values.push(d[k]);
        bound.push(log_bound.exp());
    }
    Ok(CascadeResult { order: k, values, bound, constant, rate, worst_ratio: worst, holds: worst <= 1.0 + SLACK })
}
