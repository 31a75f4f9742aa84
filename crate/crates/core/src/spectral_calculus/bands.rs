use rayon::prelude::*;
use serde::Serialize;

use super::{CutoffFamily, SpectralDecomposition};

/// Operator-adapted Littlewood-Paley projections `P_j = psi_j(B)`.
#[derive(Clone, Debug)]
pub struct BandProjectionSet<'a> {
    pub decomposition: &'a SpectralDecomposition,
    pub cutoffs: CutoffFamily,
    /// `weights[j][k] = psi_j(lambda_k)`.
    pub weights: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandInfo {
    pub j: usize,
    /// Eigenvalue range `[lambda_lo, lambda_hi]` where `psi_j > 0`, if any.
    pub support: Option<[f64; 2]>,
    /// Number of eigenvalues in the support.
    pub count: usize,
    /// `|P_j u|^2`.
    pub mass: f64,
}

impl<'a> BandProjectionSet<'a> {
    pub fn new(dec: &'a SpectralDecomposition) -> Self {
        let cutoffs = CutoffFamily::for_spectrum(dec.lambda_max());
        let weights =
            cutoffs.bands().map(|j| dec.eigenvalues.iter().map(|&l| cutoffs.psi(j, l)).collect()).collect();
        BandProjectionSet { decomposition: dec, cutoffs, weights }
    }

    pub fn j_max(&self) -> usize {
        self.cutoffs.j_max
    }

    pub fn band_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, j: usize) -> &[f64] {
        &self.weights[j]
    }

    /// Eigenvalue indices with `psi_j(lambda_k) > 0`.
    pub fn contributing(&self, j: usize) -> Vec<usize> {
        self.weights.get(j).map_or_else(Vec::new, |w| (0..w.len()).filter(|&k| w[k] > 0.0).collect())
    }

    pub fn project(&self, j: usize, u: &[f64]) -> Vec<f64> {
        self.decomposition.apply_weights(&self.weights[j], u)
    }

    pub fn project_all(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let c = self.decomposition.coefficients(u);
        self.weights
            .par_iter()
            .map(|w| {
                let cj: Vec<f64> = c.iter().zip(w).map(|(c, w)| c * w).collect();
                self.decomposition.synthesize(&cj)
            })
            .collect()
    }

    /// `|P_j u|^2` from spectral coefficients of `u`.
    pub fn mass(&self, j: usize, coefficients: &[f64]) -> f64 {
        coefficients.iter().zip(&self.weights[j]).map(|(c, w)| (c * w).powi(2)).sum()
    }

    pub fn masses(&self, u: &[f64]) -> Vec<f64> {
        let c = self.decomposition.coefficients(u);
        (0..self.band_count()).map(|j| self.mass(j, &c)).collect()
    }

    /// `max_k |sum_j psi_j(lambda_k) - 1|`.
    pub fn partition_error(&self) -> f64 {
        (0..self.decomposition.dim())
            .map(|k| (self.weights.iter().map(|w| w[k]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(min_k, max_k)` of `sum_j psi_j(lambda_k)^2`.
    pub fn square_sum_range(&self) -> (f64, f64) {
        (0..self.decomposition.dim())
            .map(|k| self.weights.iter().map(|w| w[k] * w[k]).sum::<f64>())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// `max |<P_j u, P_j' v>|` over `|j - j'| > 1`.
    pub fn orthogonality_defect(&self, u: &[f64], v: &[f64]) -> f64 {
        let pu = self.project_all(u);
        let pv = self.project_all(v);
        let mut worst: f64 = 0.0;
        for (j, a) in pu.iter().enumerate() {
            for (jj, b) in pv.iter().enumerate() {
                if j.abs_diff(jj) > 1 {
                    worst = worst.max(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs());
                }
            }
        }
        worst
    }

    pub fn diagnostics(&self, u: &[f64]) -> Vec<BandInfo> {
        let masses = self.masses(u);
        let lambdas = &self.decomposition.eigenvalues;
        (0..self.band_count())
            .map(|j| {
                let ks = self.contributing(j);
                let support = match (ks.first(), ks.last()) {
                    (Some(&a), Some(&b)) => Some([lambdas[a], lambdas[b]]),
                    _ => None,
                };
                BandInfo { j, support, count: ks.len(), mass: masses[j] }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::decompose;
    use super::*;
    use crate::grid_operator::{build_divergence_from_profiles, Grid1D, Profile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dec(n: usize) -> SpectralDecomposition {
        let g = Grid1D::dirichlet(n, -1.0, 1.0).unwrap();
        decompose(&build_divergence_from_profiles(&Profile::kusuoka(0.5), &Profile::constant(1.0), &g).unwrap())
            .unwrap()
    }

    #[test]
    fn partition_and_reconstruction() {
        let d = dec(258);
        let bands = BandProjectionSet::new(&d);
        assert!(bands.partition_error() < 1e-12);
        let (lo, hi) = bands.square_sum_range();
        assert!(lo >= 0.5 - 1e-12 && hi <= 1.0 + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..d.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let parts = bands.project_all(&u);
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = (0..u.len())
            .map(|i| (u[i] - parts.iter().map(|p| p[i]).sum::<f64>()).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10 * norm);
    }

    #[test]
    fn one_or_two_active_bands() {
        let d = dec(100);
        let bands = BandProjectionSet::new(&d);
        for (k, &l) in d.eigenvalues.iter().enumerate() {
            let active: Vec<usize> = (0..bands.band_count()).filter(|&j| bands.weights[j][k] > 0.0).collect();
            assert!(matches!(active.len(), 1 | 2), "lambda={l}: {active:?}");
            if active.len() == 2 {
                assert_eq!(active[1], active[0] + 1);
            }
            for &j in &active {
                let (a, b) = CutoffFamily::support(j);
                assert!(l >= a && l <= b);
            }
        }
    }

    #[test]
    fn diagnostics_cover_all_bands() {
        let d = dec(64);
        let bands = BandProjectionSet::new(&d);
        let info = bands.diagnostics(&vec![1.0; d.dim()]);
        assert_eq!(info.len(), bands.j_max() + 1);
        let total: f64 = info.iter().map(|b| b.mass).sum();
        assert!(total <= d.dim() as f64 * (1.0 + 1e-12));
        assert!(info.iter().map(|b| b.count).sum::<usize>() >= d.dim());
    }
}
