//! Synthetic oracle score model with a calibration knob.
//!
//! Stands in for "model quality": it distorts the true conditional class
//! probabilities by an exponent `gamma` (renormalized) and perturbs the
//! result with Gaussian noise in logit space (binary) or log space
//! (multiclass). `gamma = 1, sigma = 0` reproduces the true probabilities —
//! a perfectly calibrated scorer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScoreModel<F> {
    /// Standard deviation of the logit/log-space Gaussian perturbation.
    pub noise_sigma: F,
    /// Exponent applied to true probabilities before renormalization.
    pub miscalibration_gamma: F,
}

impl<F: Real> OracleScoreModel<F> {
    pub fn new(noise_sigma: F, miscalibration_gamma: F) -> Result<Self> {
        if !(noise_sigma >= F::zero()) {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        if !(miscalibration_gamma > F::zero()) {
            return Err(Error::invalid("miscalibration_gamma must be > 0"));
        }
        Ok(OracleScoreModel {
            noise_sigma,
            miscalibration_gamma,
        })
    }

    pub fn is_calibrated(&self) -> bool {
        self.noise_sigma == F::zero() && self.miscalibration_gamma == F::one()
    }

    /// Score every unit from its true conditional probabilities
    /// (`cond_probs` flat n × K). Noise is redrawn on every call, mirroring
    /// the round-to-round refresh of a live model.
    pub fn predict_scores<R: Rng + ?Sized>(
        &self,
        cond_probs: &[F],
        n_classes: usize,
        rng: &mut R,
    ) -> Result<Vec<F>> {
        if n_classes < 2 || cond_probs.len() % n_classes != 0 {
            return Err(Error::mismatch(format!(
                "conditional probability buffer of {} entries at K = {n_classes}",
                cond_probs.len()
            )));
        }
        if self.is_calibrated() {
            return Ok(cond_probs.to_vec());
        }
        let mut out = Vec::with_capacity(cond_probs.len());
        let mut noise = vec![F::zero(); if n_classes == 2 { 1 } else { n_classes }];
        for row in cond_probs.chunks_exact(n_classes) {
            for e in noise.iter_mut() {
                *e = if self.noise_sigma > F::zero() {
                    F::standard_normal(rng)
                } else {
                    F::zero()
                };
            }
            out.extend(self.distort_row(row, &noise));
        }
        Ok(out)
    }

    /// Distortion of a single probability row for a fixed noise draw.
    /// Binary rows take one noise component on the positive-class logit;
    /// K ≥ 3 rows take one per class in log space.
    pub fn distort_row(&self, row: &[F], noise: &[F]) -> Vec<F> {
        let gamma = self.miscalibration_gamma;
        let k = row.len();
        if k == 2 {
            let p = row[1];
            if p <= F::zero() || p >= F::one() {
                return vec![F::one() - p, p];
            }
            let pg = p.powf(gamma);
            let qg = (F::one() - p).powf(gamma);
            let mut logit = (pg / qg).ln();
            logit += self.noise_sigma * noise[0];
            let p2 = F::one() / (F::one() + (-logit).exp());
            return vec![F::one() - p2, p2];
        }
        let mut weights: Vec<F> = row.iter().map(|&q| q.powf(gamma)).collect();
        for (w, &e) in weights.iter_mut().zip(noise) {
            if *w > F::zero() {
                *w = (w.ln() + self.noise_sigma * e).exp();
            }
        }
        let sum = weights.iter().fold(F::zero(), |a, &b| a + b);
        if sum > F::zero() {
            weights.iter_mut().for_each(|w| *w = *w / sum);
        } else {
            weights.fill(F::one() / F::from_count(k));
        }
        weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn calibrated_oracle_returns_truth() {
        let oracle = OracleScoreModel::new(0.0f64, 1.0).unwrap();
        let q = vec![0.3, 0.7, 0.9, 0.1];
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let scores = oracle.predict_scores(&q, 2, &mut rng).unwrap();
        assert_eq!(scores, q);
    }

    #[test]
    fn gamma_fixes_the_symmetric_point() {
        let oracle = OracleScoreModel::new(0.0f64, 2.0).unwrap();
        let out = oracle.distort_row(&[0.5, 0.5], &[0.0]);
        assert!((out[1] - 0.5).abs() < 1e-12);
        // And sharpens an off-center score.
        let out = oracle.distort_row(&[0.3, 0.7], &[0.0]);
        assert!(out[1] > 0.7);
    }

    #[test]
    fn monotone_in_true_probability_for_fixed_noise() {
        let oracle = OracleScoreModel::new(0.8f64, 2.5).unwrap();
        let noise = [0.37];
        let mut last = -1.0f64;
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let s = oracle.distort_row(&[1.0 - p, p], &noise)[1];
            assert!(s >= last, "score dropped at p = {p}");
            last = s;
        }
    }

    #[test]
    fn degenerate_probabilities_stay_put() {
        let oracle = OracleScoreModel::new(1.0f64, 2.0).unwrap();
        assert_eq!(oracle.distort_row(&[1.0, 0.0], &[0.5]), vec![1.0, 0.0]);
        assert_eq!(oracle.distort_row(&[0.0, 1.0], &[0.5]), vec![0.0, 1.0]);
    }

    #[test]
    fn multiclass_rows_stay_on_the_simplex() {
        let oracle = OracleScoreModel::new(0.7f64, 1.5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let q = vec![0.2, 0.5, 0.3, 0.05, 0.05, 0.9];
        let scores = oracle.predict_scores(&q, 3, &mut rng).unwrap();
        for row in scores.chunks_exact(3) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(OracleScoreModel::new(-0.1f64, 1.0).is_err());
        assert!(OracleScoreModel::new(0.1f64, 0.0).is_err());
        let oracle = OracleScoreModel::new(0.0f64, 1.0).unwrap();
        assert!(oracle.predict_scores(&[0.5f64; 3], 2, &mut ChaCha12Rng::seed_from_u64(0)).is_err());
    }
}
