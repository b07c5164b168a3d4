//! Native logistic-regression trainer for the live active-learning loop.
//!
//! Plain mini-batch gradient descent (sum-of-batch gradients, step-decayed
//! learning rate). Binary problems use a single weight vector; K ≥ 3 uses
//! one-vs-rest sigmoids renormalized onto the simplex. A labeled set with
//! fewer than two classes yields a degenerate constant-uniform model — the
//! cold-start fallback that collapses NSRS to proportional allocation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticHyper<F> {
    pub learning_rate: F,
    pub epochs: usize,
    pub l2: F,
    pub batch_size: usize,
    /// Halve the learning rate every this many epochs.
    pub decay_every: usize,
}

impl<F: Real> Default for LogisticHyper<F> {
    fn default() -> Self {
        LogisticHyper {
            learning_rate: F::from_f64(1e-3),
            epochs: 60,
            l2: F::from_f64(1e-4),
            batch_size: 100,
            decay_every: 25,
        }
    }
}

/// Bookkeeping from a training run.
#[derive(Debug, Clone)]
pub struct TrainingMeta<F> {
    pub epochs_run: usize,
    pub final_loss: F,
    /// Full-data loss after each epoch (summed over heads for K ≥ 3).
    pub loss_history: Vec<F>,
    /// Set when the labeled set had < 2 classes and the model is constant.
    pub degenerate: bool,
}

/// Linear scorer: per-class weight vectors of length d+1 (intercept last).
#[derive(Debug, Clone)]
pub struct LinearModel<F> {
    weights: Vec<Vec<F>>,
    n_classes: usize,
    n_features: usize,
    meta: TrainingMeta<F>,
}

impl<F: Real> LinearModel<F> {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Weight vectors: one for binary problems, K for one-vs-rest.
    pub fn weights(&self) -> &[Vec<F>] {
        &self.weights
    }

    pub fn meta(&self) -> &TrainingMeta<F> {
        &self.meta
    }

    /// Score every unit (rows of `features`, flat n × d). Returns flat
    /// n × K simplex rows.
    pub fn predict_scores(&self, features: &[F]) -> Result<Vec<F>> {
        if self.n_features == 0 || features.len() % self.n_features != 0 {
            return Err(Error::mismatch(format!(
                "feature buffer of {} entries is not a multiple of d = {}",
                features.len(),
                self.n_features
            )));
        }
        let n = features.len() / self.n_features;
        let k = self.n_classes;
        let mut out = Vec::with_capacity(n * k);
        if self.meta.degenerate {
            let uniform = F::one() / F::from_count(k);
            out.resize(n * k, uniform);
            return Ok(out);
        }
        for row in features.chunks_exact(self.n_features) {
            if k == 2 {
                let p = sigmoid(dot(&self.weights[0], row));
                out.push(F::one() - p);
                out.push(p);
            } else {
                let mut probs: Vec<F> = self
                    .weights
                    .iter()
                    .map(|w| sigmoid(dot(w, row)))
                    .collect();
                let sum = probs.iter().fold(F::zero(), |a, &b| a + b);
                if sum > F::zero() {
                    probs.iter_mut().for_each(|p| *p = *p / sum);
                } else {
                    probs.fill(F::one() / F::from_count(k));
                }
                out.extend(probs);
            }
        }
        Ok(out)
    }
}

/// Fit a logistic model on labeled rows. Deterministic given data order.
pub fn train_logistic<F: Real>(
    features: &[F],
    n_features: usize,
    labels: &[usize],
    n_classes: usize,
    hyper: &LogisticHyper<F>,
) -> Result<LinearModel<F>> {
    if n_features == 0 {
        return Err(Error::invalid("need at least one feature dimension"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if features.len() != labels.len() * n_features {
        return Err(Error::mismatch(format!(
            "{} feature entries for {} labels at d = {n_features}",
            features.len(),
            labels.len()
        )));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::invalid(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }

    let mut seen = vec![false; n_classes];
    for &l in labels {
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Ok(LinearModel {
            weights: vec![vec![F::zero(); n_features + 1]],
            n_classes,
            n_features,
            meta: TrainingMeta {
                epochs_run: 0,
                final_loss: F::nan(),
                loss_history: Vec::new(),
                degenerate: true,
            },
        });
    }

    let heads = if n_classes == 2 { 1 } else { n_classes };
    let mut weights = Vec::with_capacity(heads);
    let mut loss_history = vec![F::zero(); hyper.epochs];
    for head in 0..heads {
        let target_class = if n_classes == 2 { 1 } else { head };
        let targets: Vec<F> = labels
            .iter()
            .map(|&l| if l == target_class { F::one() } else { F::zero() })
            .collect();
        let (w, history) = fit_binary(features, n_features, &targets, hyper);
        weights.push(w);
        for (acc, loss) in loss_history.iter_mut().zip(&history) {
            *acc += *loss;
        }
    }
    let final_loss = loss_history.last().copied().unwrap_or_else(F::nan);

    Ok(LinearModel {
        weights,
        n_classes,
        n_features,
        meta: TrainingMeta {
            epochs_run: hyper.epochs,
            final_loss,
            loss_history,
            degenerate: false,
        },
    })
}

fn fit_binary<F: Real>(
    features: &[F],
    d: usize,
    targets: &[F],
    hyper: &LogisticHyper<F>,
) -> (Vec<F>, Vec<F>) {
    let n = targets.len();
    let mut w = vec![F::zero(); d + 1];
    let mut grad = vec![F::zero(); d + 1];
    let mut history = Vec::with_capacity(hyper.epochs);
    let batch = hyper.batch_size.max(1);
    let half = F::from_f64(0.5);
    for epoch in 0..hyper.epochs {
        let decay_steps = if hyper.decay_every == 0 {
            0
        } else {
            epoch / hyper.decay_every
        };
        let lr = hyper.learning_rate * half.powi(decay_steps as i32);
        let mut start = 0;
        while start < n {
            let end = (start + batch).min(n);
            grad.fill(F::zero());
            accumulate_gradient(
                &w,
                &features[start * d..end * d],
                d,
                &targets[start..end],
                hyper.l2,
                &mut grad,
            );
            for j in 0..=d {
                w[j] = w[j] - lr * grad[j];
            }
            start = end;
        }
        history.push(log_loss(&w, features, d, targets, hyper.l2));
    }
    (w, history)
}

/// Sum-of-batch gradient of the L2-regularized log loss (intercept
/// unregularized), added into `grad`.
pub(crate) fn accumulate_gradient<F: Real>(
    w: &[F],
    features: &[F],
    d: usize,
    targets: &[F],
    l2: F,
    grad: &mut [F],
) {
    for (row, &y) in features.chunks_exact(d).zip(targets) {
        let err = sigmoid(dot(w, row)) - y;
        for j in 0..d {
            grad[j] += err * row[j];
        }
        grad[d] += err;
    }
    for j in 0..d {
        grad[j] += l2 * w[j];
    }
}

/// Summed L2-regularized log loss over the given rows.
pub(crate) fn log_loss<F: Real>(w: &[F], features: &[F], d: usize, targets: &[F], l2: F) -> F {
    let mut loss = F::zero();
    for (row, &y) in features.chunks_exact(d).zip(targets) {
        let z = dot(w, row);
        // ln(1 + e^-|z|) + max(z, 0) − y·z, numerically stable.
        let zmax = z.max(F::zero());
        loss += (-z.abs()).exp().ln_1p() + zmax - y * z;
    }
    let half = F::from_f64(0.5);
    let penalty = w[..d].iter().fold(F::zero(), |a, &x| a + x * x);
    loss + half * l2 * penalty
}

fn dot<F: Real>(w: &[F], row: &[F]) -> F {
    let mut z = w[row.len()]; // intercept
    for (j, &x) in row.iter().enumerate() {
        z += w[j] * x;
    }
    z
}

fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}
