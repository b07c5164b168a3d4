//! The sample pool: units with hidden true labels, model scores, and
//! annotation state.
//!
//! True labels stay private until a unit is "annotated" through
//! [`SamplePool::reveal_label`]; query strategies only ever see scores and
//! labeled flags. Scores are refreshed wholesale each round via
//! [`SamplePool::set_scores`].

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Opaque unit identifier; stable for the lifetime of a pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitId(pub u32);

impl UnitId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// Read-only view of one unit.
#[derive(Debug, Clone, Copy)]
pub struct UnitView<'a, F> {
    pub id: UnitId,
    /// Probability vector on the K-simplex (current model output).
    pub score: &'a [F],
    pub labeled: bool,
    /// Round at which the unit was first annotated, if any.
    pub label_round: Option<u32>,
}

/// Population of units under study.
///
/// Scores are stored row-major (`n × k`). Labels are hidden: they can only be
/// read back after annotation, except through [`SamplePool::true_label`],
/// which exists for simulation oracles and census checks.
#[derive(Debug, Clone)]
pub struct SamplePool<F> {
    n_classes: usize,
    scores: Vec<F>,
    true_labels: Vec<u16>,
    label_rounds: Vec<Option<u32>>,
}

impl<F: Real> SamplePool<F> {
    /// Build a pool from hidden labels, with uniform initial scores.
    pub fn from_labels(true_labels: Vec<u16>, n_classes: usize) -> Result<Self> {
        if true_labels.is_empty() {
            return Err(Error::EmptyPool);
        }
        if n_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        if true_labels.len() > u32::MAX as usize {
            return Err(Error::invalid("pool size exceeds u32 id space"));
        }
        if let Some(bad) = true_labels.iter().find(|&&l| (l as usize) >= n_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        let n = true_labels.len();
        let uniform = F::one() / F::from_count(n_classes);
        Ok(SamplePool {
            n_classes,
            scores: vec![uniform; n * n_classes],
            true_labels,
            label_rounds: vec![None; n],
        })
    }

    /// Build a pool with explicit initial scores (validated).
    pub fn with_scores(true_labels: Vec<u16>, n_classes: usize, scores: Vec<F>) -> Result<Self> {
        let mut pool = Self::from_labels(true_labels, n_classes)?;
        pool.set_scores(scores)?;
        Ok(pool)
    }

    pub fn n(&self) -> usize {
        self.true_labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.n_classes
    }

    pub fn ids(&self) -> impl Iterator<Item = UnitId> + '_ {
        (0..self.n() as u32).map(UnitId)
    }

    pub fn unit(&self, id: UnitId) -> UnitView<'_, F> {
        let i = id.index();
        UnitView {
            id,
            score: self.score(id),
            labeled: self.label_rounds[i].is_some(),
            label_round: self.label_rounds[i],
        }
    }

    pub fn units(&self) -> impl Iterator<Item = UnitView<'_, F>> + '_ {
        self.ids().map(move |id| self.unit(id))
    }

    pub fn score(&self, id: UnitId) -> &[F] {
        let i = id.index();
        &self.scores[i * self.n_classes..(i + 1) * self.n_classes]
    }

    /// Replace all scores (`n × k`, row-major). Each row must be a simplex
    /// vector: components in [0, 1], summing to 1 within 1e-9.
    pub fn set_scores(&mut self, scores: Vec<F>) -> Result<()> {
        if scores.len() != self.n() * self.n_classes {
            return Err(Error::mismatch(format!(
                "expected {} score entries, got {}",
                self.n() * self.n_classes,
                scores.len()
            )));
        }
        let tol = simplex_tolerance::<F>(self.n_classes);
        for (i, row) in scores.chunks_exact(self.n_classes).enumerate() {
            validate_simplex(row, tol)
                .map_err(|e| Error::invalid(format!("unit {i} score: {e}")))?;
        }
        self.scores = scores;
        Ok(())
    }

    pub fn is_labeled(&self, id: UnitId) -> bool {
        self.label_rounds[id.index()].is_some()
    }

    pub fn label_round(&self, id: UnitId) -> Option<u32> {
        self.label_rounds[id.index()]
    }

    /// Annotated label, if the unit has been revealed.
    pub fn label(&self, id: UnitId) -> Option<usize> {
        self.label_rounds[id.index()].map(|_| self.true_labels[id.index()] as usize)
    }

    /// Annotate a unit: marks it labeled at `round` (first annotation wins)
    /// and returns its label.
    pub fn reveal_label(&mut self, id: UnitId, round: u32) -> usize {
        let i = id.index();
        if self.label_rounds[i].is_none() {
            self.label_rounds[i] = Some(round);
        }
        self.true_labels[i] as usize
    }

    /// Hidden label, bypassing annotation bookkeeping. For simulation
    /// oracles and census checks only — never consulted by query strategies.
    pub fn true_label(&self, id: UnitId) -> usize {
        self.true_labels[id.index()] as usize
    }

    pub fn labeled_count(&self) -> usize {
        self.label_rounds.iter().filter(|r| r.is_some()).count()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.n() - self.labeled_count()
    }

    pub fn labeled_ids(&self) -> Vec<UnitId> {
        self.ids().filter(|&id| self.is_labeled(id)).collect()
    }

    pub fn unlabeled_ids(&self) -> Vec<UnitId> {
        self.ids().filter(|&id| !self.is_labeled(id)).collect()
    }
}

fn simplex_tolerance<F: Real>(k: usize) -> F {
    let base = F::from_f64(1e-9);
    let eps = F::epsilon() * F::from_count(4 * k);
    base.max(eps)
}

fn validate_simplex<F: Real>(row: &[F], tol: F) -> std::result::Result<(), String> {
    let mut sum = F::zero();
    for &p in row {
        if !(p >= F::zero() && p <= F::one()) {
            return Err(format!("component {:?} outside [0, 1]", p));
        }
        sum += p;
    }
    if (sum - F::one()).abs() > tol {
        return Err(format!("components sum to {:?}, not 1", sum));
    }
    Ok(())
}

/// Validated set of positive class indices: nonempty, proper subset of
/// `{0..K-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveSet {
    classes: Vec<usize>,
    n_classes: usize,
}

impl PositiveSet {
    pub fn new(classes: impl IntoIterator<Item = usize>, n_classes: usize) -> Result<Self> {
        let mut classes: Vec<usize> = classes.into_iter().collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.is_empty() {
            return Err(Error::invalid("positive set is empty"));
        }
        if let Some(&bad) = classes.iter().find(|&&c| c >= n_classes) {
            return Err(Error::invalid(format!(
                "positive class {bad} out of range for {n_classes} classes"
            )));
        }
        if classes.len() >= n_classes {
            return Err(Error::invalid(
                "positive set covers every class; need a proper subset",
            ));
        }
        Ok(PositiveSet { classes, n_classes })
    }

    /// Positive classes in ascending order.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Number of positive classes (M).
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn contains(&self, class: usize) -> bool {
        self.classes.binary_search(&class).is_ok()
    }
}
