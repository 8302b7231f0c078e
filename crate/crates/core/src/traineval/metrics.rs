use std::collections::BTreeMap;

use crate::dataset::Dialect;

use super::TrainError;

/// `counts[gold * k + pred]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self { k, counts: vec![0; k * k] }
    }

    pub fn from_pairs(gold: &[usize], pred: &[usize], k: usize) -> Result<Self, TrainError> {
        if gold.len() != pred.len() {
            return Err(TrainError::ShapeMismatch(format!("{} gold labels, {} predictions", gold.len(), pred.len())));
        }
        let mut m = Self::new(k);
        for (&g, &p) in gold.iter().zip(pred) {
            m.add(g, p)?;
        }
        Ok(m)
    }

    pub fn add(&mut self, gold: usize, pred: usize) -> Result<(), TrainError> {
        if gold >= self.k || pred >= self.k {
            return Err(TrainError::ShapeMismatch(format!("label pair ({gold}, {pred}) outside {} classes", self.k)));
        }
        self.counts[gold * self.k + pred] += 1;
        Ok(())
    }

    /// Sums counts; used to combine results computed over disjoint parts.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), TrainError> {
        if other.k != self.k {
            return Err(TrainError::ShapeMismatch(format!("merging {}-class and {}-class matrices", self.k, other.k)));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> usize {
        self.counts[gold * self.k + pred]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of this class.
    pub support: usize,
    /// Class appears in neither gold labels nor predictions.
    pub absent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(m: &ConfusionMatrix) -> Result<Self, TrainError> {
        let total = m.total();
        if total == 0 {
            return Err(TrainError::EmptyDataset);
        }
        let k = m.n_classes();
        let classes: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = m.get(c, c);
                let support: usize = (0..k).map(|p| m.get(c, p)).sum();
                let predicted: usize = (0..k).map(|g| m.get(g, c)).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
                ClassMetrics { precision, recall, f1, support, absent: support == 0 && predicted == 0 }
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / k as f64;
        Ok(Self {
            macro_precision: mean(|c| c.precision),
            macro_recall: mean(|c| c.recall),
            macro_f1: mean(|c| c.f1),
            accuracy: ratio((0..k).map(|c| m.get(c, c)).sum(), total),
            total,
            classes,
        })
    }

    pub fn from_predictions(gold: &[usize], pred: &[usize], k: usize) -> Result<Self, TrainError> {
        Self::from_confusion(&ConfusionMatrix::from_pairs(gold, pred, k)?)
    }
}

/// Overall report plus one per dialect present in the data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedReport {
    pub overall: MetricsReport,
    pub by_dialect: BTreeMap<Dialect, MetricsReport>,
}

impl GroupedReport {
    pub fn from_predictions(gold: &[usize], pred: &[usize], dialects: &[Dialect], k: usize, group: bool) -> Result<Self, TrainError> {
        let overall = MetricsReport::from_predictions(gold, pred, k)?;
        let mut by_dialect = BTreeMap::new();
        if group {
            let mut matrices: BTreeMap<Dialect, ConfusionMatrix> = BTreeMap::new();
            for ((&g, &p), &d) in gold.iter().zip(pred).zip(dialects) {
                matrices.entry(d).or_insert_with(|| ConfusionMatrix::new(k)).add(g, p)?;
            }
            for (d, m) in matrices {
                by_dialect.insert(d, MetricsReport::from_confusion(&m)?);
            }
        }
        Ok(Self { overall, by_dialect })
    }
}

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_class_example() {
        let r = MetricsReport::from_predictions(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        let a = r.classes[0];
        let b = r.classes[1];
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.recall, 1.0);
        assert!((b.f1 - 0.8).abs() < 1e-15);
        assert!((r.macro_f1 - 11.0 / 15.0).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn perfect_and_absent() {
        let r = MetricsReport::from_predictions(&[0, 1, 2], &[0, 1, 2], 4).unwrap();
        for c in &r.classes[..3] {
            assert_eq!((c.precision, c.recall, c.f1, c.absent), (1.0, 1.0, 1.0, false));
        }
        let none = r.classes[3];
        assert_eq!((none.precision, none.recall, none.f1, none.support, none.absent), (0.0, 0.0, 0.0, 0, true));
        assert_eq!(r.macro_f1, 0.75);

        let perfect = MetricsReport::from_predictions(&[0, 1, 2, 3], &[0, 1, 2, 3], 4).unwrap();
        assert_eq!((perfect.macro_precision, perfect.macro_recall, perfect.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(MetricsReport::from_predictions(&[], &[], 4), Err(TrainError::EmptyDataset)));
        assert!(MetricsReport::from_predictions(&[0], &[4], 4).is_err());
        assert!(MetricsReport::from_predictions(&[0], &[], 4).is_err());
    }

    #[test]
    fn merge_equals_whole() {
        let gold = [0, 1, 2, 3, 1, 1, 0];
        let pred = [0, 2, 2, 3, 1, 0, 0];
        let mut a = ConfusionMatrix::from_pairs(&gold[..3], &pred[..3], 4).unwrap();
        a.merge(&ConfusionMatrix::from_pairs(&gold[3..], &pred[3..], 4).unwrap()).unwrap();
        assert_eq!(a, ConfusionMatrix::from_pairs(&gold, &pred, 4).unwrap());
    }

    #[test]
    fn grouping() {
        let d = [Dialect::Es, Dialect::Mx, Dialect::Es];
        let r = GroupedReport::from_predictions(&[0, 1, 1], &[0, 1, 0], &d, 4, true).unwrap();
        assert_eq!(r.by_dialect.len(), 2);
        assert_eq!(r.by_dialect[&Dialect::Es].total, 2);
        assert_eq!(r.by_dialect[&Dialect::Mx].accuracy, 1.0);
        let flat = GroupedReport::from_predictions(&[0, 1, 1], &[0, 1, 0], &d, 4, false).unwrap();
        assert!(flat.by_dialect.is_empty());
    }

    #[test]
    fn argmax_ties() {
        assert_eq!(argmax(&[0.25; 4]), 0);
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.3, 0.4]), 3);
    }
}
