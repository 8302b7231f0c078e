//! Text and CSV renderings of corpus statistics, evaluation and ablation
//! results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dataset::{Dialect, TweetRecord};
use crate::traineval::{GroupedReport, Label, MetricsReport};

/// Label counts per dialect; the last column counts unlabeled records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelStats {
    pub by_dialect: BTreeMap<Dialect, [usize; Label::COUNT + 1]>,
}

impl LabelStats {
    pub fn from_records(records: &[TweetRecord]) -> Self {
        let mut by_dialect: BTreeMap<Dialect, [usize; Label::COUNT + 1]> = Dialect::ALL.into_iter().map(|d| (d, [0; Label::COUNT + 1])).collect();
        for r in records {
            let col = r.label.map_or(Label::COUNT, Label::index);
            by_dialect.get_mut(&r.dialect).expect("every dialect has a row")[col] += 1;
        }
        Self { by_dialect }
    }

    pub fn totals(&self) -> [usize; Label::COUNT + 1] {
        let mut t = [0; Label::COUNT + 1];
        for row in self.by_dialect.values() {
            for (a, b) in t.iter_mut().zip(row) {
                *a += b;
            }
        }
        t
    }

    pub fn label_count(&self, label: Label) -> usize {
        self.totals()[label.index()]
    }

    fn rows(&self) -> Vec<(String, [usize; Label::COUNT + 1])> {
        let mut rows: Vec<_> = self.by_dialect.iter().map(|(d, c)| (d.to_string(), *c)).collect();
        rows.push(("TOTAL".into(), self.totals()));
        rows
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<8}", "Dialect");
        for l in Label::ALL {
            let _ = write!(s, "{:>8}", l.as_str());
        }
        let _ = writeln!(s, "{:>10}{:>8}", "UNLABELED", "TOTAL");
        for (name, c) in self.rows() {
            let _ = write!(s, "{name:<8}");
            for v in &c[..Label::COUNT] {
                let _ = write!(s, "{v:>8}");
            }
            let _ = writeln!(s, "{:>10}{:>8}", c[Label::COUNT], c.iter().sum::<usize>());
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dialect,P,N,NEU,NONE,unlabeled,total\n");
        for (name, c) in self.rows() {
            let cells: Vec<String> = c.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{name},{},{}", cells.join(","), c.iter().sum::<usize>());
        }
        s
    }
}

fn report_rows(report: &GroupedReport) -> Vec<(String, &MetricsReport)> {
    let mut rows: Vec<_> = report.by_dialect.iter().map(|(d, r)| (d.to_string(), r)).collect();
    rows.push(("ALL".into(), &report.overall));
    rows
}

/// One macro row per dialect plus an overall row, three decimals.
pub fn eval_table_text(report: &GroupedReport, seed: u64) -> String {
    let mut s = format!("# seed={seed}\n{:<8}{:>8}{:>11}{:>8}\n", "Dialect", "F1", "Precision", "Recall");
    for (name, r) in report_rows(report) {
        let _ = writeln!(s, "{name:<8}{:>8.3}{:>11.3}{:>8.3}", r.macro_f1, r.macro_precision, r.macro_recall);
    }
    s
}

/// Columns `dialect,class,precision,recall,f1,support`; one row per class
/// and a `macro` row for each group.
pub fn metrics_csv(report: &GroupedReport) -> String {
    let mut s = String::from("dialect,class,precision,recall,f1,support\n");
    for (name, r) in report_rows(report) {
        for (label, c) in Label::ALL.iter().zip(&r.classes) {
            let _ = writeln!(s, "{name},{label},{},{},{},{}", c.precision, c.recall, c.f1, c.support);
        }
        let _ = writeln!(s, "{name},macro,{},{},{},{}", r.macro_precision, r.macro_recall, r.macro_f1, r.total);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

/// Hashtag-segmentation comparison, percentages with two decimals.
pub fn ablation_text(without: AblationRow, with: AblationRow) -> String {
    let mut s = format!("{:<8}{:>11}{:>16}\n", "System", "Train (%)", "Validation (%)");
    for (name, r) in [("Without", without), ("With", with)] {
        let _ = writeln!(s, "{name:<8}{:>11.2}{:>16.2}", 100.0 * r.train_accuracy, 100.0 * r.val_accuracy);
    }
    s
}

pub fn ablation_csv(without: AblationRow, with: AblationRow) -> String {
    let mut s = String::from("system,train_pct,val_pct\n");
    for (name, r) in [("without", without), ("with", with)] {
        let _ = writeln!(s, "{name},{},{}", 100.0 * r.train_accuracy, 100.0 * r.val_accuracy);
    }
    s
}
