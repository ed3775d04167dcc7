use crate::data::Labels;
use crate::error::{Error, Result};

/// Counts with rows = true class, columns = predicted class (both 1-based
/// classes stored at index `k - 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 || counts.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension("confusion matrix must be square and non-empty".into()));
        }
        Ok(Self { counts })
    }

    /// Tallies predictions against truth over `c` classes (at least the
    /// largest label seen).
    pub fn from_labels(truth: &Labels, pred: &Labels, c: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Dimension(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let c = c.max(truth.num_classes()).max(pred.num_classes()).max(1);
        let mut counts = vec![vec![0u64; c]; c];
        for (&t, &p) in truth.as_slice().iter().zip(pred.as_slice()) {
            counts[t - 1][p - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth - 1][pred - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.counts {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    /// Per-class recall; `None` for classes absent from the truth.
    pub per_class: Vec<Option<f64>>,
}

impl EvaluationReport {
    /// `key=value` lines: `oa`, `aa`, `kappa`, then `class_<k>`.
    pub fn to_text(&self) -> String {
        let mut s = format!("oa={:?}\naa={:?}\nkappa={:?}\n", self.oa, self.aa, self.kappa);
        for (k, v) in self.per_class.iter().enumerate() {
            match v {
                Some(v) => s.push_str(&format!("class_{}={v:?}\n", k + 1)),
                None => s.push_str(&format!("class_{}=na\n", k + 1)),
            }
        }
        s
    }
}

/// OA, AA (over classes present in the truth) and Cohen's kappa. Kappa is
/// formed from integer sums so textbook fixtures come out exact.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvaluationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidArgument("confusion matrix is empty".into()));
    }
    let c = cm.classes();
    let rows: Vec<u64> = cm.counts.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..c).map(|j| cm.counts.iter().map(|r| r[j]).sum()).collect();
    let trace: u64 = (0..c).map(|k| cm.counts[k][k]).sum();
    let per_class: Vec<Option<f64>> = (0..c)
        .map(|k| (rows[k] > 0).then(|| cm.counts[k][k] as f64 / rows[k] as f64))
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let aa = present.iter().sum::<f64>() / present.len() as f64;

    let (t, tr) = (total as u128, trace as u128);
    let chance: u128 = rows.iter().zip(&cols).map(|(&r, &k)| r as u128 * k as u128).sum();
    let kappa = if chance == t * t {
        1.0
    } else {
        (t as f64 * tr as f64 - chance as f64) / ((t * t - chance) as f64)
    };
    Ok(EvaluationReport {
        oa: trace as f64 / total as f64,
        aa,
        kappa,
        per_class,
    })
}
