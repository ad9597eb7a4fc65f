//! Classification-quality and rank-correlation statistics.

use crate::error::{Error, Result};
use crate::segments::SegmentLabel;

/// 3x3 count matrix, rows = gold, columns = predicted, label order DR, FI, EK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        Self { counts }
    }

    pub fn from_pairs(gold: &[SegmentLabel], pred: &[SegmentLabel]) -> Result<Self> {
        if gold.is_empty() {
            return Err(Error::Metric("empty label sequences".into()));
        }
        if gold.len() != pred.len() {
            return Err(Error::Metric(format!(
                "length mismatch: {} gold vs {} predicted",
                gold.len(),
                pred.len()
            )));
        }
        let mut counts = [[0u64; 3]; 3];
        for (g, p) in gold.iter().zip(pred) {
            counts[g.index()][p.index()] += 1;
        }
        Ok(Self { counts })
    }

    pub fn count(&self, gold: SegmentLabel, pred: SegmentLabel) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_total(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub label: SegmentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub per_class: [ClassMetrics; 3],
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: u64,
}

/// Per-class precision/recall/F1 plus accuracy and unweighted macro averages.
/// Empty rows or columns contribute 0 rather than dividing by zero.
pub fn classification_report(m: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Metric("confusion matrix has zero total".into()));
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut per_class = Vec::with_capacity(3);
    let mut trace = 0u64;
    for (i, label) in SegmentLabel::ALL.into_iter().enumerate() {
        let diag = m.counts[i][i];
        trace += diag;
        let precision = ratio(diag, m.col_total(i));
        let recall = ratio(diag, m.row_total(i));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            label,
            precision,
            recall,
            f1,
            support: m.row_total(i),
        });
    }
    let per_class: [ClassMetrics; 3] = per_class.try_into().expect("three classes");
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    Ok(ClassificationReport {
        accuracy: trace as f64 / total as f64,
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        total,
        per_class,
    })
}

impl ClassificationReport {
    /// CSV mirror of the matrix block, per-class block, and accuracy/macro
    /// block.
    pub fn to_csv(&self, m: &ConfusionMatrix) -> String {
        let mut out = String::from(",pred_DR,pred_FI,pred_EK,precision,recall,f1,support\n");
        for (i, label) in SegmentLabel::ALL.into_iter().enumerate() {
            let c = &self.per_class[i];
            out.push_str(&format!(
                "{},{},{},{},{:.4},{:.4},{:.4},{}\n",
                label.as_str(),
                m.counts[i][0],
                m.counts[i][1],
                m.counts[i][2],
                c.precision,
                c.recall,
                c.f1,
                c.support
            ));
        }
        out.push_str(&format!("accuracy,,,,,,{:.4},{}\n", self.accuracy, self.total));
        out.push_str(&format!(
            "macro,,,{:.4},{:.4},{:.4},,{}\n",
            self.macro_precision, self.macro_recall, self.macro_f1, self.total
        ));
        out
    }
}

fn validate_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Metric("need at least 2 paired samples".into()));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Metric("non-finite value in input".into()));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Mid-ranks: ties receive the average of the rank positions they occupy.
fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average 1-based rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_paired(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::Metric(
            "rank correlation undefined for a constant sequence".into(),
        ));
    }
    let rx = mid_ranks(x);
    let ry = mid_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Kendall's tau-b with tie correction in the denominator.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_paired(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Err(Error::Metric(
            "rank correlation undefined for a constant sequence".into(),
        ));
    }
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                ties_x += 1;
                ties_y += 1;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt();
    Ok((concordant - discordant) as f64 / denom)
}

/// Spearman and Kendall tau for one paired sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCorrelation {
    pub spearman_rho: f64,
    pub kendall_tau: f64,
    pub n: usize,
}

pub fn rank_correlation(x: &[f64], y: &[f64]) -> Result<RankCorrelation> {
    Ok(RankCorrelation {
        spearman_rho: spearman(x, y)?,
        kendall_tau: kendall_tau(x, y)?,
        n: x.len(),
    })
}

/// Two-row CSV block: one column per named pairing.
pub fn correlations_csv(columns: &[(String, RankCorrelation)]) -> String {
    let mut out = String::from("statistic");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    out.push_str("spearman_rho");
    for (_, c) in columns {
        out.push_str(&format!(",{:.4}", c.spearman_rho));
    }
    out.push('\n');
    out.push_str("kendall_tau");
    for (_, c) in columns {
        out.push_str(&format!(",{:.4}", c.kendall_tau));
    }
    out.push('\n');
    out
}
