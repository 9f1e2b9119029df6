//! Metrics, the win/tie/loss comparison rule, Welch's t-test, report
//! generation, and embedding export.
//!
//! All statistics run in f64. Means and standard deviations use the
//! sample convention (n-1 denominator) everywhere they are reported.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("inputs must have equal length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("welch t needs at least 2 samples per side, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("zero variance with unequal means makes t infinite")]
    InfiniteT,
    #[error("report needs a baseline")]
    MissingBaseline,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Train(#[from] crate::train::TrainError),
}

/// Fraction of exact matches between binary predictions and labels.
pub fn accuracy(preds: &[u8], labels: &[u8]) -> Result<f64, StatsError> {
    if preds.is_empty() {
        return Err(StatsError::Empty("accuracy"));
    }
    if preds.len() != labels.len() {
        return Err(StatsError::LengthMismatch(preds.len(), labels.len()));
    }
    let correct = preds.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Sample mean and standard deviation (n-1 denominator; 0 for n = 1).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Area under the ROC curve by rank statistics (ties share ranks).
pub fn roc_auc(scores: &[f32], labels: &[u8]) -> f32 {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg_rank;
        }
        i = j + 1;
    }
    let pos_rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l == 1)
        .map(|(_, &r)| r)
        .sum();
    let auc = (pos_rank_sum - pos as f64 * (pos as f64 + 1.0) / 2.0) / (pos as f64 * neg as f64);
    auc as f32
}

/// Win / tie / loss verdict for a model against a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WtlLabel {
    Win,
    Tie,
    Loss,
}

impl std::fmt::Display for WtlLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WtlLabel::Win => "W",
            WtlLabel::Tie => "T",
            WtlLabel::Loss => "L",
        })
    }
}

/// W if mean_m - std_m > mean_b, L if mean_b - std_b > mean_m, else T.
pub fn win_tie_loss(model: (f64, f64), base: (f64, f64)) -> WtlLabel {
    let (mm, ms) = model;
    let (bm, bs) = base;
    if mm - ms > bm {
        WtlLabel::Win
    } else if bm - bs > mm {
        WtlLabel::Loss
    } else {
        WtlLabel::Tie
    }
}

/// Welch's t statistic with Welch–Satterthwaite degrees of freedom and
/// a two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p: f64,
}

/// Two-sample Welch's t-test on raw samples.
pub fn welch_t(xs: &[f64], ys: &[f64]) -> Result<WelchResult, StatsError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(StatsError::TooFewSamples(xs.len(), ys.len()));
    }
    let (mx, sx) = mean_std(xs);
    let (my, sy) = mean_std(ys);
    welch_t_summary(mx, sx, xs.len(), my, sy, ys.len())
}

/// Welch's t-test from summary statistics (sample means, sample stds,
/// sample sizes), so printed tables can be checked without raw runs.
pub fn welch_t_summary(
    mean_x: f64,
    std_x: f64,
    n_x: usize,
    mean_y: f64,
    std_y: f64,
    n_y: usize,
) -> Result<WelchResult, StatsError> {
    if n_x < 2 || n_y < 2 {
        return Err(StatsError::TooFewSamples(n_x, n_y));
    }
    let vx = std_x * std_x / n_x as f64;
    let vy = std_y * std_y / n_y as f64;
    if vx + vy == 0.0 {
        if mean_x == mean_y {
            // zero pooled variance with equal means: t = 0 by convention
            return Ok(WelchResult {
                t: 0.0,
                dof: (n_x + n_y - 2) as f64,
                p: 1.0,
            });
        }
        return Err(StatsError::InfiniteT);
    }
    let t = (mean_x - mean_y) / (vx + vy).sqrt();
    let dof = (vx + vy) * (vx + vy)
        / (vx * vx / (n_x as f64 - 1.0) + vy * vy / (n_y as f64 - 1.0));
    let p = two_sided_p(t, dof);
    Ok(WelchResult { t, dof, p })
}

/// Two-sided p-value for a t statistic via the regularized incomplete
/// beta function: p = I_{v/(v+t^2)}(v/2, 1/2).
pub fn two_sided_p(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    regularized_beta(x, dof / 2.0, 0.5)
}

/// Regularized incomplete beta I_x(a, b) by continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front / a * beta_cf(x, a, b)
    } else {
        1.0 - (b * (1.0 - x).ln() + a * x.ln() - ln_beta).exp() / b * beta_cf(1.0 - x, b, a)
    }
}

/// Continued fraction for the incomplete beta (Lentz's method).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-30;
    let mut c = 1.0f64;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut f = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let even = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        f *= c * d;
        let odd = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    f
}

/// Lanczos approximation of ln Gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEFFS[0];
    let t = x + 7.5;
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Per-model test accuracies over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub model_id: String,
    pub algorithm: String,
    pub accuracies: Vec<f64>,
}

impl RunResult {
    pub fn summary(&self) -> (f64, f64) {
        mean_std(&self.accuracies)
    }
}

/// One comparison row against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub label: WtlLabel,
    pub single_seed: bool,
    pub ttest: Option<WelchResult>,
}

/// The comparison table: a baseline row plus one row per model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline_name: String,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Compare runs against a baseline; optionally attach Welch's t-test
/// (needs >= 2 seeds on both sides).
pub fn build_report(
    results: &[RunResult],
    base: &RunResult,
    with_ttest: bool,
) -> Result<ComparisonReport, StatsError> {
    if base.accuracies.is_empty() {
        return Err(StatsError::MissingBaseline);
    }
    let (bm, bs) = base.summary();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        if r.accuracies.is_empty() {
            return Err(StatsError::Empty("run result"));
        }
        let (m, s) = r.summary();
        let ttest = if with_ttest {
            Some(welch_t(&r.accuracies, &base.accuracies)?)
        } else {
            None
        };
        rows.push(ComparisonRow {
            name: r.algorithm.clone(),
            mean: m,
            std: s,
            label: win_tie_loss((m, s), (bm, bs)),
            single_seed: r.accuracies.len() < 2,
            ttest,
        });
    }
    Ok(ComparisonReport {
        baseline_name: base.algorithm.clone(),
        baseline_mean: bm,
        baseline_std: bs,
        rows,
    })
}

/// Build a report straight from printed (name, mean, std) summaries.
pub fn build_report_from_summaries(
    baseline: (f64, f64),
    rows: &[(String, f64, f64)],
) -> ComparisonReport {
    ComparisonReport {
        baseline_name: "baseline".to_string(),
        baseline_mean: baseline.0,
        baseline_std: baseline.1,
        rows: rows
            .iter()
            .map(|(name, m, s)| ComparisonRow {
                name: name.clone(),
                mean: *m,
                std: *s,
                label: win_tie_loss((*m, *s), baseline),
                single_seed: false,
                ttest: None,
            })
            .collect(),
    }
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let ttest = self.rows.iter().any(|r| r.ttest.is_some());
        let mut out = String::from(if ttest {
            "algorithm,mean,std,label,t,dof,p\n"
        } else {
            "algorithm,mean,std,label\n"
        });
        out.push_str(&format!(
            "{},{:.4},{:.4},baseline\n",
            self.baseline_name, self.baseline_mean, self.baseline_std
        ));
        for r in &self.rows {
            if let Some(w) = &r.ttest {
                out.push_str(&format!(
                    "{},{:.4},{:.4},{},{:.4},{:.3},{:.3e}\n",
                    r.name, r.mean, r.std, r.label, w.t, w.dof, w.p
                ));
            } else {
                out.push_str(&format!(
                    "{},{:.4},{:.4},{}\n",
                    r.name, r.mean, r.std, r.label
                ));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>8} {:>8}  {}\n",
            "model", "mean", "std", "label"
        ));
        out.push_str(&format!(
            "{:<28} {:>8.4} {:>8.4}  baseline\n",
            self.baseline_name, self.baseline_mean, self.baseline_std
        ));
        for r in &self.rows {
            let warn = if r.single_seed { " (single seed)" } else { "" };
            let ttest = r
                .ttest
                .map(|w| format!("  t={:.3} dof={:.2} p={:.3e}", w.t, w.dof, w.p))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:<28} {:>8.4} {:>8.4}  {}{}{}\n",
                r.name, r.mean, r.std, r.label, ttest, warn
            ));
        }
        out
    }
}

/// One row per graph: id, label, pooled final-layer embedding.
pub fn export_embeddings(
    stack: &crate::transfer::LayerStack,
    data: &crate::data::MolDataset,
    path: &Path,
) -> Result<(), StatsError> {
    use std::io::Write;
    let indices: Vec<usize> = (0..data.graphs.len()).collect();
    let rows = crate::train::graph_embeddings(stack, data, &indices)?;
    let mut f = std::fs::File::create(path)?;
    let width = rows.first().map(|(_, _, e)| e.len()).unwrap_or(0);
    let header: Vec<String> = (0..width).map(|i| format!("e{i}")).collect();
    writeln!(f, "id,label,{}", header.join(","))?;
    for (id, label, emb) in rows {
        let vals: Vec<String> = emb.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{id},{label},{}", vals.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[1, 1]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn accuracy_matches_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let preds: Vec<u8> = (0..100).map(|_| rng.random_range(0..2)).collect();
        let labels: Vec<u8> = (0..100).map(|_| rng.random_range(0..2)).collect();
        let mut count = 0usize;
        for i in 0..100 {
            if preds[i] == labels[i] {
                count += 1;
            }
        }
        assert_eq!(accuracy(&preds, &labels).unwrap(), count as f64 / 100.0);
    }

    #[test]
    fn win_tie_loss_examples() {
        // printed rows: a clear win and a clear loss
        assert_eq!(
            win_tie_loss((77.16, 0.80), (71.20, 0.68)),
            WtlLabel::Win
        );
        assert_eq!(
            win_tie_loss((84.05, 1.75), (86.85, 2.53)),
            WtlLabel::Loss
        );
        assert_eq!(win_tie_loss((50.0, 0.0), (50.0, 0.0)), WtlLabel::Tie);
    }

    proptest::proptest! {
        #[test]
        fn win_tie_loss_is_scale_consistent(
            mm in 0.1f64..100.0, ms in 0.0f64..10.0,
            bm in 0.1f64..100.0, bs in 0.0f64..10.0,
            c in 0.1f64..50.0,
        ) {
            let plain = win_tie_loss((mm, ms), (bm, bs));
            let scaled = win_tie_loss((c * mm, c * ms), (c * bm, c * bs));
            proptest::prop_assert_eq!(plain, scaled);
        }

        #[test]
        fn welch_t_antisymmetric_under_swap(
            xs in proptest::collection::vec(0.0f64..10.0, 3..8),
            ys in proptest::collection::vec(0.0f64..10.0, 3..8),
        ) {
            let a = welch_t(&xs, &ys);
            let b = welch_t(&ys, &xs);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    proptest::prop_assert!((a.t + b.t).abs() < 1e-12);
                    proptest::prop_assert!((a.p - b.p).abs() < 1e-12);
                }
                (Err(_), Err(_)) => {}
                _ => proptest::prop_assert!(false, "one side errored"),
            }
        }
    }

    #[test]
    fn identical_samples_give_zero_t() {
        let r = welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn zero_variance_unequal_means_is_infinity_error() {
        assert!(matches!(
            welch_t(&[1.0, 1.0], &[2.0, 2.0]),
            Err(StatsError::InfiniteT)
        ));
    }

    #[test]
    fn welch_matches_textbook_formula_oracle() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.001, 2.001, 3.001];
        let r = welch_t(&xs, &ys).unwrap();
        // direct formula with sample variances
        let mx = 2.0;
        let my = 2.001;
        let v = 1.0; // both sample variances are 1.0
        let se = (v / 3.0 + v / 3.0f64).sqrt();
        let want_t = (mx - my) / se;
        let want_dof = (2.0 / 3.0f64).powi(2) / (2.0 * (1.0f64 / 3.0).powi(2) / 2.0);
        assert!((r.t - want_t).abs() < 1e-9, "{} vs {want_t}", r.t);
        assert!((r.dof - want_dof).abs() < 1e-9);
    }

    #[test]
    fn summary_stats_bracket_reported_t() {
        // five runs each, printed as 76.63±1.01 vs 70.94±0.80
        let r = welch_t_summary(76.63, 1.01, 5, 70.94, 0.80, 5).unwrap();
        assert!(r.t > 8.8 && r.t < 9.9, "t = {}", r.t);
        assert!(r.p < 1e-3, "p = {}", r.p);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-10);
        assert!(ln_gamma(2.0).abs() < 1e-10);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-10);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-10);
    }

    #[test]
    fn regularized_beta_symmetry() {
        // I_x(a,b) + I_{1-x}(b,a) = 1
        for (x, a, b) in [(0.3, 2.0, 3.0), (0.7, 0.5, 5.0), (0.5, 4.0, 4.0)] {
            let lhs = regularized_beta(x, a, b) + regularized_beta(1.0 - x, b, a);
            assert!((lhs - 1.0).abs() < 1e-12, "x={x} a={a} b={b}: {lhs}");
        }
    }

    #[test]
    fn p_value_is_sane_for_standard_normal_limit() {
        // large dof: t = 1.96 should give p close to 0.05
        let p = two_sided_p(1.96, 1e6);
        assert!((p - 0.05).abs() < 2e-3, "p = {p}");
    }

    #[test]
    fn roc_auc_perfect_and_random() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]), 1.0);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[1, 1, 0, 0]), 0.0);
        let mid = roc_auc(&[0.5, 0.5, 0.5, 0.5], &[1, 0, 1, 0]);
        assert!((mid - 0.5).abs() < 1e-6);
    }

    #[test]
    fn report_from_runs() {
        let base = RunResult {
            model_id: "b".into(),
            algorithm: "baseline".into(),
            accuracies: vec![0.70, 0.71, 0.72],
        };
        let good = RunResult {
            model_id: "m".into(),
            algorithm: "segments-intersect".into(),
            accuracies: vec![0.77, 0.78, 0.76],
        };
        let report = build_report(&[good], &base, true).unwrap();
        assert_eq!(report.rows[0].label, WtlLabel::Win);
        assert!(report.rows[0].ttest.unwrap().p < 0.05);
        let csv = report.to_csv();
        assert!(csv.starts_with("algorithm,mean,std,label,t,dof,p\n"));
        assert!(csv.contains("segments-intersect"));
    }

    #[test]
    fn single_seed_rows_get_std_zero_and_warning() {
        let base = RunResult {
            model_id: "b".into(),
            algorithm: "baseline".into(),
            accuracies: vec![0.70, 0.71],
        };
        let single = RunResult {
            model_id: "m".into(),
            algorithm: "bfs".into(),
            accuracies: vec![0.75],
        };
        let report = build_report(&[single], &base, false).unwrap();
        assert_eq!(report.rows[0].std, 0.0);
        assert!(report.rows[0].single_seed);
        assert!(report.to_text().contains("single seed"));
    }
}
