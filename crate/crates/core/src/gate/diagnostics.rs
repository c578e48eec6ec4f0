use alloc::vec::Vec;

use crate::math;
use crate::score::RouteScore;
use crate::stats::midranks;

/// `π·R_Hyp + (1 − π)·R_Euc`, with π and both inputs kept in the breakdown.
pub fn blend(pi: f64, r_hyp: &RouteScore, r_euc: &RouteScore) -> RouteScore {
    debug_assert!((0.0..=1.0).contains(&pi));
    RouteScore::new(pi * r_hyp.value + (1.0 - pi) * r_euc.value)
        .with_term("pi", pi)
        .with_term("hyperbolic", r_hyp.value)
        .with_term("euclidean", r_euc.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Shares of predictions by confidence: `low` outside `[0.2, 0.8]`, `high` inside
/// `[0.45, 0.55]`, `mid` the rest.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyBands {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateDiagnostics {
    pub count: usize,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub ece: f64,
    pub confusion: Confusion,
    pub entropy_bands: EntropyBands,
}

/// Predictions at `π ≥ 0.5` count as class 1.
pub fn gate_diagnostics(predictions: &[(f64, bool)]) -> GateDiagnostics {
    let n = predictions.len();
    if n == 0 {
        return GateDiagnostics::default();
    }
    let mut confusion = Confusion::default();
    for &(pi, y) in predictions {
        match (pi >= 0.5, y) {
            (true, true) => confusion.tp += 1,
            (false, false) => confusion.tn += 1,
            (true, false) => confusion.fp += 1,
            (false, true) => confusion.fn_ += 1,
        }
    }

    let positives = predictions.iter().filter(|p| p.1).count();
    let negatives = n - positives;
    let auc = (positives > 0 && negatives > 0).then(|| {
        let scores: Vec<f64> = predictions.iter().map(|p| p.0).collect();
        let ranks = midranks(&scores);
        let rank_sum: f64 = ranks.iter().zip(predictions).filter(|(_, p)| p.1).map(|(r, _)| r).sum();
        let p = positives as f64;
        (rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64)
    });

    // ECE over 10 equal-width bins of confidence max(π, 1 − π)
    let mut conf_sum = [0.0f64; 10];
    let mut correct = [0usize; 10];
    let mut size = [0usize; 10];
    for &(pi, y) in predictions {
        let conf = pi.max(1.0 - pi);
        let bin = ((conf * 10.0) as usize).min(9);
        conf_sum[bin] += conf;
        size[bin] += 1;
        if (pi >= 0.5) == y {
            correct[bin] += 1;
        }
    }
    let ece = (0..10)
        .filter(|&b| size[b] > 0)
        .map(|b| {
            let m = size[b] as f64;
            (m / n as f64) * math::abs(conf_sum[b] / m - correct[b] as f64 / m)
        })
        .sum();

    let low = predictions.iter().filter(|p| !(0.2..=0.8).contains(&p.0)).count();
    let high = predictions.iter().filter(|p| (0.45..=0.55).contains(&p.0)).count();
    let nf = n as f64;
    GateDiagnostics {
        count: n,
        auc,
        accuracy: confusion.accuracy(),
        ece,
        confusion,
        entropy_bands: EntropyBands {
            low: low as f64 / nf,
            mid: (n - low - high) as f64 / nf,
            high: high as f64 / nf,
        },
    }
}
