//! Evaluation machinery: guessing CDFs, random-guess baselines,
//! improvement factors, per-PIN P50, a 2×2 chi-square comparison and an
//! Anderson-Darling normality check for extraction residuals.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::audio::MatchReport;
use crate::keypad::Pin;
use crate::special::{gamma_q, ln_normal_cdf};

/// Guess rank of one trial: list position of the true PIN, or filtered
/// out entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessOutcome {
    Rank(usize),
    NotFound,
}

impl GuessOutcome {
    pub fn rank(self) -> Option<usize> {
        match self {
            GuessOutcome::Rank(r) => Some(r),
            GuessOutcome::NotFound => None,
        }
    }
}

impl From<Option<usize>> for GuessOutcome {
    fn from(r: Option<usize>) -> GuessOutcome {
        match r {
            Some(r) => GuessOutcome::Rank(r),
            None => GuessOutcome::NotFound,
        }
    }
}

/// Fraction of trials recovered within k attempts, for k = 1..=k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessingCdf {
    cdf: Vec<f64>,
    pub n_trials: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    EmptyInput,
    ZeroBaseline { k: usize },
    TooFewResiduals { n: usize, min: usize },
    ZeroVariance,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyInput => f.write_str("empty input"),
            EvalError::ZeroBaseline { k } => write!(f, "baseline is zero at k = {k}"),
            EvalError::TooFewResiduals { n, min } => {
                write!(f, "need at least {min} residuals, got {n}")
            }
            EvalError::ZeroVariance => f.write_str("residuals have zero variance"),
        }
    }
}

/// Build the empirical guessing CDF. Not-found trials count toward the
/// denominator but never toward recovery.
pub fn guessing_cdf(
    outcomes: &[GuessOutcome],
    k_max: usize,
    label: &str,
) -> Result<GuessingCdf, EvalError> {
    if outcomes.is_empty() || k_max == 0 {
        return Err(EvalError::EmptyInput);
    }
    let n = outcomes.len();
    let mut counts = vec![0usize; k_max + 1];
    for o in outcomes {
        if let Some(r) = o.rank() {
            if r <= k_max {
                counts[r] += 1;
            }
        }
    }
    let mut cdf = Vec::with_capacity(k_max);
    let mut acc = 0usize;
    for k in 1..=k_max {
        acc += counts[k];
        cdf.push(acc as f64 / n as f64);
    }
    let out = GuessingCdf {
        cdf,
        n_trials: n,
        label: String::from(label),
    };
    debug_assert!(out.cdf.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(out.cdf.iter().all(|&v| (0.0..=1.0).contains(&v)));
    Ok(out)
}

impl GuessingCdf {
    /// Value at attempts k (1-based).
    pub fn at(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.cdf.len(), "k out of range: {k}");
        self.cdf[k - 1]
    }

    pub fn k_max(&self) -> usize {
        self.cdf.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.cdf
    }

    /// Raw recovered-within-k count, for contingency tables.
    pub fn count_within(&self, k: usize) -> usize {
        libm::round(self.at(k) * self.n_trials as f64) as usize
    }
}

/// Random-guessing baselines over differently restricted PIN spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    /// Uniform over all 10,000 PINs.
    Rg,
    /// One digit and its position known: 1,000 PINs remain.
    Rgvpk,
    /// Thermal class known; averaged over the trial PINs' class sizes.
    Rgt { class_sizes: Vec<usize> },
    /// Thermal class and one digit/position known.
    Rgtvpk { candidate_counts: Vec<usize> },
}

impl Baseline {
    /// Expected recovery probability within k random guesses.
    pub fn at(&self, k: usize) -> f64 {
        let clipped = |space: usize| (k as f64 / space as f64).min(1.0);
        match self {
            Baseline::Rg => clipped(10_000),
            Baseline::Rgvpk => clipped(1_000),
            Baseline::Rgt { class_sizes } => {
                class_sizes.iter().map(|&s| clipped(s)).sum::<f64>() / class_sizes.len() as f64
            }
            Baseline::Rgtvpk { candidate_counts } => {
                candidate_counts.iter().map(|&s| clipped(s)).sum::<f64>()
                    / candidate_counts.len() as f64
            }
        }
    }
}

/// Ratio of attack recovery to baseline recovery at k attempts.
pub fn improvement_factor(cdf: &GuessingCdf, base: &Baseline, k: usize) -> Result<f64, EvalError> {
    let b = base.at(k);
    if b <= 0.0 {
        return Err(EvalError::ZeroBaseline { k });
    }
    Ok(cdf.at(k) / b)
}

/// Per-PIN attempts needed to reach 50% recovery probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct P50Record {
    pub pin: Pin,
    /// Smallest k with empirical P(rank <= k) >= 0.5; None when the PIN
    /// is recovered in fewer than half of its trials at any k.
    pub attempts_to_half: Option<usize>,
    pub n_trials: usize,
}

/// P50 per PIN, sorted ascending by attempts (undefined records last),
/// ties by PIN numeric order.
pub fn p50(per_pin_ranks: &BTreeMap<Pin, Vec<GuessOutcome>>) -> Vec<P50Record> {
    let mut records: Vec<P50Record> = per_pin_ranks
        .iter()
        .map(|(&pin, outcomes)| {
            let n = outcomes.len();
            let mut ranks: Vec<usize> = outcomes.iter().filter_map(|o| o.rank()).collect();
            ranks.sort_unstable();
            // P(rank <= k) first reaches 0.5 at the ceil(n/2)-th smallest rank
            let needed = n.div_ceil(2);
            let attempts_to_half = ranks.get(needed.wrapping_sub(1)).copied();
            P50Record {
                pin,
                attempts_to_half,
                n_trials: n,
            }
        })
        .collect();
    records.sort_by(|a, b| {
        let key = |r: &P50Record| (r.attempts_to_half.is_none(), r.attempts_to_half, r.pin);
        key(a).cmp(&key(b))
    });
    records
}

/// Result of the 2×2 recovered-within-k comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Set when any expected cell count is below 5, where the
    /// chi-square approximation is unreliable.
    pub low_expected_warning: bool,
}

/// 2×2 chi-square with Yates continuity correction: condition (a vs b)
/// against recovered-within-k (yes vs no), 1 degree of freedom.
pub fn chi_square_guess_freq(
    a_within: usize,
    a_total: usize,
    b_within: usize,
    b_total: usize,
) -> ChiSquareResult {
    let table = [
        [a_within as f64, (a_total - a_within) as f64],
        [b_within as f64, (b_total - b_within) as f64],
    ];
    let row = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let n = row[0] + row[1];
    let mut statistic = 0.0;
    let mut low_expected_warning = false;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row[i] * col[j] / n;
            if expected < 5.0 {
                low_expected_warning = true;
            }
            if expected > 0.0 {
                let d = (libm::fabs(table[i][j] - expected) - 0.5).max(0.0);
                statistic += d * d / expected;
            }
        }
    }
    // survival function of chi-square with 1 dof
    let p_value = gamma_q(0.5, statistic / 2.0);
    ChiSquareResult {
        statistic,
        p_value,
        low_expected_warning,
    }
}

/// Aggregate of per-clip match reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionSummary {
    pub n_clips: usize,
    pub n_truth: usize,
    pub n_matched: usize,
    pub detection_rate: f64,
    pub mean_error_ms: f64,
    pub std_error_ms: f64,
    pub p75_abs_gap_error_ms: f64,
    pub p97_abs_gap_error_ms: f64,
}

/// Pool detection errors and gap errors across clips.
pub fn extraction_error_report(reports: &[MatchReport]) -> Result<ExtractionSummary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n_truth: usize = reports.iter().map(|r| r.n_truth).sum();
    let n_matched: usize = reports.iter().map(|r| r.matches.len()).sum();
    let errors: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.matches.iter().map(|m| m.signed_error_ms))
        .collect();
    let (mean, std) = mean_std(&errors);
    let mut abs_gap: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.gap_errors_ms.iter().map(|&g| libm::fabs(g)))
        .collect();
    abs_gap.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ExtractionSummary {
        n_clips: reports.len(),
        n_truth,
        n_matched,
        detection_rate: n_matched as f64 / n_truth as f64,
        mean_error_ms: mean,
        std_error_ms: std,
        p75_abs_gap_error_ms: percentile_sorted(&abs_gap, 75.0),
        p97_abs_gap_error_ms: percentile_sorted(&abs_gap, 97.0),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

// nearest-rank percentile on a pre-sorted slice
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = libm::ceil(p / 100.0 * sorted.len() as f64) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Anderson-Darling A*² against a normal with sample-estimated mean and
/// variance (the "case 3" variant), including the small-sample
/// correction. The 1% critical value for this variant is
/// [`AD_CRITICAL_1PCT`].
pub fn anderson_darling(residuals: &[f64]) -> Result<f64, EvalError> {
    let n = residuals.len();
    if n < 8 {
        return Err(EvalError::TooFewResiduals { n, min: 8 });
    }
    let (mean, std) = mean_std(residuals);
    if !(std > 0.0) {
        return Err(EvalError::ZeroVariance);
    }
    let mut z: Vec<f64> = residuals.iter().map(|&x| (x - mean) / std).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let ln_phi = ln_normal_cdf(z[i]);
        // ln(1 - Φ(z)) = ln Φ(-z)
        let ln_one_minus = ln_normal_cdf(-z[n - 1 - i]);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (ln_phi + ln_one_minus);
    }
    // small-sample correction for estimated parameters
    Ok(a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf)))
}

/// 1% critical value for the corrected case-3 Anderson-Darling statistic.
pub const AD_CRITICAL_1PCT: f64 = 1.035;
