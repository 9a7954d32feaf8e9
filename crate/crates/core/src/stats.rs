//! Aggregation of rating sheets, inter-rater agreement and the two-sample
//! rank test.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::framework::{CriterionId, LikertScore, NaPolicy, RatingSheet, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no input")]
    EmptyInput,
    #[error("every score is not applicable")]
    NoApplicableScores,
    #[error("item {0} has a different number of ratings than item 0")]
    UnbalancedRaters(usize),
    #[error("at least two raters per item are required")]
    TooFewRaters,
}

fn policy_value(score: LikertScore, policy: NaPolicy) -> Option<f64> {
    match (score.is_applicable(), policy) {
        (true, _) => Some(f64::from(score.value())),
        (false, NaPolicy::Exclude) => None,
        (false, NaPolicy::AsMidpoint) => Some(f64::from(LikertScore::MIDPOINT.value())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionMean {
    /// `None` when no value enters the mean.
    pub mean: Option<f64>,
    pub n_applicable: usize,
    pub n_na: usize,
}

pub type CriterionMeans = BTreeMap<CriterionId, CriterionMean>;

/// Per-criterion mean across sheets.
pub fn criterion_means(sheets: &[RatingSheet], policy: NaPolicy) -> Result<CriterionMeans, StatsError> {
    if sheets.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(CriterionId::ALL
        .iter()
        .map(|&id| {
            let scores: Vec<LikertScore> = sheets.iter().map(|s| s.score(id)).collect();
            let values: Vec<f64> = scores.iter().filter_map(|&s| policy_value(s, policy)).collect();
            let n_applicable = scores.iter().filter(|s| s.is_applicable()).count();
            (id, CriterionMean { mean: mean(&values), n_applicable, n_na: scores.len() - n_applicable })
        })
        .collect())
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Overall framework score: flat mean over every (rater, criterion) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameworkScore {
    pub sigma: f64,
    pub n_scores: usize,
}

pub fn framework_score(sheets: &[RatingSheet], policy: NaPolicy) -> Result<FrameworkScore, StatsError> {
    if sheets.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let values: Vec<f64> = sheets
        .iter()
        .flat_map(|s| s.scores().values().filter_map(move |&v| policy_value(v, policy)))
        .collect();
    let sigma = mean(&values).ok_or(StatsError::NoApplicableScores)?;
    Ok(FrameworkScore { sigma, n_scores: values.len() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictTally {
    pub counts: BTreeMap<Verdict, usize>,
    pub n_raters: usize,
    /// At least one rater called the project gender-specific.
    pub gendered_flag: bool,
    /// Strictly most frequent verdict; ties give `None`.
    pub majority: Option<Verdict>,
}

pub fn verdict_tally(verdicts: &[Verdict]) -> Result<VerdictTally, StatsError> {
    if verdicts.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut counts: BTreeMap<Verdict, usize> = Verdict::ALL.iter().map(|v| (*v, 0)).collect();
    for v in verdicts {
        *counts.get_mut(v).expect("all verdicts present") += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let mut leaders = counts.iter().filter(|(_, &c)| c == top);
    let first = leaders.next().map(|(v, _)| *v);
    let majority = if leaders.next().is_some() { None } else { first };
    Ok(VerdictTally {
        gendered_flag: counts[&Verdict::Boy] + counts[&Verdict::Girl] >= 1,
        counts,
        n_raters: verdicts.len(),
        majority,
    })
}

pub fn sheet_verdicts(sheets: &[RatingSheet]) -> Vec<Verdict> {
    sheets.iter().map(|s| s.verdict).collect()
}

/// Share of tallies with the gendered flag set, in percent.
pub fn flagged_percent(tallies: &[VerdictTally]) -> Option<f64> {
    (!tallies.is_empty())
        .then(|| 100.0 * tallies.iter().filter(|t| t.gendered_flag).count() as f64 / tallies.len() as f64)
}

/// Fleiss' kappa over `items[i][r]`, the category rater `r` gave item `i`.
/// Categories are compared nominally. Perfect expected agreement yields 1.
pub fn fleiss_kappa<C: Ord>(items: &[Vec<C>]) -> Result<f64, StatsError> {
    let first = items.first().ok_or(StatsError::EmptyInput)?;
    let n = first.len();
    if let Some(bad) = items.iter().position(|r| r.len() != n) {
        return Err(StatsError::UnbalancedRaters(bad));
    }
    if n < 2 {
        return Err(StatsError::TooFewRaters);
    }
    let n_f = n as f64;
    let mut totals: BTreeMap<&C, usize> = BTreeMap::new();
    let mut p_sum = 0.0;
    for ratings in items {
        let mut counts: BTreeMap<&C, usize> = BTreeMap::new();
        for c in ratings {
            *counts.entry(c).or_default() += 1;
            *totals.entry(c).or_default() += 1;
        }
        let agree: usize = counts.values().map(|&k| k * (k - 1)).sum();
        p_sum += agree as f64 / (n_f * (n_f - 1.0));
    }
    let n_items = items.len() as f64;
    let p_bar = p_sum / n_items;
    let all = n_items * n_f;
    let p_e: f64 = totals.values().map(|&k| (k as f64 / all) * (k as f64 / all)).sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Items for Likert agreement: one row per (project, criterion) with the
/// raw 0-5 values as six nominal categories.
pub fn likert_matrix(projects: &[Vec<RatingSheet>]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for sheets in projects {
        for id in CriterionId::ALL {
            out.push(sheets.iter().map(|s| s.score(id).value()).collect());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    pub p_two_sided: f64,
    pub method: PMethod,
}

/// Largest combined sample size for the exact distribution.
pub const EXACT_LIMIT: usize = 16;

/// Midranks (1-based) of the pooled sample, and the tie group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && pooled[idx[end]] == pooled[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Number of arrangements of `m` + `n` distinct values giving each U
/// from 0 to `m * n`.
fn u_distribution(m: usize, n: usize) -> Vec<u64> {
    // f[i][j][u]: arrangements of i and j values with statistic u, built by
    // whether the largest value belongs to the first sample (adds j) or not.
    let max = m * n;
    let mut prev: Vec<Vec<u64>> = (0..=n).map(|_| {
        let mut row = vec![0u64; max + 1];
        row[0] = 1;
        row
    }).collect();
    for i in 1..=m {
        let mut cur: Vec<Vec<u64>> = vec![vec![0u64; max + 1]; n + 1];
        cur[0][0] = 1;
        for j in 1..=n {
            for u in 0..=i * j {
                let with_first = if u >= j { prev[j][u - j] } else { 0 };
                cur[j][u] = with_first + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

/// Two-sided Mann-Whitney U test. Exact when the pooled sample has at most
/// [`EXACT_LIMIT`] values and no ties; otherwise the normal approximation
/// with tie and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u_a = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let u_b = (n1 * n2) as f64 - u_a;
    let u = u_a.min(u_b);
    let tied = ties.iter().any(|&t| t > 1);

    if !tied && n1 + n2 <= EXACT_LIMIT {
        let dist = u_distribution(n1, n2);
        let total: u64 = dist.iter().sum();
        let k = libm::round(u) as usize;
        let tail: u64 = dist[..=k].iter().sum();
        let p = (2.0 * tail as f64 / total as f64).min(1.0);
        return Ok(MannWhitney { u, p_two_sided: p, method: PMethod::Exact });
    }

    Ok(MannWhitney { u, p_two_sided: normal_p(n1, n2, u, &ties), method: PMethod::Normal })
}

/// Two-sided normal-approximation p for `u = min(U_a, U_b)`.
fn normal_p(n1: usize, n2: usize, u: f64, ties: &[usize]) -> f64 {
    let n = (n1 + n2) as f64;
    let prod = (n1 * n2) as f64;
    let mu = prod / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = prod / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((mu - u) - 0.5).max(0.0) / libm::sqrt(var);
    libm::erfc(z / core::f64::consts::SQRT_2).min(1.0)
}
