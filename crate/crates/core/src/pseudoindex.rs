//! Integer bookkeeping for the rational-curve degree estimate.
//!
//! A holomorphic bundle on ℂP¹ splits as `O(a_1) ⊕ … ⊕ O(a_n)`. For the
//! pullback of a tangent bundle along a rational curve whose differential
//! vanishes to order `k`, the estimate chain reads
//! `Σ a_i = (a_1 + a_2) + (a_3 + … + a_{n−1}) + a_n ≥ 1 + (n − 3) + 2 = n`.
//! Everything here is exact integer arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sorted splitting type `a_1 ≤ … ≤ a_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplittingType {
    n: usize,
    degrees: Vec<i64>,
}

impl SplittingType {
    /// Sorts the degrees; a splitting type is a multiset.
    pub fn new(mut degrees: Vec<i64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::EmptyInput("splitting type"));
        }
        degrees.sort_unstable();
        Ok(Self { n: degrees.len(), degrees })
    }

    /// Rejects input that is not already ascending.
    pub fn from_sorted(degrees: Vec<i64>) -> Result<Self> {
        if degrees.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(format!("degrees {degrees:?} are not sorted ascending")));
        }
        Self::new(degrees)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn total(&self) -> i64 {
        self.degrees.iter().sum()
    }
}

impl fmt::Display for SplittingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.degrees.iter().map(|d| format!("O({d})")).collect();
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    EpsPositivity,
    TopDegree,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateChecks {
    /// `a_1 + a_2 ≥ 1`
    pub eps_positivity: bool,
    /// `a_2 ≥ 1`, which follows from the previous check for sorted integers
    /// and forces `a_3, …, a_{n−1} ≥ 1`.
    pub second_degree_positive: bool,
    /// `a_n ≥ 2 + k`
    pub top_degree: bool,
    /// `Σ a_i ≥ n`
    pub total: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "first_failing", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail(CheckName),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeCertificate {
    pub splitting: SplittingType,
    pub k: i64,
    pub checks: CertificateChecks,
    pub degree_sum: i64,
    /// Lower bound `1 + (n − 3) + 2` delivered by the chain.
    pub implied_bound: i64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

pub fn check_certificate(splitting: &SplittingType, k: i64, n: usize) -> Result<DegreeCertificate> {
    if n < 3 {
        return Err(Error::OutOfScope(format!("the degree chain needs n >= 3, got n = {n}")));
    }
    if splitting.n() != n {
        return Err(Error::Dimension(format!("splitting has {} degrees for n = {n}", splitting.n())));
    }
    if k < 0 {
        return Err(Error::Domain(format!("vanishing order k = {k} is negative")));
    }
    let a = splitting.degrees();
    let degree_sum = splitting.total();
    let n_i = n as i64;
    let checks = CertificateChecks {
        eps_positivity: a[0] + a[1] >= 1,
        second_degree_positive: a[1] >= 1,
        top_degree: a[n - 1] >= 2 + k,
        total: degree_sum >= n_i,
    };
    let verdict = if !checks.eps_positivity {
        Verdict::Fail(CheckName::EpsPositivity)
    } else if !checks.top_degree {
        Verdict::Fail(CheckName::TopDegree)
    } else if !checks.total {
        Verdict::Fail(CheckName::Total)
    } else {
        Verdict::Pass
    };
    Ok(DegreeCertificate {
        splitting: splitting.clone(),
        k,
        checks,
        degree_sum,
        implied_bound: 1 + (n_i - 3) + 2,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassificationResult {
    ProjectiveSpaceOrQuadric,
    DelPezzo,
    Undetermined,
}

/// Lookup of the classification available for pseudoindex `i` in dimension `n`.
pub fn classify_by_pseudoindex(i: u32, n: u32) -> ClassificationResult {
    if n == 2 && i >= 1 {
        ClassificationResult::DelPezzo
    } else if n >= 3 && i >= n {
        ClassificationResult::ProjectiveSpaceOrQuadric
    } else {
        ClassificationResult::Undetermined
    }
}

/// Pseudoindex lower bound `n − m + 2` under m-positive bisectional curvature.
pub fn m_positivity_bound(n: i64, m: i64) -> Result<i64> {
    if m < 1 {
        return Err(Error::Domain(format!("m must be at least 1, got {m}")));
    }
    if m >= n {
        return Err(Error::OutOfScope(format!("m = {m} >= n = {n} imposes no restriction")));
    }
    Ok(n - m + 2)
}

/// All ascending tuples of length `n` with entries in `lo..=hi`.
pub fn sorted_tuples(n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, start: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..=hi {
            cur.push(v);
            rec(n, v, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, lo, hi, &mut Vec::with_capacity(n), &mut out);
    out
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SoundnessReport {
    pub checked: usize,
    pub passing: usize,
    /// Passing certificates with `Σ a_i < n`; must stay empty.
    pub violations: Vec<(Vec<i64>, i64)>,
    /// First passing tuple with `Σ a_i = n`, per `n`.
    pub witnesses: BTreeMap<usize, (Vec<i64>, i64)>,
}

/// Brute-force check of the chain over a box of sorted tuples.
pub fn soundness_sweep(ns: &[usize], ks: &[i64], lo: i64, hi: i64) -> Result<SoundnessReport> {
    let mut report = SoundnessReport::default();
    for &n in ns {
        for tuple in sorted_tuples(n, lo, hi) {
            let st = SplittingType::from_sorted(tuple)?;
            for &k in ks {
                let cert = check_certificate(&st, k, n)?;
                report.checked += 1;
                if !cert.verdict.passed() {
                    continue;
                }
                report.passing += 1;
                let a = st.degrees();
                // The chain derives the total from the first two checks alone.
                let chain_total = cert.checks.eps_positivity && cert.checks.top_degree;
                if !chain_total || cert.degree_sum < n as i64 {
                    report.violations.push((a.to_vec(), k));
                }
                if cert.degree_sum == n as i64 {
                    report.witnesses.entry(n).or_insert_with(|| (a.to_vec(), k));
                }
            }
        }
    }
    Ok(report)
}

/// Whether the first two checks alone force the total, over the same box.
pub fn chain_implication_holds(ns: &[usize], ks: &[i64], lo: i64, hi: i64) -> Result<bool> {
    for &n in ns {
        for tuple in sorted_tuples(n, lo, hi) {
            let st = SplittingType::from_sorted(tuple)?;
            for &k in ks {
                let c = check_certificate(&st, k, n)?.checks;
                if c.eps_positivity && !c.second_degree_positive {
                    return Ok(false);
                }
                if c.eps_positivity && c.top_degree && !c.total {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(v: &[i64]) -> SplittingType {
        SplittingType::new(v.to_vec()).unwrap()
    }

    #[test]
    fn certificate_examples() {
        let c = check_certificate(&st(&[-1, 2, 2]), 0, 3).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert_eq!(c.degree_sum, 3);
        assert_eq!(c.implied_bound, 3);

        let c = check_certificate(&st(&[0, 1, 1, 2]), 0, 4).unwrap();
        assert!(c.verdict.passed());
        assert_eq!(c.degree_sum, 4);

        let c = check_certificate(&st(&[0, 0, 2]), 0, 3).unwrap();
        assert_eq!(c.verdict, Verdict::Fail(CheckName::EpsPositivity));
    }

    #[test]
    fn top_degree_tracks_vanishing_order() {
        let c = check_certificate(&st(&[1, 1, 2]), 1, 3).unwrap();
        assert_eq!(c.verdict, Verdict::Fail(CheckName::TopDegree));
        assert!(check_certificate(&st(&[1, 1, 3]), 1, 3).unwrap().verdict.passed());
    }

    #[test]
    fn certificate_errors() {
        assert!(matches!(check_certificate(&st(&[1, 1]), 0, 2), Err(Error::OutOfScope(_))));
        assert!(matches!(check_certificate(&st(&[1, 1, 2]), 0, 4), Err(Error::Dimension(_))));
        assert!(matches!(check_certificate(&st(&[1, 1, 2]), -1, 3), Err(Error::Domain(_))));
        assert!(SplittingType::from_sorted(vec![2, 1]).is_err());
        assert!(SplittingType::new(vec![]).is_err());
    }

    #[test]
    fn certificate_json_shape() {
        let c = check_certificate(&st(&[0, 0, 2]), 0, 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["verdict"], "fail");
        assert_eq!(v["first_failing"], "eps_positivity");
        assert_eq!(v["checks"]["second_degree_positive"], false);
    }

    #[test]
    fn classification_lookup() {
        assert_eq!(classify_by_pseudoindex(4, 4), ClassificationResult::ProjectiveSpaceOrQuadric);
        assert_eq!(classify_by_pseudoindex(2, 2), ClassificationResult::DelPezzo);
        assert_eq!(classify_by_pseudoindex(2, 5), ClassificationResult::Undetermined);
        assert_eq!(classify_by_pseudoindex(1, 1), ClassificationResult::Undetermined);
    }

    #[test]
    fn m_positivity_examples() {
        assert_eq!(m_positivity_bound(5, 3).unwrap(), 4);
        assert_eq!(m_positivity_bound(3, 2).unwrap(), 3);
        assert_eq!(m_positivity_bound(4, 1).unwrap(), 5);
        assert!(matches!(m_positivity_bound(3, 3), Err(Error::OutOfScope(_))));
        assert!(m_positivity_bound(3, 0).is_err());
        let i = m_positivity_bound(3, 2).unwrap() as u32;
        assert_eq!(classify_by_pseudoindex(i, 3), ClassificationResult::ProjectiveSpaceOrQuadric);
    }

    #[test]
    fn tuple_enumeration_counts() {
        // multisets of size n from 10 values: C(10 + n − 1, n)
        assert_eq!(sorted_tuples(3, -3, 6).len(), 220);
        assert_eq!(sorted_tuples(4, -3, 6).len(), 715);
        assert_eq!(sorted_tuples(5, -3, 6).len(), 2002);
    }

    #[test]
    fn small_box_is_sound_and_tight() {
        let r = soundness_sweep(&[3, 4], &[0, 1], -2, 4).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.witnesses.len(), 2);
        assert!(chain_implication_holds(&[3, 4], &[0, 1], -2, 4).unwrap());
    }

    proptest! {
        #[test]
        fn bound_is_consistent_with_two_positivity(n in 3i64..40) {
            prop_assert_eq!(m_positivity_bound(n, 2).unwrap(), n);
        }

        #[test]
        fn passing_certificates_reach_n(mut a in proptest::collection::vec(-5i64..9, 3..8), k in 0i64..4) {
            a.sort_unstable();
            let n = a.len();
            let c = check_certificate(&SplittingType::from_sorted(a).unwrap(), k, n).unwrap();
            if c.checks.eps_positivity && c.checks.top_degree {
                prop_assert!(c.checks.second_degree_positive);
                prop_assert!(c.degree_sum >= n as i64);
                prop_assert!(c.verdict.passed());
            }
        }
    }
}
