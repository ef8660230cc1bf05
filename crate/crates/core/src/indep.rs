//! Finitary-independence analysis at finite horizons.
//!
//! Every `O(log n + log m)` allowance is replaced by an explicit affine bound
//! whose constants come from the calibration record, and every "for all n"
//! claim is checked only up to the declared horizon.

use serde::Serialize;

use crate::bits::{clog, BitString};
use crate::error::{KlbError, Result};
use crate::oracle::{Caps, ComplexityOracle, ComplexityResult};
use crate::seqlab::PrefixSource;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepEntry {
    pub n: usize,
    pub m: usize,
    pub cx: usize,
    pub cy: usize,
    pub cjoint: usize,
    /// `C(x↾n) + C(y↾m) − C(x↾n y↾m)`
    pub dep: i64,
    /// `dep / ceil(log2(n+1) + log2(m+1))`
    pub norm_dep: f64,
    /// One of the three values is only an upper bound.
    pub saturated: bool,
}

/// `dep(n, m)` for `1 <= n <= n_max`, `1 <= m <= m_max`, row-major in `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependencyMatrix {
    pub n_max: usize,
    pub m_max: usize,
    pub caps: Caps,
    pub entries: Vec<DepEntry>,
}

impl DependencyMatrix {
    pub fn get(&self, n: usize, m: usize) -> Option<&DepEntry> {
        if n == 0 || m == 0 || n > self.n_max || m > self.m_max {
            return None;
        }
        self.entries.get((n - 1) * self.m_max + (m - 1))
    }

    pub fn any_saturated(&self) -> bool {
        self.entries.iter().any(|e| e.saturated)
    }
}

fn log_allowance(n: usize, m: usize) -> f64 {
    (((n + 1) as f64).log2() + ((m + 1) as f64).log2()).ceil()
}

fn exact(r: ComplexityResult, target: &BitString, caps: Caps) -> Result<(usize, bool)> {
    Ok((r.exact(target.len(), caps.max_len)?, r.budget_saturated))
}

pub fn dependency_matrix(
    oracle: &ComplexityOracle,
    x: &PrefixSource,
    y: &PrefixSource,
    n_max: usize,
    m_max: usize,
) -> Result<DependencyMatrix> {
    if n_max == 0 || m_max == 0 {
        return Err(KlbError::InvalidParams("the matrix starts at n = m = 1".into()));
    }
    let caps = oracle.caps();
    let empty = BitString::new();
    let xs = (1..=n_max).map(|n| x.prefix(n)).collect::<Result<Vec<_>>>()?;
    let ys = (1..=m_max).map(|m| y.prefix(m)).collect::<Result<Vec<_>>>()?;
    let cxs = xs
        .iter()
        .map(|p| exact(oracle.query(p, &empty, None), p, caps))
        .collect::<Result<Vec<_>>>()?;
    let cys = ys
        .iter()
        .map(|p| exact(oracle.query(p, &empty, None), p, caps))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(n_max * m_max);
    for (i, xp) in xs.iter().enumerate() {
        for (j, yp) in ys.iter().enumerate() {
            let joint = xp.concat(yp);
            let (cjoint, sj) = exact(oracle.query(&joint, &empty, None), &joint, caps)?;
            let ((cx, sx), (cy, sy)) = (cxs[i], cys[j]);
            let (n, m) = (i + 1, j + 1);
            let dep = cx as i64 + cy as i64 - cjoint as i64;
            entries.push(DepEntry {
                n,
                m,
                cx,
                cy,
                cjoint,
                dep,
                norm_dep: dep as f64 / log_allowance(n, m),
                saturated: sx || sy || sj,
            });
        }
    }
    Ok(DependencyMatrix {
        n_max,
        m_max,
        caps,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    FinitaryIndependent,
    Dependent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceVerdict {
    pub kind: VerdictKind,
    /// Least-area affine envelope `dep <= a·(log2(n+1) + log2(m+1)) + b` over
    /// the matrix, with `a, b >= 0`.
    pub slope: f64,
    pub intercept: f64,
    pub worst: (usize, usize),
    pub worst_norm_dep: f64,
    pub threshold: f64,
    pub horizon: (usize, usize),
}

/// Minimizes `a·mean(l) + b` subject to `d_i <= a·l_i + b`, `a, b >= 0`.
/// The optimum sits at `a = 0` or at a slope through two points.
fn upper_envelope(points: &[(f64, f64)]) -> (f64, f64) {
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let intercept_for = |a: f64| points.iter().map(|&(l, d)| d - a * l).fold(0.0, f64::max);
    let mut candidates = vec![0.0];
    for (i, &(l1, d1)) in points.iter().enumerate() {
        for &(l2, d2) in &points[i + 1..] {
            if l2 != l1 {
                let a = (d2 - d1) / (l2 - l1);
                if a > 0.0 {
                    candidates.push(a);
                }
            }
        }
    }
    candidates
        .into_iter()
        .map(|a| (a, intercept_for(a)))
        .min_by(|x, y| (x.0 * mean + x.1).total_cmp(&(y.0 * mean + y.1)).then(x.0.total_cmp(&y.0)))
        .expect("a = 0 is always a candidate")
}

pub fn verdict(matrix: &DependencyMatrix, threshold: f64) -> IndependenceVerdict {
    let points: Vec<(f64, f64)> = matrix
        .entries
        .iter()
        .map(|e| (((e.n + 1) as f64).log2() + ((e.m + 1) as f64).log2(), e.dep as f64))
        .collect();
    let (slope, intercept) = upper_envelope(&points);
    let worst = matrix
        .entries
        .iter()
        .fold(&matrix.entries[0], |w, e| if e.norm_dep > w.norm_dep { e } else { w });
    let kind = if matrix.any_saturated() {
        VerdictKind::Inconclusive
    } else if worst.norm_dep > threshold {
        VerdictKind::Dependent
    } else {
        VerdictKind::FinitaryIndependent
    };
    IndependenceVerdict {
        kind,
        slope,
        intercept,
        worst: (worst.n, worst.m),
        worst_norm_dep: worst.norm_dep,
        threshold,
        horizon: (matrix.n_max, matrix.m_max),
    }
}

/// `C(x↾n) − C(x↾n | y↾m)`.
pub fn conditional_deficiency(oracle: &ComplexityOracle, x: &PrefixSource, y: &PrefixSource, n: usize, m: usize) -> Result<i64> {
    if m == 0 {
        return Err(KlbError::InvalidParams("m must be at least 1".into()));
    }
    let (xn, ym) = (x.prefix(n)?, y.prefix(m)?);
    Ok(oracle.c(&xn)? as i64 - oracle.c_given(&xn, &ym)? as i64)
}

/// `(dep(n, n), C(x↾n) − C(x↾n | y↾n))`.
pub fn diagonal_deficiency(oracle: &ComplexityOracle, x: &PrefixSource, y: &PrefixSource, n: usize) -> Result<(i64, i64)> {
    let (xn, yn) = (x.prefix(n)?, y.prefix(n)?);
    Ok((string_joint_deficiency(oracle, &xn, &yn)?, string_conditional_deficiency(oracle, &xn, &yn)?))
}

/// `C(u) + C(v) − C(uv)`.
pub fn string_joint_deficiency(oracle: &ComplexityOracle, u: &BitString, v: &BitString) -> Result<i64> {
    Ok(oracle.c(u)? as i64 + oracle.c(v)? as i64 - oracle.c(&u.concat(v))? as i64)
}

/// `C(u) − C(u | v)`.
pub fn string_conditional_deficiency(oracle: &ComplexityOracle, u: &BitString, v: &BitString) -> Result<i64> {
    Ok(oracle.c(u)? as i64 - oracle.c_given(u, v)? as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub n: usize,
    pub m: usize,
    pub joint: i64,
    pub conditional: i64,
    /// `|joint − conditional|`
    pub gap: i64,
    pub allowance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceAudit {
    pub a_eq: f64,
    pub b_eq: f64,
    pub rows: Vec<EquivalenceRow>,
    pub max_gap: i64,
    pub violations: usize,
}

impl EquivalenceAudit {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Gap between the joint and conditional deficiencies of two strings, and its
/// allowance `a_eq·(clog n + clog m) + b_eq`.
pub fn equivalence_row(oracle: &ComplexityOracle, u: &BitString, v: &BitString, a_eq: f64, b_eq: f64) -> Result<EquivalenceRow> {
    let joint = string_joint_deficiency(oracle, u, v)?;
    let conditional = string_conditional_deficiency(oracle, u, v)?;
    Ok(EquivalenceRow {
        n: u.len(),
        m: v.len(),
        joint,
        conditional,
        gap: (joint - conditional).abs(),
        allowance: a_eq * (clog(u.len()) + clog(v.len())) as f64 + b_eq,
    })
}

/// Checks the joint/conditional gap on every `(n, m)` with `1 <= n, m <= n_max`.
pub fn equivalence_audit(
    oracle: &ComplexityOracle,
    x: &PrefixSource,
    y: &PrefixSource,
    n_max: usize,
    a_eq: f64,
    b_eq: f64,
) -> Result<EquivalenceAudit> {
    let mut rows = Vec::with_capacity(n_max * n_max);
    for n in 1..=n_max {
        let xn = x.prefix(n)?;
        for m in 1..=n_max {
            rows.push(equivalence_row(oracle, &xn, &y.prefix(m)?, a_eq, b_eq)?);
        }
    }
    Ok(EquivalenceAudit {
        a_eq,
        b_eq,
        max_gap: rows.iter().map(|r| r.gap).max().unwrap_or(0),
        violations: rows.iter().filter(|r| r.gap as f64 > r.allowance).count(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TupleIndependenceReport<F> {
    pub c_value: F,
    pub holds: bool,
    /// `ΣC(x_i) − c·Σclog(|x_i|) − C(x_1…x_k)`
    pub defect: F,
    pub individual: Vec<usize>,
    pub joint: usize,
    pub log_sum: usize,
}

/// c-independence of a string tuple, with the `log|x_i|` terms realized as
/// `ceil(log2(|x_i| + 1))`.
pub fn tuple_independence<F: Real>(oracle: &ComplexityOracle, strings: &[BitString], c: F) -> Result<TupleIndependenceReport<F>> {
    if strings.len() < 2 {
        return Err(KlbError::InvalidParams(format!("need at least two strings, got {}", strings.len())));
    }
    let individual = strings.iter().map(|s| oracle.c(s)).collect::<Result<Vec<_>>>()?;
    let joined = strings.iter().fold(BitString::new(), |acc, s| acc.concat(s));
    let joint = oracle.c(&joined)?;
    let log_sum: usize = strings.iter().map(|s| clog(s.len())).sum();
    let sum: usize = individual.iter().sum();
    let defect = F::from_usize(sum).expect("fits") - c * F::from_usize(log_sum).expect("fits") - F::from_usize(joint).expect("fits");
    Ok(TupleIndependenceReport {
        c_value: c,
        holds: defect <= F::zero(),
        defect,
        individual,
        joint,
        log_sum,
    })
}

/// `C(x1) − C(x1 | x2 x3) − (c+2)·Σclog(|x_i|)`.
pub fn lemma_three_defect<F: Real>(oracle: &ComplexityOracle, x1: &BitString, x2: &BitString, x3: &BitString, c: F) -> Result<F> {
    let gap = oracle.c(x1)? as i64 - oracle.c_given(x1, &x2.concat(x3))? as i64;
    let logs = clog(x1.len()) + clog(x2.len()) + clog(x3.len());
    let two = F::from_u8(2).expect("fits");
    Ok(F::from_i64(gap).expect("fits") - (c + two) * F::from_usize(logs).expect("fits"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogClassification<F> {
    /// `value(n) <= a·clog(n) + b` at every measured `n`.
    pub logarithmic: bool,
    /// `value(n) > a·log2(n+1)` at every measured `n >= onset`, and at least one
    /// such `n` was measured. Covers every `c <= a` at once.
    pub superlogarithmic: bool,
    pub a: F,
    pub b: F,
    pub onset: usize,
    pub horizon: usize,
    /// First `n` breaking the logarithmic bound, if any.
    pub log_witness: Option<usize>,
}

pub fn classify_logarithmic<F: Real>(profile: &[(usize, F)], a: F, b: F, onset: usize) -> Result<LogClassification<F>> {
    if profile.is_empty() {
        return Err(KlbError::EmptyProfile);
    }
    let to_f = |n: usize| F::from_usize(n).expect("fits");
    let log_witness = profile
        .iter()
        .find(|&&(n, v)| v > a * to_f(clog(n)) + b)
        .map(|&(n, _)| n);
    let tail: Vec<_> = profile.iter().filter(|&&(n, _)| n >= onset).collect();
    let superlogarithmic = !tail.is_empty() && tail.iter().all(|&&(n, v)| v > a * to_f(n + 1).log2());
    Ok(LogClassification {
        logarithmic: log_witness.is_none(),
        superlogarithmic,
        a,
        b,
        onset,
        horizon: profile.iter().map(|p| p.0).max().unwrap_or(0),
        log_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> ComplexityOracle {
        ComplexityOracle::new(Caps::default()).unwrap()
    }

    #[test]
    fn matrix_indexing_starts_at_one() {
        let o = oracle();
        let z = PrefixSource::zeros(8);
        let m = dependency_matrix(&o, &z, &z, 3, 2).unwrap();
        assert_eq!(m.entries.len(), 6);
        assert!(m.get(0, 1).is_none());
        assert_eq!(m.get(3, 2).map(|e| (e.n, e.m)), Some((3, 2)));
        assert!(dependency_matrix(&o, &z, &z, 0, 2).is_err());
    }

    #[test]
    fn envelope_covers_every_point() {
        let pts = [(1.0, 0.0), (2.0, 3.0), (3.0, 3.5), (4.0, 7.0)];
        let (a, b) = upper_envelope(&pts);
        assert!(a >= 0.0 && b >= 0.0);
        for (l, d) in pts {
            assert!(d <= a * l + b + 1e-9);
        }
        assert_eq!(upper_envelope(&[(1.0, -2.0), (2.0, -1.0)]), (0.0, 0.0));
    }

    #[test]
    fn tuple_needs_two() {
        let o = oracle();
        assert!(tuple_independence(&o, &["01".parse().unwrap()], 1.0f64).is_err());
    }

    #[test]
    fn classification_edges() {
        assert!(matches!(classify_logarithmic::<f64>(&[], 1.0, 1.0, 1), Err(KlbError::EmptyProfile)));
        let flat: Vec<(usize, f64)> = (1..=10).map(|n| (n, 3.0)).collect();
        let c = classify_logarithmic(&flat, 1.0, 3.0, 4).unwrap();
        assert!(c.logarithmic);
        assert!(!c.superlogarithmic);
        let linear: Vec<(usize, f64)> = (1..=64).map(|n| (n, n as f64)).collect();
        let c = classify_logarithmic(&linear, 2.0, 2.0, 16).unwrap();
        assert!(!c.logarithmic);
        assert!(c.superlogarithmic);
        assert_eq!(c.log_witness, Some(11));
        assert!(!classify_logarithmic(&linear, 2.0, 2.0, 100).unwrap().superlogarithmic);
    }
}
