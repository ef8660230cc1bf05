//! Measured RM-1 constants that stand in for the `O(1)` and `O(log)` terms.
//!
//! Pair sweeps run over all `(x, y)` with `|x|, |y| <= 4`. Pairs are ranked
//! `rank(x)·S + rank(y)` (shortlex ranks, `S` strings in the sweep); even ranks
//! form the calibration half, odd ranks the holdout half. Pair constants are
//! measured on the calibration half only.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::{clog, BitString};
use crate::error::Result;
use crate::indep::{equivalence_row, lemma_three_defect, tuple_independence};
use crate::oracle::{lifting_defect, symmetry_defect, Caps, ComplexityOracle};
use crate::refmachine::{self, encode_copy_conditional, encode_literal, MachineConfig, RM1_VERSION};

pub const BUNDLED_CALIBRATION: &str = include_str!("../calibration.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub caps: Caps,
    /// Pair sweeps cover `|x|, |y| <= pair_max_len`.
    pub pair_max_len: usize,
    /// Lemma triples have every `|x_i| = triple_len`; the joint literal
    /// `3·triple_len + c_lit` must fit under the length cap.
    pub triple_len: usize,
    /// Literal timing is measured for `|x| <= literal_max_len`.
    pub literal_max_len: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            caps: Caps::default(),
            pair_max_len: 4,
            triple_len: 3,
            literal_max_len: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub rm1_version: String,
    pub sweep: SweepParams,
    /// `|encode_literal(x)| − |x|`
    pub c_lit: usize,
    /// `|encode_copy_conditional()|`
    pub c_copy: usize,
    /// Literal programs halt within `lit_budget_slope·|x| + lit_budget_intercept` steps.
    pub lit_budget_slope: u64,
    pub lit_budget_intercept: u64,
    /// Max `|C(xy) − C(x|y) − C(y)|` on the calibration half.
    pub d_si: i64,
    pub a_eq: f64,
    /// Max `gap − a_eq·(clog|x| + clog|y|)` on the calibration half.
    pub b_eq: f64,
    /// Max `C(xy) − C(x) − C(y) − 2·clog|x|` over the whole pair sweep.
    pub c_pair: i64,
    /// Max `C^y(x) − C(x|y) − 2·clog|y|` over the whole pair sweep.
    pub lift_max: i64,
    /// c used for the lemma sweep.
    pub c_l1: f64,
    /// Max lemma defect over `c_l1`-independent triples.
    pub b_l1: f64,
    /// Bound `C(w) >= |w| − a_cert·clog(n) − b_cert` used by certification.
    pub a_cert: f64,
    pub b_cert: f64,
}

impl CalibrationRecord {
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED_CALIBRATION).expect("bundled calibration parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// One pair of the sweep with its rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPair {
    pub rank: u64,
    pub x: BitString,
    pub y: BitString,
}

impl SweepPair {
    pub fn is_calibration(&self) -> bool {
        self.rank.is_multiple_of(2)
    }
}

pub fn sweep_pairs(max_len: usize) -> Vec<SweepPair> {
    let strings: Vec<BitString> = BitString::all_up_to(max_len).collect();
    let s = strings.len() as u64;
    strings
        .iter()
        .flat_map(|x| {
            strings.iter().map(move |y| SweepPair {
                rank: x.shortlex_rank() * s + y.shortlex_rank(),
                x: x.clone(),
                y: y.clone(),
            })
        })
        .collect()
}

/// Smallest `(a, b)` with `steps(ℓ) <= a·ℓ + b` for every literal up to `max_len`,
/// taking `a` from the two shortest lengths.
fn literal_timing(max_len: usize) -> (u64, u64) {
    let steps = |len: usize| {
        BitString::all_of_len(len)
            .map(|x| refmachine::run(&encode_literal(&x), &MachineConfig::new(u64::MAX)).steps_used)
            .max()
            .expect("at least one string")
    };
    let (s0, s1) = (steps(0), steps(1));
    let slope = s1.saturating_sub(s0);
    let intercept = (0..=max_len)
        .map(|l| steps(l).saturating_sub(slope * l as u64))
        .max()
        .unwrap_or(s0);
    (slope, intercept)
}

pub fn calibrate(sweep: SweepParams) -> Result<CalibrationRecord> {
    let oracle = ComplexityOracle::new(sweep.caps)?;
    let (lit_budget_slope, lit_budget_intercept) = literal_timing(sweep.literal_max_len);
    let a_eq = 1.0;

    let mut d_si = 0i64;
    let mut b_eq = f64::NEG_INFINITY;
    let mut c_pair = i64::MIN;
    let mut lift_max = i64::MIN;
    for pair in sweep_pairs(sweep.pair_max_len) {
        let (x, y) = (&pair.x, &pair.y);
        if pair.is_calibration() {
            d_si = d_si.max(symmetry_defect(&oracle, x, y)?);
            let row = equivalence_row(&oracle, x, y, a_eq, 0.0)?;
            b_eq = b_eq.max(row.gap as f64 - row.allowance);
        }
        let pair_excess = oracle.c(&x.concat(y))? as i64 - oracle.c(x)? as i64 - oracle.c(y)? as i64 - 2 * clog(x.len()) as i64;
        c_pair = c_pair.max(pair_excess);
        lift_max = lift_max.max(lifting_defect(&oracle, x, y)?);
    }

    let c_l1 = 1.0;
    let mut b_l1 = f64::NEG_INFINITY;
    let strings: Vec<BitString> = BitString::all_of_len(sweep.triple_len).collect();
    for x1 in &strings {
        for x2 in &strings {
            for x3 in &strings {
                let triple = [x1.clone(), x2.clone(), x3.clone()];
                if tuple_independence(&oracle, &triple, c_l1)?.holds {
                    b_l1 = b_l1.max(lemma_three_defect(&oracle, x1, x2, x3, c_l1)?);
                }
            }
        }
    }

    Ok(CalibrationRecord {
        rm1_version: RM1_VERSION.to_string(),
        c_lit: encode_literal(&BitString::new()).len(),
        c_copy: encode_copy_conditional().len(),
        lit_budget_slope,
        lit_budget_intercept,
        d_si,
        a_eq,
        b_eq,
        c_pair,
        lift_max,
        c_l1,
        b_l1,
        a_cert: 1.0,
        b_cert: 0.0,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_split() {
        let pairs = sweep_pairs(4);
        assert_eq!(pairs.len(), 31 * 31);
        let cal = pairs.iter().filter(|p| p.is_calibration()).count();
        assert_eq!(cal, 481);
        assert_eq!(pairs[0].rank, 0);
        assert_eq!(pairs[32].rank, 32);
    }

    #[test]
    fn literal_timing_matches_machine_constants() {
        assert_eq!(
            literal_timing(6),
            (refmachine::LIT_BUDGET_SLOPE, refmachine::LIT_BUDGET_INTERCEPT)
        );
    }

    #[test]
    fn bundled_record_matches_machine() {
        let r = CalibrationRecord::bundled();
        assert_eq!(r.rm1_version, RM1_VERSION);
        assert_eq!(r.c_lit, refmachine::LITERAL_HEADER_LEN);
        assert_eq!(r.c_copy, encode_copy_conditional().len());
    }
}
