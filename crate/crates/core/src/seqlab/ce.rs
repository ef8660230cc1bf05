//! Left-c.e. sequences given by staged enumerations, and the
//! convergence-modulus reconstruction of one from the other.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{KlbError, Result};
use crate::seqlab::{conditional_estimator_cost, estimator_cost, PrefixSource, SourceKind};

/// Approximations `x_0 <= x_1 <= ...` (as binary fractions of fixed length
/// `horizon`) of a left-c.e. real. The last stage is the limit; any stage past
/// the end repeats it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StagedEnumerator {
    pub name: String,
    horizon: usize,
    stages: Vec<BitString>,
}

impl StagedEnumerator {
    pub fn new(name: impl Into<String>, stages: Vec<BitString>) -> Result<Self> {
        let Some(first) = stages.first() else {
            return Err(KlbError::InvalidParams("an enumerator needs at least one stage".into()));
        };
        let horizon = first.len();
        if let Some(bad) = stages.iter().position(|s| s.len() != horizon) {
            return Err(KlbError::LengthMismatch {
                expected: horizon,
                actual: stages[bad].len(),
            });
        }
        if let Some(s) = stages.windows(2).position(|w| w[0] > w[1]) {
            return Err(KlbError::InvalidParams(format!("stage {} decreases the approximation", s + 1)));
        }
        Ok(StagedEnumerator {
            name: name.into(),
            horizon,
            stages,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of distinct stages; stage `stage_count() - 1` is the limit.
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, s: usize) -> &BitString {
        &self.stages[s.min(self.stages.len() - 1)]
    }

    pub fn limit(&self) -> &BitString {
        self.stages.last().expect("non-empty")
    }

    pub fn limit_source(&self) -> PrefixSource {
        let mut src = PrefixSource::literal(self.limit().clone());
        src.kind = SourceKind::EnumeratorLimit { name: self.name.clone() };
        src
    }

    /// `min { s <= budget : x_s↾n = x↾n }`, found by running the enumeration
    /// against the known limit.
    pub fn modulus(&self, n: usize, budget: usize) -> Result<usize> {
        let target = self.limit().prefix(n)?;
        self.first_stage_matching(&target, budget)
    }

    /// First stage whose `n`-bit prefix equals `prefix`. Because stages only
    /// increase, when `prefix` is the limit's prefix this is the modulus.
    pub fn first_stage_matching(&self, prefix: &BitString, budget: usize) -> Result<usize> {
        let n = prefix.len();
        (0..=budget)
            .find(|&s| self.stage(s).as_slice()[..n] == *prefix.as_slice())
            .ok_or(KlbError::StageBudgetExhausted { budget, n })
    }
}

/// Seed of the bundled toy enumerators.
pub const TOY_SEED: u64 = 0x5eed;

/// The bundled pair, [`seeded_toy_enumerators`] at [`TOY_SEED`].
pub fn toy_enumerators() -> (StagedEnumerator, StagedEnumerator) {
    seeded_toy_enumerators(TOY_SEED)
}

/// Two enumerators on 64 bits sharing one stage clock: the characteristic
/// sequence of a set enumerated one element at a time in a seeded order, and a
/// real approached from below by dyadic increments (so carries rewrite earlier
/// bits).
pub fn seeded_toy_enumerators(seed: u64) -> (StagedEnumerator, StagedEnumerator) {
    const HORIZON: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // set: members chosen at random, enumerated at random stages
    let members: Vec<usize> = (0..HORIZON).filter(|_| rng.gen_bool(0.5)).collect();
    let mut order = members.clone();
    order.shuffle(&mut rng);
    let mut set_stages = vec![BitString::zeros(HORIZON)];
    let mut current = vec![false; HORIZON];
    for &m in &order {
        for _ in 0..rng.gen_range(0..4) {
            set_stages.push(current.clone().into());
        }
        current[m] = true;
        set_stages.push(current.clone().into());
    }

    // real: add 2^-k with k chosen near the remaining gap
    let target: u64 = rng.gen();
    let mut value = 0u64;
    let mut real_stages = vec![BitString::from_uint(0, HORIZON)];
    while value < target {
        let gap = target - value;
        let k = (HORIZON - gap.ilog2() as usize + rng.gen_range(0..3)).min(HORIZON);
        value += 1u64 << (HORIZON - k);
        real_stages.push(BitString::from_uint(value, HORIZON));
    }

    (
        StagedEnumerator::new("toy_set", set_stages).expect("set stages increase"),
        StagedEnumerator::new("toy_real", real_stages).expect("real stages increase"),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CeRow {
    pub n: usize,
    pub cm_x: usize,
    pub cm_y: usize,
    /// `cm_x(n) > cm_y(n)`.
    pub strict: bool,
    /// Output of the reconstruction; attempted whenever `cm_x(n) >= cm_y(n)`.
    pub reconstructed: Option<BitString>,
    pub success: Option<bool>,
    /// Estimator cost of `y↾n` given `x↾n`, and unconditionally.
    pub conditional_cost: u64,
    pub plain_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CeReport {
    pub x: String,
    pub y: String,
    pub budget: usize,
    pub rows: Vec<CeRow>,
}

impl CeReport {
    /// True iff every reconstruction at a strict row reproduced `y↾n`.
    pub fn all_strict_succeed(&self) -> bool {
        self.rows.iter().filter(|r| r.strict).all(|r| r.success == Some(true))
    }
}

/// Given only `x↾n` and the two enumerations: find `s = cm_x(n)` by running
/// the `x` enumeration until its prefix matches, then read off `y_s↾n`.
pub fn reconstruct(x_prefix: &BitString, enum_x: &StagedEnumerator, enum_y: &StagedEnumerator, budget: usize) -> Result<BitString> {
    let s = enum_x.first_stage_matching(x_prefix, budget)?;
    enum_y.stage(s).prefix(x_prefix.len())
}

/// For every `n` in `1..=n_max`: both moduli, the reconstruction where
/// `cm_x(n) >= cm_y(n)` checked against the limit of `enum_y`, and the
/// estimator costs of `y↾n`.
pub fn ce_dependence_demo(
    enum_x: &StagedEnumerator,
    enum_y: &StagedEnumerator,
    n_max: usize,
    budget: usize,
) -> Result<CeReport> {
    let horizon = enum_x.horizon().min(enum_y.horizon());
    if n_max > horizon {
        return Err(KlbError::HorizonExceeded {
            requested: n_max,
            horizon,
        });
    }
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let cm_x = enum_x.modulus(n, budget)?;
        let cm_y = enum_y.modulus(n, budget)?;
        let x_n = enum_x.limit().prefix(n)?;
        let y_n = enum_y.limit().prefix(n)?;
        let (reconstructed, success) = if cm_x >= cm_y {
            let r = reconstruct(&x_n, enum_x, enum_y, budget)?;
            let ok = r == y_n;
            (Some(r), Some(ok))
        } else {
            (None, None)
        };
        rows.push(CeRow {
            n,
            cm_x,
            cm_y,
            strict: cm_x > cm_y,
            reconstructed,
            success,
            conditional_cost: conditional_estimator_cost(&y_n, &x_n),
            plain_cost: estimator_cost(&y_n).total_bits,
        });
    }
    Ok(CeReport {
        x: enum_x.name.clone(),
        y: enum_y.name.clone(),
        budget,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_decreasing_stages() {
        assert!(StagedEnumerator::new("bad", vec![bs("10"), bs("01")]).is_err());
        assert!(StagedEnumerator::new("bad", vec![bs("10"), bs("1")]).is_err());
        assert!(StagedEnumerator::new("bad", vec![]).is_err());
    }

    #[test]
    fn moduli_on_a_small_enumeration() {
        // 000 -> 001 -> 010 -> 100
        let e = StagedEnumerator::new("e", vec![bs("000"), bs("001"), bs("010"), bs("100")]).unwrap();
        assert_eq!(e.modulus(1, 10).unwrap(), 3);
        assert_eq!(e.modulus(0, 10).unwrap(), 0);
        assert!(matches!(e.modulus(1, 2), Err(KlbError::StageBudgetExhausted { budget: 2, n: 1 })));
    }

    #[test]
    fn toys_are_valid_and_disagree_on_moduli() {
        let (x, y) = toy_enumerators();
        assert_eq!(x.horizon(), 64);
        assert_eq!(y.horizon(), 64);
        let budget = x.stage_count().max(y.stage_count());
        let report = ce_dependence_demo(&x, &y, 64, budget).unwrap();
        assert!(report.rows.iter().any(|r| r.strict));
        assert!(report.all_strict_succeed());
        let back = ce_dependence_demo(&y, &x, 64, budget).unwrap();
        assert!(back.rows.iter().any(|r| r.strict));
        assert!(back.all_strict_succeed());
    }

    #[test]
    fn equal_sequences_reconstruct_trivially() {
        let (x, _) = toy_enumerators();
        let report = ce_dependence_demo(&x, &x, 64, x.stage_count()).unwrap();
        assert!(report.rows.iter().all(|r| !r.strict && r.success == Some(true)));
    }

    #[test]
    fn small_budget_is_an_error() {
        let (x, y) = toy_enumerators();
        assert!(matches!(
            ce_dependence_demo(&x, &y, 64, 1),
            Err(KlbError::StageBudgetExhausted { .. })
        ));
    }
}
