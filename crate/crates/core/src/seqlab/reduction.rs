//! Oracle reductions with use tracking.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{KlbError, Result};
use crate::seqlab::PrefixSource;

/// Oracle handle given to a reduction while it computes one output bit.
/// Every query is logged.
pub struct OracleAccess<'a> {
    source: &'a PrefixSource,
    log: Vec<usize>,
}

impl<'a> OracleAccess<'a> {
    pub fn new(source: &'a PrefixSource) -> Self {
        OracleAccess { source, log: Vec::new() }
    }

    /// Reads oracle bit `i` (1-based).
    pub fn query(&mut self, i: usize) -> Result<bool> {
        if i == 0 {
            return Err(KlbError::InvalidParams("oracle positions start at 1".into()));
        }
        if i > self.source.horizon() {
            return Err(KlbError::HorizonExceeded {
                requested: i,
                horizon: self.source.horizon(),
            });
        }
        self.log.push(i);
        Ok(self.source.bit(i))
    }

    pub fn log(&self) -> &[usize] {
        &self.log
    }

    /// Largest position queried so far, 0 if none.
    pub fn use_so_far(&self) -> usize {
        self.log.iter().copied().max().unwrap_or(0)
    }
}

/// A total oracle procedure computing output bit `n` (1-based).
pub trait Reduction: Send + Sync {
    fn name(&self) -> String;
    fn bit(&self, n: usize, oracle: &mut OracleAccess<'_>) -> Result<bool>;
}

/// The reductions the CLI knows by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinReduction {
    /// `f(x) = x`.
    Identity,
    /// `f(x) = x(1) x(2)0 x(3)000 ...`; bit `n` queries `x(log2 n + 1)` only
    /// when `n` is a power of two.
    DilutePowers,
    /// `f(x) = 000...`, no queries.
    Constant,
    /// `f(x) = x(1) x(3) x(5) ...`.
    OddBits,
}

impl Reduction for BuiltinReduction {
    fn name(&self) -> String {
        self.to_string()
    }

    fn bit(&self, n: usize, oracle: &mut OracleAccess<'_>) -> Result<bool> {
        match self {
            BuiltinReduction::Identity => oracle.query(n),
            BuiltinReduction::DilutePowers => {
                if n.is_power_of_two() {
                    oracle.query(n.trailing_zeros() as usize + 1)
                } else {
                    Ok(false)
                }
            }
            BuiltinReduction::Constant => Ok(false),
            BuiltinReduction::OddBits => oracle.query(2 * n - 1),
        }
    }
}

impl fmt::Display for BuiltinReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BuiltinReduction::Identity => "identity",
            BuiltinReduction::DilutePowers => "dilute_pow2",
            BuiltinReduction::Constant => "constant",
            BuiltinReduction::OddBits => "odd",
        })
    }
}

impl FromStr for BuiltinReduction {
    type Err = KlbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(BuiltinReduction::Identity),
            "dilute_pow2" | "dilute2" => Ok(BuiltinReduction::DilutePowers),
            "constant" => Ok(BuiltinReduction::Constant),
            "odd" => Ok(BuiltinReduction::OddBits),
            other => Err(KlbError::InvalidParams(format!(
                "unknown reduction {other:?} (expected identity, dilute_pow2, constant or odd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionRun {
    pub output: BitString,
    /// `use_profile[n-1]` = largest oracle position queried while computing
    /// output bits `1..=n`.
    pub use_profile: Vec<usize>,
    /// Largest position queried for output bit `n` alone.
    pub bit_use: Vec<usize>,
}

/// Runs `f` on oracle `x` for output bits `1..=n_max`.
pub fn run_reduction(f: &dyn Reduction, x: &PrefixSource, n_max: usize) -> Result<ReductionRun> {
    let mut output = BitString::new();
    let mut use_profile = Vec::with_capacity(n_max);
    let mut bit_use = Vec::with_capacity(n_max);
    let mut running = 0;
    for n in 1..=n_max {
        let mut access = OracleAccess::new(x);
        output.push(f.bit(n, &mut access)?);
        let u = access.use_so_far();
        running = running.max(u);
        bit_use.push(u);
        use_profile.push(running);
    }
    Ok(ReductionRun {
        output,
        use_profile,
        bit_use,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqlab::{dilute_powers, prng_stream, split_odd_even};

    #[test]
    fn identity_use_is_n() {
        let x = prng_stream(1, 100);
        let run = run_reduction(&BuiltinReduction::Identity, &x, 100).unwrap();
        assert_eq!(run.output, x.prefix(100).unwrap());
        assert_eq!(run.use_profile, (1..=100).collect::<Vec<_>>());
    }

    #[test]
    fn dilute_powers_matches_transform() {
        let x = prng_stream(2, 11);
        let run = run_reduction(&BuiltinReduction::DilutePowers, &x, 2047).unwrap();
        assert_eq!(run.output, dilute_powers(&x).prefix(2047).unwrap());
        for (i, &u) in run.use_profile.iter().enumerate() {
            let n = i + 1;
            assert_eq!(u, n.ilog2() as usize + 1);
        }
    }

    #[test]
    fn constant_and_odd() {
        let x = prng_stream(3, 40);
        let run = run_reduction(&BuiltinReduction::Constant, &x, 50).unwrap();
        assert!(run.use_profile.iter().all(|&u| u == 0));
        assert_eq!(run.output, BitString::zeros(50));
        let run = run_reduction(&BuiltinReduction::OddBits, &x, 20).unwrap();
        assert_eq!(run.output, split_odd_even(&x).0.prefix(20).unwrap());
        assert_eq!(run.use_profile[19], 39);
    }

    #[test]
    fn querying_past_horizon_fails() {
        let x = prng_stream(4, 10);
        assert!(matches!(
            run_reduction(&BuiltinReduction::Identity, &x, 11),
            Err(KlbError::HorizonExceeded { requested: 11, horizon: 10 })
        ));
    }

    #[test]
    fn names_round_trip() {
        for r in [
            BuiltinReduction::Identity,
            BuiltinReduction::DilutePowers,
            BuiltinReduction::Constant,
            BuiltinReduction::OddBits,
        ] {
            assert_eq!(r.to_string().parse::<BuiltinReduction>().unwrap(), r);
        }
    }
}
