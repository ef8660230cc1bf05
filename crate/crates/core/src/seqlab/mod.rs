//! Sequences at a finite horizon, the transforms used by the constructions,
//! the compressor-based complexity estimator, use-tracked reductions and the
//! left-c.e. dependence demonstration.

mod ce;
mod estimator;
mod reduction;

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{KlbError, Result};

pub use ce::{
    ce_dependence_demo, reconstruct, seeded_toy_enumerators, toy_enumerators, CeReport, CeRow, StagedEnumerator, TOY_SEED,
};
pub use estimator::{
    conditional_estimator_cost, conditional_estimator_detail, dim_profile, estimate_dim, estimator_cost,
    estimator_decode, estimator_encode, lz78_cost, prefix_costs, ConditionalCost, ConditionalRoute,
    Derivation, EstimatorCost, CTW_DEPTH,
};
pub use reduction::{run_reduction, BuiltinReduction, OracleAccess, Reduction, ReductionRun};

/// What a source is, for reports and config echoes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SourceKind {
    Literal { bits: String },
    Periodic { period: String },
    SeededPrng { seed: u64 },
    Transform { op: String, inputs: Vec<SourceKind> },
    EnumeratorLimit { name: String },
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::Literal { bits } if bits.len() <= 16 => write!(f, "bits:{bits}"),
            SourceKind::Literal { bits } => write!(f, "bits[{}]", bits.len()),
            SourceKind::Periodic { period } => write!(f, "periodic:{period}"),
            SourceKind::SeededPrng { seed } => write!(f, "prng:{seed}"),
            SourceKind::Transform { op, inputs } => {
                write!(f, "{op}(")?;
                for (i, s) in inputs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
            SourceKind::EnumeratorLimit { name } => write!(f, "limit:{name}"),
        }
    }
}

/// A sequence known up to a declared horizon: `bit(i)` is defined for
/// `1 <= i <= horizon` and is a pure function of `i`.
#[derive(Clone)]
pub struct PrefixSource {
    kind: SourceKind,
    horizon: usize,
    gen: Arc<dyn Fn(usize) -> bool + Send + Sync>,
}

impl fmt::Debug for PrefixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrefixSource")
            .field("kind", &self.kind)
            .field("horizon", &self.horizon)
            .finish()
    }
}

fn pow2_minus_one(k: usize) -> usize {
    if k >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        (1usize << k) - 1
    }
}

impl PrefixSource {
    pub fn from_fn(kind: SourceKind, horizon: usize, f: impl Fn(usize) -> bool + Send + Sync + 'static) -> Self {
        PrefixSource {
            kind,
            horizon,
            gen: Arc::new(f),
        }
    }

    pub fn literal(bits: BitString) -> Self {
        let kind = SourceKind::Literal { bits: bits.to_string() };
        let horizon = bits.len();
        let bits = Arc::new(bits);
        PrefixSource::from_fn(kind, horizon, move |i| bits.bit(i))
    }

    /// Repeats `period` forever (`"0"` gives zeros, `"01"` gives 0101...).
    pub fn periodic(period: BitString, horizon: usize) -> Self {
        assert!(!period.is_empty(), "period must be non-empty");
        let kind = SourceKind::Periodic { period: period.to_string() };
        let p = period.into_vec();
        PrefixSource::from_fn(kind, horizon, move |i| p[(i - 1) % p.len()])
    }

    pub fn zeros(horizon: usize) -> Self {
        PrefixSource::periodic(BitString::zeros(1), horizon)
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// 1-based bit access. Panics outside `1..=horizon`.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i >= 1 && i <= self.horizon, "index {i} outside 1..={}", self.horizon);
        (self.gen)(i)
    }

    pub fn prefix(&self, n: usize) -> Result<BitString> {
        if n > self.horizon {
            return Err(KlbError::HorizonExceeded {
                requested: n,
                horizon: self.horizon,
            });
        }
        Ok((1..=n).map(|i| (self.gen)(i)).collect())
    }

    /// Same generator, shorter horizon.
    pub fn truncate(&self, horizon: usize) -> Self {
        PrefixSource {
            horizon: horizon.min(self.horizon),
            ..self.clone()
        }
    }

    fn transform(op: &str, inputs: &[&PrefixSource], horizon: usize, f: impl Fn(usize) -> bool + Send + Sync + 'static) -> Self {
        let kind = SourceKind::Transform {
            op: op.to_string(),
            inputs: inputs.iter().map(|s| s.kind.clone()).collect(),
        };
        PrefixSource::from_fn(kind, horizon, f)
    }
}

/// The published seeded stream: ChaCha8 seeded with `seed_from_u64(seed)`;
/// bit `i` is bit `(i-1) mod 64` (least significant first) of the
/// `(i-1) / 64`-th `next_u64` word.
pub fn prng_stream(seed: u64, horizon: usize) -> PrefixSource {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = Vec::with_capacity(horizon);
    while bits.len() < horizon {
        let word = rng.next_u64();
        bits.extend((0..64).map(|b| (word >> b) & 1 == 1).take(horizon - bits.len()));
    }
    let bits = Arc::new(bits);
    PrefixSource::from_fn(SourceKind::SeededPrng { seed }, horizon, move |i| bits[i - 1])
}

/// `(x XOR y)(i) = x(i) xor y(i)`.
pub fn xor_seq(x: &PrefixSource, y: &PrefixSource) -> PrefixSource {
    let (a, b) = (x.clone(), y.clone());
    PrefixSource::transform("xor", &[x, y], x.horizon.min(y.horizon), move |i| a.bit(i) ^ b.bit(i))
}

/// `x ⊕ y = x(1) y(1) x(2) y(2) ...`.
pub fn interleave(x: &PrefixSource, y: &PrefixSource) -> PrefixSource {
    let (a, b) = (x.clone(), y.clone());
    let horizon = x.horizon.min(y.horizon).saturating_mul(2);
    PrefixSource::transform("interleave", &[x, y], horizon, move |i| {
        if i % 2 == 1 {
            a.bit(i.div_ceil(2))
        } else {
            b.bit(i / 2)
        }
    })
}

/// `(x(1) x(3) x(5) ..., x(2) x(4) x(6) ...)`.
pub fn split_odd_even(x: &PrefixSource) -> (PrefixSource, PrefixSource) {
    let (a, b) = (x.clone(), x.clone());
    let odd = PrefixSource::transform("odd", &[x], x.horizon.div_ceil(2), move |i| a.bit(2 * i - 1));
    let even = PrefixSource::transform("even", &[x], x.horizon / 2, move |i| b.bit(2 * i));
    (odd, even)
}

/// `x(1) 0 x(2) 0 ...`.
pub fn dilute_zero(x: &PrefixSource) -> PrefixSource {
    let a = x.clone();
    PrefixSource::transform("dilute0", &[x], x.horizon.saturating_mul(2), move |i| {
        i % 2 == 1 && a.bit(i.div_ceil(2))
    })
}

/// `x(1) x(2)0 x(3)000 ... x(k) 0^{2^{k-1}-1} ...`: block `k` starts at
/// position `2^{k-1}`.
pub fn dilute_powers(x: &PrefixSource) -> PrefixSource {
    let a = x.clone();
    PrefixSource::transform("dilute_pow2", &[x], pow2_minus_one(x.horizon), move |i| {
        i.is_power_of_two() && a.bit(i.trailing_zeros() as usize + 1)
    })
}

/// Position `2^{k-1}` carries `u(k)`; every other position `m` carries `v(m)`.
pub fn splice_power2(u: &PrefixSource, v: &PrefixSource) -> PrefixSource {
    let (a, b) = (u.clone(), v.clone());
    let horizon = v.horizon.min(pow2_minus_one(u.horizon));
    PrefixSource::transform("splice_pow2", &[u, v], horizon, move |i| {
        if i.is_power_of_two() {
            a.bit(i.trailing_zeros() as usize + 1)
        } else {
            b.bit(i)
        }
    })
}

/// Raw bit file: little-endian `u64` bit count, then the bits packed
/// most-significant-first.
pub fn write_bit_file(path: impl AsRef<Path>, bits: &BitString) -> Result<()> {
    let mut out = (bits.len() as u64).to_le_bytes().to_vec();
    out.extend(bits.to_bytes_msb());
    fs::write(path, out)?;
    Ok(())
}

pub fn read_bit_file(path: impl AsRef<Path>) -> Result<BitString> {
    let raw = fs::read(path)?;
    if raw.len() < 8 {
        return Err(KlbError::Format("bit file shorter than its length header".into()));
    }
    let len = u64::from_le_bytes(raw[..8].try_into().expect("8-byte header")) as usize;
    if raw.len() - 8 != len.div_ceil(8) {
        return Err(KlbError::Format(format!(
            "bit file declares {len} bits but carries {} payload bytes",
            raw.len() - 8
        )));
    }
    BitString::from_bytes_msb(&raw[8..], len)
}
