//! Three-source extraction from a balanced coloring of the cube `[N]³`.
//!
//! A coloring `T: [N]×[N]×[N] → [M]` is acceptable when no color takes more
//! than a `2/M` share of any planar rectangle whose sides are multiples of the
//! granularity `g`. Such a coloring turns three independent `n`-bit strings
//! into one `floor(σ1·n)`-bit string: `f(x, y, z) = T(x, y, z)`.

mod audit;
mod format;

use std::fmt;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{clog, BitString};
use crate::error::{KlbError, Result};
use crate::indep::{tuple_independence, TupleIndependenceReport};
use crate::oracle::ComplexityOracle;
use crate::{Real, Sigma};

pub use audit::{
    exhaustive_rectangle_count, verify_coloring, AuditMode, AuditReport, Orientation, SizeRule, Violation,
    DEFAULT_AUDIT_CEILING, DEFAULT_RECORD_LIMIT,
};
pub use format::{load_coloring, save_coloring, ColoringSidecar};

/// Largest side exponent for which a dense table is built (`N³ = 2^24` cells).
pub const MAX_TABLE_N: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringParams {
    pub n: u32,
    #[serde(with = "sigma_serde")]
    pub sigma1: Sigma,
    #[serde(with = "sigma_serde")]
    pub sigma2: Sigma,
    /// Replaces `ceil(σ2·n)` as the granularity exponent, for audits at
    /// granularities the `σ1 < σ2` constraint would otherwise rule out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity_log: Option<u32>,
}

mod sigma_serde {
    use super::Sigma;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &Sigma, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format!("{}/{}", s.numer(), s.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Sigma, D::Error> {
        let s = String::deserialize(de)?;
        super::parse_sigma(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses `"p/q"`, an integer, or a terminating decimal such as `"0.75"`.
pub fn parse_sigma(s: &str) -> Result<Sigma> {
    let bad = || KlbError::InvalidParams(format!("not a rational: {s:?}"));
    let s = s.trim();
    let (p, q): (u32, u32) = if let Some((p, q)) = s.split_once('/') {
        (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?)
    } else if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let q = 10u32.pow(frac.len() as u32);
        let whole: u32 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let frac: u32 = frac.parse().map_err(|_| bad())?;
        (whole.checked_mul(q).and_then(|w| w.checked_add(frac)).ok_or_else(bad)?, q)
    } else {
        (s.parse().map_err(|_| bad())?, 1)
    };
    if q == 0 {
        return Err(bad());
    }
    Ok(Sigma::new(p, q))
}

impl ColoringParams {
    /// Validates `0 < σ1 < σ2 < 1`, `M >= 2` and `g <= N`.
    pub fn new(n: u32, sigma1: Sigma, sigma2: Sigma) -> Result<Self> {
        let p = ColoringParams {
            n,
            sigma1,
            sigma2,
            granularity_log: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same colors, granularity `2^log_g` instead of `2^ceil(σ2·n)`.
    pub fn with_granularity_log(mut self, log_g: u32) -> Result<Self> {
        self.granularity_log = Some(log_g);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Sigma::from_integer(0);
        let one = Sigma::from_integer(1);
        if !(zero < self.sigma1 && self.sigma1 < self.sigma2 && self.sigma2 < one) {
            return Err(KlbError::InvalidParams(format!(
                "need 0 < sigma1 < sigma2 < 1, got {} and {}",
                self.sigma1, self.sigma2
            )));
        }
        if self.n >= 63 {
            return Err(KlbError::InvalidParams(format!("n = {} is too large", self.n)));
        }
        if self.color_bits() == 0 {
            return Err(KlbError::InvalidParams(format!(
                "M = 2^floor({}·{}) = 1; need M >= 2",
                self.sigma1, self.n
            )));
        }
        if self.granularity_exp() > self.n {
            return Err(KlbError::InvalidParams(format!(
                "granularity 2^{} exceeds N = 2^{}",
                self.granularity_exp(),
                self.n
            )));
        }
        Ok(())
    }

    /// `N = 2^n`.
    pub fn side(&self) -> u64 {
        1 << self.n
    }

    /// `floor(σ1·n)`, the output length.
    pub fn color_bits(&self) -> u32 {
        (self.sigma1 * Sigma::from_integer(self.n)).floor().to_integer()
    }

    /// `M = 2^floor(σ1·n)`.
    pub fn colors(&self) -> u64 {
        1 << self.color_bits()
    }

    pub fn granularity_exp(&self) -> u32 {
        self.granularity_log
            .unwrap_or_else(|| (self.sigma2 * Sigma::from_integer(self.n)).ceil().to_integer())
    }

    /// `g = 2^ceil(σ2·n)`, unless overridden.
    pub fn granularity(&self) -> u64 {
        1 << self.granularity_exp()
    }
}

impl fmt::Display for ColoringParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} sigma1={} sigma2={} (N={}, M={}, g={})",
            self.n,
            self.sigma1,
            self.sigma2,
            self.side(),
            self.colors(),
            self.granularity()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Random { seed: u64 },
    Linear { spec: String },
    Constant { color: u8 },
    Loaded { path: String },
}

/// A dense table `T`; cell `(i, j, k)` (each 1-based) lives at
/// `((i-1)·N + (j-1))·N + (k-1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub params: ColoringParams,
    pub provenance: Provenance,
    table: Vec<u8>,
}

impl Coloring {
    pub fn from_table(params: ColoringParams, provenance: Provenance, table: Vec<u8>) -> Result<Self> {
        params.validate()?;
        let n = params.side() as usize;
        if table.len() != n * n * n {
            return Err(KlbError::LengthMismatch {
                expected: n * n * n,
                actual: table.len(),
            });
        }
        if let Some(&c) = table.iter().find(|&&c| c as u64 >= params.colors()) {
            return Err(KlbError::Format(format!("color {c} outside [0, {})", params.colors())));
        }
        Ok(Coloring {
            params,
            provenance,
            table,
        })
    }

    fn check_table_size(params: &ColoringParams) -> Result<()> {
        params.validate()?;
        if params.n > MAX_TABLE_N {
            return Err(KlbError::InvalidParams(format!(
                "a dense table for n = {} has 2^{} cells; the limit is n <= {MAX_TABLE_N}",
                params.n,
                3 * params.n
            )));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        self.params.side() as usize
    }

    /// `T(i, j, k)` with 1-based indices.
    pub fn color(&self, i: usize, j: usize, k: usize) -> u8 {
        let n = self.side();
        assert!((1..=n).contains(&i) && (1..=n).contains(&j) && (1..=n).contains(&k));
        self.table[((i - 1) * n + (j - 1)) * n + (k - 1)]
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    /// Number of cells of each color.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.params.colors() as usize];
        for &c in &self.table {
            h[c as usize] += 1;
        }
        h
    }
}

/// Cells i.i.d. uniform over `[M]` from ChaCha8 seeded with `seed`, in table order.
pub fn make_random_coloring(params: ColoringParams, seed: u64) -> Result<Coloring> {
    Coloring::check_table_size(&params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.colors() as u8;
    let n = params.side() as usize;
    let table = (0..n * n * n).map(|_| rng.gen_range(0..m)).collect();
    Ok(Coloring {
        params,
        provenance: Provenance::Random { seed },
        table,
    })
}

/// `π`: XOR of the `m`-bit chunks of the `n`-bit word `v` (low chunk first).
/// A surjective linear map `GF(2)^n → GF(2)^m`, so every fiber has `2^(n-m)` points.
pub fn fold_xor(v: u64, n: u32, m: u32) -> u64 {
    let mask = (1u64 << m) - 1;
    let mut acc = 0;
    let mut rest = v & ((1u64 << n) - 1);
    while rest != 0 {
        acc ^= rest & mask;
        rest >>= m;
    }
    acc
}

/// `T(i, j, k) = π(i−1) ⊕ π(j−1) ⊕ π(k−1)`.
pub fn make_linear_coloring(params: ColoringParams) -> Result<Coloring> {
    Coloring::check_table_size(&params)?;
    let (n, m) = (params.n, params.color_bits());
    let side = params.side() as usize;
    let pi: Vec<u8> = (0..side as u64).map(|v| fold_xor(v, n, m) as u8).collect();
    let mut table = Vec::with_capacity(side * side * side);
    for a in &pi {
        for b in &pi {
            table.extend(pi.iter().map(|c| a ^ b ^ c));
        }
    }
    Ok(Coloring {
        params,
        provenance: Provenance::Linear {
            spec: format!("xor-fold n={n} m={m}"),
        },
        table,
    })
}

pub fn make_constant_coloring(params: ColoringParams, color: u8) -> Result<Coloring> {
    Coloring::check_table_size(&params)?;
    if color as u64 >= params.colors() {
        return Err(KlbError::InvalidParams(format!("color {color} outside [0, {})", params.colors())));
    }
    let side = params.side() as usize;
    Ok(Coloring {
        params,
        provenance: Provenance::Constant { color },
        table: vec![color; side * side * side],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureReport {
    pub params: ColoringParams,
    pub attempts: usize,
    /// Provenance and violation count of the attempt with the fewest violations.
    pub best: Option<(Provenance, u64)>,
}

#[derive(Debug, Clone)]
pub enum FindOutcome {
    Found { coloring: Coloring, audit: AuditReport, attempts: usize },
    Exhausted(FailureReport),
}

/// The linear candidate first, then random colorings with seeds
/// `seed, seed+1, ...`; returns the first one the audit passes.
pub fn find_coloring(params: ColoringParams, seed: u64, max_attempts: usize, mode: &AuditMode) -> Result<FindOutcome> {
    let candidates = std::iter::once(None).chain((0..max_attempts as u64).map(|i| Some(seed.wrapping_add(i))));
    let mut best: Option<(Provenance, u64)> = None;
    let mut attempts = 0;
    for candidate in candidates {
        let coloring = match candidate {
            None => make_linear_coloring(params)?,
            Some(s) => make_random_coloring(params, s)?,
        };
        attempts += 1;
        let audit = verify_coloring(&coloring, mode)?;
        if audit.passed() {
            return Ok(FindOutcome::Found {
                coloring,
                audit,
                attempts,
            });
        }
        if best.as_ref().is_none_or(|b| audit.violation_total < b.1) {
            best = Some((coloring.provenance.clone(), audit.violation_total));
        }
    }
    Ok(FindOutcome::Exhausted(FailureReport { params, attempts, best }))
}

/// `T(rank(x), rank(y), rank(z))` written MSB-first in `floor(σ1·n)` bits,
/// with `rank` the 1-based lexicographic rank in `{0,1}^n`.
pub fn extract(t: &Coloring, x: &BitString, y: &BitString, z: &BitString) -> Result<BitString> {
    let n = t.params.n as usize;
    for s in [x, y, z] {
        if s.len() != n {
            return Err(KlbError::LengthMismatch {
                expected: n,
                actual: s.len(),
            });
        }
    }
    let rank = |s: &BitString| s.to_uint() as usize + 1;
    let c = t.color(rank(x), rank(y), rank(z));
    Ok(BitString::from_uint(c as u64, t.params.color_bits() as usize))
}

/// Natural logs of the union bound `3M·e^{−N^{2σ2}/(3M)}` and of the
/// rectangle-count bound `e^{2N^{σ2}}·e^{2N^{σ2}(1−σ2)ln N}·e^{ln N}`.
/// A negative margin certifies that a good coloring exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityBound<F> {
    pub log_fail_prob: F,
    pub log_rect_count: F,
    pub margin: F,
}

pub fn feasibility_bound<F: Real>(params: &ColoringParams) -> Result<FeasibilityBound<F>> {
    params.validate()?;
    let f = |v: f64| F::from_f64(v).expect("finite");
    let ratio = |s: Sigma| f(s.to_f64().expect("rational"));
    let (s2, m) = (ratio(params.sigma2), F::from_u64(params.colors()).expect("fits"));
    let ln_n = F::from_u32(params.n).expect("fits") * f(std::f64::consts::LN_2);
    let n_pow_s2 = (s2 * ln_n).exp();
    let three = f(3.0);
    let two = f(2.0);
    let log_fail_prob = (three * m).ln() - (s2 * two * ln_n).exp() / (three * m);
    let log_rect_count = two * n_pow_s2 + two * n_pow_s2 * (F::one() - s2) * ln_n + ln_n;
    Ok(FeasibilityBound {
        log_fail_prob,
        log_rect_count,
        margin: log_fail_prob + log_rect_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport<F> {
    pub w: BitString,
    /// `(w, x)`, `(w, y)`, `(w, z)`
    pub pairs: Vec<TupleIndependenceReport<F>>,
    pub cw: usize,
    /// `|w| − a·clog(n) − b`
    pub cw_lower_bound: F,
    pub cw_ok: bool,
    /// c-independence of `(x, y, z)`; `None` when `C(xyz)` lies beyond the length cap.
    pub premise: Option<TupleIndependenceReport<F>>,
    /// Every pair is c-independent and `cw_ok`. Meaningful as a check of the
    /// extraction claim only when the premise holds.
    pub conclusion: bool,
}

impl<F> CertificationReport<F> {
    pub fn premise_holds(&self) -> Option<bool> {
        self.premise.as_ref().map(|p| p.holds)
    }
}

/// Measures the extraction claim on one triple: c-independence of `w` with
/// each source and `C(w) >= |w| − a·clog(n) − b`.
#[allow(clippy::too_many_arguments)]
pub fn certify_extraction<F: Real>(
    oracle: &ComplexityOracle,
    x: &BitString,
    y: &BitString,
    z: &BitString,
    w: &BitString,
    c: F,
    a: F,
    b: F,
) -> Result<CertificationReport<F>> {
    let pairs = [x, y, z]
        .into_iter()
        .map(|s| tuple_independence(oracle, &[w.clone(), s.clone()], c))
        .collect::<Result<Vec<_>>>()?;
    let cw = oracle.c(w)?;
    let to_f = |v: usize| F::from_usize(v).expect("fits");
    let cw_lower_bound = to_f(w.len()) - a * to_f(clog(x.len())) - b;
    let cw_ok = to_f(cw) >= cw_lower_bound;
    let premise = match tuple_independence(oracle, &[x.clone(), y.clone(), z.clone()], c) {
        Ok(r) => Some(r),
        Err(KlbError::NoProgramWithinCap { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(CertificationReport {
        w: w.clone(),
        conclusion: cw_ok && pairs.iter().all(|p| p.holds),
        pairs,
        cw,
        cw_lower_bound,
        cw_ok,
        premise,
    })
}
