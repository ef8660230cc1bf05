//! Exact resource-bounded plain complexity over RM-1.
//!
//! `C_t(x | v)` with an optional finite oracle `w` is the length of the
//! shortest program of at most `L` bits that halts within `t` steps with output
//! `x`. Ties are broken by the lexicographically least program, so results do
//! not depend on how the enumeration is scheduled.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{clog, BitString};
use crate::error::{KlbError, Result};
use crate::refmachine::{self, lit_budget, MachineConfig, ProgramCode, RunStatus, LITERAL_HEADER_LEN};
use crate::seqlab::PrefixSource;

pub const DEFAULT_MAX_LEN: usize = 12;
pub const DEFAULT_STEPS: u64 = 10_000;
pub const DEFAULT_CEILING: u64 = 1 << 22;

/// Search resources: program length cap `L`, step budget `t`, and the ceiling
/// on the number of program runs a single query may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_len: usize,
    pub steps: u64,
    pub ceiling: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_len: DEFAULT_MAX_LEN,
            steps: DEFAULT_STEPS,
            ceiling: DEFAULT_CEILING,
        }
    }
}

impl Caps {
    pub fn new(max_len: usize, steps: u64) -> Self {
        Caps {
            max_len,
            steps,
            ..Caps::default()
        }
    }

    pub fn with_ceiling(mut self, ceiling: u64) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// Fails if `2^(L+1)` program runs exceed the ceiling.
    pub fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(KlbError::InvalidParams("step budget must be >= 1".into()));
        }
        let requested = 1u128 << (self.max_len + 1).min(127);
        if requested > self.ceiling as u128 {
            return Err(KlbError::CapExceeded {
                requested,
                ceiling: self.ceiling,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityQuery {
    pub target: BitString,
    pub conditional: BitString,
    pub oracle: Option<BitString>,
    pub caps: Caps,
}

impl ComplexityQuery {
    pub fn new(target: BitString, caps: Caps) -> Self {
        ComplexityQuery {
            target,
            conditional: BitString::new(),
            oracle: None,
            caps,
        }
    }

    pub fn given(mut self, v: BitString) -> Self {
        self.conditional = v;
        self
    }

    pub fn with_oracle(mut self, w: BitString) -> Self {
        self.oracle = Some(w);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityResult {
    /// `None` means no program of length `<= L` produced the target.
    pub value: Option<usize>,
    pub witness: Option<ProgramCode>,
    /// Programs whose length is at most the value (or `L` when nothing was found).
    pub searched_count: u64,
    /// Some program shorter than the value (or any program, when nothing was
    /// found) ran out of steps, so the value is only an upper bound.
    pub budget_saturated: bool,
}

impl ComplexityResult {
    pub fn exact(&self, target_len: usize, max_len: usize) -> Result<usize> {
        self.value
            .ok_or(KlbError::NoProgramWithinCap { target_len, max_len })
    }
}

fn programs_up_to(len: usize) -> u64 {
    (1u64 << (len + 1)) - 1
}

fn machine_config(q: &ComplexityQuery) -> MachineConfig {
    MachineConfig {
        step_budget: q.caps.steps,
        oracle: q.oracle.clone(),
        conditional: q.conditional.clone(),
    }
}

/// Single-target search: enumerates programs length by length and stops at
/// the first length that produces the target.
pub fn complexity(q: &ComplexityQuery) -> Result<ComplexityResult> {
    q.caps.check()?;
    let cfg = machine_config(q);
    let mut saturated = false;
    for len in 0..=q.caps.max_len {
        let layer: Vec<(bool, bool)> = (0..1u64 << len)
            .into_par_iter()
            .map(|v| {
                let r = refmachine::run(&BitString::from_uint(v, len).into(), &cfg);
                match r.status {
                    RunStatus::Halted(out) => (out == q.target, false),
                    RunStatus::StepLimit => (false, true),
                    RunStatus::OracleOverflow => (false, false),
                }
            })
            .collect();
        if let Some(v) = layer.iter().position(|&(hit, _)| hit) {
            return Ok(ComplexityResult {
                value: Some(len),
                witness: Some(BitString::from_uint(v as u64, len).into()),
                searched_count: programs_up_to(len),
                budget_saturated: saturated,
            });
        }
        saturated |= layer.iter().any(|&(_, sat)| sat);
    }
    Ok(ComplexityResult {
        value: None,
        witness: None,
        searched_count: programs_up_to(q.caps.max_len),
        budget_saturated: saturated,
    })
}

/// Every output reachable by programs of length `<= covered`, keyed to its
/// shortlex-least program.
#[derive(Default)]
struct ProgramTable {
    covered: Option<usize>,
    best: HashMap<BitString, (usize, u64)>,
    saturated: Vec<bool>,
}

impl ProgramTable {
    fn extend_to(&mut self, len: usize, cfg: &MachineConfig) {
        let start = self.covered.map_or(0, |c| c + 1);
        for l in start..=len {
            let layer: Vec<Option<Option<BitString>>> = (0..1u64 << l)
                .into_par_iter()
                .map(|v| match refmachine::run(&BitString::from_uint(v, l).into(), cfg).status {
                    RunStatus::Halted(out) => Some(Some(out)),
                    RunStatus::StepLimit => None,
                    RunStatus::OracleOverflow => Some(None),
                })
                .collect();
            let mut sat = false;
            for (v, r) in layer.into_iter().enumerate() {
                match r {
                    Some(Some(out)) => {
                        self.best.entry(out).or_insert((l, v as u64));
                    }
                    None => sat = true,
                    Some(None) => {}
                }
            }
            self.saturated.push(sat);
            self.covered = Some(l);
        }
    }
}

type Context = (BitString, Option<BitString>);

/// Caching complexity oracle for sweeps. One table per (conditional, oracle)
/// context answers every target under that context; tables only grow as far
/// as the queried targets require.
pub struct ComplexityOracle {
    caps: Caps,
    tables: Mutex<HashMap<Context, ProgramTable>>,
}

impl ComplexityOracle {
    pub fn new(caps: Caps) -> Result<Self> {
        caps.check()?;
        Ok(ComplexityOracle {
            caps,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn query(&self, target: &BitString, conditional: &BitString, oracle: Option<&BitString>) -> ComplexityResult {
        let max_len = self.caps.max_len;
        // Once the literal program is available, nothing longer than it can matter.
        let needed = if self.caps.steps >= lit_budget(target.len()) {
            max_len.min(target.len() + LITERAL_HEADER_LEN)
        } else {
            max_len
        };
        let cfg = MachineConfig {
            step_budget: self.caps.steps,
            oracle: oracle.cloned(),
            conditional: conditional.clone(),
        };
        let mut tables = self.tables.lock().expect("oracle table lock poisoned");
        let table = tables
            .entry((conditional.clone(), oracle.cloned()))
            .or_default();
        let lookup = |t: &ProgramTable| t.best.get(target).copied().filter(|&(l, _)| l <= max_len);
        if table.covered.is_none_or(|c| c < needed) {
            table.extend_to(needed, &cfg);
        }
        let mut hit = lookup(table);
        if hit.is_none() && table.covered < Some(max_len) {
            table.extend_to(max_len, &cfg);
            hit = lookup(table);
        }
        match hit {
            Some((len, v)) => ComplexityResult {
                value: Some(len),
                witness: Some(BitString::from_uint(v, len).into()),
                searched_count: programs_up_to(len),
                budget_saturated: table.saturated[..len].iter().any(|&s| s),
            },
            None => ComplexityResult {
                value: None,
                witness: None,
                searched_count: programs_up_to(max_len),
                budget_saturated: table.saturated.iter().any(|&s| s),
            },
        }
    }

    fn exact(&self, target: &BitString, conditional: &BitString, oracle: Option<&BitString>) -> Result<usize> {
        self.query(target, conditional, oracle)
            .exact(target.len(), self.caps.max_len)
    }

    /// `C(x)`.
    pub fn c(&self, x: &BitString) -> Result<usize> {
        self.exact(x, &BitString::new(), None)
    }

    /// `C(x | v)`.
    pub fn c_given(&self, x: &BitString, v: &BitString) -> Result<usize> {
        self.exact(x, v, None)
    }

    /// `C^w(x)`, relativized to the finite oracle `w`.
    pub fn c_relative(&self, x: &BitString, w: &BitString) -> Result<usize> {
        self.exact(x, &BitString::new(), Some(w))
    }
}

/// `C(xy)`, joining by concatenation.
pub fn joint_complexity(oracle: &ComplexityOracle, x: &BitString, y: &BitString) -> ComplexityResult {
    oracle.query(&x.concat(y), &BitString::new(), None)
}

/// `1^{|bin(n)|} 0 bin(n) x` with `n = |x|` and `bin(0)` empty.
pub fn self_delimiting_code(x: &BitString) -> BitString {
    let bin = BitString::binary(x.len() as u64);
    let mut out = BitString::from_bits(vec![true; bin.len()]);
    out.push(false);
    out.extend_from(&bin);
    out.extend_from(x);
    out
}

/// Inverse of [`self_delimiting_code`]: returns the decoded string and the
/// unread remainder.
pub fn decode_self_delimiting(code: &BitString) -> Result<(BitString, BitString)> {
    let bits = code.as_slice();
    let width = bits.iter().take_while(|&&b| b).count();
    if width == bits.len() {
        return Err(KlbError::Format("self-delimiting code has no terminator".into()));
    }
    let body = width + 1;
    if body + width > bits.len() || width > 63 {
        return Err(KlbError::Format("truncated length field".into()));
    }
    let n = BitString::from_bits(bits[body..body + width].to_vec()).to_uint() as usize;
    let start = body + width;
    if start + n > bits.len() {
        return Err(KlbError::Format("truncated payload".into()));
    }
    Ok((
        BitString::from_bits(bits[start..start + n].to_vec()),
        BitString::from_bits(bits[start + n..].to_vec()),
    ))
}

/// `|C(xy) − (C(x|y) + C(y))|`.
pub fn symmetry_defect(oracle: &ComplexityOracle, x: &BitString, y: &BitString) -> Result<i64> {
    let joint = oracle.c(&x.concat(y))? as i64;
    let cond = oracle.c_given(x, y)? as i64;
    let cy = oracle.c(y)? as i64;
    Ok((joint - cond - cy).abs())
}

/// `C^y(x) − C(x|y) − 2·ceil(log2(|y|+1))`.
pub fn lifting_defect(oracle: &ComplexityOracle, x: &BitString, y: &BitString) -> Result<i64> {
    let rel = oracle.c_relative(x, y)? as i64;
    let cond = oracle.c_given(x, y)? as i64;
    Ok(rel - cond - 2 * clog(y.len()) as i64)
}

/// `(n, C(x↾n))` for `n = 1..=n_max`.
pub fn complexity_profile(oracle: &ComplexityOracle, src: &PrefixSource, n_max: usize) -> Result<Vec<(usize, usize)>> {
    let full = src.prefix(n_max)?;
    (1..=n_max)
        .map(|n| Ok((n, oracle.c(&full.prefix(n)?)?)))
        .collect()
}
