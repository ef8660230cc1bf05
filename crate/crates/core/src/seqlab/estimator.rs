//! Deterministic compressor-based stand-in for `C` on long prefixes.
//!
//! The estimator is a two-route code with a one-bit route flag:
//!
//! * route 0, LZ78 over bits: each phrase extends the longest previously seen
//!   phrase by one bit; phrase `i` costs `ceil(log2 i) + 1` bits.
//! * route 1, context-tree weighting of depth [`CTW_DEPTH`] driving a binary
//!   arithmetic coder, preceded by a self-delimiting length field. Its cost is
//!   the exact length of that stream: header, coded bits, and at most one
//!   flush bit.
//!
//! `total_bits = 1 + min(lz_bits, ctw_bits)`. Both routes have real encoders
//! and decoders; see [`estimator_encode`] / [`estimator_decode`].

use serde::{Deserialize, Serialize};

use crate::bits::{clog, BitString};
use crate::error::{KlbError, Result};
use crate::seqlab::PrefixSource;
use crate::Real;

pub const CTW_DEPTH: usize = 8;
const PROB_BITS: u32 = 16;
const PROB_ONE: u32 = 1 << PROB_BITS;
const DIM_GRID_START: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorCost {
    /// LZ78 phrase count, counting a trailing partial phrase.
    pub phrase_count: usize,
    pub lz_bits: u64,
    pub ctw_bits: u64,
    pub total_bits: u64,
}

/// `Σ_{i=first..first+count-1} (ceil(log2 i) + 1)`.
fn phrase_bits(first: usize, count: usize) -> u64 {
    (first..first + count).map(|i| clog(i - 1) as u64 + 1).sum()
}

/// Length of the self-delimiting length field for `n`.
fn length_field_bits(n: usize) -> u64 {
    2 * clog(n) as u64 + 1
}

// ---------------------------------------------------------------- LZ78 ----

#[derive(Clone)]
struct Trie {
    children: Vec<[u32; 2]>,
    parent: Vec<(u32, bool)>,
}

impl Trie {
    fn new() -> Self {
        Trie {
            children: vec![[0, 0]],
            parent: vec![(0, false)],
        }
    }

    /// Number of phrases (nodes other than the root).
    fn phrases(&self) -> usize {
        self.children.len() - 1
    }

    fn add(&mut self, node: u32, bit: bool) -> u32 {
        let id = self.children.len() as u32;
        self.children.push([0, 0]);
        self.parent.push((node, bit));
        self.children[node as usize][bit as usize] = id;
        id
    }
}

/// Incremental LZ78 parser. `node` is the partially matched phrase.
#[derive(Clone)]
struct Lz78 {
    trie: Trie,
    node: u32,
    tokens: Vec<(u32, bool)>,
}

impl Lz78 {
    fn new() -> Self {
        Lz78::seeded(Trie::new())
    }

    fn seeded(trie: Trie) -> Self {
        Lz78 {
            trie,
            node: 0,
            tokens: Vec::new(),
        }
    }

    fn push(&mut self, bit: bool) {
        let next = self.trie.children[self.node as usize][bit as usize];
        if next != 0 {
            self.node = next;
        } else {
            self.trie.add(self.node, bit);
            self.tokens.push((self.node, bit));
            self.node = 0;
        }
    }

    /// Emitted phrases plus the trailing partial one, if any.
    fn phrase_count(&self) -> usize {
        self.tokens.len() + usize::from(self.node != 0)
    }

    fn finish(mut self) -> Vec<(u32, bool)> {
        if self.node != 0 {
            // the partial phrase equals an existing one: emit it as parent + last bit
            self.tokens.push(self.trie.parent[self.node as usize]);
        }
        self.tokens
    }
}

/// Phrase count and bit cost of the plain LZ78 route.
pub fn lz78_cost(x: &BitString) -> (usize, u64) {
    let mut lz = Lz78::new();
    x.iter().for_each(|b| lz.push(b));
    let p = lz.phrase_count();
    (p, phrase_bits(1, p))
}

fn lz78_encode(x: &BitString) -> BitString {
    let mut lz = Lz78::new();
    x.iter().for_each(|b| lz.push(b));
    let mut out = BitString::new();
    for (i, (idx, bit)) in lz.finish().into_iter().enumerate() {
        out.extend_from(&BitString::from_uint(idx as u64, clog(i)));
        out.push(bit);
    }
    out
}

fn lz78_decode(bits: &[bool]) -> Result<BitString> {
    let mut phrases: Vec<Vec<bool>> = vec![Vec::new()];
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bits.len() {
        let width = clog(phrases.len() - 1);
        if pos + width + 1 > bits.len() {
            return Err(KlbError::Format("truncated LZ78 token".into()));
        }
        let idx = bits[pos..pos + width].iter().fold(0usize, |a, &b| (a << 1) | b as usize);
        if idx >= phrases.len() {
            return Err(KlbError::Format(format!("LZ78 index {idx} out of range")));
        }
        let mut phrase = phrases[idx].clone();
        phrase.push(bits[pos + width]);
        pos += width + 1;
        out.extend_from_slice(&phrase);
        phrases.push(phrase);
    }
    Ok(out.into())
}

// ----------------------------------------------------------------- CTW ----

#[derive(Clone, Copy, Default)]
struct CtwNode {
    zeros: u32,
    ones: u32,
    /// log2 of the KT estimate
    lpe: f64,
    /// log2 of the weighted probability
    lpw: f64,
}

/// log2(2^a + 2^b) - 1
fn log2_half_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2() - 1.0
}

#[derive(Clone)]
struct Ctw {
    nodes: Vec<CtwNode>,
    /// last CTW_DEPTH bits, most recent in bit 0
    history: u32,
}

impl Ctw {
    fn new() -> Self {
        Ctw {
            nodes: vec![CtwNode::default(); (1 << (CTW_DEPTH + 1)) - 1],
            history: 0,
        }
    }

    fn node_index(&self, depth: usize) -> usize {
        (1 << depth) - 1 + (self.history & ((1 << depth) - 1)) as usize
    }

    /// The other child of the depth `depth - 1` node on the current path: same
    /// context except for its oldest bit.
    fn sibling_index(&self, depth: usize) -> usize {
        let ctx = (self.history & ((1 << depth) - 1)) ^ (1 << (depth - 1));
        (1 << depth) - 1 + ctx as usize
    }

    /// Updated (lpe, lpw) along the context path after seeing `bit`,
    /// deepest node first.
    fn path_after(&self, bit: bool) -> [(f64, f64); CTW_DEPTH + 1] {
        let mut out = [(0.0, 0.0); CTW_DEPTH + 1];
        let mut child_lpw = 0.0;
        for depth in (0..=CTW_DEPTH).rev() {
            let node = self.nodes[self.node_index(depth)];
            let count = if bit { node.ones } else { node.zeros } as f64;
            let lpe = node.lpe + ((count + 0.5) / ((node.zeros + node.ones) as f64 + 1.0)).log2();
            let lpw = if depth == CTW_DEPTH {
                lpe
            } else {
                let sibling = self.nodes[self.sibling_index(depth + 1)].lpw;
                log2_half_sum(lpe, child_lpw + sibling)
            };
            out[depth] = (lpe, lpw);
            child_lpw = lpw;
        }
        out
    }

    /// Quantized probability that the next bit is 1, in units of 2^-16.
    fn p1(&self) -> u32 {
        let root = self.nodes[0].lpw;
        let p0 = (self.path_after(false)[0].1 - root).exp2();
        (((1.0 - p0) * PROB_ONE as f64).round() as u32).clamp(1, PROB_ONE - 1)
    }

    fn update(&mut self, bit: bool) {
        let path = self.path_after(bit);
        for (depth, &(lpe, lpw)) in path.iter().enumerate() {
            let idx = self.node_index(depth);
            let node = &mut self.nodes[idx];
            node.lpe = lpe;
            node.lpw = lpw;
            if bit {
                node.ones += 1;
            } else {
                node.zeros += 1;
            }
        }
        self.history = ((self.history << 1) | bit as u32) & ((1 << CTW_DEPTH) - 1);
    }

}

/// Binary arithmetic coder over a 32-bit window with bitwise renormalization.
/// The decoder reads zeros past the end of the stream.
#[derive(Clone)]
struct ArithEncoder {
    low: u32,
    high: u32,
    out: Vec<bool>,
}

const TOP: u32 = 1 << 31;

impl ArithEncoder {
    fn new() -> Self {
        ArithEncoder {
            low: 0,
            high: u32::MAX,
            out: Vec::new(),
        }
    }

    fn mid(low: u32, high: u32, p1: u32) -> u32 {
        low + (((high - low) as u64 * p1 as u64) >> PROB_BITS) as u32
    }

    fn encode(&mut self, bit: bool, p1: u32) {
        let mid = Self::mid(self.low, self.high, p1);
        if bit {
            self.high = mid;
        } else {
            self.low = mid + 1;
        }
        while (self.low ^ self.high) & TOP == 0 {
            self.out.push(self.high & TOP != 0);
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Zero padding lands inside the window at no cost when `low == 0`;
    /// otherwise a single 1 (the value `TOP`) does.
    fn flush_bits(&self) -> u64 {
        u64::from(self.low != 0)
    }

    /// Stream length if coding stopped here.
    fn len_if_finished(&self) -> u64 {
        self.out.len() as u64 + self.flush_bits()
    }

    fn finish(mut self) -> Vec<bool> {
        if self.flush_bits() == 1 {
            self.out.push(true);
        }
        self.out
    }
}

struct ArithDecoder<'a> {
    low: u32,
    high: u32,
    x: u32,
    input: &'a [bool],
    pos: usize,
}

impl<'a> ArithDecoder<'a> {
    fn new(input: &'a [bool]) -> Self {
        let mut d = ArithDecoder {
            low: 0,
            high: u32::MAX,
            x: 0,
            input,
            pos: 0,
        };
        for _ in 0..32 {
            d.x = (d.x << 1) | d.next_bit() as u32;
        }
        d
    }

    fn next_bit(&mut self) -> bool {
        let b = self.input.get(self.pos).copied().unwrap_or(false);
        self.pos += 1;
        b
    }

    fn decode(&mut self, p1: u32) -> bool {
        let mid = ArithEncoder::mid(self.low, self.high, p1);
        let bit = self.x <= mid;
        if bit {
            self.high = mid;
        } else {
            self.low = mid + 1;
        }
        while (self.low ^ self.high) & TOP == 0 {
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.x = (self.x << 1) | self.next_bit() as u32;
        }
        bit
    }
}

/// Model and coder advanced together; `bits()` is the CTW route's length at
/// the current prefix.
struct CtwRoute {
    model: Ctw,
    enc: ArithEncoder,
    n: usize,
}

impl CtwRoute {
    fn new(model: Ctw) -> Self {
        CtwRoute {
            model,
            enc: ArithEncoder::new(),
            n: 0,
        }
    }

    fn push(&mut self, bit: bool) {
        self.enc.encode(bit, self.model.p1());
        self.model.update(bit);
        self.n += 1;
    }

    fn bits(&self) -> u64 {
        length_field_bits(self.n) + self.enc.len_if_finished()
    }
}

fn ctw_encode(x: &BitString) -> BitString {
    let mut model = Ctw::new();
    let mut enc = ArithEncoder::new();
    for b in x.iter() {
        enc.encode(b, model.p1());
        model.update(b);
    }
    let mut out = length_header(x.len());
    out.extend_from(&BitString::from_bits(enc.finish()));
    out
}

/// `1^{|bin n|} 0 bin(n)`
fn length_header(n: usize) -> BitString {
    let bin = BitString::binary(n as u64);
    let mut out: BitString = std::iter::repeat_n(true, bin.len()).collect();
    out.push(false);
    out.extend_from(&bin);
    out
}

fn ctw_decode(bits: &[bool]) -> Result<BitString> {
    let width = bits.iter().take_while(|&&b| b).count();
    if width >= bits.len() || 2 * width + 1 > bits.len() || width > 63 {
        return Err(KlbError::Format("bad CTW length field".into()));
    }
    let n = BitString::from_bits(bits[width + 1..2 * width + 1].to_vec()).to_uint() as usize;
    let mut model = Ctw::new();
    let mut dec = ArithDecoder::new(&bits[2 * width + 1..]);
    let mut out = BitString::new();
    for _ in 0..n {
        let b = dec.decode(model.p1());
        model.update(b);
        out.push(b);
    }
    Ok(out)
}

// ------------------------------------------------------------ estimator ----

fn cost_at(lz: &Lz78, ctw: &CtwRoute) -> EstimatorCost {
    let p = lz.phrase_count();
    let lz_bits = phrase_bits(1, p);
    let ctw_bits = ctw.bits();
    EstimatorCost {
        phrase_count: p,
        lz_bits,
        ctw_bits,
        total_bits: 1 + lz_bits.min(ctw_bits),
    }
}

/// Costs of every prefix length in `checkpoints` (ascending, each `<= |x|`),
/// computed in one pass.
pub fn prefix_costs(x: &BitString, checkpoints: &[usize]) -> Vec<EstimatorCost> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] <= w[1]));
    let mut lz = Lz78::new();
    let mut ctw = CtwRoute::new(Ctw::new());
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut seen = 0usize;
    for &n in checkpoints {
        assert!(n <= x.len(), "checkpoint {n} beyond |x| = {}", x.len());
        while seen < n {
            let b = x[seen];
            lz.push(b);
            ctw.push(b);
            seen += 1;
        }
        out.push(cost_at(&lz, &ctw));
    }
    out
}

pub fn estimator_cost(x: &BitString) -> EstimatorCost {
    prefix_costs(x, &[x.len()])[0]
}

/// Flag bit then the cheaper route's stream (ties go to LZ78).
pub fn estimator_encode(x: &BitString) -> BitString {
    let cost = estimator_cost(x);
    let mut out = BitString::new();
    if cost.lz_bits <= cost.ctw_bits {
        out.push(false);
        out.extend_from(&lz78_encode(x));
    } else {
        out.push(true);
        out.extend_from(&ctw_encode(x));
    }
    out
}

pub fn estimator_decode(code: &BitString) -> Result<BitString> {
    match code.as_slice().split_first() {
        None => Err(KlbError::Format("empty estimator stream".into())),
        Some((false, rest)) => lz78_decode(rest),
        Some((true, rest)) => ctw_decode(rest),
    }
}

/// Fixed functions of the conditional string the conditional estimator may
/// reference for two bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    Identity,
    OddBits,
    EvenBits,
    /// `v(1)^v(2), v(3)^v(4), ...`: undoes `x ⊕ y` into `x XOR y`.
    PairXor,
}

impl Derivation {
    const ALL: [Derivation; 4] = [Derivation::Identity, Derivation::OddBits, Derivation::EvenBits, Derivation::PairXor];

    fn apply(self, v: &BitString) -> BitString {
        let s = v.as_slice();
        match self {
            Derivation::Identity => v.clone(),
            Derivation::OddBits => s.iter().step_by(2).copied().collect(),
            Derivation::EvenBits => s.iter().skip(1).step_by(2).copied().collect(),
            Derivation::PairXor => s.chunks_exact(2).map(|p| p[0] ^ p[1]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "route")]
pub enum ConditionalRoute {
    /// The conditional string was empty; the unconditional code is used as is.
    Unconditional,
    Ignore,
    SeededLz78,
    PrimedCtw,
    Derived { derivation: Derivation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalCost {
    pub total_bits: u64,
    pub route: ConditionalRoute,
}

/// Estimator for `C(x | v)`: a 2-bit route selector followed by the cheapest of
/// (a) the unconditional code, (b) LZ78 with the dictionary pre-seeded by the
/// phrases of `v`, (c) CTW primed on `v`, (d) a reference to a fixed derivation
/// of `v` of which `x` is a prefix, plus a length field unless the lengths match.
pub fn conditional_estimator_detail(x: &BitString, v: &BitString) -> ConditionalCost {
    let plain = estimator_cost(x).total_bits;
    if v.is_empty() {
        return ConditionalCost {
            total_bits: plain,
            route: ConditionalRoute::Unconditional,
        };
    }

    let mut best = (plain, ConditionalRoute::Ignore);

    let mut seeded = Lz78::new();
    v.iter().for_each(|b| seeded.push(b));
    let dict = seeded.trie.phrases();
    let mut lz = Lz78::seeded(seeded.trie);
    x.iter().for_each(|b| lz.push(b));
    let lz_bits = phrase_bits(dict + 1, lz.phrase_count());
    if lz_bits < best.0 {
        best = (lz_bits, ConditionalRoute::SeededLz78);
    }

    let mut model = Ctw::new();
    v.iter().for_each(|b| model.update(b));
    let mut ctw = CtwRoute::new(model);
    x.iter().for_each(|b| ctw.push(b));
    let primed = ctw.bits();
    if primed < best.0 {
        best = (primed, ConditionalRoute::PrimedCtw);
    }

    for d in Derivation::ALL {
        let derived = d.apply(v);
        if derived.len() < x.len() || derived.as_slice()[..x.len()] != *x.as_slice() {
            continue;
        }
        let bits = 2 + if derived.len() == x.len() { 0 } else { length_field_bits(x.len()) };
        if bits < best.0 {
            best = (bits, ConditionalRoute::Derived { derivation: d });
        }
    }

    ConditionalCost {
        total_bits: 2 + best.0,
        route: best.1,
    }
}

pub fn conditional_estimator_cost(x: &BitString, v: &BitString) -> u64 {
    conditional_estimator_detail(x, v).total_bits
}

fn dim_grid(n_max: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = std::iter::successors(Some(DIM_GRID_START), |&n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect();
    if grid.last() != Some(&n_max) {
        grid.push(n_max);
    }
    grid
}

/// `(n, cost(x↾n))` over the doubling grid `16, 32, ...` up to `n_max`
/// (always including `n_max`).
pub fn dim_profile(x: &PrefixSource, n_max: usize) -> Result<Vec<(usize, EstimatorCost)>> {
    if n_max == 0 {
        return Err(KlbError::InvalidParams("n_max must be positive".into()));
    }
    let grid = dim_grid(n_max);
    let bits = x.prefix(n_max)?;
    Ok(grid.iter().copied().zip(prefix_costs(&bits, &grid)).collect())
}

/// `min_n cost(x↾n) / n` over the grid of [`dim_profile`].
pub fn estimate_dim<F: Real>(x: &PrefixSource, n_max: usize) -> Result<F> {
    let profile = dim_profile(x, n_max)?;
    Ok(profile
        .iter()
        .map(|&(n, c)| F::from_u64(c.total_bits).expect("u64 fits") / F::from_usize(n).expect("usize fits"))
        .fold(F::infinity(), F::min))
}
