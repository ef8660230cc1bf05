//! Planar-rectangle balance audits.

use std::fmt;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fold_xor, Coloring, ColoringParams};
use crate::error::{KlbError, Result};

pub const DEFAULT_AUDIT_CEILING: u64 = 10_000_000;
/// Violations beyond this many are counted but not listed.
pub const DEFAULT_RECORD_LIMIT: usize = 10_000;

/// Which coordinate is pinned to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `B1 × B2 × {k}`
    FixK,
    /// `B1 × {k} × B2`
    FixJ,
    /// `{k} × B1 × B2`
    FixI,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::FixK, Orientation::FixJ, Orientation::FixI];

    fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::FixK => "B1xB2x{k}",
            Orientation::FixJ => "B1x{k}xB2",
            Orientation::FixI => "{k}xB1xB2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeRule {
    /// `|B1| = |B2| = g`.
    Exact,
    /// `|B1|, |B2|` any positive multiples of `g`.
    Multiples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AuditMode {
    /// Every rectangle with the given side rule, refused above `ceiling`.
    Exhaustive { sizes: SizeRule, ceiling: u64 },
    /// `count` rectangles with sides exactly `g`, drawn from ChaCha8 seeded with `seed`.
    Sampled { seed: u64, count: u64 },
    /// Sides of size `g` that are unions of fibers of the linear map `π`.
    FiberAligned,
}

impl AuditMode {
    pub fn exhaustive(sizes: SizeRule) -> Self {
        AuditMode::Exhaustive {
            sizes,
            ceiling: DEFAULT_AUDIT_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub orientation: Orientation,
    /// 1-based, like the entries of `b1` and `b2`.
    pub k: usize,
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub color: u8,
    pub count: u64,
    /// `(2/M)·|B1|·|B2|`
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mode: AuditMode,
    pub params: ColoringParams,
    pub rectangles_checked: u64,
    /// Number of (rectangle, color) pairs over the threshold.
    pub violation_total: u64,
    /// The first violations in audit order, at most [`DEFAULT_RECORD_LIMIT`].
    pub violations: Vec<Violation>,
    pub truncated: bool,
    /// Largest share `count / (|B1|·|B2|)` of one color seen in any rectangle.
    pub max_share: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violation_total == 0
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn side_sizes(params: &ColoringParams, sizes: SizeRule) -> Vec<usize> {
    let (n, g) = (params.side() as usize, params.granularity() as usize);
    match sizes {
        SizeRule::Exact => vec![g],
        SizeRule::Multiples => (g..=n).step_by(g).collect(),
    }
}

/// `Σ_{s1, s2} C(N, s1)·C(N, s2)·3N` over the allowed side sizes.
pub fn exhaustive_rectangle_count(params: &ColoringParams, sizes: SizeRule) -> u128 {
    let n = params.side();
    let per_side: u128 = side_sizes(params, sizes).iter().map(|&s| binomial(n, s as u64)).sum();
    per_side * per_side * 3 * n as u128
}

/// Accumulated result of auditing some rectangles, mergeable in order.
#[derive(Default)]
struct Tally {
    checked: u64,
    total: u64,
    violations: Vec<Violation>,
    max_share: f64,
}

impl Tally {
    fn merge(mut self, other: Tally, limit: usize) -> Tally {
        self.checked += other.checked;
        self.total += other.total;
        self.max_share = self.max_share.max(other.max_share);
        let room = limit.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
        self
    }
}

/// One fixed plane of the cube: `plane[a·N + b]` is the color at the cell
/// whose free coordinates are `(a, b)` (0-based).
struct Plane {
    side: usize,
    colors: usize,
    cells: Vec<u8>,
    orientation: Orientation,
    k: usize,
}

impl Plane {
    fn new(t: &Coloring, orientation: Orientation, k: usize) -> Self {
        let side = t.side();
        let mut cells = Vec::with_capacity(side * side);
        for a in 1..=side {
            for b in 1..=side {
                cells.push(match orientation {
                    Orientation::FixK => t.color(a, b, k),
                    Orientation::FixJ => t.color(a, k, b),
                    Orientation::FixI => t.color(k, a, b),
                });
            }
        }
        Plane {
            side,
            colors: t.params.colors() as usize,
            cells,
            orientation,
            k,
        }
    }

    /// Per-column color counts over the rows in `b1`: `out[b·M + c]`.
    fn column_hist(&self, b1: &[usize]) -> Vec<u32> {
        let mut hist = vec![0u32; self.side * self.colors];
        for &a in b1 {
            for b in 0..self.side {
                hist[b * self.colors + self.cells[a * self.side + b] as usize] += 1;
            }
        }
        hist
    }

    fn check(&self, b1: &[usize], col_hist: &[u32], b2: &[usize], tally: &mut Tally, limit: usize) {
        let mut counts = vec![0u64; self.colors];
        for &b in b2 {
            for (c, slot) in counts.iter_mut().enumerate() {
                *slot += col_hist[b * self.colors + c] as u64;
            }
        }
        let area = (b1.len() * b2.len()) as u64;
        tally.checked += 1;
        for (c, &count) in counts.iter().enumerate() {
            tally.max_share = tally.max_share.max(count as f64 / area as f64);
            // count > (2/M)·area, in integers
            if count * self.colors as u64 > 2 * area {
                tally.total += 1;
                if tally.violations.len() < limit {
                    tally.violations.push(Violation {
                        orientation: self.orientation,
                        k: self.k,
                        b1: b1.iter().map(|a| a + 1).collect(),
                        b2: b2.iter().map(|b| b + 1).collect(),
                        color: c as u8,
                        count,
                        threshold: 2.0 * area as f64 / self.colors as f64,
                    });
                }
            }
        }
    }

    fn check_all(&self, sides: &[Vec<usize>], limit: usize) -> Tally {
        let mut tally = Tally::default();
        for b1 in sides {
            let hist = self.column_hist(b1);
            for b2 in sides {
                self.check(b1, &hist, b2, &mut tally, limit);
            }
        }
        tally
    }
}

/// Runs `sides × sides` on every plane, in (orientation, k) order.
fn audit_planes(t: &Coloring, sides: &[Vec<usize>], limit: usize) -> Tally {
    let side = t.side();
    (0..3 * side)
        .into_par_iter()
        .map(|u| Plane::new(t, Orientation::from_index(u / side), u % side + 1).check_all(sides, limit))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::default(), |acc, t| acc.merge(t, limit))
}

fn fiber_sides(params: &ColoringParams) -> Result<Vec<Vec<usize>>> {
    let (n, m) = (params.n, params.color_bits());
    let fiber = 1usize << (n - m);
    let g = params.granularity() as usize;
    if !g.is_multiple_of(fiber) {
        return Err(KlbError::InvalidParams(format!(
            "granularity {g} is not a union of fibers of size {fiber}"
        )));
    }
    let mut fibers = vec![Vec::new(); params.colors() as usize];
    for v in 0..params.side() {
        fibers[fold_xor(v, n, m) as usize].push(v as usize);
    }
    Ok(fibers
        .iter()
        .combinations(g / fiber)
        .map(|chosen| chosen.into_iter().flatten().copied().sorted().collect())
        .collect())
}

pub fn verify_coloring(t: &Coloring, mode: &AuditMode) -> Result<AuditReport> {
    let params = t.params;
    let side = t.side();
    let limit = DEFAULT_RECORD_LIMIT;
    let tally = match *mode {
        AuditMode::Exhaustive { sizes, ceiling } => {
            let requested = exhaustive_rectangle_count(&params, sizes);
            if requested > ceiling as u128 {
                return Err(KlbError::AuditCeilingExceeded { requested, ceiling });
            }
            let sides: Vec<Vec<usize>> = side_sizes(&params, sizes)
                .into_iter()
                .flat_map(|s| (0..side).combinations(s))
                .collect();
            audit_planes(t, &sides, limit)
        }
        AuditMode::FiberAligned => {
            let sides = fiber_sides(&params)?;
            let requested = (sides.len() as u128).pow(2) * 3 * side as u128;
            if requested > DEFAULT_AUDIT_CEILING as u128 {
                return Err(KlbError::AuditCeilingExceeded {
                    requested,
                    ceiling: DEFAULT_AUDIT_CEILING,
                });
            }
            audit_planes(t, &sides, limit)
        }
        AuditMode::Sampled { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = params.granularity() as usize;
            let mut tally = Tally::default();
            for _ in 0..count {
                let orientation = Orientation::from_index(rng.gen_range(0..3));
                let k = rng.gen_range(1..=side);
                let b1 = sample(&mut rng, side, g).into_iter().sorted().collect::<Vec<_>>();
                let b2 = sample(&mut rng, side, g).into_iter().sorted().collect::<Vec<_>>();
                let plane = Plane::new(t, orientation, k);
                let hist = plane.column_hist(&b1);
                plane.check(&b1, &hist, &b2, &mut tally, limit);
            }
            tally
        }
    };
    Ok(AuditReport {
        mode: *mode,
        params,
        rectangles_checked: tally.checked,
        violation_total: tally.total,
        truncated: tally.total > tally.violations.len() as u64,
        violations: tally.violations,
        max_share: tally.max_share,
    })
}
