//! Source specifications on the command line.
//!
//! ```text
//! zeros | ones | alt | pairs          periodic 0, 1, 01, 0011
//! prng | prng:SEED                    seeded stream (bare `prng` uses --seed)
//! bits:0110...                        literal
//! file:PATH                           raw bit file
//! dilute0:SPEC | dilute2:SPEC         x(1)0x(2)0... | x(1)x(2)0x(3)000...
//! odd:SPEC | even:SPEC                odd / even positions
//! xor:SPEC,SPEC | interleave:SPEC,SPEC
//! ```

use klb_core::seqlab::{
    dilute_powers, dilute_zero, interleave, prng_stream, read_bit_file, split_odd_even, xor_seq, PrefixSource,
};
use klb_core::{BitString, KlbError, Result};

/// Splits `a,b` at the first comma not owned by a nested `xor:`/`interleave:`.
fn split_pair(s: &str) -> Result<(&str, &str)> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            ',' if depth == 0 => return Ok((&s[..i], &s[i + 1..])),
            ',' => depth -= 1,
            _ if s[i..].starts_with("xor:") || s[i..].starts_with("interleave:") => depth += 1,
            _ => {}
        }
    }
    Err(KlbError::InvalidParams(format!("expected two comma-separated sources in {s:?}")))
}

/// Builds a source with horizon at least `horizon` where the generator allows
/// it; literal and file sources keep their own length.
pub fn parse_source(spec: &str, horizon: usize, seed: Option<u64>) -> Result<PrefixSource> {
    let periodic = |p: &str| PrefixSource::periodic(p.parse().expect("static period"), horizon);
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let need_arg = || arg.ok_or_else(|| KlbError::InvalidParams(format!("{head} needs an argument")));
    Ok(match head {
        "zeros" => periodic("0"),
        "ones" => periodic("1"),
        "alt" => periodic("01"),
        "pairs" => periodic("0011"),
        "prng" => {
            let seed = match arg {
                Some(s) => s
                    .parse()
                    .map_err(|_| KlbError::InvalidParams(format!("bad seed {s:?}")))?,
                None => seed.ok_or_else(|| KlbError::InvalidParams("prng without a seed needs --seed".into()))?,
            };
            prng_stream(seed, horizon)
        }
        "bits" => PrefixSource::literal(need_arg()?.parse::<BitString>()?),
        "file" => PrefixSource::literal(read_bit_file(need_arg()?)?),
        "dilute0" => dilute_zero(&parse_source(need_arg()?, horizon.div_ceil(2), seed)?),
        "dilute2" => {
            let inner = (usize::BITS - horizon.leading_zeros()) as usize;
            dilute_powers(&parse_source(need_arg()?, inner, seed)?)
        }
        "odd" => split_odd_even(&parse_source(need_arg()?, horizon.saturating_mul(2), seed)?).0,
        "even" => split_odd_even(&parse_source(need_arg()?, horizon.saturating_mul(2), seed)?).1,
        "xor" | "interleave" => {
            let (a, b) = split_pair(need_arg()?)?;
            let inner = if head == "xor" { horizon } else { horizon.div_ceil(2) };
            let (a, b) = (parse_source(a, inner, seed)?, parse_source(b, inner, seed)?);
            if head == "xor" {
                xor_seq(&a, &b)
            } else {
                interleave(&a, &b)
            }
        }
        other => return Err(KlbError::InvalidParams(format!("unknown source {other:?}"))),
    })
}
