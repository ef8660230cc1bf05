//! Coloring files.
//!
//! Layout: magic `KLB1`, then little-endian `u32`s `n`, `σ1` numerator,
//! `σ1` denominator, `σ2` numerator, `σ2` denominator, then the `N³` colors in
//! table order, `floor(σ1·n)` bits each, packed least-significant bit first.
//! A JSON sidecar `<path>.json` carries parameters, provenance, the SHA-256 of
//! the packed payload and an optional audit summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AuditMode, AuditReport, Coloring, ColoringParams, Provenance};
use crate::error::{KlbError, Result};
use crate::Sigma;

const MAGIC: &[u8; 4] = b"KLB1";
const HEADER_LEN: usize = 4 + 5 * 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub mode: AuditMode,
    pub rectangles_checked: u64,
    pub violation_total: u64,
    pub max_share: f64,
}

impl From<&AuditReport> for AuditSummary {
    fn from(r: &AuditReport) -> Self {
        AuditSummary {
            mode: r.mode,
            rectangles_checked: r.rectangles_checked,
            violation_total: r.violation_total,
            max_share: r.max_share,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringSidecar {
    pub params: ColoringParams,
    pub provenance: Provenance,
    pub table_sha256: String,
    #[serde(default)]
    pub audit: Option<AuditSummary>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn pack(colors: &[u8], width: u32) -> Vec<u8> {
    let mut out = vec![0u8; (colors.len() * width as usize).div_ceil(8)];
    let mut pos = 0usize;
    for &c in colors {
        for b in 0..width {
            if (c >> b) & 1 == 1 {
                out[pos / 8] |= 1 << (pos % 8);
            }
            pos += 1;
        }
    }
    out
}

fn unpack(bytes: &[u8], width: u32, count: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(count);
    let mut pos = 0usize;
    for _ in 0..count {
        let mut c = 0u8;
        for b in 0..width {
            c |= ((bytes[pos / 8] >> (pos % 8)) & 1) << b;
            pos += 1;
        }
        out.push(c);
    }
    out
}

/// Writes the table and its sidecar; returns the sidecar.
pub fn save_coloring(path: impl AsRef<Path>, t: &Coloring, audit: Option<&AuditReport>) -> Result<ColoringSidecar> {
    let path = path.as_ref();
    let p = &t.params;
    let payload = pack(t.table(), p.color_bits());
    let mut out = MAGIC.to_vec();
    for v in [p.n, *p.sigma1.numer(), *p.sigma1.denom(), *p.sigma2.numer(), *p.sigma2.denom()] {
        out.extend(v.to_le_bytes());
    }
    out.extend(&payload);
    fs::write(path, out)?;
    let sidecar = ColoringSidecar {
        params: *p,
        provenance: t.provenance.clone(),
        table_sha256: hex::encode(Sha256::digest(&payload)),
        audit: audit.map(AuditSummary::from),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

/// Reads a table. The sidecar, when present, must match the header and the
/// payload digest, and supplies any granularity override.
pub fn load_coloring(path: impl AsRef<Path>) -> Result<(Coloring, Option<ColoringSidecar>)> {
    let path = path.as_ref();
    let raw = fs::read(path)?;
    if raw.len() < HEADER_LEN || &raw[..4] != MAGIC {
        return Err(KlbError::Format(format!("{} is not a KLB1 coloring file", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(raw[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let (n, s1n, s1d, s2n, s2d) = (word(0), word(1), word(2), word(3), word(4));
    if s1d == 0 || s2d == 0 {
        return Err(KlbError::Format("zero denominator in header".into()));
    }
    let mut params = ColoringParams::new(n, Sigma::new(s1n, s1d), Sigma::new(s2n, s2d))?;
    if n > super::MAX_TABLE_N {
        return Err(KlbError::Format(format!("n = {n} exceeds the table limit")));
    }
    let payload = &raw[HEADER_LEN..];
    let cells = 1usize << (3 * n);
    let width = params.color_bits();
    if payload.len() != (cells * width as usize).div_ceil(8) {
        return Err(KlbError::Format(format!(
            "payload holds {} bytes, expected {}",
            payload.len(),
            (cells * width as usize).div_ceil(8)
        )));
    }
    let sidecar = match fs::read_to_string(sidecar_path(path)) {
        Ok(text) => Some(serde_json::from_str::<ColoringSidecar>(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(sc) = &sidecar {
        let digest = hex::encode(Sha256::digest(payload));
        if sc.table_sha256 != digest {
            return Err(KlbError::Format("table digest does not match the sidecar".into()));
        }
        if (sc.params.n, sc.params.sigma1, sc.params.sigma2) != (params.n, params.sigma1, params.sigma2) {
            return Err(KlbError::Format("sidecar parameters disagree with the header".into()));
        }
        params.granularity_log = sc.params.granularity_log;
        params.validate()?;
    }
    let table = unpack(payload, width, cells);
    let provenance = Provenance::Loaded {
        path: path.display().to_string(),
    };
    Ok((Coloring::from_table(params, provenance, table)?, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{make_random_coloring, verify_coloring, SizeRule};

    #[test]
    fn pack_round_trip() {
        let colors = [0u8, 3, 1, 2, 2, 3, 0];
        assert_eq!(unpack(&pack(&colors, 2), 2, colors.len()), colors);
        assert_eq!(pack(&[1, 0, 1], 1), vec![0b101]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.klb");
        let p = ColoringParams::new(3, Sigma::new(2, 3), Sigma::new(5, 6)).unwrap();
        let t = make_random_coloring(p, 9).unwrap();
        let audit = verify_coloring(&t, &AuditMode::exhaustive(SizeRule::Exact)).unwrap();
        save_coloring(&path, &t, Some(&audit)).unwrap();
        let raw = fs::read(&path).unwrap();
        assert_eq!(&raw[..4], b"KLB1");
        assert_eq!(raw.len(), HEADER_LEN + 512 * 2 / 8);
        let (back, sidecar) = load_coloring(&path).unwrap();
        assert_eq!(back.table(), t.table());
        assert_eq!(back.params, t.params);
        assert_eq!(sidecar.unwrap().provenance, Provenance::Random { seed: 9 });
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.klb");
        let p = ColoringParams::new(3, Sigma::new(2, 3), Sigma::new(5, 6)).unwrap();
        save_coloring(&path, &make_random_coloring(p, 1).unwrap(), None).unwrap();
        let mut raw = fs::read(&path).unwrap();
        let last = raw.len() - 1;
        raw[last] ^= 1;
        fs::write(&path, raw).unwrap();
        assert!(load_coloring(&path).is_err());
    }
}
