//! Abscissa weight tables for the midpoint sums.
//!
//! For a given `N` the abscissas are `x_n = (2n+1)/(2N)`, `n = 0..N`. A
//! weight table holds `f(x_n)` rounded to `f64`, where `f` is computed
//! exactly in rational arithmetic: `S_{p,q}`, the Gauss map, or the
//! identity. Tables are independent of `s` and are the costly part of a
//! sweep, so [`TableCache`] keeps them in memory and optionally on disk.
//!
//! On-disk layout (little endian): 8-byte magic, `N: u64`, kind tag `u32`,
//! `p: u32`, `q: u32`, `N` weights as `f64`, then the SHA-256 of every
//! preceding byte. Files that fail any check are discarded and rebuilt.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cf::{gauss_map_word, s_pq_word};
use crate::reduce::CHUNK;

const MAGIC: &[u8; 8] = b"CFZTAB01";
const HEADER_LEN: usize = 8 + 8 + 4 + 4 + 4;
const HASH_LEN: usize = 32;

/// Which function of the abscissa a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    /// `S_{p,q}(x)`.
    Swap { p: usize, q: usize },
    /// The Gauss map `h(x)`.
    Gauss,
    /// `x` itself.
    Identity,
}

impl WeightKind {
    fn tag(self) -> (u32, u32, u32) {
        match self {
            WeightKind::Swap { p, q } => (1, p as u32, q as u32),
            WeightKind::Gauss => (2, 0, 0),
            WeightKind::Identity => (3, 0, 0),
        }
    }

    fn file_stem(self) -> String {
        match self {
            WeightKind::Swap { p, q } => format!("swap_p{p}_q{q}"),
            WeightKind::Gauss => "gauss".into(),
            WeightKind::Identity => "identity".into(),
        }
    }
}

/// `x_n` as the correctly rounded quotient `(2n+1)/(2N)`.
pub fn abscissa(n: u64, big_n: u64) -> f64 {
    (2 * n + 1) as f64 / (2 * big_n) as f64
}

/// `ln x_n` for `n = 0..N`.
pub fn log_abscissas(big_n: u64) -> Vec<f64> {
    let mut out = vec![0.0; big_n as usize];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (i, v) in chunk.iter_mut().enumerate() {
                *v = abscissa((c * CHUNK + i) as u64, big_n).ln();
            }
        });
    out
}

/// Builds the weight table for `kind` without touching any cache.
pub fn build_weights(big_n: u64, kind: WeightKind) -> Vec<f64> {
    let den = 2 * big_n;
    let mut out = vec![0.0; big_n as usize];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (i, v) in chunk.iter_mut().enumerate() {
                let num = 2 * (c * CHUNK + i) as u64 + 1;
                *v = match kind {
                    WeightKind::Swap { p, q } => s_pq_word(num, den, p, q),
                    WeightKind::Gauss => gauss_map_word(num, den),
                    WeightKind::Identity => num as f64 / den as f64,
                };
            }
        });
    out
}

fn encode(big_n: u64, kind: WeightKind, weights: &[f64]) -> Vec<u8> {
    let (tag, p, q) = kind.tag();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * weights.len() + HASH_LEN);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&big_n.to_le_bytes());
    buf.extend_from_slice(&tag.to_le_bytes());
    buf.extend_from_slice(&p.to_le_bytes());
    buf.extend_from_slice(&q.to_le_bytes());
    for w in weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    let hash = Sha256::digest(&buf);
    buf.extend_from_slice(&hash);
    buf
}

fn decode(bytes: &[u8], big_n: u64, kind: WeightKind) -> Option<Vec<f64>> {
    let expected_len = HEADER_LEN + 8 * big_n as usize + HASH_LEN;
    if bytes.len() != expected_len {
        return None;
    }
    let (body, hash) = bytes.split_at(expected_len - HASH_LEN);
    if Sha256::digest(body).as_slice() != hash {
        return None;
    }
    let (tag, p, q) = kind.tag();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&big_n.to_le_bytes());
    header.extend_from_slice(&tag.to_le_bytes());
    header.extend_from_slice(&p.to_le_bytes());
    header.extend_from_slice(&q.to_le_bytes());
    if body[..HEADER_LEN] != header[..] {
        return None;
    }
    Some(
        body[HEADER_LEN..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    )
}

type TableKey = (u64, WeightKind);

/// Shared store of weight tables keyed by `(N, kind)`.
#[derive(Debug, Default)]
pub struct TableCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<TableKey, Arc<Vec<f64>>>>,
}

impl TableCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Cache backed by `dir`; the directory is created on first write.
    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            memory: Mutex::default(),
        }
    }

    pub fn path_for(&self, big_n: u64, kind: WeightKind) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("N{big_n}_{}.bin", kind.file_stem())))
    }

    pub fn weights(&self, big_n: u64, kind: WeightKind) -> Arc<Vec<f64>> {
        if let Some(t) = self.memory.lock().unwrap().get(&(big_n, kind)) {
            return Arc::clone(t);
        }
        let table = Arc::new(self.load_or_build(big_n, kind));
        self.memory
            .lock()
            .unwrap()
            .entry((big_n, kind))
            .or_insert(table)
            .clone()
    }

    /// Drops the in-memory tables for one `N`; disk files are kept.
    pub fn evict(&self, big_n: u64) {
        self.memory.lock().unwrap().retain(|(n, _), _| *n != big_n);
    }

    /// Drops all in-memory tables; disk files are kept.
    pub fn clear_memory(&self) {
        self.memory.lock().unwrap().clear();
    }

    fn load_or_build(&self, big_n: u64, kind: WeightKind) -> Vec<f64> {
        let Some(path) = self.path_for(big_n, kind) else {
            return build_weights(big_n, kind);
        };
        if let Ok(bytes) = fs::read(&path) {
            match decode(&bytes, big_n, kind) {
                Some(w) => return w,
                None => log::warn!("discarding corrupt table cache {}", path.display()),
            }
        }
        let weights = build_weights(big_n, kind);
        if let Err(e) = write_atomic(&path, &encode(big_n, kind, &weights)) {
            log::warn!("could not write table cache {}: {e}", path.display());
        }
        weights
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("bin.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_table_is_the_abscissas() {
        let w = build_weights(7, WeightKind::Identity);
        assert_eq!(w, (0..7).map(|n| abscissa(n, 7)).collect::<Vec<_>>());
        let diag = build_weights(7, WeightKind::Swap { p: 2, q: 2 });
        assert_eq!(w, diag);
    }

    #[test]
    fn encode_decode_round_trip_and_rejection() {
        let kind = WeightKind::Swap { p: 1, q: 2 };
        let w = build_weights(33, kind);
        let mut bytes = encode(33, kind, &w);
        assert_eq!(decode(&bytes, 33, kind).unwrap(), w);
        assert!(decode(&bytes, 33, WeightKind::Swap { p: 1, q: 3 }).is_none());
        assert!(decode(&bytes, 34, kind).is_none());
        bytes[HEADER_LEN + 5] ^= 0x40;
        assert!(decode(&bytes, 33, kind).is_none());
    }
}
