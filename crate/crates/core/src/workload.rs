//! Input streams: seeded Zipf workloads and line-per-key log files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Key, Message};

/// Zipf pmf over ranks `1..=num_keys`: `p_k = k^-z / sum_j j^-z`.
#[derive(Clone, Debug)]
pub struct ZipfDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl ZipfDistribution {
    pub fn new(z: f64, num_keys: usize) -> Result<Self> {
        if !z.is_finite() || z < 0.0 {
            return Err(Error::usage(format!("zipf exponent must be >= 0, got {z}")));
        }
        if num_keys == 0 {
            return Err(Error::usage("zipf needs at least one key"));
        }
        let weights: Vec<f64> = (1..=num_keys).map(|k| (k as f64).powf(-z)).collect();
        // smallest terms first
        let norm: f64 = weights.iter().rev().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / norm).collect();
        let mut cdf = Vec::with_capacity(num_keys);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let last = acc;
        for c in &mut cdf {
            *c /= last;
        }
        Ok(ZipfDistribution { probs, cdf })
    }

    pub fn num_keys(&self) -> usize {
        self.probs.len()
    }

    /// Probability of the key at `rank` (1-based).
    pub fn probability(&self, rank: usize) -> Result<f64> {
        if rank == 0 || rank > self.probs.len() {
            return Err(Error::usage(format!(
                "rank {rank} out of range 1..={}",
                self.probs.len()
            )));
        }
        Ok(self.probs[rank - 1])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Maps a uniform draw in `[0, 1)` to a rank.
    pub fn rank_for(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) + 1
    }
}

pub fn zipf_probability(rank: usize, z: f64, num_keys: usize) -> Result<f64> {
    ZipfDistribution::new(z, num_keys)?.probability(rank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZipfConfig {
    pub z: f64,
    pub num_keys: usize,
    pub num_messages: u64,
    pub seed: u64,
}

impl ZipfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_messages == 0 {
            return Err(Error::usage("number of messages must be positive"));
        }
        ZipfDistribution::new(self.z, self.num_keys).map(|_| ())
    }
}

/// I.i.d. Zipf draws; key `k` is the rank. Timestamps run `0..num_messages`.
#[derive(Clone, Debug)]
pub struct ZipfStream {
    dist: ZipfDistribution,
    rng: ChaCha8Rng,
    next: u64,
    len: u64,
}

impl ZipfStream {
    pub fn distribution(&self) -> &ZipfDistribution {
        &self.dist
    }
}

impl Iterator for ZipfStream {
    type Item = Message;

    fn next(&mut self) -> Option<Message> {
        if self.next == self.len {
            return None;
        }
        let u: f64 = self.rng.random();
        let rank = self.dist.rank_for(u);
        let msg = Message::new(self.next, Key(rank as u64));
        self.next += 1;
        Some(msg)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.len - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for ZipfStream {}

pub fn generate(config: &ZipfConfig) -> Result<ZipfStream> {
    config.validate()?;
    Ok(ZipfStream {
        dist: ZipfDistribution::new(config.z, config.num_keys)?,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        next: 0,
        len: config.num_messages,
    })
}

/// Reads one key per line. Blank lines are skipped without consuming a
/// timestamp; LF and CRLF endings are accepted. Distinct lines are interned
/// to dense keys in order of first appearance.
#[derive(Debug)]
pub struct FileStream {
    path: PathBuf,
    reader: BufReader<File>,
    line: usize,
    next_timestamp: u64,
    interned: HashMap<String, u64>,
    names: Vec<String>,
    buf: Vec<u8>,
    failed: bool,
}

impl FileStream {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Original text of an interned key.
    pub fn key_name(&self, key: Key) -> Option<&str> {
        self.names.get(key.0 as usize).map(String::as_str)
    }

    pub fn distinct_keys(&self) -> usize {
        self.names.len()
    }

    fn intern(&mut self, text: &str) -> Key {
        if let Some(&id) = self.interned.get(text) {
            return Key(id);
        }
        let id = self.names.len() as u64;
        self.interned.insert(text.to_owned(), id);
        self.names.push(text.to_owned());
        Key(id)
    }
}

impl Iterator for FileStream {
    type Item = Result<Message>;

    fn next(&mut self) -> Option<Result<Message>> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::Input {
                        path: self.path.clone(),
                        line: self.line + 1,
                        message: e.to_string(),
                    }));
                }
            }
            self.line += 1;
            let mut bytes = self.buf.as_slice();
            if let Some(rest) = bytes.strip_suffix(b"\n") {
                bytes = rest;
            }
            if let Some(rest) = bytes.strip_suffix(b"\r") {
                bytes = rest;
            }
            let text = match std::str::from_utf8(bytes) {
                Ok(t) => t,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::Input {
                        path: self.path.clone(),
                        line: self.line,
                        message: format!("invalid UTF-8: {e}"),
                    }));
                }
            };
            if text.trim().is_empty() {
                continue;
            }
            let text = text.to_owned();
            let key = self.intern(&text);
            let msg = Message::new(self.next_timestamp, key);
            self.next_timestamp += 1;
            return Some(Ok(msg));
        }
    }
}

pub fn ingest(path: impl AsRef<Path>) -> Result<FileStream> {
    let path = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FileStream {
        path,
        reader: BufReader::new(file),
        line: 0,
        next_timestamp: 0,
        interned: HashMap::new(),
        names: Vec::new(),
        buf: Vec::new(),
        failed: false,
    })
}

/// Any finite message producer the simulator can consume.
#[derive(Debug)]
pub enum StreamSource {
    Zipf(ZipfStream),
    File(FileStream),
    Memory(std::vec::IntoIter<Message>),
}

impl StreamSource {
    pub fn from_keys(keys: impl IntoIterator<Item = Key>) -> Self {
        let messages: Vec<Message> = keys
            .into_iter()
            .enumerate()
            .map(|(t, k)| Message::new(t as u64, k))
            .collect();
        StreamSource::Memory(messages.into_iter())
    }
}

impl Iterator for StreamSource {
    type Item = Result<Message>;

    fn next(&mut self) -> Option<Result<Message>> {
        match self {
            StreamSource::Zipf(s) => s.next().map(Ok),
            StreamSource::File(s) => s.next(),
            StreamSource::Memory(s) => s.next().map(Ok),
        }
    }
}
