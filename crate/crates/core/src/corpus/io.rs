//! Binary corpus file format.
//!
//! Layout (little-endian):
//! - magic `CFC1`
//! - u64 sample count, u64 dropped count, u64 config digest
//! - per sample: 8 channel planes of 50 bytes (400 bits each, LSB-first),
//!   16 f32 params, f32 score, f32 duration_norm, u64 level / class / sim
//!   seeds.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Corpus, Sample};
use crate::level::{ChannelStack, CHANNELS, PLANE_BYTES};

pub const MAGIC: [u8; 4] = *b"CFC1";

#[derive(Debug, Error)]
pub enum CorpusIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes (not a corpus file)")]
    BadMagic,
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&(corpus.samples.len() as u64).to_le_bytes())?;
    w.write_all(&corpus.dropped_incomplete.to_le_bytes())?;
    w.write_all(&corpus.config_digest.to_le_bytes())?;
    for s in &corpus.samples {
        for c in 0..CHANNELS {
            w.write_all(s.channels.plane(c))?;
        }
        for p in &s.params {
            w.write_all(&p.to_le_bytes())?;
        }
        w.write_all(&s.score.to_le_bytes())?;
        w.write_all(&s.duration_norm.to_le_bytes())?;
        w.write_all(&s.level_seed.to_le_bytes())?;
        w.write_all(&s.class_seed.to_le_bytes())?;
        w.write_all(&s.sim_seed.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusIoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(CorpusIoError::BadMagic);
    }
    let count = read_u64(&mut r, "sample count")?;
    let dropped = read_u64(&mut r, "dropped count")?;
    let digest = read_u64(&mut r, "config digest")?;
    let mut samples = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut planes = [[0u8; PLANE_BYTES]; CHANNELS];
        for plane in &mut planes {
            read_exact(&mut r, plane, "channel plane")?;
        }
        let mut params = [0.0f32; 16];
        for p in &mut params {
            *p = read_f32(&mut r, "params")?;
        }
        let score = read_f32(&mut r, "score")?;
        let duration_norm = read_f32(&mut r, "duration")?;
        let level_seed = read_u64(&mut r, "level seed")?;
        let class_seed = read_u64(&mut r, "class seed")?;
        let sim_seed = read_u64(&mut r, "sim seed")?;
        samples.push(Sample {
            channels: ChannelStack::from_planes(planes),
            params,
            score,
            duration_norm,
            level_seed,
            class_seed,
            sim_seed,
        });
    }
    Ok(Corpus {
        samples,
        dropped_incomplete: dropped,
        config_digest: digest,
    })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &'static str) -> Result<(), CorpusIoError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => CorpusIoError::Truncated(what),
        _ => CorpusIoError::Io(e),
    })
}

fn read_u64(r: &mut impl Read, what: &'static str) -> Result<u64, CorpusIoError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f32(r: &mut impl Read, what: &'static str) -> Result<f32, CorpusIoError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(f32::from_le_bytes(b))
}
