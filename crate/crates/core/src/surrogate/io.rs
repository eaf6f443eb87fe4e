//! Model weight file format.
//!
//! Layout (little-endian):
//! - magic `CFW1`
//! - u8 model kind tag
//! - u64 architecture digest (see [`NetworkSpec::digest`])
//! - u32 tensor count, then per tensor: u32 ndim, u32 dims..., f32 data in
//!   the fixed tensor order of [`Net::tensors`].

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ModelKind, Net, NetworkSpec, SurrogateModel};

pub const MAGIC: [u8; 4] = *b"CFW1";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes (not a model file)")]
    BadMagic,
    #[error("unknown model kind tag {0}")]
    UnknownKind(u8),
    #[error("architecture digest mismatch (file {found:016x}, expected {expected:016x})")]
    DigestMismatch { found: u64, expected: u64 },
    #[error("tensor {layer}: expected shape {expected:?}, found {found:?}")]
    Shape {
        layer: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("file truncated while reading {0}")]
    Truncated(String),
}

fn kind_tag(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::Cnn => 0,
        ModelKind::Mlp16 => 1,
        ModelKind::Perceptron => 2,
        ModelKind::Linear => 3,
    }
}

fn tag_kind(tag: u8) -> Result<ModelKind, ModelIoError> {
    match tag {
        0 => Ok(ModelKind::Cnn),
        1 => Ok(ModelKind::Mlp16),
        2 => Ok(ModelKind::Perceptron),
        3 => Ok(ModelKind::Linear),
        t => Err(ModelIoError::UnknownKind(t)),
    }
}

pub fn save_model(model: &SurrogateModel, path: &Path) -> Result<(), ModelIoError> {
    let spec = NetworkSpec::of(model.kind);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&[kind_tag(model.kind)])?;
    w.write_all(&spec.digest().to_le_bytes())?;
    let tensors = model.net.tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for ((name, data), (spec_name, dims)) in tensors.iter().zip(spec.tensors.iter()) {
        debug_assert_eq!(name, spec_name);
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in dims {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        for v in data.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SurrogateModel, ModelIoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let mut tag = [0u8; 1];
    read_exact(&mut r, &mut tag, "kind tag")?;
    let kind = tag_kind(tag[0])?;
    let spec = NetworkSpec::of(kind);
    let digest = read_u64(&mut r, "digest")?;
    if digest != spec.digest() {
        return Err(ModelIoError::DigestMismatch {
            found: digest,
            expected: spec.digest(),
        });
    }
    let count = read_u32(&mut r, "tensor count")? as usize;
    if count != spec.tensors.len() {
        return Err(ModelIoError::Shape {
            layer: "tensor count".to_string(),
            expected: vec![spec.tensors.len()],
            found: vec![count],
        });
    }
    let mut net = Net::<f32>::zeros(kind);
    for ((name, expected_dims), (_, data)) in
        spec.tensors.iter().zip(net.tensors_mut())
    {
        let ndim = read_u32(&mut r, "ndim")? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(read_u32(&mut r, "dims")? as usize);
        }
        if dims != *expected_dims {
            return Err(ModelIoError::Shape {
                layer: name.to_string(),
                expected: expected_dims.clone(),
                found: dims,
            });
        }
        for v in data.iter_mut() {
            *v = read_f32(&mut r, name)?;
        }
    }
    Ok(SurrogateModel { kind, net })
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<(), ModelIoError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ModelIoError::Truncated(what.to_string()),
        _ => ModelIoError::Io(e),
    })
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64, ModelIoError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32, ModelIoError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32(r: &mut impl Read, what: &str) -> Result<f32, ModelIoError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(f32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::super::{ModelKind, SurrogateModel, Trace, forward, PARAM_INPUT};
    use super::*;
    use crate::level::{generate_level, GeneratorConfig};

    #[test]
    fn save_load_forward_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let level = generate_level(4, &GeneratorConfig::default()).unwrap();
        let map = level.encode().to_f32();
        let params = [0.4f32; PARAM_INPUT];
        for kind in ModelKind::ALL {
            let model = SurrogateModel::init(kind, 17);
            let mut tr = Trace::new();
            let before = forward(&model.net, &map, &params, &mut tr);
            let path = dir.path().join(format!("{}.cfw", kind.name()));
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(loaded.kind, kind);
            let after = forward(&loaded.net, &map, &params, &mut tr);
            assert_eq!(before[0].to_bits(), after[0].to_bits(), "{kind:?}");
            assert_eq!(before[1].to_bits(), after[1].to_bits(), "{kind:?}");
        }
    }

    #[test]
    fn corrupted_magic_and_truncation_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let model = SurrogateModel::init(ModelKind::Perceptron, 2);
        let path = dir.path().join("m.cfw");
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let bad = dir.path().join("bad.cfw");
        std::fs::write(&bad, b"XXXX").unwrap();
        assert!(matches!(load_model(&bad), Err(ModelIoError::BadMagic)));

        std::fs::write(&bad, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_model(&bad), Err(ModelIoError::Truncated(_))));
    }

    #[test]
    fn digest_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let model = SurrogateModel::init(ModelKind::Linear, 2);
        let path = dir.path().join("m.cfw");
        save_model(&model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[6] ^= 0xff; // inside the digest field
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(ModelIoError::DigestMismatch { .. })
        ));
    }
}
