//! Bit-exact binary checkpoints for network parameters.
//!
//! A checkpoint is an ordered list of named f64 tensors written in a small
//! fixed binary layout (magic, version, then length-prefixed records with
//! little-endian payloads). Reading back a checkpoint reproduces every
//! parameter bit for bit, which the reproducibility tests rely on.

use std::fs;
use std::path::Path;

use super::dense::DenseNet;
use super::NnError;

const MAGIC: &[u8; 4] = b"AWCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint { tensors: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        let name = name.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor {name}: shape does not match data length"
        );
        self.tensors.push(NamedTensor { name, shape, data });
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Records every layer of `net` as `{prefix}layer{i}.w` / `.b`.
    pub fn push_net(&mut self, prefix: &str, net: &DenseNet) {
        for (i, layer) in net.layers().iter().enumerate() {
            self.push(
                format!("{prefix}layer{i}.w"),
                vec![layer.w.nrows(), layer.w.ncols()],
                layer.w.iter().copied().collect(),
            );
            self.push(
                format!("{prefix}layer{i}.b"),
                vec![layer.b.len()],
                layer.b.to_vec(),
            );
        }
    }

    /// Restores a network previously stored with [`Self::push_net`] under
    /// the same prefix. The target must already have matching layer shapes.
    pub fn extract_net(&self, prefix: &str, net: &mut DenseNet) -> Result<(), NnError> {
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let wname = format!("{prefix}layer{i}.w");
            let w = self
                .get(&wname)
                .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {wname}")))?;
            if w.shape != [layer.w.nrows(), layer.w.ncols()] {
                return Err(NnError::Checkpoint(format!(
                    "tensor {wname}: shape {:?} does not fit layer ({}, {})",
                    w.shape,
                    layer.w.nrows(),
                    layer.w.ncols()
                )));
            }
            for (dst, src) in layer.w.iter_mut().zip(&w.data) {
                *dst = *src;
            }
            let bname = format!("{prefix}layer{i}.b");
            let b = self
                .get(&bname)
                .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {bname}")))?;
            if b.shape != [layer.b.len()] {
                return Err(NnError::Checkpoint(format!(
                    "tensor {bname}: shape {:?} does not fit bias of length {}",
                    b.shape,
                    layer.b.len()
                )));
            }
            for (dst, src) in layer.b.iter_mut().zip(&b.data) {
                *dst = *src;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            let name = t.name.as_bytes();
            assert!(name.len() <= u16::MAX as usize, "tensor name too long");
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            assert!(t.shape.len() <= u8::MAX as usize, "tensor rank too large");
            out.push(t.shape.len() as u8);
            for &dim in &t.shape {
                out.extend_from_slice(&(dim as u64).to_le_bytes());
            }
            for &x in &t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(NnError::Checkpoint("bad magic, not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(NnError::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| NnError::Checkpoint("tensor name is not utf-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let len: usize = shape.iter().product();
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                data.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
            }
            tensors.push(NamedTensor { name, shape, data });
        }
        if r.pos != bytes.len() {
            return Err(NnError::Checkpoint(format!(
                "{} trailing bytes after last tensor",
                bytes.len() - r.pos
            )));
        }
        Ok(Checkpoint { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let bytes = fs::read(path)?;
        Checkpoint::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.bytes.len() {
            return Err(NnError::Checkpoint(format!(
                "truncated checkpoint: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
