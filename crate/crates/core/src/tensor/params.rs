use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use sha2::{Digest, Sha256};

use super::Tensor;
use crate::error::{Error, Result};
use crate::SeededRng;

pub const MODEL_MAGIC: &[u8; 4] = b"NCRH";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Index of a parameter inside its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    name: String,
    value: Tensor,
    trainable: bool,
}

/// Named parameter tensors. Names are unique; ids follow insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
    by_name: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::ModelShape(format!("duplicate parameter name {name:?}")));
        }
        self.by_name.insert(name.clone(), self.entries.len());
        self.entries.push(Entry { name, value, trainable: true });
        Ok(ParamId(self.entries.len() - 1))
    }

    /// `rows x cols` weight drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn insert_uniform(
        &mut self,
        name: impl Into<String>,
        shape: Vec<usize>,
        fan_in: usize,
        rng: &mut SeededRng,
    ) -> Result<ParamId> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let len: usize = shape.iter().product();
        let data = (0..len).map(|_| rng.random_range(-bound..=bound)).collect();
        self.insert(name, Tensor::new(shape, data)?)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).map(|&i| ParamId(i))
    }

    /// Like [`ParamStore::id`] but a missing name is a model-shape error.
    pub fn require(&self, name: &str) -> Result<ParamId> {
        self.id(name).ok_or_else(|| Error::ModelShape(format!("missing parameter {name:?}")))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id.0].trainable
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.entries[id.0].trainable = trainable;
    }

    /// Freezes every parameter whose name starts with `prefix`.
    pub fn freeze_prefix(&mut self, prefix: &str) {
        for e in &mut self.entries {
            if e.name.starts_with(prefix) {
                e.trainable = false;
            }
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    /// Total number of scalars.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// Scalars in parameters whose name starts with `prefix`.
    pub fn scalar_count_prefix(&self, prefix: &str) -> usize {
        self.entries.iter().filter(|e| e.name.starts_with(prefix)).map(|e| e.value.len()).sum()
    }

    /// Copies every parameter of `other` into `self` under `prefix + name`.
    pub fn absorb(&mut self, prefix: &str, other: &ParamStore) -> Result<()> {
        for e in &other.entries {
            let id = self.insert(format!("{prefix}{}", e.name), e.value.clone())?;
            self.set_trainable(id, e.trainable);
        }
        Ok(())
    }

    /// Parameters under `prefix`, with the prefix stripped.
    pub fn extract(&self, prefix: &str) -> Result<ParamStore> {
        let mut out = ParamStore::new();
        for e in &self.entries {
            if let Some(rest) = e.name.strip_prefix(prefix) {
                out.insert(rest, e.value.clone())?;
            }
        }
        Ok(out)
    }

    fn sorted(&self) -> impl Iterator<Item = &Entry> {
        self.by_name.values().map(|&i| &self.entries[i])
    }

    /// SHA-256 over names, shapes and the exact bits of every value, in
    /// name order. Hex encoded.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        for e in self.sorted() {
            h.update((e.name.len() as u64).to_le_bytes());
            h.update(e.name.as_bytes());
            for &d in e.value.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for x in e.value.data() {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Binary model file: magic, format version, a `key=value` config block,
    /// then every parameter in name order as (name length, name, trainable
    /// byte, rank, dims, little-endian f64 data). All integers are little-endian u32 except dims,
    /// which are u64.
    pub fn save<W: Write>(&self, mut w: W, config: &[(String, String)]) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
        let mut cfg = String::new();
        for (k, v) in config {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Config(format!("config entry {k:?} cannot be serialized")));
            }
            cfg.push_str(&format!("{k}={v}\n"));
        }
        write_u32(&mut w, cfg.len())?;
        w.write_all(cfg.as_bytes())?;
        write_u32(&mut w, self.len())?;
        for e in self.sorted() {
            write_u32(&mut w, e.name.len())?;
            w.write_all(e.name.as_bytes())?;
            w.write_all(&[u8::from(e.trainable)])?;
            write_u32(&mut w, e.value.shape().len())?;
            for &d in e.value.shape() {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for x in e.value.data() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`ParamStore::save`]. Parameter ids follow
    /// name order.
    pub fn load<R: Read>(mut r: R) -> Result<(ParamStore, Vec<(String, String)>)> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::invalid("not a model file (bad magic)"));
        }
        let version = read_u32(&mut r)?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model format version {version}")));
        }
        let cfg_len = read_u32(&mut r)? as usize;
        let cfg = String::from_utf8(read_bytes(&mut r, cfg_len)?)
            .map_err(|_| Error::invalid("model config block is not UTF-8"))?;
        let mut config = Vec::new();
        for line in cfg.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::invalid(format!("bad config line {line:?}")))?;
            config.push((k.to_string(), v.to_string()));
        }
        let count = read_u32(&mut r)?;
        let mut store = ParamStore::new();
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let name = String::from_utf8(read_bytes(&mut r, name_len)?)
                .map_err(|_| Error::invalid("parameter name is not UTF-8"))?;
            let mut flag = [0u8; 1];
            r.read_exact(&mut flag)?;
            let rank = read_u32(&mut r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                shape.push(usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::invalid("dimension overflow"))?);
            }
            let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let len = len.ok_or_else(|| Error::invalid("parameter size overflow"))?;
            let raw = read_bytes(&mut r, len.checked_mul(8).ok_or_else(|| Error::invalid("parameter size overflow"))?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            let id = store.insert(name, Tensor::new(shape, data)?)?;
            store.set_trainable(id, flag[0] != 0);
        }
        Ok((store, config))
    }

    /// Human-readable dump: `{"config": {...}, "params": {name: {shape, data}}}`.
    pub fn to_json(&self, config: &[(String, String)]) -> serde_json::Value {
        let params: serde_json::Map<String, serde_json::Value> = self
            .sorted()
            .map(|e| {
                (
                    e.name.clone(),
                    serde_json::json!({ "shape": e.value.shape(), "trainable": e.trainable, "data": e.value.data() }),
                )
            })
            .collect();
        let config: serde_json::Map<String, serde_json::Value> =
            config.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        serde_json::json!({ "config": config, "params": params })
    }
}

fn write_u32<W: Write>(w: &mut W, x: usize) -> Result<()> {
    let x = u32::try_from(x).map_err(|_| Error::invalid("length does not fit the model format"))?;
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::invalid("truncated model file"));
    }
    Ok(buf)
}

/// One optional gradient buffer per parameter of a store.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn new(param_count: usize) -> Self {
        Gradients { grads: vec![None; param_count] }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &[f64]) {
        match &mut self.grads[id.0] {
            Some(buf) => buf.iter_mut().zip(g).for_each(|(x, d)| *x += d),
            slot => *slot = Some(g.to_vec()),
        }
    }

    /// Adds `other` into `self` entry by entry.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                self.accumulate(ParamId(i), g);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Euclidean norm over all buffers.
    pub fn global_norm(&self) -> f64 {
        self.grads.iter().flatten().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    /// First parameter index holding a NaN or infinite entry.
    pub fn first_non_finite(&self) -> Option<ParamId> {
        self.grads.iter().position(|g| g.as_ref().is_some_and(|g| g.iter().any(|x| !x.is_finite()))).map(ParamId)
    }
}
