//! Binary checkpoint container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes   "SNTLCKPT"
//! version      u32       FORMAT_VERSION
//! manifest_len u32       byte length M of the manifest
//! manifest     M bytes   UTF-8 `key=value` lines (config, format_version, seed, ...)
//! count        u32       number of arrays
//! per array:
//!   name_len   u32
//!   name       UTF-8
//!   rank       u32
//!   dims       rank × u64
//!   values     prod(dims) × f64, row-major
//! ```
//!
//! Model parameters come first (in [`Parameters::named`] order), then the
//! state buffers, then any caller-supplied arrays (optimizer moments).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{ModelConfig, ModelState, NeuralError, Parameters, Tensor};

pub const MAGIC: &[u8; 8] = b"SNTLCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: ModelState,
    /// Manifest entries beyond the model config.
    pub extra_manifest: BTreeMap<String, String>,
    /// Arrays that are neither parameters nor state buffers.
    pub extra_tensors: Vec<(String, Tensor)>,
}

const CONFIG_KEYS: [&str; 13] = [
    "format_version",
    "seed",
    "vocab_size",
    "seq_len",
    "d_emb",
    "h1",
    "h2",
    "n_feat",
    "n_classes",
    "dropout",
    "recurrent_dropout",
    "l2_attn_w",
    "l2_attn_b",
];

fn manifest_text(cfg: &ModelConfig, extra: &BTreeMap<String, String>) -> String {
    let values = [
        FORMAT_VERSION.to_string(),
        cfg.seed.to_string(),
        cfg.vocab_size.to_string(),
        cfg.seq_len.to_string(),
        cfg.d_emb.to_string(),
        cfg.h1.to_string(),
        cfg.h2.to_string(),
        cfg.n_feat.to_string(),
        cfg.n_classes.to_string(),
        cfg.dropout.to_string(),
        cfg.recurrent_dropout.to_string(),
        cfg.l2_attn_w.to_string(),
        cfg.l2_attn_b.to_string(),
    ];
    let mut text = String::new();
    for (k, v) in CONFIG_KEYS.iter().zip(values) {
        text.push_str(&format!("{k}={v}\n"));
    }
    for (k, v) in extra {
        text.push_str(&format!("{k}={v}\n"));
    }
    text
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_tensor(w: &mut impl Write, name: &str, t: &Tensor) -> std::io::Result<()> {
    write_u32(w, name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    write_u32(w, t.shape().len() as u32)?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint(
    mut w: impl Write,
    state: &ModelState,
    extra_manifest: &BTreeMap<String, String>,
    extra_tensors: &[(String, &Tensor)],
) -> Result<(), NeuralError> {
    if let Some(k) = extra_manifest.keys().find(|k| CONFIG_KEYS.contains(&k.as_str()) || k.contains(['=', '\n'])) {
        return Err(NeuralError::Checkpoint(format!("reserved or malformed manifest key {k:?}")));
    }
    let manifest = manifest_text(&state.config, extra_manifest);
    w.write_all(MAGIC)?;
    write_u32(&mut w, FORMAT_VERSION)?;
    write_u32(&mut w, manifest.len() as u32)?;
    w.write_all(manifest.as_bytes())?;
    let params = state.params.named();
    let buffers = state.buffers();
    write_u32(&mut w, (params.len() + buffers.len() + extra_tensors.len()) as u32)?;
    for (name, t) in params.into_iter().chain(buffers) {
        write_tensor(&mut w, name, t)?;
    }
    for (name, t) in extra_tensors {
        write_tensor(&mut w, name, t)?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>, NeuralError> {
        let mut buf = vec![0; n];
        self.inner.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32, NeuralError> {
        let mut buf = [0; 4];
        self.inner.read_exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    fn u64(&mut self) -> Result<u64, NeuralError> {
        let mut buf = [0; 8];
        self.inner.read_exact(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    fn string(&mut self, n: usize) -> Result<String, NeuralError> {
        String::from_utf8(self.bytes(n)?).map_err(|e| NeuralError::Checkpoint(format!("invalid UTF-8: {e}")))
    }

    fn tensor(&mut self) -> Result<(String, Tensor), NeuralError> {
        let name_len = self.u32()? as usize;
        let name = self.string(name_len)?;
        let rank = self.u32()? as usize;
        let dims = (0..rank).map(|_| self.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let count: usize = dims.iter().product();
        let raw = self.bytes(count * 8)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok((name, Tensor::from_vec(&dims, data)?))
    }
}

fn parse_field<T: std::str::FromStr>(manifest: &BTreeMap<String, String>, key: &str) -> Result<T, NeuralError> {
    manifest
        .get(key)
        .ok_or_else(|| NeuralError::Checkpoint(format!("manifest lacks {key}")))?
        .parse()
        .map_err(|_| NeuralError::Checkpoint(format!("manifest field {key} is malformed")))
}

pub fn read_checkpoint(r: impl Read) -> Result<Checkpoint, NeuralError> {
    let mut r = Reader { inner: r };
    if r.bytes(8)? != MAGIC {
        return Err(NeuralError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(NeuralError::Checkpoint(format!("unsupported format version {version}")));
    }
    let manifest_len = r.u32()? as usize;
    let manifest_text = r.string(manifest_len)?;
    let mut manifest = BTreeMap::new();
    for line in manifest_text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| NeuralError::Checkpoint(format!("bad manifest line {line:?}")))?;
        manifest.insert(k.to_string(), v.to_string());
    }
    let config = ModelConfig {
        vocab_size: parse_field(&manifest, "vocab_size")?,
        seq_len: parse_field(&manifest, "seq_len")?,
        d_emb: parse_field(&manifest, "d_emb")?,
        h1: parse_field(&manifest, "h1")?,
        h2: parse_field(&manifest, "h2")?,
        n_feat: parse_field(&manifest, "n_feat")?,
        n_classes: parse_field(&manifest, "n_classes")?,
        dropout: parse_field(&manifest, "dropout")?,
        recurrent_dropout: parse_field(&manifest, "recurrent_dropout")?,
        l2_attn_w: parse_field(&manifest, "l2_attn_w")?,
        l2_attn_b: parse_field(&manifest, "l2_attn_b")?,
        seed: parse_field(&manifest, "seed")?,
    };
    config.validate()?;
    let count = r.u32()? as usize;
    let mut arrays = BTreeMap::new();
    let mut order = Vec::with_capacity(count);
    for _ in 0..count {
        let (name, t) = r.tensor()?;
        order.push(name.clone());
        if arrays.insert(name.clone(), t).is_some() {
            return Err(NeuralError::Checkpoint(format!("duplicate array {name}")));
        }
    }

    let mut state = ModelState::zeros(config.clone())?;
    state.params = Parameters::zeros(&config);
    let mut take = |name: &str, dst: &mut Tensor| -> Result<(), NeuralError> {
        let src = arrays.remove(name).ok_or_else(|| NeuralError::Checkpoint(format!("missing array {name}")))?;
        src.expect_shape(name, dst.shape())?;
        *dst = src;
        Ok(())
    };
    for (name, dst) in state.params.named_mut() {
        take(name, dst)?;
    }
    for (name, dst) in state.buffers_mut() {
        take(name, dst)?;
    }
    if !state.all_finite() {
        return Err(NeuralError::Checkpoint("non-finite values".into()));
    }
    for k in CONFIG_KEYS {
        manifest.remove(k);
    }
    let extra_tensors = order.into_iter().filter_map(|n| arrays.remove(&n).map(|t| (n, t))).collect();
    Ok(Checkpoint { state, extra_manifest: manifest, extra_tensors })
}
