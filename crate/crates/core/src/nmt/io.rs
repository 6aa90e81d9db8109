//! Binary model file. All integers are little-endian `u32`, floats are
//! little-endian IEEE-754 `f32`.
//!
//! ```text
//! "PLM1" version
//! src vocab:  count, then per token: byte length, UTF-8 bytes
//! tgt vocab:  same layout
//! tensors:    count, then per tensor: name length, name, ndims (=2), rows, cols, rows*cols f32
//! lexicon:    lambda (f32), row count, then per row: entry count, then (tgt id u32, prob f32) pairs
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::lexicon::Lexicon;
use super::linalg::Tensor;
use super::model::Model;
use super::params::{ModelParameters, TENSOR_NAMES};
use super::vocab::Vocabulary;
use super::NmtError;

pub const MAGIC: &[u8; 4] = b"PLM1";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, x: f32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn put_vocab(out: &mut Vec<u8>, v: &Vocabulary) {
    put_u32(out, v.len() as u32);
    for t in v.tokens() {
        put_str(out, t);
    }
}

pub fn to_bytes(model: &Model<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_vocab(&mut out, &model.src_vocab);
    put_vocab(&mut out, &model.tgt_vocab);
    let tensors = model.params.tensors();
    put_u32(&mut out, tensors.len() as u32);
    for (name, t) in tensors {
        put_str(&mut out, name);
        put_u32(&mut out, 2);
        put_u32(&mut out, t.rows as u32);
        put_u32(&mut out, t.cols as u32);
        for &x in &t.data {
            put_f32(&mut out, x);
        }
    }
    put_f32(&mut out, model.lexicon.lambda);
    put_u32(&mut out, model.lexicon.rows.len() as u32);
    for row in &model.lexicon.rows {
        put_u32(&mut out, row.len() as u32);
        for &(y, p) in row {
            put_u32(&mut out, y as u32);
            put_f32(&mut out, p);
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NmtError> {
        if self.buf.len() - self.pos < n {
            return Err(NmtError::Format(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NmtError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, NmtError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, NmtError> {
        let n = self.u32()? as usize;
        let at = self.pos;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| NmtError::Format(format!("invalid UTF-8 at byte {at}")))
    }

    fn vocab(&mut self) -> Result<Vocabulary, NmtError> {
        let n = self.u32()? as usize;
        let tokens = (0..n).map(|_| self.string()).collect::<Result<Vec<_>, _>>()?;
        Vocabulary::from_id_order(tokens).ok_or_else(|| NmtError::Format("malformed vocabulary".into()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Model<f32>, NmtError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NmtError::Format("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NmtError::Format(format!("unsupported version {version}")));
    }
    let src_vocab = r.vocab()?;
    let tgt_vocab = r.vocab()?;
    let count = r.u32()? as usize;
    if count != TENSOR_NAMES.len() {
        return Err(NmtError::Format(format!("expected {} tensors, found {count}", TENSOR_NAMES.len())));
    }
    let mut loaded = Vec::with_capacity(count);
    for expected in TENSOR_NAMES {
        let name = r.string()?;
        if name != expected {
            return Err(NmtError::Format(format!("expected tensor {expected}, found {name}")));
        }
        if r.u32()? != 2 {
            return Err(NmtError::Format(format!("tensor {name} is not two-dimensional")));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let data = (0..rows * cols).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        loaded.push(Tensor { rows, cols, data });
    }
    let mut it = loaded.into_iter();
    let mut next = || it.next().unwrap();
    let params = ModelParameters {
        src_embed: next(),
        tgt_embed: next(),
        enc_w: next(),
        enc_b: next(),
        dec_w: next(),
        dec_b: next(),
        att_w_enc: next(),
        att_w_dec: next(),
        att_b: next(),
        att_v: next(),
        comb_w: next(),
        comb_b: next(),
        out_w: next(),
        out_b: next(),
    };
    params.check_shapes().map_err(NmtError::Format)?;
    let dims = params.dims();
    if dims.src_vocab != src_vocab.len() || dims.tgt_vocab != tgt_vocab.len() {
        return Err(NmtError::Format("embedding rows do not match vocabulary sizes".into()));
    }
    let lambda = r.f32()?;
    let nrows = r.u32()? as usize;
    if nrows != src_vocab.len() {
        return Err(NmtError::Format("lexicon rows do not match source vocabulary".into()));
    }
    let mut rows = Vec::with_capacity(nrows);
    for _ in 0..nrows {
        let n = r.u32()? as usize;
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            let y = r.u32()? as usize;
            let p = r.f32()?;
            if y >= tgt_vocab.len() {
                return Err(NmtError::Format(format!("lexicon target id {y} out of range")));
            }
            row.push((y, p));
        }
        rows.push(row);
    }
    if r.pos != buf.len() {
        return Err(NmtError::Format(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(Model {
        src_vocab,
        tgt_vocab,
        params,
        lexicon: Lexicon { lambda, rows },
    })
}

pub fn save(model: &Model<f32>, path: &Path) -> Result<(), NmtError> {
    let io = |e| NmtError::Io(path.display().to_string(), e);
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&to_bytes(model)).map_err(io)
}

pub fn load(path: &Path) -> Result<Model<f32>, NmtError> {
    let io = |e| NmtError::Io(path.display().to_string(), e);
    let mut buf = Vec::new();
    std::fs::File::open(path).map_err(io)?.read_to_end(&mut buf).map_err(io)?;
    from_bytes(&buf)
}
