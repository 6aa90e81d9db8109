use rand::Rng;

use super::linalg::{Real, Tensor};

/// Layer sizes. The attention MLP width equals `hidden`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub hidden: usize,
}

/// Every learned tensor. LSTM gate rows are ordered input, forget, output,
/// candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    pub src_embed: Tensor<T>,
    pub tgt_embed: Tensor<T>,
    /// 4H x (d + H), input is `[x; h_prev]`.
    pub enc_w: Tensor<T>,
    pub enc_b: Tensor<T>,
    /// 4H x (d + H + H), input is `[y_emb; htilde_prev; s_prev]`.
    pub dec_w: Tensor<T>,
    pub dec_b: Tensor<T>,
    pub att_w_enc: Tensor<T>,
    pub att_w_dec: Tensor<T>,
    pub att_b: Tensor<T>,
    pub att_v: Tensor<T>,
    /// H x 2H over `[s; context]`.
    pub comb_w: Tensor<T>,
    pub comb_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
}

pub const TENSOR_NAMES: [&str; 14] = [
    "src_embed",
    "tgt_embed",
    "enc.w",
    "enc.b",
    "dec.w",
    "dec.b",
    "att.w_enc",
    "att.w_dec",
    "att.b",
    "att.v",
    "comb.w",
    "comb.b",
    "out.w",
    "out.b",
];

/// Initial value of the forget-gate bias.
const FORGET_BIAS: f64 = 1.0;
const INIT_RANGE: f64 = 0.1;

impl<T: Real> ModelParameters<T> {
    pub fn zeros(d: Dims) -> Self {
        let h = d.hidden;
        let e = d.embed;
        Self {
            src_embed: Tensor::zeros(d.src_vocab, e),
            tgt_embed: Tensor::zeros(d.tgt_vocab, e),
            enc_w: Tensor::zeros(4 * h, e + h),
            enc_b: Tensor::zeros(4 * h, 1),
            dec_w: Tensor::zeros(4 * h, e + 2 * h),
            dec_b: Tensor::zeros(4 * h, 1),
            att_w_enc: Tensor::zeros(h, h),
            att_w_dec: Tensor::zeros(h, h),
            att_b: Tensor::zeros(h, 1),
            att_v: Tensor::zeros(h, 1),
            comb_w: Tensor::zeros(h, 2 * h),
            comb_b: Tensor::zeros(h, 1),
            out_w: Tensor::zeros(d.tgt_vocab, h),
            out_b: Tensor::zeros(d.tgt_vocab, 1),
        }
    }

    /// Uniform weights in a small symmetric range; forget-gate biases at 1.
    pub fn random<R: Rng>(d: Dims, rng: &mut R) -> Self {
        let mut p = Self::zeros(d);
        for (name, t) in p.tensors_mut() {
            if name.ends_with(".b") {
                continue;
            }
            for x in &mut t.data {
                *x = T::from_f64(rng.gen_range(-INIT_RANGE..INIT_RANGE)).unwrap();
            }
        }
        let h = d.hidden;
        for b in [&mut p.enc_b, &mut p.dec_b] {
            for x in &mut b.data[h..2 * h] {
                *x = T::from_f64(FORGET_BIAS).unwrap();
            }
        }
        p
    }

    pub fn dims(&self) -> Dims {
        Dims {
            src_vocab: self.src_embed.rows,
            tgt_vocab: self.tgt_embed.rows,
            embed: self.src_embed.cols,
            hidden: self.comb_b.rows,
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Tensor<T>); 14] {
        [
            (TENSOR_NAMES[0], &self.src_embed),
            (TENSOR_NAMES[1], &self.tgt_embed),
            (TENSOR_NAMES[2], &self.enc_w),
            (TENSOR_NAMES[3], &self.enc_b),
            (TENSOR_NAMES[4], &self.dec_w),
            (TENSOR_NAMES[5], &self.dec_b),
            (TENSOR_NAMES[6], &self.att_w_enc),
            (TENSOR_NAMES[7], &self.att_w_dec),
            (TENSOR_NAMES[8], &self.att_b),
            (TENSOR_NAMES[9], &self.att_v),
            (TENSOR_NAMES[10], &self.comb_w),
            (TENSOR_NAMES[11], &self.comb_b),
            (TENSOR_NAMES[12], &self.out_w),
            (TENSOR_NAMES[13], &self.out_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Tensor<T>); 14] {
        [
            (TENSOR_NAMES[0], &mut self.src_embed),
            (TENSOR_NAMES[1], &mut self.tgt_embed),
            (TENSOR_NAMES[2], &mut self.enc_w),
            (TENSOR_NAMES[3], &mut self.enc_b),
            (TENSOR_NAMES[4], &mut self.dec_w),
            (TENSOR_NAMES[5], &mut self.dec_b),
            (TENSOR_NAMES[6], &mut self.att_w_enc),
            (TENSOR_NAMES[7], &mut self.att_w_dec),
            (TENSOR_NAMES[8], &mut self.att_b),
            (TENSOR_NAMES[9], &mut self.att_v),
            (TENSOR_NAMES[10], &mut self.comb_w),
            (TENSOR_NAMES[11], &mut self.comb_b),
            (TENSOR_NAMES[12], &mut self.out_w),
            (TENSOR_NAMES[13], &mut self.out_b),
        ]
    }

    pub fn fill_zero(&mut self) {
        for (_, t) in self.tensors_mut() {
            t.fill_zero();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|x| x.is_finite()))
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Shapes are mutually consistent.
    pub fn check_shapes(&self) -> Result<(), String> {
        let d = self.dims();
        let want = Self::zeros(d);
        for ((name, a), (_, b)) in self.tensors().iter().zip(want.tensors().iter()) {
            if (a.rows, a.cols) != (b.rows, b.cols) || a.data.len() != a.rows * a.cols {
                return Err(format!(
                    "tensor {name} is {}x{}, expected {}x{}",
                    a.rows, a.cols, b.rows, b.cols
                ));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ModelParameters<U> {
        ModelParameters {
            src_embed: self.src_embed.cast(),
            tgt_embed: self.tgt_embed.cast(),
            enc_w: self.enc_w.cast(),
            enc_b: self.enc_b.cast(),
            dec_w: self.dec_w.cast(),
            dec_b: self.dec_b.cast(),
            att_w_enc: self.att_w_enc.cast(),
            att_w_dec: self.att_w_dec.cast(),
            att_b: self.att_b.cast(),
            att_v: self.att_v.cast(),
            comb_w: self.comb_w.cast(),
            comb_b: self.comb_b.cast(),
            out_w: self.out_w.cast(),
            out_b: self.out_b.cast(),
        }
    }
}
