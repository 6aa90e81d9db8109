//! Encoder, MLP attention, decoder step, output mixture and backprop.

use rand::Rng;

use super::lexicon::Lexicon;
use super::linalg::{axpy, cast, concat, dot, softmax_in_place, Real};
use super::lstm::{lstm_backward, lstm_step, LstmCache};
use super::params::ModelParameters;
use super::vocab::{Vocabulary, BOS_ID};
use super::NmtError;

/// A trained (or initialized) translation model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub params: ModelParameters<T>,
    pub lexicon: Lexicon,
}

/// Inverted-dropout mask source.
pub struct Dropout<'a, R> {
    pub rng: &'a mut R,
    pub rate: f64,
}

impl<R: Rng> Dropout<'_, R> {
    fn mask<T: Real>(&mut self, n: usize) -> Vec<T> {
        let keep = cast::<T>(1.0 / (1.0 - self.rate));
        (0..n)
            .map(|_| if self.rng.gen_bool(self.rate) { T::zero() } else { keep })
            .collect()
    }
}

fn apply_mask<T: Real>(v: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        for (x, &k) in v.iter_mut().zip(m) {
            *x *= k;
        }
    }
}

/// Encoder output for one source sequence.
#[derive(Debug, Clone)]
pub struct Encoded<T> {
    pub src: Vec<usize>,
    /// Hidden vector per source position.
    pub states: Vec<Vec<T>>,
    pub final_c: Vec<T>,
    /// `W_enc h_i + b_att`, reused at every decoder step.
    proj: Vec<Vec<T>>,
    caches: Vec<LstmCache<T>>,
    masks: Vec<Option<Vec<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState<T> {
    pub s: Vec<T>,
    pub c: Vec<T>,
    /// Attentional hidden vector of the previous step (input feeding).
    pub htilde: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Attention<T> {
    pub weights: Vec<T>,
    pub context: Vec<T>,
    tanh_z: Vec<Vec<T>>,
}

/// Everything one decoder step computed, for backprop.
struct StepCache<T> {
    input_id: usize,
    u_mask: Option<Vec<T>>,
    lstm: LstmCache<T>,
    s: Vec<T>,
    att: Attention<T>,
    /// `[s; context]`
    sc: Vec<T>,
    htilde: Vec<T>,
    out_mask: Option<Vec<T>>,
    /// htilde after the output dropout mask.
    hd: Vec<T>,
    soft: Vec<T>,
    /// `1 - lambda * sum_i alpha_i * mass_i`
    mix: T,
}

impl<T: Real> Model<T> {
    pub fn hidden(&self) -> usize {
        self.params.comb_b.rows
    }

    pub fn embed(&self) -> usize {
        self.params.src_embed.cols
    }

    fn encode_with<R: Rng>(
        &self,
        src: &[usize],
        mut drop: Option<&mut Dropout<'_, R>>,
    ) -> Result<Encoded<T>, NmtError> {
        if src.is_empty() {
            return Err(NmtError::EmptyInput);
        }
        let p = &self.params;
        let hid = self.hidden();
        let mut h = vec![T::zero(); hid];
        let mut c = vec![T::zero(); hid];
        let mut states = Vec::with_capacity(src.len());
        let mut caches = Vec::with_capacity(src.len());
        let mut masks = Vec::with_capacity(src.len());
        let mut proj = Vec::with_capacity(src.len());
        for &id in src {
            let mut x = p.src_embed.row(id).to_vec();
            let mask = drop.as_mut().map(|d| d.mask(x.len()));
            apply_mask(&mut x, &mask);
            let (h2, c2, cache) = lstm_step(&p.enc_w, &p.enc_b, &x, &h, &c);
            let mut pr = p.att_b.data.clone();
            p.att_w_enc.matvec_add(&h2, &mut pr);
            proj.push(pr);
            states.push(h2.clone());
            caches.push(cache);
            masks.push(mask);
            h = h2;
            c = c2;
        }
        Ok(Encoded {
            src: src.to_vec(),
            states,
            final_c: c,
            proj,
            caches,
            masks,
        })
    }

    /// Run the encoder LSTM over the source ids.
    pub fn encode(&self, src: &[usize]) -> Result<Encoded<T>, NmtError> {
        self.encode_with::<rand::rngs::ThreadRng>(src, None)
    }

    /// The decoder starts from the encoder's final hidden and cell vectors.
    pub fn initial_state(&self, enc: &Encoded<T>) -> DecoderState<T> {
        DecoderState {
            s: enc.states.last().expect("non-empty encoding").clone(),
            c: enc.final_c.clone(),
            htilde: vec![T::zero(); self.hidden()],
        }
    }

    /// MLP attention: `e_i = v . tanh(W_enc h_i + W_dec s + b)`, softmax, and
    /// the weighted sum of encoder states.
    pub fn attend(&self, enc: &Encoded<T>, s: &[T]) -> Attention<T> {
        let p = &self.params;
        let hid = self.hidden();
        let mut ws = vec![T::zero(); hid];
        p.att_w_dec.matvec(s, &mut ws);
        let mut scores = Vec::with_capacity(enc.states.len());
        let mut tanh_z = Vec::with_capacity(enc.states.len());
        for pr in &enc.proj {
            let tz: Vec<T> = pr.iter().zip(&ws).map(|(&a, &b)| (a + b).tanh()).collect();
            scores.push(dot(&p.att_v.data, &tz));
            tanh_z.push(tz);
        }
        softmax_in_place(&mut scores);
        let mut context = vec![T::zero(); hid];
        for (a, h) in scores.iter().zip(&enc.states) {
            axpy(*a, h, &mut context);
        }
        Attention {
            weights: scores,
            context,
            tanh_z,
        }
    }

    fn htilde(&self, s: &[T], context: &[T]) -> (Vec<T>, Vec<T>) {
        let p = &self.params;
        let sc = concat(s, context);
        let mut ht = p.comb_b.data.clone();
        p.comb_w.matvec_add(&sc, &mut ht);
        ht.iter_mut().for_each(|x| *x = x.tanh());
        (sc, ht)
    }

    fn softmax_output(&self, hd: &[T]) -> Vec<T> {
        let p = &self.params;
        let mut g = p.out_b.data.clone();
        p.out_w.matvec_add(hd, &mut g);
        softmax_in_place(&mut g);
        g
    }

    /// Summed in `T` so the mixture normalizes at full precision.
    fn row_mass(&self, x: usize) -> T {
        self.lexicon.row(x).iter().fold(T::zero(), |acc, e| acc + cast::<T>(e.1 as f64))
    }

    fn mix_weight(&self, src: &[usize], alpha: &[T]) -> T {
        if !self.lexicon.is_active() {
            return T::one();
        }
        let lambda = cast::<T>(self.lexicon.lambda as f64);
        let mut m = T::zero();
        for (&x, &a) in src.iter().zip(alpha) {
            m += a * self.row_mass(x);
        }
        T::one() - lambda * m
    }

    fn mixture(&self, soft: &[T], mix: T, src: &[usize], alpha: &[T]) -> Vec<T> {
        let mut out: Vec<T> = soft.iter().map(|&x| x * mix).collect();
        if self.lexicon.is_active() {
            let lambda = cast::<T>(self.lexicon.lambda as f64);
            for (&x, &a) in src.iter().zip(alpha) {
                for &(y, pr) in self.lexicon.row(x) {
                    out[y] += lambda * a * cast::<T>(pr as f64);
                }
            }
        }
        out
    }

    fn lexicon_prob(&self, src: &[usize], alpha: &[T], y: usize) -> T {
        if !self.lexicon.is_active() {
            return T::zero();
        }
        let mut l = T::zero();
        for (&x, &a) in src.iter().zip(alpha) {
            l += a * cast::<T>(self.lexicon.prob(x, y) as f64);
        }
        l * cast::<T>(self.lexicon.lambda as f64)
    }

    /// Output distribution for decoder hidden `s` and its attention:
    /// `(1 - lambda*m) * softmax(W_out htilde + b) + lambda * sum_i alpha_i L[x_i]`.
    pub fn predict_distribution(&self, s: &[T], att: &Attention<T>, src: &[usize]) -> Vec<T> {
        let (_, ht) = self.htilde(s, &att.context);
        let soft = self.softmax_output(&ht);
        let mix = self.mix_weight(src, &att.weights);
        self.mixture(&soft, mix, src, &att.weights)
    }

    fn step_full<R: Rng>(
        &self,
        enc: &Encoded<T>,
        state: &DecoderState<T>,
        input_id: usize,
        mut drop: Option<&mut Dropout<'_, R>>,
    ) -> (DecoderState<T>, StepCache<T>) {
        let p = &self.params;
        let mut u = concat(p.tgt_embed.row(input_id), &state.htilde);
        let u_mask = drop.as_mut().map(|d| d.mask(u.len()));
        apply_mask(&mut u, &u_mask);
        let (s, c, lstm) = lstm_step(&p.dec_w, &p.dec_b, &u, &state.s, &state.c);
        let att = self.attend(enc, &s);
        let (sc, htilde) = self.htilde(&s, &att.context);
        let out_mask = drop.as_mut().map(|d| d.mask(htilde.len()));
        let mut hd = htilde.clone();
        apply_mask(&mut hd, &out_mask);
        let soft = self.softmax_output(&hd);
        let mix = self.mix_weight(&enc.src, &att.weights);
        let next = DecoderState {
            s: s.clone(),
            c,
            htilde: htilde.clone(),
        };
        let cache = StepCache {
            input_id,
            u_mask,
            lstm,
            s,
            att,
            sc,
            htilde,
            out_mask,
            hd,
            soft,
            mix,
        };
        (next, cache)
    }

    /// Feed `input_id`, return the next state and the output distribution.
    pub fn step(&self, enc: &Encoded<T>, state: &DecoderState<T>, input_id: usize) -> (DecoderState<T>, Vec<T>) {
        let (next, cache) = self.step_full::<rand::rngs::ThreadRng>(enc, state, input_id, None);
        let dist = self.mixture(&cache.soft, cache.mix, &enc.src, &cache.att.weights);
        (next, dist)
    }

    /// Teacher-forced `log P(tgt | src)`; `tgt` ends with `</s>`.
    pub fn sequence_log_prob(&self, src: &[usize], tgt: &[usize]) -> Result<T, NmtError> {
        let enc = self.encode(src)?;
        let mut state = self.initial_state(&enc);
        let mut input = BOS_ID;
        let mut total = T::zero();
        for &y in tgt {
            let (next, dist) = self.step(&enc, &state, input);
            total += dist[y].ln();
            state = next;
            input = y;
        }
        Ok(total)
    }

    /// Summed negative log-likelihood of `tgt`, with gradients scaled by
    /// `scale` accumulated into `grads`.
    pub fn loss_and_gradient<R: Rng>(
        &self,
        src: &[usize],
        tgt: &[usize],
        mut drop: Option<&mut Dropout<'_, R>>,
        scale: T,
        grads: &mut ModelParameters<T>,
    ) -> Result<T, NmtError> {
        let p = &self.params;
        let hid = self.hidden();
        let emb = self.embed();
        let enc = self.encode_with(src, drop.as_deref_mut())?;
        let mut state = self.initial_state(&enc);
        let mut input = BOS_ID;
        let mut steps = Vec::with_capacity(tgt.len());
        let mut loss = T::zero();
        let mut p_ys = Vec::with_capacity(tgt.len());
        for &y in tgt {
            let (next, cache) = self.step_full(&enc, &state, input, drop.as_deref_mut());
            let p_y = cache.mix * cache.soft[y] + self.lexicon_prob(&enc.src, &cache.att.weights, y);
            loss -= p_y.ln();
            p_ys.push(p_y);
            steps.push(cache);
            state = next;
            input = y;
        }

        let n = src.len();
        let mut d_states = vec![vec![T::zero(); hid]; n];
        let mut d_proj = vec![vec![T::zero(); hid]; n];
        let mut ds_next = vec![T::zero(); hid];
        let mut dc_next = vec![T::zero(); hid];
        let mut dht_feed = vec![T::zero(); hid];
        let lambda = cast::<T>(self.lexicon.lambda as f64);
        let lex = self.lexicon.is_active();

        for (j, cache) in steps.iter().enumerate().rev() {
            let y = tgt[j];
            let coef = scale / p_ys[j];
            let alpha = &cache.att.weights;

            // output softmax
            let sy = cache.soft[y];
            let mut dg: Vec<T> = cache.soft.iter().map(|&sk| coef * cache.mix * sy * sk).collect();
            dg[y] -= coef * cache.mix * sy;
            grads.out_w.outer_add(&dg, &cache.hd);
            for (b, &d) in grads.out_b.data.iter_mut().zip(&dg) {
                *b += d;
            }
            let mut dht = vec![T::zero(); hid];
            p.out_w.matvec_t_add(&dg, &mut dht);
            apply_mask(&mut dht, &cache.out_mask);
            for (a, &b) in dht.iter_mut().zip(&dht_feed) {
                *a += b;
            }

            // lexicon path into the attention weights
            let mut dalpha = vec![T::zero(); n];
            if lex {
                for (i, &x) in enc.src.iter().enumerate() {
                    let l = cast::<T>(self.lexicon.prob(x, y) as f64);
                    let mass = self.row_mass(x);
                    dalpha[i] = -coef * lambda * (l - mass * sy);
                }
            }

            // htilde = tanh(W_c [s; ctx] + b_c)
            let dpre: Vec<T> = dht
                .iter()
                .zip(&cache.htilde)
                .map(|(&d, &h)| d * (T::one() - h * h))
                .collect();
            grads.comb_w.outer_add(&dpre, &cache.sc);
            for (b, &d) in grads.comb_b.data.iter_mut().zip(&dpre) {
                *b += d;
            }
            let mut dsc = vec![T::zero(); 2 * hid];
            p.comb_w.matvec_t_add(&dpre, &mut dsc);
            let mut ds = dsc[..hid].to_vec();
            let dctx = &dsc[hid..];
            for (a, &b) in ds.iter_mut().zip(&ds_next) {
                *a += b;
            }

            // context = sum_i alpha_i h_i
            for i in 0..n {
                dalpha[i] += dot(dctx, &enc.states[i]);
                axpy(alpha[i], dctx, &mut d_states[i]);
            }
            let weighted: T = alpha.iter().zip(&dalpha).fold(T::zero(), |acc, (&a, &d)| acc + a * d);
            let mut dz_sum = vec![T::zero(); hid];
            for i in 0..n {
                let de = alpha[i] * (dalpha[i] - weighted);
                if de == T::zero() {
                    continue;
                }
                let tz = &cache.att.tanh_z[i];
                axpy(de, tz, &mut grads.att_v.data);
                for k in 0..hid {
                    let dz = de * p.att_v.data[k] * (T::one() - tz[k] * tz[k]);
                    d_proj[i][k] += dz;
                    dz_sum[k] += dz;
                }
            }
            grads.att_w_dec.outer_add(&dz_sum, &cache.s);
            p.att_w_dec.matvec_t_add(&dz_sum, &mut ds);

            // decoder LSTM
            let (mut dxh, dc_prev) =
                lstm_backward(&p.dec_w, &cache.lstm, &ds, &dc_next, &mut grads.dec_w, &mut grads.dec_b);
            let (du, ds_prev) = dxh.split_at_mut(emb + hid);
            apply_mask(du, &cache.u_mask);
            axpy(T::one(), &du[..emb], grads.tgt_embed.row_mut(cache.input_id));
            dht_feed = du[emb..].to_vec();
            ds_next = ds_prev.to_vec();
            dc_next = dc_prev;
        }

        // attention projections: proj_i = W_enc h_i + b
        for i in 0..n {
            grads.att_w_enc.outer_add(&d_proj[i], &enc.states[i]);
            for (b, &d) in grads.att_b.data.iter_mut().zip(&d_proj[i]) {
                *b += d;
            }
            p.att_w_enc.matvec_t_add(&d_proj[i], &mut d_states[i]);
        }

        // encoder LSTM; the decoder started from its final state
        let mut dh = ds_next;
        let mut dc = dc_next;
        for i in (0..n).rev() {
            for (a, &b) in dh.iter_mut().zip(&d_states[i]) {
                *a += b;
            }
            let (mut dxh, dc_prev) =
                lstm_backward(&p.enc_w, &enc.caches[i], &dh, &dc, &mut grads.enc_w, &mut grads.enc_b);
            let (dx, dh_prev) = dxh.split_at_mut(emb);
            apply_mask(dx, &enc.masks[i]);
            axpy(T::one(), dx, grads.src_embed.row_mut(enc.src[i]));
            dh = dh_prev.to_vec();
            dc = dc_prev;
        }
        Ok(loss)
    }
}
