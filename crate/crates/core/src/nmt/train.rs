//! Minibatch Adam training, development-loss schedule and gradient checks.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lexicon::{build_lexicon, Lexicon};
use super::linalg::{cast, softmax_in_place, Real, Tensor};
use super::model::{Dropout, Model};
use super::params::{Dims, ModelParameters};
use super::vocab::{Vocabulary, EOS_ID};
use super::NmtError;
use crate::corpus::TrainFiles;
use crate::statement::TokenizedStatement;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    /// Target tokens per minibatch.
    pub minibatch_words: usize,
    pub dropout: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub decay_factor: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub embed: usize,
    pub hidden: usize,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    pub lexicon_lambda: f32,
    pub dev_fraction: f64,
    /// Stop after this many epochs without a new best development loss.
    pub patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            minibatch_words: 2048,
            dropout: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay_factor: 0.5,
            max_epochs: 30,
            seed: 1,
            embed: 256,
            hidden: 512,
            clip_norm: 5.0,
            lexicon_lambda: 0.1,
            dev_fraction: 0.05,
            patience: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), NmtError> {
        let bad = |m: &str| Err(NmtError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must be in (0, 1]");
        }
        if self.minibatch_words == 0 || self.max_epochs == 0 || self.hidden == 0 || self.embed == 0 {
            return bad("minibatch_words, max_epochs, hidden and embed must be positive");
        }
        if !(0.0..=1.0).contains(&self.lexicon_lambda) {
            return bad("lexicon_lambda must be in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return bad("dev_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// Id-encoded parallel corpus. Targets end with `</s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelData {
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub pairs: Vec<(Vec<usize>, Vec<usize>)>,
    pub years: Vec<i32>,
}

/// Vocabulary over the tokens of `lines`, most frequent first.
pub fn vocabulary_of(lines: &[TokenizedStatement]) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in lines {
        for t in &l.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut toks: Vec<(&str, usize)> = counts.into_iter().collect();
    toks.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Vocabulary::from_tokens(toks.into_iter().map(|t| t.0))
}

impl ParallelData {
    pub fn from_files(files: &TrainFiles) -> Self {
        let src_vocab = vocabulary_of(&files.src);
        let tgt_vocab = vocabulary_of(&files.tgt);
        let pairs = files
            .src
            .iter()
            .zip(&files.tgt)
            .map(|(s, t)| {
                let mut y = tgt_vocab.encode(&t.tokens);
                y.push(EOS_ID);
                (src_vocab.encode(&s.tokens), y)
            })
            .collect();
        Self {
            src_vocab,
            tgt_vocab,
            pairs,
            years: files.meta.iter().map(|m| m.year_post).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the lowest development loss.
    pub model: Model<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
    /// Set when training stopped on a non-finite loss.
    pub aborted: Option<String>,
}

/// Chronological development split: the last `fraction` of pairs by year.
/// Corpora too small to split use the training pairs as development set.
pub fn dev_split(years: &[i32], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let n = years.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| years[i]);
    let dev_n = ((n as f64 * fraction).ceil() as usize).max(1);
    if n < 2 || dev_n >= n || fraction == 0.0 {
        return (order.clone(), order);
    }
    let dev = order.split_off(n - dev_n);
    (order, dev)
}

/// Greedy batches over pairs sorted by target then source length, each
/// holding at most `words` target tokens (or a single longer pair).
pub fn make_batches(pairs: &[(Vec<usize>, Vec<usize>)], idx: &[usize], words: usize) -> Vec<Vec<usize>> {
    let mut sorted = idx.to_vec();
    sorted.sort_by_key(|&i| (pairs[i].1.len(), pairs[i].0.len(), i));
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut count = 0;
    for i in sorted {
        let len = pairs[i].1.len();
        if !cur.is_empty() && count + len > words {
            out.push(std::mem::take(&mut cur));
            count = 0;
        }
        cur.push(i);
        count += len;
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

struct Adam {
    m: ModelParameters<f32>,
    v: ModelParameters<f32>,
    t: i32,
}

impl Adam {
    fn new(d: Dims) -> Self {
        Self {
            m: ModelParameters::zeros(d),
            v: ModelParameters::zeros(d),
            t: 0,
        }
    }

    fn update(&mut self, params: &mut ModelParameters<f32>, grads: &ModelParameters<f32>, lr: f64, cfg: &TrainingConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let step = (lr * c2.sqrt() / c1) as f32;
        let eps = (cfg.epsilon * c2.sqrt()) as f32;
        let (b1, b2) = (b1 as f32, b2 as f32);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in tensors {
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m.data[k] = b1 * m.data[k] + (1.0 - b1) * gk;
                v.data[k] = b2 * v.data[k] + (1.0 - b2) * gk * gk;
                p.data[k] -= step * m.data[k] / (v.data[k].sqrt() + eps);
            }
        }
    }
}

fn grad_norm(g: &ModelParameters<f32>) -> f64 {
    g.tensors()
        .iter()
        .flat_map(|(_, t)| t.data.iter())
        .map(|&x| (x as f64) * (x as f64))
        .sum::<f64>()
        .sqrt()
}

/// Mean negative log-likelihood per target token, without dropout.
pub fn mean_loss<T: Real>(model: &Model<T>, pairs: &[(Vec<usize>, Vec<usize>)], idx: &[usize]) -> Result<f64, NmtError> {
    let mut total = 0.0;
    let mut tokens = 0usize;
    for &i in idx {
        let (s, t) = &pairs[i];
        total -= model.sequence_log_prob(s, t)?.to_f64().unwrap();
        tokens += t.len();
    }
    Ok(total / tokens.max(1) as f64)
}

/// Train from scratch and return the best-development-loss snapshot.
pub fn train(data: &ParallelData, cfg: &TrainingConfig) -> Result<TrainOutcome, NmtError> {
    cfg.validate()?;
    if data.pairs.is_empty() {
        return Err(NmtError::EmptyCorpus);
    }
    if data.years.len() != data.pairs.len() {
        return Err(NmtError::InvalidConfig("one year per training pair required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_idx, dev_idx) = dev_split(&data.years, cfg.dev_fraction);
    let lexicon = if cfg.lexicon_lambda > 0.0 {
        let plain: Vec<(Vec<usize>, Vec<usize>)> = train_idx
            .iter()
            .map(|&i| {
                let (s, t) = &data.pairs[i];
                (s.clone(), t[..t.len() - 1].to_vec())
            })
            .collect();
        build_lexicon(&plain, data.src_vocab.len(), cfg.lexicon_lambda)
    } else {
        Lexicon::empty(data.src_vocab.len())
    };
    let dims = Dims {
        src_vocab: data.src_vocab.len(),
        tgt_vocab: data.tgt_vocab.len(),
        embed: cfg.embed,
        hidden: cfg.hidden,
    };
    let mut model = Model {
        src_vocab: data.src_vocab.clone(),
        tgt_vocab: data.tgt_vocab.clone(),
        params: ModelParameters::<f32>::random(dims, &mut rng),
        lexicon,
    };
    let batches = make_batches(&data.pairs, &train_idx, cfg.minibatch_words);
    let mut adam = Adam::new(dims);
    let mut grads = ModelParameters::<f32>::zeros(dims);
    let mut lr = cfg.learning_rate;
    let mut best = model.clone();
    let mut best_dev = mean_loss(&model, &data.pairs, &dev_idx)?;
    let mut best_epoch = 0;
    let mut prev_dev = best_dev;
    let mut history = Vec::new();
    log::info!(
        "stage=train pairs={} dev={} batches={} params={} initial_dev_loss={best_dev:.4}",
        train_idx.len(),
        dev_idx.len(),
        batches.len(),
        model.params.num_parameters()
    );

    for epoch in 1..=cfg.max_epochs {
        let started = std::time::Instant::now();
        let mut order: Vec<usize> = (0..batches.len()).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0usize;
        for &b in &order {
            let batch = &batches[b];
            let tokens: usize = batch.iter().map(|&i| data.pairs[i].1.len()).sum();
            let scale = 1.0 / tokens as f32;
            grads.fill_zero();
            let mut batch_loss = 0.0f64;
            for &i in batch {
                let (s, t) = &data.pairs[i];
                let mut drop = Dropout {
                    rng: &mut rng,
                    rate: cfg.dropout,
                };
                let d = if cfg.dropout > 0.0 { Some(&mut drop) } else { None };
                batch_loss += model.loss_and_gradient(s, t, d, scale, &mut grads)? as f64;
            }
            let norm = grad_norm(&grads);
            if !batch_loss.is_finite() || !norm.is_finite() {
                let why = format!("non-finite loss at epoch {epoch}; keeping epoch {best_epoch} snapshot");
                log::error!("{why}");
                return Ok(TrainOutcome {
                    model: best,
                    best_epoch,
                    history,
                    aborted: Some(why),
                });
            }
            if norm > cfg.clip_norm {
                let k = (cfg.clip_norm / norm) as f32;
                for (_, t) in grads.tensors_mut() {
                    t.data.iter_mut().for_each(|x| *x *= k);
                }
            }
            adam.update(&mut model.params, &grads, lr, cfg);
            epoch_loss += batch_loss;
            epoch_tokens += tokens;
        }
        if !model.params.all_finite() {
            let why = format!("non-finite parameters after epoch {epoch}; keeping epoch {best_epoch} snapshot");
            log::error!("{why}");
            return Ok(TrainOutcome {
                model: best,
                best_epoch,
                history,
                aborted: Some(why),
            });
        }
        let dev_loss = mean_loss(&model, &data.pairs, &dev_idx)?;
        let stats = EpochStats {
            epoch,
            train_loss: epoch_loss / epoch_tokens as f64,
            dev_loss,
            learning_rate: lr,
        };
        log::info!(
            "stage=train epoch={epoch} train_loss={:.4} dev_loss={dev_loss:.4} lr={lr:.6} secs={:.1}",
            stats.train_loss,
            started.elapsed().as_secs_f64()
        );
        history.push(stats);
        if dev_loss < best_dev {
            best_dev = dev_loss;
            best = model.clone();
            best_epoch = epoch;
        }
        if dev_loss > prev_dev {
            lr *= cfg.decay_factor;
        }
        prev_dev = dev_loss;
        if let Some(p) = cfg.patience {
            if epoch - best_epoch >= p {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best,
        best_epoch,
        history,
        aborted: None,
    })
}

/// Largest relative error per tensor between analytic and central-difference
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub per_tensor: Vec<(&'static str, f64)>,
    pub max_error: f64,
}

pub const FD_STEP: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Compare backprop with central differences on the summed loss of `pairs`.
/// Dropout makes the loss random, so a positive rate is rejected.
pub fn gradient_check(
    model: &Model<f64>,
    pairs: &[(Vec<usize>, Vec<usize>)],
    dropout: f64,
) -> Result<GradCheckReport, NmtError> {
    if dropout > 0.0 {
        return Err(NmtError::DropoutInGradientCheck(dropout));
    }
    let loss = |m: &Model<f64>| -> Result<f64, NmtError> {
        let mut total = 0.0;
        for (s, t) in pairs {
            total -= m.sequence_log_prob(s, t)?;
        }
        Ok(total)
    };
    let mut grads = ModelParameters::<f64>::zeros(model.params.dims());
    for (s, t) in pairs {
        model.loss_and_gradient::<ChaCha8Rng>(s, t, None, 1.0, &mut grads)?;
    }
    let mut probe = model.clone();
    let mut per_tensor = Vec::new();
    for ti in 0..grads.tensors().len() {
        let (name, g) = grads.tensors()[ti];
        let mut worst = 0.0f64;
        for k in 0..g.data.len() {
            let orig = probe.params.tensors()[ti].1.data[k];
            probe.params.tensors_mut()[ti].1.data[k] = orig + FD_STEP;
            let up = loss(&probe)?;
            probe.params.tensors_mut()[ti].1.data[k] = orig - FD_STEP;
            let down = loss(&probe)?;
            probe.params.tensors_mut()[ti].1.data[k] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(g.data[k], numeric));
        }
        per_tensor.push((name, worst));
    }
    let max_error = per_tensor.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(GradCheckReport { per_tensor, max_error })
}

/// Gradient check of a lone linear-softmax layer (no recurrence):
/// `loss = -log softmax(W x + b)[y]`.
pub fn linear_gradient_check(seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (v, h) = (7, 5);
    let mut w = Tensor::<f64>::zeros(v, h);
    w.data.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    let b: Vec<f64> = (0..v).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = 3;
    let loss = |w: &Tensor<f64>| {
        let mut g = b.clone();
        w.matvec_add(&x, &mut g);
        softmax_in_place(&mut g);
        -g[y].ln()
    };
    let mut p = b.clone();
    w.matvec_add(&x, &mut p);
    softmax_in_place(&mut p);
    p[y] -= 1.0;
    let mut worst = 0.0f64;
    for r in 0..v {
        for c in 0..h {
            let analytic = p[r] * x[c];
            let orig = w.data[r * h + c];
            w.data[r * h + c] = orig + FD_STEP;
            let up = loss(&w);
            w.data[r * h + c] = orig - FD_STEP;
            let down = loss(&w);
            w.data[r * h + c] = orig;
            worst = worst.max(relative_error(analytic, (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// A small random f64 model over the given vocabulary sizes.
pub fn tiny_model(src_vocab: usize, tgt_vocab: usize, hidden: usize, embed: usize, seed: u64) -> Model<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims {
        src_vocab,
        tgt_vocab,
        embed,
        hidden,
    };
    let names = |n: usize| (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>();
    let mut params = ModelParameters::<f64>::random(dims, &mut rng);
    // larger weights than training init so the check exercises nonlinearity
    for (_, t) in params.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x *= cast::<f64>(5.0));
    }
    let src = Vocabulary::from_tokens(names(src_vocab.saturating_sub(5)));
    let tgt = Vocabulary::from_tokens(names(tgt_vocab.saturating_sub(5)));
    Model {
        src_vocab: src,
        tgt_vocab: tgt,
        params,
        lexicon: Lexicon::empty(src_vocab),
    }
}
