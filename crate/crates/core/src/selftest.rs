//! Numerical self-checks of the translation model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nmt::beam::beam_search;
use crate::nmt::lexicon::Lexicon;
use crate::nmt::model::Model;
use crate::nmt::params::{Dims, ModelParameters};
use crate::nmt::train::gradient_check;
use crate::nmt::vocab::{Vocabulary, BOS_ID, EOS_ID};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Random f64 model with uniform weights in `[-scale, scale)` and a lexicon
/// that ties each source id to a few target ids.
pub fn random_model(src_vocab: usize, tgt_vocab: usize, embed: usize, hidden: usize, seed: u64, scale: f64) -> Model<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims {
        src_vocab,
        tgt_vocab,
        embed,
        hidden,
    };
    let mut params = ModelParameters::<f64>::zeros(dims);
    for (_, t) in params.tensors_mut() {
        t.data.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
    }
    let mut lexicon = Lexicon::empty(src_vocab);
    lexicon.lambda = 0.3;
    for (s, row) in lexicon.rows.iter_mut().enumerate() {
        for k in 0..2 {
            row.push(((s + k) % tgt_vocab, 0.4 / (k + 1) as f32));
        }
        row.sort_by_key(|e| e.0);
    }
    Model {
        src_vocab: Vocabulary::default(),
        tgt_vocab: Vocabulary::default(),
        params,
        lexicon,
    }
}

/// H=4, |V|=10, one pair, central differences.
pub fn gradient(seed: u64) -> Check {
    let m = random_model(10, 10, 3, 4, seed, 0.8);
    let pair = (vec![5, 6, 8], vec![3, 7, EOS_ID]);
    match gradient_check(&m, &[pair], 0.0) {
        Ok(r) => Check {
            name: "gradient-check",
            passed: r.max_error < 1e-4,
            detail: format!("max relative error {:.2e}", r.max_error),
        },
        Err(e) => Check {
            name: "gradient-check",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Every decoder step of random models yields a distribution summing to one.
pub fn normalization(seeds: std::ops::Range<u64>) -> Check {
    let mut worst = 0.0f64;
    let mut negative = false;
    for seed in seeds {
        let m = random_model(9, 8, 3, 5, seed, 2.0);
        let src: Vec<usize> = (0..4).map(|i| 3 + (seed as usize + i) % 6).collect();
        let enc = m.encode(&src).expect("non-empty source");
        let mut state = m.initial_state(&enc);
        let mut input = BOS_ID;
        for step in 0..6 {
            let (next, dist) = m.step(&enc, &state, input);
            worst = worst.max((dist.iter().sum::<f64>() - 1.0).abs());
            negative |= dist.iter().any(|&p| p < 0.0);
            state = next;
            input = 3 + (step % 5);
        }
    }
    Check {
        name: "softmax-normalization",
        passed: worst < 1e-6 && !negative,
        detail: format!("max |sum - 1| {worst:.2e}"),
    }
}

/// Every output of at most `max_len` tokens that ends with `</s>`, scored.
pub fn exhaustive(m: &Model<f64>, src: &[usize], max_len: usize) -> Vec<(Vec<usize>, f64)> {
    let vocab = m.params.dims().tgt_vocab;
    let mut done = Vec::new();
    let mut frontier = vec![Vec::<usize>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in frontier {
            for t in 0..vocab {
                let mut seq = prefix.clone();
                seq.push(t);
                if t == EOS_ID {
                    done.push(seq);
                } else {
                    next.push(seq);
                }
            }
        }
        frontier = next;
    }
    let mut scored: Vec<(Vec<usize>, f64)> = done
        .into_iter()
        .map(|s| {
            let lp = m.sequence_log_prob(src, &s).expect("non-empty source");
            (s, lp)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored
}

/// |V|=3, max_len=4, beam 81 against full enumeration.
pub fn beam_exhaustive(seeds: std::ops::Range<u64>) -> Check {
    let mut failures = Vec::new();
    for seed in seeds {
        let mut m = random_model(7, 3, 3, 4, seed, 2.0);
        m.lexicon = Lexicon::empty(7);
        let src = [3, 5, 6];
        let all = exhaustive(&m, &src, 4);
        let hyps = match beam_search(&m, &src, 81, 4) {
            Ok(h) => h,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let same = hyps.len() == all.len()
            && hyps[0].tokens == all[0].0
            && hyps.iter().zip(&all).all(|(h, (_, lp))| (h.log_prob - lp).abs() < 1e-10);
        if !same {
            failures.push(format!("seed {seed}"));
        }
    }
    Check {
        name: "beam-exhaustive",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "beam matches enumeration".into()
        } else {
            format!("mismatch: {}", failures.join(", "))
        },
    }
}

pub fn run() -> Vec<Check> {
    vec![gradient(7), normalization(0..20), beam_exhaustive(0..10)]
}
