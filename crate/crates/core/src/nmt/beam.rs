//! Beam-search decoding without length normalization.

use std::cmp::Ordering;

use super::linalg::Real;
use super::model::{DecoderState, Model};
use super::vocab::{BOS_ID, EOS_ID};
use super::NmtError;

pub const DEFAULT_BEAM: usize = 10;
pub const DEFAULT_MAX_LEN: usize = 100;

#[derive(Debug, Clone)]
pub struct Hypothesis<T> {
    /// Output ids, ending with `</s>` iff finished.
    pub tokens: Vec<usize>,
    pub log_prob: T,
    pub state: DecoderState<T>,
    pub finished: bool,
}

fn by_score<T: Real>(a: &Hypothesis<T>, b: &Hypothesis<T>) -> Ordering {
    b.log_prob
        .partial_cmp(&a.log_prob)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Decode `src` keeping the `beam_size` best partial outputs per step.
///
/// Hypotheses that emit `</s>` are retired into the result pool. `max_len`
/// counts output tokens including `</s>`. Returns finished hypotheses best
/// first; if none finished, the best unfinished ones with `finished=false`.
pub fn beam_search<T: Real>(
    model: &Model<T>,
    src: &[usize],
    beam_size: usize,
    max_len: usize,
) -> Result<Vec<Hypothesis<T>>, NmtError> {
    assert!(beam_size >= 1, "beam size must be positive");
    let enc = model.encode(src)?;
    let mut active = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: T::zero(),
        state: model.initial_state(&enc),
        finished: false,
    }];
    let mut pool: Vec<Hypothesis<T>> = Vec::new();
    let mut unfinished: Vec<Hypothesis<T>> = Vec::new();

    for step in 0..max_len {
        let mut expanded = Vec::with_capacity(active.len());
        let mut candidates: Vec<(T, usize, usize)> = Vec::new();
        for (pi, h) in active.iter().enumerate() {
            let input = h.tokens.last().copied().unwrap_or(BOS_ID);
            let (next, dist) = model.step(&enc, &h.state, input);
            let mut ids: Vec<usize> = (0..dist.len()).collect();
            ids.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            for &tok in ids.iter().take(beam_size) {
                candidates.push((h.log_prob + dist[tok].ln(), pi, tok));
            }
            expanded.push(next);
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        candidates.truncate(beam_size);

        let mut next_active = Vec::with_capacity(beam_size);
        for (lp, pi, tok) in candidates {
            let mut tokens = active[pi].tokens.clone();
            tokens.push(tok);
            let finished = tok == EOS_ID;
            let hyp = Hypothesis {
                tokens,
                log_prob: lp,
                state: expanded[pi].clone(),
                finished,
            };
            if finished {
                pool.push(hyp);
            } else if step + 1 == max_len {
                unfinished.push(hyp);
            } else {
                next_active.push(hyp);
            }
        }
        active = next_active;
        pool.sort_by(by_score);
        if active.is_empty() {
            break;
        }
        if pool.len() >= beam_size {
            let kth = pool[beam_size - 1].log_prob;
            let best_active = active
                .iter()
                .map(|h| h.log_prob)
                .fold(T::neg_infinity(), |m, x| m.max(x));
            // scores only decrease as hypotheses grow
            if kth >= best_active {
                break;
            }
        }
    }
    if pool.is_empty() {
        unfinished.extend(active);
        unfinished.sort_by(by_score);
        return Ok(unfinished);
    }
    Ok(pool)
}
