//! IBM Model-1 token translation table used to bias the decoder.

use std::collections::HashMap;

/// Sparse `t(tgt | src)` rows, each sorted by target id.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub lambda: f32,
    pub rows: Vec<Vec<(usize, f32)>>,
}

pub const EM_ITERATIONS: usize = 10;
pub const ROW_ENTRIES: usize = 20;

impl Lexicon {
    pub fn empty(src_vocab: usize) -> Self {
        Self {
            lambda: 0.0,
            rows: vec![Vec::new(); src_vocab],
        }
    }

    pub fn is_active(&self) -> bool {
        self.lambda > 0.0 && self.rows.iter().any(|r| !r.is_empty())
    }

    pub fn row(&self, src: usize) -> &[(usize, f32)] {
        self.rows.get(src).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn row_mass(&self, src: usize) -> f32 {
        self.row(src).iter().map(|e| e.1).sum()
    }

    pub fn prob(&self, src: usize, tgt: usize) -> f32 {
        let row = self.row(src);
        row.binary_search_by_key(&tgt, |e| e.0)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }
}

/// Model-1 EM without a null word, from a uniform start.
pub fn model1(pairs: &[(Vec<usize>, Vec<usize>)], iterations: usize) -> HashMap<(usize, usize), f64> {
    let mut t: HashMap<(usize, usize), f64> = HashMap::new();
    for (src, tgt) in pairs {
        for &e in src {
            for &f in tgt {
                t.insert((e, f), 1.0);
            }
        }
    }
    for _ in 0..iterations {
        let mut count: HashMap<(usize, usize), f64> = HashMap::with_capacity(t.len());
        let mut total: HashMap<usize, f64> = HashMap::new();
        for (src, tgt) in pairs {
            for &f in tgt {
                let denom: f64 = src.iter().map(|&e| t[&(e, f)]).sum();
                for &e in src {
                    let c = t[&(e, f)] / denom;
                    *count.entry((e, f)).or_default() += c;
                    *total.entry(e).or_default() += c;
                }
            }
        }
        for (k, v) in t.iter_mut() {
            *v = count[k] / total[&k.0];
        }
    }
    t
}

/// Model-1 table truncated to the best `ROW_ENTRIES` targets per source
/// token (ties by lower id) and renormalized.
pub fn build_lexicon(pairs: &[(Vec<usize>, Vec<usize>)], src_vocab: usize, lambda: f32) -> Lexicon {
    let t = model1(pairs, EM_ITERATIONS);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); src_vocab];
    for (&(e, f), &p) in &t {
        rows[e].push((f, p));
    }
    let rows = rows
        .into_iter()
        .map(|mut row| {
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            row.truncate(ROW_ENTRIES);
            let mass: f64 = row.iter().map(|e| e.1).sum();
            let mut out: Vec<(usize, f32)> = row.into_iter().map(|(f, p)| (f, (p / mass) as f32)).collect();
            out.sort_by_key(|e| e.0);
            out
        })
        .collect();
    Lexicon { lambda, rows }
}
