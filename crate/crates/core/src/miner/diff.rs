//! Line-based histogram diff with zero context lines.
//!
//! The region is split around the common line with the fewest occurrences
//! (the longest such run on ties), then both sides are diffed recursively.
//! Regions whose common lines are all too frequent fall back to an LCS
//! table.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Occurrence cap above which a line is not used as a split point.
const MAX_CHAIN: usize = 64;

/// A maximal contiguous changed region. Either range may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHunk {
    pub deleted: Range<usize>,
    pub added: Range<usize>,
}

/// Collapse blank/tab runs and strip surrounding whitespace.
pub fn normalize_line(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A file's lines with blank lines dropped and whitespace normalized,
/// remembering where each kept line sat in the raw text.
#[derive(Debug, Clone)]
pub struct NormalizedText {
    pub raw: Vec<String>,
    /// Raw index of each kept line.
    pub kept: Vec<usize>,
    pub keys: Vec<String>,
}

impl NormalizedText {
    pub fn new(text: &str) -> Self {
        let raw: Vec<String> = text.lines().map(String::from).collect();
        let mut kept = Vec::new();
        let mut keys = Vec::new();
        for (i, line) in raw.iter().enumerate() {
            let key = normalize_line(line);
            if !key.is_empty() {
                kept.push(i);
                keys.push(key);
            }
        }
        Self { raw, kept, keys }
    }

    /// Kept-line index of a raw line, if that line is not blank.
    pub fn kept_index(&self, raw_index: usize) -> Option<usize> {
        self.kept.binary_search(&raw_index).ok()
    }
}

/// Diff two line sequences. Lines are compared verbatim; normalize first
/// when whitespace should be ignored.
pub fn histogram_diff<S: AsRef<str>>(pre: &[S], post: &[S]) -> Vec<RawHunk> {
    let mut interner: HashMap<&str, u32> = HashMap::new();
    let mut a = Vec::with_capacity(pre.len());
    let mut b = Vec::with_capacity(post.len());
    for (lines, out) in [(pre, &mut a), (post, &mut b)] {
        for s in lines {
            let n = interner.len() as u32;
            out.push(*interner.entry(s.as_ref()).or_insert(n));
        }
    }
    let mut edits = Vec::new();
    diff_region(&a, &b, 0..a.len(), 0..b.len(), &mut edits);
    merge_adjacent(edits)
}

fn merge_adjacent(mut edits: Vec<RawHunk>) -> Vec<RawHunk> {
    edits.sort_by_key(|h| (h.deleted.start, h.added.start));
    let mut out: Vec<RawHunk> = Vec::with_capacity(edits.len());
    for h in edits {
        if h.deleted.is_empty() && h.added.is_empty() {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.deleted.end == h.deleted.start && last.added.end == h.added.start {
                last.deleted.end = h.deleted.end;
                last.added.end = h.added.end;
                continue;
            }
        }
        out.push(h);
    }
    out
}

fn diff_region(a: &[u32], b: &[u32], mut ar: Range<usize>, mut br: Range<usize>, out: &mut Vec<RawHunk>) {
    while ar.start < ar.end && br.start < br.end && a[ar.start] == b[br.start] {
        ar.start += 1;
        br.start += 1;
    }
    while ar.start < ar.end && br.start < br.end && a[ar.end - 1] == b[br.end - 1] {
        ar.end -= 1;
        br.end -= 1;
    }
    if ar.is_empty() || br.is_empty() {
        out.push(RawHunk {
            deleted: ar,
            added: br,
        });
        return;
    }
    match find_split(a, b, ar.clone(), br.clone()) {
        Split::Match { a_at, b_at, len } => {
            diff_region(a, b, ar.start..a_at, br.start..b_at, out);
            diff_region(a, b, a_at + len..ar.end, b_at + len..br.end, out);
        }
        Split::NoCommon => out.push(RawHunk {
            deleted: ar,
            added: br,
        }),
        Split::TooFrequent => lcs_fallback(a, b, ar, br, out),
    }
}

enum Split {
    Match { a_at: usize, b_at: usize, len: usize },
    NoCommon,
    TooFrequent,
}

fn find_split(a: &[u32], b: &[u32], ar: Range<usize>, br: Range<usize>) -> Split {
    let mut occurrences: HashMap<u32, Vec<usize>> = HashMap::new();
    for i in ar.clone() {
        occurrences.entry(a[i]).or_default().push(i);
    }
    let mut best: Option<(usize, usize, usize, usize)> = None; // (count, a_at, b_at, len)
    let mut any_common = false;
    let mut bi = br.start;
    while bi < br.end {
        let mut next_bi = bi + 1;
        if let Some(positions) = occurrences.get(&b[bi]) {
            any_common = true;
            if positions.len() <= MAX_CHAIN {
                for &ai in positions {
                    let (mut s_a, mut s_b) = (ai, bi);
                    while s_a > ar.start && s_b > br.start && a[s_a - 1] == b[s_b - 1] {
                        s_a -= 1;
                        s_b -= 1;
                    }
                    let (mut e_a, mut e_b) = (ai + 1, bi + 1);
                    while e_a < ar.end && e_b < br.end && a[e_a] == b[e_b] {
                        e_a += 1;
                        e_b += 1;
                    }
                    let count = (s_a..e_a).map(|k| occurrences[&a[k]].len()).min().unwrap_or(usize::MAX);
                    let len = e_a - s_a;
                    let better = match best {
                        None => true,
                        Some((c, _, _, l)) => count < c || (count == c && len > l),
                    };
                    if better {
                        best = Some((count, s_a, s_b, len));
                    }
                    next_bi = next_bi.max(e_b);
                }
            }
        }
        bi = next_bi;
    }
    match best {
        Some((_, a_at, b_at, len)) => Split::Match { a_at, b_at, len },
        None if any_common => Split::TooFrequent,
        None => Split::NoCommon,
    }
}

fn lcs_fallback(a: &[u32], b: &[u32], ar: Range<usize>, br: Range<usize>, out: &mut Vec<RawHunk>) {
    let (n, m) = (ar.len(), br.len());
    let mut table = vec![0u32; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[idx(i, j)] = if a[ar.start + i] == b[br.start + j] {
                table[idx(i + 1, j + 1)] + 1
            } else {
                table[idx(i + 1, j)].max(table[idx(i, j + 1)])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let (mut del_start, mut add_start) = (0, 0);
    let flush = |i: usize, j: usize, ds: usize, as_: usize, out: &mut Vec<RawHunk>| {
        if ds < i || as_ < j {
            out.push(RawHunk {
                deleted: ar.start + ds..ar.start + i,
                added: br.start + as_..br.start + j,
            });
        }
    };
    while i < n && j < m {
        if a[ar.start + i] == b[br.start + j] {
            flush(i, j, del_start, add_start, out);
            i += 1;
            j += 1;
            del_start = i;
            add_start = j;
        } else if table[idx(i + 1, j)] >= table[idx(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    flush(n, m, del_start, add_start, out);
}

/// Apply an edit script produced by [`histogram_diff`] to `pre`.
pub fn apply_hunks<S: Clone>(pre: &[S], post: &[S], hunks: &[RawHunk]) -> Vec<S> {
    let mut out = Vec::with_capacity(post.len());
    let mut cursor = 0;
    for h in hunks {
        out.extend_from_slice(&pre[cursor..h.deleted.start]);
        out.extend_from_slice(&post[h.added.clone()]);
        cursor = h.deleted.end;
    }
    out.extend_from_slice(&pre[cursor..]);
    out
}

/// Map an index in `pre` that is not deleted to its index in `post`.
pub fn map_unchanged(hunks: &[RawHunk], pre_index: usize) -> Option<usize> {
    let mut shift: isize = 0;
    for h in hunks {
        if pre_index < h.deleted.start {
            break;
        }
        if h.deleted.contains(&pre_index) {
            return None;
        }
        shift += h.added.len() as isize - h.deleted.len() as isize;
    }
    Some((pre_index as isize + shift) as usize)
}

/// Map an index in `post` that is not added back to its index in `pre`.
pub fn map_back(hunks: &[RawHunk], post_index: usize) -> Option<usize> {
    let mut shift: isize = 0;
    for h in hunks {
        if post_index < h.added.start {
            break;
        }
        if h.added.contains(&post_index) {
            return None;
        }
        shift += h.deleted.len() as isize - h.added.len() as isize;
    }
    Some((post_index as isize + shift) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_substitution() {
        let h = histogram_diff(&["A", "B", "C"], &["A", "X", "C"]);
        assert_eq!(h, vec![RawHunk { deleted: 1..2, added: 1..2 }]);
    }

    #[test]
    fn identity_has_no_hunks() {
        assert!(histogram_diff(&["A", "B"], &["A", "B"]).is_empty());
        assert!(histogram_diff::<&str>(&[], &[]).is_empty());
    }

    #[test]
    fn listing_change_is_one_pair() {
        let pre = [
            "uptime /= 24;",
            "long days = (long) uptime;",
            "long hours = (long) ((uptime - days) * 60);",
            "String s = fmtI.format(days)",
        ];
        let mut post = pre;
        post[2] = "long hours = (long) ((uptime - days) * 24);";
        let h = histogram_diff(&pre, &post);
        assert_eq!(h, vec![RawHunk { deleted: 2..3, added: 2..3 }]);
    }

    #[test]
    fn pure_insert_and_delete() {
        let h = histogram_diff(&["a", "b"], &["a", "x", "b"]);
        assert_eq!(h, vec![RawHunk { deleted: 1..1, added: 1..2 }]);
        let h = histogram_diff(&["a", "x", "b"], &["a", "b"]);
        assert_eq!(h, vec![RawHunk { deleted: 1..2, added: 1..1 }]);
    }

    #[test]
    fn prefers_rare_lines_as_anchors() {
        // `}` is frequent; the unique line anchors the match.
        let pre = ["}", "}", "foo();", "}", "bar();"];
        let post = ["}", "foo();", "}", "}", "baz();"];
        let h = histogram_diff(&pre, &post);
        assert_eq!(apply_hunks(&pre, &post, &h), post);
    }

    #[test]
    fn normalization_ignores_whitespace_and_blank_lines() {
        let t = NormalizedText::new("  a  =\tb;  \n\n   \nc;");
        assert_eq!(t.keys, ["a = b;", "c;"]);
        assert_eq!(t.kept, [0, 3]);
    }

    /// Random 40-line file with 6 random edits; the script must rebuild post.
    #[test]
    fn random_edits_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let pre: Vec<String> = (0..40).map(|_| format!("l{}", rng.gen_range(0..12))).collect();
            let mut post = pre.clone();
            for _ in 0..6 {
                let pos = rng.gen_range(0..=post.len());
                match rng.gen_range(0..3) {
                    0 if pos < post.len() => {
                        post.remove(pos);
                    }
                    1 if pos < post.len() => post[pos] = format!("n{}", rng.gen_range(0..5)),
                    _ => post.insert(pos, format!("n{}", rng.gen_range(0..5))),
                }
            }
            let h = histogram_diff(&pre, &post);
            assert_eq!(apply_hunks(&pre, &post, &h), post);
        }
    }

    proptest! {
        #[test]
        fn hunks_are_maximal_and_round_trip(
            pre in proptest::collection::vec(0u8..6, 0..30),
            post in proptest::collection::vec(0u8..6, 0..30),
        ) {
            let pre: Vec<String> = pre.iter().map(|v| v.to_string()).collect();
            let post: Vec<String> = post.iter().map(|v| v.to_string()).collect();
            let h = histogram_diff(&pre, &post);
            prop_assert_eq!(apply_hunks(&pre, &post, &h), post.clone());
            for w in h.windows(2) {
                // zero context, but hunks never touch
                prop_assert!(w[0].deleted.end < w[1].deleted.start && w[0].added.end < w[1].added.start);
            }
            for k in 0..pre.len() {
                if let Some(j) = map_unchanged(&h, k) {
                    prop_assert_eq!(&pre[k], &post[j]);
                    prop_assert_eq!(map_back(&h, j), Some(k));
                }
            }
        }
    }
}
