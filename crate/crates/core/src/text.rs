//! Tokenization shared by token blocking and the name matchers.

use std::collections::BTreeSet;

/// Corporate filler words that would otherwise dominate overlap counts.
pub const STOPWORDS: [&str; 6] = ["inc", "ltd", "corp", "co", "plc", "the"];

/// Lower-cases, splits on every run of non-alphanumeric characters and drops
/// tokens shorter than two characters or on the stopword list.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| t.chars().count() >= 2 && !STOPWORDS.contains(&t.as_str()))
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).collect()
}

/// Jaccard similarity of two token sets; empty against anything is 0.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Derives an independent 64-bit seed for a named sub-stream.
pub fn stream_seed(seed: u64, stream: &str) -> u64 {
    // FNV-1a over the name, folded into a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stream.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
