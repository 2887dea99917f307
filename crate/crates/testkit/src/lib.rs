//! Brute-force reference implementations and seeded synthetic data used by
//! the integration and acceptance suites. Nothing here is fast; everything
//! here is simple enough to check by reading.

use std::collections::{BTreeMap, BTreeSet};

use guohua_core::classifier::{FeatureVector, LabeledFeature};
use guohua_core::corpus::{AnnotationSet, PaintingRecord, PaintingType, Tag, TagDimension};
use guohua_core::design_space::{normalize_concepts, ClusterSet, ConceptNormalizationRules};
use guohua_core::search::{normalize_concept, tokenize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw (Box-Muller).
pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Isotropic Gaussian blobs: `per` points around each center.
pub fn blobs(seed: u64, centers: &[Vec<f64>], per: usize, sd: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let mut points = Vec::with_capacity(centers.len() * per);
    let mut labels = Vec::with_capacity(centers.len() * per);
    for (l, c) in centers.iter().enumerate() {
        for _ in 0..per {
            points.push(c.iter().map(|x| x + sd * gauss(&mut r)).collect());
            labels.push(l);
        }
    }
    (points, labels)
}

/// Two Gaussian classes in `dim` dimensions whose means differ by `gap`
/// along every axis. Ids are `f00000`, `f00001`, ...
pub fn two_blob_features(seed: u64, n: usize, dim: usize, gap: f64) -> Vec<LabeledFeature> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let xieyi = i % 2 == 1;
            let shift = if xieyi { gap / 2.0 } else { -gap / 2.0 };
            LabeledFeature {
                feature: FeatureVector {
                    record_id: format!("f{i:05}"),
                    values: (0..dim).map(|_| shift + gauss(&mut r)).collect(),
                },
                label: if xieyi { PaintingType::Xieyi } else { PaintingType::Gongbi },
            }
        })
        .collect()
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut ra: BTreeMap<usize, u64> = BTreeMap::new();
    let mut rb: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sa: f64 = ra.values().map(|&n| choose2(n)).sum();
    let sb: f64 = rb.values().map(|&n| choose2(n)).sum();
    let expected = sa * sb / choose2(a.len() as u64);
    let max = (sa + sb) / 2.0;
    if (max - expected).abs() < 1e-15 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Smallest WCSS over every partition of `points` into exactly `k`
/// non-empty groups, each scored against its mean.
pub fn exhaustive_min_wcss(points: &[Vec<f64>], k: usize) -> f64 {
    fn score(points: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
        let d = points[0].len();
        let mut total = 0.0;
        for g in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == g).map(|(p, _)| p).collect();
            let mean: Vec<f64> =
                (0..d).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            total += members.iter().map(|p| p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>()).sum::<f64>();
        }
        total
    }
    // restricted growth strings enumerate each set partition once
    fn rec(i: usize, used: usize, labels: &mut Vec<usize>, points: &[Vec<f64>], k: usize, best: &mut f64) {
        let n = points.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            if used == k {
                *best = best.min(score(points, labels, k));
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, points, k, best);
        }
    }
    assert!(k >= 1 && k <= points.len());
    let mut best = f64::INFINITY;
    rec(0, 0, &mut vec![0; points.len()], points, k, &mut best);
    best
}

/// Average ranks of |d| over the nonzero differences, computed by counting.
fn naive_ranks(nonzero: &[f64]) -> Vec<f64> {
    nonzero
        .iter()
        .map(|d| {
            let below = nonzero.iter().filter(|e| e.abs() < d.abs()).count() as f64;
            let equal = nonzero.iter().filter(|e| e.abs() == d.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// `(w_plus, w_minus)` from counted ranks.
pub fn rank_sums(diffs: &[f64]) -> (f64, f64) {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = naive_ranks(&nonzero);
    let plus = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let minus = nonzero.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    (plus, minus)
}

/// Two-sided signed-rank p-value by visiting all 2^n sign patterns:
/// `min(1, 2 · #{patterns with W⁺ ≤ min(W⁺, W⁻)} / 2^n)`.
pub fn wilcoxon_p_by_enumeration(diffs: &[f64]) -> f64 {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = naive_ranks(&nonzero);
    let (plus, minus) = rank_sums(diffs);
    let observed = plus.min(minus);
    let n = ranks.len();
    let mut at_most = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            at_most += 1;
        }
    }
    (2.0 * at_most as f64 / (1u64 << n) as f64).min(1.0)
}

/// Cronbach's α through the covariance matrix of the item columns:
/// `k/(k−1) · (1 − trace(C) / sum(C))`.
pub fn alpha_from_covariances(columns: &[Vec<f64>]) -> f64 {
    let k = columns.len();
    let n = columns[0].len();
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let cov = |a: usize, b: usize| -> f64 {
        (0..n).map(|o| (columns[a][o] - means[a]) * (columns[b][o] - means[b])).sum::<f64>() / (n as f64 - 1.0)
    };
    let mut trace = 0.0;
    let mut sum = 0.0;
    for a in 0..k {
        for b in 0..k {
            let c = cov(a, b);
            sum += c;
            if a == b {
                trace += c;
            }
        }
    }
    k as f64 / (k as f64 - 1.0) * (1.0 - trace / sum)
}

/// Concepts used by [`synthetic_corpus`]: multiword, hyphenated, Han, and
/// case variants, with deliberate token overlap.
pub fn vocabulary(dim: TagDimension) -> &'static [&'static str] {
    match dim {
        TagDimension::CulturalSymbol => &[
            "pine", "Pine Tree", "crane", "red-crowned crane", "deer", "Nine-Colored Deer", "lotus",
            "lotus leaves", "mountains", "distant mountains", "streams", "waterfall", "plum blossom",
            "arched bridge", "farmers", "plowing ox", "goldfish", "butterfly", "鹿", "九色鹿", "松树",
            "山水",
        ],
        TagDimension::Emotion => &[
            "tranquility", "serenity", "freedom", "longing", "natural harmony", "vitality", "seclusion",
            "宁静", "a sense of life",
        ],
        TagDimension::Composition => &["blank space", "central composition", "triangular composition", "Yin-Yang Contrast"],
        TagDimension::Brushstroke => &["fine line drawing", "thick ink", "dry brush", "axe-cut strokes"],
        TagDimension::ColorTone => &["malachite green", "peach pink", "black ink", "ink wash", "淡墨"],
        TagDimension::Style => &["blue-green landscape", "gongbi flower-and-bird", "freehand ink", "literati painting"],
    }
}

const DESCRIPTION_WORDS: &[&str] = &[
    "a", "quiet", "river", "with", "deer", "under", "pine", "trees", "ink", "mountains", "mist", "boat",
    "fisherman", "鹿", "山水画", "crane", "flying", "over", "streams", "spring", "green",
];

/// `n` seeded records `p0000`, `p0001`, ... with 0 to 3 tags per dimension and
/// an optional description.
pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<PaintingRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let mut rec = PaintingRecord::new(format!("p{i:04}"), format!("images/p{i:04}.jpg"));
            rec.painting_type = match r.random_range(0..3) {
                0 => PaintingType::Gongbi,
                1 => PaintingType::Xieyi,
                _ => PaintingType::Unknown,
            };
            let mut set = AnnotationSet::new();
            for dim in TagDimension::ALL {
                let vocab = vocabulary(dim);
                for _ in 0..r.random_range(0..=3) {
                    set.insert(Tag::new(dim, vocab[r.random_range(0..vocab.len())]).expect("non-empty concept"));
                }
            }
            rec.annotations = set;
            if r.random_bool(0.6) {
                let words: Vec<&str> =
                    (0..r.random_range(3..10)).map(|_| DESCRIPTION_WORDS[r.random_range(0..DESCRIPTION_WORDS.len())]).collect();
                rec.description = Some(words.join(" "));
            }
            rec
        })
        .collect()
}

/// Local search by scanning every record:
/// `3 · #{tags whose normalized concept equals the normalized query}
///  + Σ over tags and description of |query tokens ∩ entry tokens|`.
/// Returns `(id, score)` sorted by score descending, id ascending.
pub fn scan_search(
    records: &[PaintingRecord],
    text: &str,
    dimension: Option<TagDimension>,
    painting_type: Option<PaintingType>,
    limit: usize,
) -> Vec<(String, f64)> {
    let q_norm = normalize_concept(text);
    let q: BTreeSet<String> = tokenize(text).into_iter().collect();
    let overlap = |s: &str| tokenize(s).iter().filter(|t| q.contains(*t)).count() as f64;
    let mut out = Vec::new();
    for rec in records {
        if painting_type.is_some_and(|t| t != rec.painting_type) {
            continue;
        }
        let mut score = 0.0;
        for tag in rec.annotations.iter() {
            if dimension.is_some_and(|d| d != tag.dimension) {
                continue;
            }
            if normalize_concept(tag.concept()) == q_norm {
                score += 3.0;
            }
            score += overlap(tag.concept());
        }
        if dimension.is_none() {
            if let Some(d) = &rec.description {
                score += overlap(d);
            }
        }
        if score > 0.0 {
            out.push((rec.id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out.truncate(limit);
    out
}

/// Ids of records carrying exactly `(dimension, concept)`, ascending.
pub fn scan_tag(records: &[PaintingRecord], dimension: TagDimension, concept: &str) -> Vec<String> {
    let mut ids: Vec<String> = records
        .iter()
        .filter(|r| r.annotations.get(dimension).iter().any(|t| t.concept() == concept))
        .map(|r| r.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Per-cluster `(label, concept_count, painting_count)` recounted by brute
/// force, in cluster order.
pub fn recount_clusters(
    records: &[PaintingRecord],
    clusters: &ClusterSet,
    dim: TagDimension,
    rules: &ConceptNormalizationRules,
) -> Vec<(String, usize, usize)> {
    clusters
        .clusters
        .iter()
        .filter(|c| c.dimension == dim)
        .map(|c| {
            let paintings = records
                .iter()
                .filter(|r| {
                    let raw: Vec<String> = r.annotations.get(dim).iter().map(|t| t.concept().to_string()).collect();
                    normalize_concepts(&raw, rules).iter().any(|x| c.members.contains(x))
                })
                .count();
            (c.label.clone(), c.members.len(), paintings)
        })
        .collect()
}

/// Distinct raw concepts of a flat dimension.
pub fn recount_flat(records: &[PaintingRecord], dim: TagDimension) -> usize {
    let mut all: Vec<&str> = records.iter().flat_map(|r| r.annotations.get(dim).iter().map(|t| t.concept())).collect();
    all.sort();
    all.dedup();
    all.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_identity_and_permutation() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    }

    #[test]
    fn exhaustive_small_cases() {
        let p = vec![vec![0.0], vec![1.0], vec![10.0]];
        assert_eq!(exhaustive_min_wcss(&p, 3), 0.0);
        assert!((exhaustive_min_wcss(&p, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_known_value() {
        // ranks 1..4 all positive: only the empty pattern has W+ <= 0
        assert!((wilcoxon_p_by_enumeration(&[1.0, 2.0, 3.0, 4.0]) - 2.0 / 16.0).abs() < 1e-15);
        assert_eq!(rank_sums(&[1.0, -1.0, 2.0]), (1.5 + 3.0, 1.5));
    }
}
