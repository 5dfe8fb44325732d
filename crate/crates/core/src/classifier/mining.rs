use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{ClassId, LabelArray};

/// Attempts per triplet at drawing an anchor whose class has a second member.
pub const MAX_ANCHOR_RETRIES: usize = 64;

/// Vertex ids of `(anchor, positive, negative)` triplets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletBatch {
    pub anchors: Vec<usize>,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    fn push(&mut self, a: usize, p: usize, n: usize, labels: &LabelArray) {
        let (la, lp, ln) = (labels.get(a), labels.get(p), labels.get(n));
        assert!(la.is_some() && la == lp && la != ln && ln.is_some() && a != p);
        self.anchors.push(a);
        self.positives.push(p);
        self.negatives.push(n);
    }
}

/// Mines uniformly over every labelled vertex.
pub fn mine_triplets<R: Rng + ?Sized>(
    labels: &LabelArray,
    batch_size: usize,
    rng: &mut R,
) -> Result<TripletBatch> {
    let all: Vec<usize> = (0..labels.len()).collect();
    mine_triplets_from(labels, &all, batch_size, rng)
}

/// Mines uniformly over the labelled vertices in `pool`: anchor uniform,
/// positive uniform over the anchor's class minus the anchor, negative
/// uniform over the other classes. Anchors from singleton classes are
/// redrawn; a triplet is dropped after [`MAX_ANCHOR_RETRIES`] failures.
pub fn mine_triplets_from<R: Rng + ?Sized>(
    labels: &LabelArray,
    pool: &[usize],
    batch_size: usize,
    rng: &mut R,
) -> Result<TripletBatch> {
    let mut batch = TripletBatch::default();
    if batch_size == 0 {
        return Ok(batch);
    }
    // Labelled pool members grouped by class, concatenated.
    let mut tagged: Vec<(ClassId, usize)> = pool
        .iter()
        .filter_map(|&v| labels.get(v).map(|c| (c, v)))
        .collect();
    tagged.sort_unstable();
    tagged.dedup();
    let members: Vec<usize> = tagged.iter().map(|&(_, v)| v).collect();
    let mut starts = Vec::new();
    for (i, &(c, _)) in tagged.iter().enumerate() {
        if i == 0 || tagged[i - 1].0 != c {
            starts.push(i);
        }
    }
    starts.push(members.len());
    let n_classes = starts.len() - 1;
    if n_classes < 2 {
        return Err(Error::TooFewClasses(n_classes));
    }
    if starts.windows(2).all(|w| w[1] - w[0] < 2) {
        return Err(Error::Config("no class has two members to form a positive pair".into()));
    }
    let class_of = |i: usize| starts.partition_point(|&s| s <= i) - 1;
    let total = members.len();

    batch.anchors.reserve(batch_size);
    for _ in 0..batch_size {
        for _ in 0..MAX_ANCHOR_RETRIES {
            let ai = rng.random_range(0..total);
            let c = class_of(ai);
            let (lo, hi) = (starts[c], starts[c + 1]);
            if hi - lo < 2 {
                continue;
            }
            let mut pi = lo + rng.random_range(0..hi - lo - 1);
            if pi >= ai {
                pi += 1;
            }
            let mut ni = rng.random_range(0..total - (hi - lo));
            if ni >= lo {
                ni += hi - lo;
            }
            batch.push(members[ai], members[pi], members[ni], labels);
            break;
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(s: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(s)
    }

    #[test]
    fn enumerable_case() {
        let labels = LabelArray::from_vec(vec![Some(0), Some(0), Some(1)]);
        let b = mine_triplets(&labels, 200, &mut rng(1)).unwrap();
        assert_eq!(b.len(), 200);
        for i in 0..b.len() {
            assert!(b.anchors[i] < 2);
            assert_eq!(b.positives[i], 1 - b.anchors[i]);
            assert_eq!(b.negatives[i], 2);
        }
    }

    #[test]
    fn empty_request() {
        let labels = LabelArray::from_vec(vec![Some(0)]);
        assert!(mine_triplets(&labels, 0, &mut rng(1)).unwrap().is_empty());
    }

    #[test]
    fn errors() {
        let one = LabelArray::from_vec(vec![Some(0), Some(0), None]);
        assert!(matches!(mine_triplets(&one, 4, &mut rng(1)), Err(Error::TooFewClasses(1))));
        let singletons = LabelArray::from_vec(vec![Some(0), Some(1)]);
        assert!(mine_triplets(&singletons, 4, &mut rng(1)).is_err());
    }

    #[test]
    fn pool_restricts_members() {
        let labels = LabelArray::from_vec(vec![Some(0), Some(0), Some(1), Some(1), Some(0)]);
        let b = mine_triplets_from(&labels, &[0, 1, 2], 50, &mut rng(3)).unwrap();
        for i in 0..b.len() {
            assert!([b.anchors[i], b.positives[i], b.negatives[i]].iter().all(|&v| v < 3));
        }
    }

    #[test]
    fn anchors_are_uniform() {
        // Four classes of five, so every anchor is valid.
        let labels = LabelArray::from_vec((0..20).map(|v| Some(v as ClassId / 5)).collect());
        let n = 10_000;
        let b = mine_triplets(&labels, n, &mut rng(9)).unwrap();
        let mut counts = [0usize; 20];
        b.anchors.iter().for_each(|&a| counts[a] += 1);
        let expected = n as f64 / 20.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 19 degrees of freedom: mean 19, sd sqrt(38); 3 sigma bound.
        assert!(chi2 < 19.0 + 3.0 * 38f64.sqrt(), "chi2 {chi2}");
    }
}
