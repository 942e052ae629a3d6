//! Histogram CART regression trees fitted to second-order gradient statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_BINS: usize = 255;
const MISSING_BIN: u8 = u8::MAX;

/// A fitted tree. `cover` is the number of training rows reaching the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
        cover: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x <= threshold` go left; missing values follow
        /// `default_left`.
        threshold: f64,
        default_left: bool,
        cover: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match self {
            Node::Leaf { cover, .. } | Node::Split { cover, .. } => *cover,
        }
    }

    /// `x` is read through `value(feature)`; NaN means missing.
    pub fn predict(&self, value: impl Fn(usize) -> f64) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let x = value(*feature);
                    let go_left = if x.is_nan() { *default_left } else { x <= *threshold };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    pub fn visit_splits(&self, f: &mut impl FnMut(usize)) {
        if let Node::Split { feature, left, right, .. } = self {
            f(*feature);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }
}

/// Value ranges of each bin of one feature, ascending.
#[derive(Debug, Clone, PartialEq)]
struct FeatureBins {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl FeatureBins {
    fn build(values: &[f64]) -> FeatureBins {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in sorted.iter().copied() {
            match distinct.last_mut() {
                Some((d, c)) if *d == v => *c += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        if distinct.len() <= MAX_BINS {
            for (v, _) in distinct {
                lo.push(v);
                hi.push(v);
            }
            return FeatureBins { lo, hi };
        }
        // equal-count bins over distinct values
        let n = sorted.len() as f64;
        let mut cum = 0usize;
        let mut bin_start = 0usize;
        for (j, (_, c)) in distinct.iter().enumerate() {
            cum += c;
            let target = ((lo.len() + 1) as f64 * n / MAX_BINS as f64).ceil() as usize;
            let last = j + 1 == distinct.len();
            if cum >= target || last {
                lo.push(distinct[bin_start].0);
                hi.push(distinct[j].0);
                bin_start = j + 1;
            }
        }
        FeatureBins { lo, hi }
    }

    fn n_bins(&self) -> usize {
        self.lo.len()
    }

    fn bin(&self, v: f64) -> u8 {
        if v.is_nan() {
            return MISSING_BIN;
        }
        // first bin whose upper edge is >= v
        let idx = self.hi.partition_point(|h| *h < v);
        idx.min(self.n_bins() - 1) as u8
    }

    fn threshold(&self, b: usize) -> f64 {
        0.5 * (self.hi[b] + self.lo[b + 1])
    }
}

/// Column-major binned copy of the training matrix.
pub struct BinnedMatrix {
    bins: Vec<FeatureBins>,
    codes: Vec<Vec<u8>>,
    n_rows: usize,
}

impl BinnedMatrix {
    /// `columns[j][i]` is feature `j` of row `i`; NaN marks missing.
    pub fn build(columns: &[Vec<f64>]) -> BinnedMatrix {
        let n_rows = columns.first().map_or(0, Vec::len);
        let built: Vec<(FeatureBins, Vec<u8>)> = columns
            .par_iter()
            .map(|col| {
                let b = FeatureBins::build(col);
                let codes = if b.n_bins() == 0 {
                    vec![MISSING_BIN; col.len()]
                } else {
                    col.iter().map(|v| b.bin(*v)).collect()
                };
                (b, codes)
            })
            .collect();
        let (bins, codes) = built.into_iter().unzip();
        BinnedMatrix { bins, codes, n_rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub l2: f64,
    pub min_samples_leaf: usize,
    pub min_hessian: f64,
    /// Multiplies every leaf value.
    pub shrinkage: f64,
}

#[derive(Clone, Copy, Default)]
struct Stat {
    g: f64,
    h: f64,
    n: usize,
}

impl Stat {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }

    fn minus(self, o: Stat) -> Stat {
        Stat {
            g: self.g - o.g,
            h: self.h - o.h,
            n: self.n - o.n,
        }
    }

    fn plus(self, o: Stat) -> Stat {
        Stat {
            g: self.g + o.g,
            h: self.h + o.h,
            n: self.n + o.n,
        }
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
    default_left: bool,
}

fn score(s: Stat, l2: f64) -> f64 {
    s.g * s.g / (s.h + l2)
}

fn best_split_for_feature(
    codes: &[u8],
    n_bins: usize,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    total: Stat,
    p: &TreeParams,
) -> Option<(f64, usize, bool)> {
    if n_bins < 2 {
        return None;
    }
    let mut hist = vec![Stat::default(); n_bins];
    let mut missing = Stat::default();
    for &i in rows {
        let c = codes[i];
        if c == MISSING_BIN {
            missing.add(grad[i], hess[i]);
        } else {
            hist[c as usize].add(grad[i], hess[i]);
        }
    }
    let parent = score(total, p.l2);
    let observed = total.minus(missing);
    let ok = |s: Stat| s.n >= p.min_samples_leaf && s.h >= p.min_hessian;
    let mut best: Option<(f64, usize, bool)> = None;
    let mut cum = Stat::default();
    for (b, bin) in hist.iter().enumerate().take(n_bins - 1) {
        cum = cum.plus(*bin);
        if cum.n == 0 {
            continue;
        }
        let rest = observed.minus(cum);
        if rest.n == 0 {
            break;
        }
        // missing rows to the right, then to the left
        for (left, right, default_left) in [
            (cum, rest.plus(missing), false),
            (cum.plus(missing), rest, true),
        ] {
            if default_left && missing.n == 0 {
                continue;
            }
            if !ok(left) || !ok(right) {
                continue;
            }
            let gain = score(left, p.l2) + score(right, p.l2) - parent;
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, b, default_left));
            }
        }
    }
    best
}

/// Grows one tree on `rows`, minimizing the second-order loss
/// approximation; leaf values are `-shrinkage * G / (H + l2)`.
pub fn grow_tree(data: &BinnedMatrix, rows: &[usize], grad: &[f64], hess: &[f64], p: &TreeParams) -> Node {
    let total = rows.iter().fold(Stat::default(), |mut s, &i| {
        s.add(grad[i], hess[i]);
        s
    });
    grow(data, rows.to_vec(), total, grad, hess, p, 0)
}

fn grow(
    data: &BinnedMatrix,
    rows: Vec<usize>,
    total: Stat,
    grad: &[f64],
    hess: &[f64],
    p: &TreeParams,
    depth: usize,
) -> Node {
    let leaf = Node::Leaf {
        value: -p.shrinkage * total.g / (total.h + p.l2),
        cover: rows.len() as f64,
    };
    if depth >= p.max_depth || rows.len() < 2 * p.min_samples_leaf.max(1) {
        return leaf;
    }
    let best = data
        .codes
        .par_iter()
        .zip(&data.bins)
        .enumerate()
        .map(|(f, (codes, bins))| {
            best_split_for_feature(codes, bins.n_bins(), &rows, grad, hess, total, p).map(|(gain, bin, dl)| {
                Candidate {
                    gain,
                    feature: f,
                    bin,
                    default_left: dl,
                }
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        // first feature wins ties
        .fold(None::<Candidate>, |acc, c| match acc {
            Some(a) if a.gain >= c.gain => Some(a),
            _ => Some(c),
        });
    let Some(best) = best.filter(|c| c.gain > 1e-12) else {
        return leaf;
    };

    let codes = &data.codes[best.feature];
    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    let (mut ls, mut rs) = (Stat::default(), Stat::default());
    for i in rows {
        let c = codes[i];
        let go_left = if c == MISSING_BIN {
            best.default_left
        } else {
            (c as usize) <= best.bin
        };
        if go_left {
            left_rows.push(i);
            ls.add(grad[i], hess[i]);
        } else {
            right_rows.push(i);
            rs.add(grad[i], hess[i]);
        }
    }
    let cover = (left_rows.len() + right_rows.len()) as f64;
    let (left, right) = rayon::join(
        || grow(data, left_rows, ls, grad, hess, p, depth + 1),
        || grow(data, right_rows, rs, grad, hess, p, depth + 1),
    );
    Node::Split {
        feature: best.feature,
        threshold: data.bins[best.feature].threshold(best.bin),
        default_left: best.default_left,
        cover,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            l2: 0.0,
            min_samples_leaf: 1,
            min_hessian: 0.0,
            shrinkage: 1.0,
        }
    }

    #[test]
    fn few_distinct_values_get_one_bin_each() {
        let b = FeatureBins::build(&[3.0, 1.0, 2.0, 1.0, f64::NAN]);
        assert_eq!(b.lo, vec![1.0, 2.0, 3.0]);
        assert_eq!(b.bin(2.0), 1);
        assert_eq!(b.bin(f64::NAN), MISSING_BIN);
        assert_eq!(b.threshold(0), 1.5);
    }

    #[test]
    fn many_values_capped_at_max_bins() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64).sqrt()).collect();
        let b = FeatureBins::build(&v);
        assert!(b.n_bins() <= MAX_BINS && b.n_bins() > 200);
        assert!(b.lo.windows(2).all(|w| w[0] < w[1]));
        // bins are contiguous: every value falls in the bin whose range holds it
        for x in v.iter().step_by(97) {
            let k = b.bin(*x) as usize;
            assert!(b.lo[k] <= *x && *x <= b.hi[k]);
        }
    }

    #[test]
    fn stump_separates_by_sign_of_gradient() {
        // rows with x <= 1 have gradient -1, others +1
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let grad = vec![-1.0, -1.0, 1.0, 1.0];
        let hess = vec![1.0; 4];
        let m = BinnedMatrix::build(&[x]);
        let t = grow_tree(&m, &[0, 1, 2, 3], &grad, &hess, &params(1));
        match &t {
            Node::Split { feature, threshold, left, right, cover, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
                assert_eq!(*cover, 4.0);
                assert_eq!(left.predict(|_| 0.0), 1.0);
                assert_eq!(right.predict(|_| 0.0), -1.0);
            }
            leaf => panic!("{leaf:?}"),
        }
        assert_eq!(t.predict(|_| 0.5), 1.0);
        assert_eq!(t.predict(|_| 2.5), -1.0);
    }

    #[test]
    fn missing_values_follow_learned_direction() {
        let x = vec![0.0, 1.0, f64::NAN, f64::NAN, 2.0, 3.0];
        let grad = vec![-1.0, -1.0, -1.0, -1.0, 1.0, 1.0];
        let hess = vec![1.0; 6];
        let m = BinnedMatrix::build(&[x]);
        let t = grow_tree(&m, &[0, 1, 2, 3, 4, 5], &grad, &hess, &params(1));
        match &t {
            Node::Split { default_left, .. } => assert!(*default_left),
            leaf => panic!("{leaf:?}"),
        }
        assert_eq!(t.predict(|_| f64::NAN), 1.0);
    }

    #[test]
    fn depth_limit_and_pure_node() {
        let x: Vec<f64> = (0..64).map(f64::from).collect();
        let grad: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m = BinnedMatrix::build(&[x]);
        let rows: Vec<usize> = (0..64).collect();
        let t = grow_tree(&m, &rows, &grad, &vec![1.0; 64], &params(3));
        assert!(t.depth() <= 3);
        // constant gradient: nothing to gain
        let t = grow_tree(&m, &rows, &vec![0.5; 64], &vec![1.0; 64], &params(3));
        assert_eq!(t.leaves(), 1);
        assert_eq!(t.cover(), 64.0);
    }
}
