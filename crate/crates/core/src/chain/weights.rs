//! Growable Fenwick tree over nonnegative slot weights with O(log n) update
//! and inverse-CDF sampling.

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

#[derive(Debug, Clone, Default)]
pub struct WeightIndex {
    /// 1-based Fenwick array; `tree[0]` is unused.
    tree: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl WeightIndex {
    pub fn new() -> Self {
        WeightIndex {
            tree: vec![0.0],
            weights: Vec::new(),
            total: 0.0,
        }
    }

    pub fn with_capacity(cap: usize) -> Self {
        let mut tree = Vec::with_capacity(cap + 1);
        tree.push(0.0);
        WeightIndex {
            tree,
            weights: Vec::with_capacity(cap),
            total: 0.0,
        }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut idx = WeightIndex::with_capacity(weights.len());
        for &w in weights {
            idx.push(w);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cached running total.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, slot: usize) -> f64 {
        self.weights[slot]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of slots `0..end`.
    pub fn prefix_sum(&self, end: usize) -> f64 {
        let mut i = end;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lsb(i);
        }
        s
    }

    /// Appends a slot and returns its index.
    pub fn push(&mut self, w: f64) -> usize {
        debug_assert!(w >= 0.0);
        let slot = self.weights.len();
        let i = slot + 1;
        // Node i covers (i - lsb(i), i]: add the nodes tiling (i - lsb(i), i - 1].
        let stop = i - lsb(i);
        let mut node = w;
        let mut j = i - 1;
        while j > stop {
            node += self.tree[j];
            j -= lsb(j);
        }
        self.tree.push(node);
        self.weights.push(w);
        self.total += w;
        slot
    }

    pub fn add(&mut self, slot: usize, delta: f64) {
        self.weights[slot] += delta;
        debug_assert!(self.weights[slot] >= -1e-12);
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lsb(i);
        }
        self.total += delta;
    }

    /// Recomputes the Fenwick nodes and the total from the slot weights,
    /// discarding accumulated rounding. Returns the fresh total.
    pub fn rebuild(&mut self) -> f64 {
        let n = self.weights.len();
        self.tree.truncate(1);
        self.tree.extend_from_slice(&self.weights);
        for i in 1..=n {
            let j = i + lsb(i);
            if j <= n {
                let v = self.tree[i];
                self.tree[j] += v;
            }
        }
        self.total = self.weights.iter().sum();
        self.total
    }

    /// First slot whose cumulative weight exceeds `u`, for `u` in `[0, total)`.
    /// Exact boundary hits go to the later slot; zero-weight slots are never
    /// returned.
    pub fn sample(&self, u: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut rem = u;
        let mut step = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        // `pos` slots have cumulative weight <= u, so slot `pos` is the answer.
        let mut slot = pos.min(n - 1);
        if self.weights[slot] > 0.0 {
            return slot;
        }
        // Rounding landed on an empty slot; move to the nearest positive one.
        while slot + 1 < n && self.weights[slot] == 0.0 {
            slot += 1;
        }
        while slot > 0 && self.weights[slot] == 0.0 {
            slot -= 1;
        }
        slot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_goes_to_later_item() {
        let idx = WeightIndex::from_weights(&[1.0, 0.0, 2.0, 1.0]);
        assert_eq!(idx.sample(0.0), 0);
        assert_eq!(idx.sample(0.999), 0);
        assert_eq!(idx.sample(1.0), 2);
        assert_eq!(idx.sample(2.999), 2);
        assert_eq!(idx.sample(3.0), 3);
        assert_eq!(idx.sample(3.999), 3);
    }

    #[test]
    fn rebuild_restores_prefix_sums() {
        let mut idx = WeightIndex::from_weights(&[0.5; 37]);
        idx.add(5, 0.25);
        let before: Vec<f64> = (0..=37).map(|i| idx.prefix_sum(i)).collect();
        idx.rebuild();
        let after: Vec<f64> = (0..=37).map(|i| idx.prefix_sum(i)).collect();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((idx.total() - 18.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn prefix_sums_match_naive(ws in prop::collection::vec(0.0f64..5.0, 1..80),
                                   updates in prop::collection::vec((0usize..80, 0.0f64..3.0), 0..40)) {
            let mut idx = WeightIndex::new();
            let mut naive = Vec::new();
            for &w in &ws {
                idx.push(w);
                naive.push(w);
            }
            for &(s, d) in &updates {
                let s = s % naive.len();
                idx.add(s, d);
                naive[s] += d;
            }
            for end in 0..=naive.len() {
                let expect: f64 = naive[..end].iter().sum();
                prop_assert!((idx.prefix_sum(end) - expect).abs() < 1e-9);
            }
        }

        #[test]
        fn sample_is_inverse_cdf(ws in prop::collection::vec(0.0f64..5.0, 1..60), frac in 0.0f64..1.0) {
            prop_assume!(ws.iter().any(|&w| w > 0.0));
            let idx = WeightIndex::from_weights(&ws);
            let u = frac * idx.total();
            let slot = idx.sample(u);
            prop_assert!(ws[slot] > 0.0);
            let before: f64 = ws[..slot].iter().sum();
            prop_assert!(before <= u + 1e-9 && u < before + ws[slot] + 1e-9);
        }
    }
}
