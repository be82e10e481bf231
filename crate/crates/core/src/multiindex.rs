//! Unordered multi-indices (multisets of coordinate indices).
//!
//! A multi-index `A = (a_1, ..., a_k)` records which partial derivatives are
//! taken; since mixed partials commute it is stored as a count vector.
//! Ordering is graded lexicographic: first by `#A`, then by the sorted index
//! sequence, so `(x) < (y)` and `(x,x) < (x,y) < (y,y)` when `x` is declared
//! before `y`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    // counts[i] = occurrences of coordinate i; trailing zeros trimmed
    counts: Vec<u32>,
    order: u32,
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

impl MultiIndex {
    /// The empty multi-index.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        let mut counts = counts.to_vec();
        while counts.last() == Some(&0) {
            counts.pop();
        }
        let order = counts.iter().sum();
        MultiIndex { counts, order }
    }

    /// Builds from a (possibly unsorted, repeating) list of coordinate indices.
    pub fn from_indices(indices: &[usize]) -> Self {
        indices.iter().fold(Self::empty(), |acc, &a| acc.with(a))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_empty(&self) -> bool {
        self.order == 0
    }

    pub fn count(&self, a: usize) -> u32 {
        self.counts.get(a).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Sorted sequence of indices, each repeated by its count.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
    }

    /// `(A, a)`: append one occurrence of `a`.
    pub fn with(&self, a: usize) -> Self {
        let mut counts = self.counts.clone();
        if counts.len() <= a {
            counts.resize(a + 1, 0);
        }
        counts[a] += 1;
        MultiIndex {
            counts,
            order: self.order + 1,
        }
    }

    /// `B \ a`: delete one occurrence of `a`, or `None` when `a` is absent.
    pub fn delete_one(&self, a: usize) -> Option<Self> {
        if self.count(a) == 0 {
            return None;
        }
        let mut counts = self.counts.clone();
        counts[a] -= 1;
        Some(Self::from_counts(&counts))
    }

    /// Multiset union `(A, B)`.
    pub fn union(&self, other: &MultiIndex) -> Self {
        let n = self.counts.len().max(other.counts.len());
        let counts: Vec<u32> = (0..n).map(|i| self.count(i) + other.count(i)).collect();
        Self::from_counts(&counts)
    }

    pub fn is_submultiset_of(&self, other: &MultiIndex) -> bool {
        self.counts.iter().enumerate().all(|(i, &c)| c <= other.count(i))
    }

    /// `self \ sub` when `sub` is a sub-multiset.
    pub fn difference(&self, sub: &MultiIndex) -> Option<Self> {
        if !sub.is_submultiset_of(self) {
            return None;
        }
        let counts: Vec<u32> = (0..self.counts.len()).map(|i| self.count(i) - sub.count(i)).collect();
        Some(Self::from_counts(&counts))
    }

    /// `A! = i_1! i_2! ... i_m!` over occurrence counts.
    pub fn factorial_weight(&self) -> BigUint {
        self.counts.iter().map(|&c| factorial(c)).product()
    }

    /// `C!/(A! B!)` with `B = C \ A`, or zero when `A` is not contained in `C`.
    pub fn multinomial(c: &MultiIndex, a: &MultiIndex) -> BigUint {
        match c.difference(a) {
            Some(b) => c.factorial_weight() / (a.factorial_weight() * b.factorial_weight()),
            None => BigUint::default(),
        }
    }

    /// Every split `C = (A, B)` with each distinct sub-multiset `A` once, in
    /// ascending order of `A`.
    pub fn sub_multisets(&self) -> Vec<(MultiIndex, MultiIndex)> {
        let mut out = Vec::new();
        let mut current = vec![0u32; self.counts.len()];
        loop {
            let a = MultiIndex::from_counts(&current);
            let b = self.difference(&a).expect("sub-multiset by construction");
            out.push((a, b));
            // odometer over 0..=counts[i]
            let mut i = 0;
            loop {
                if i == current.len() {
                    out.sort();
                    return out;
                }
                if current[i] < self.counts[i] {
                    current[i] += 1;
                    break;
                }
                current[i] = 0;
                i += 1;
            }
        }
    }

    /// All multi-indices over `dim` coordinates with order at most `max`,
    /// ascending.
    pub fn up_to_order(dim: usize, max: u32) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::empty()];
        let mut frontier = vec![MultiIndex::empty()];
        for _ in 0..max {
            let mut next = Vec::new();
            for m in &frontier {
                // extend only with indices >= the largest present: each multiset once
                let start = m.indices().last().unwrap_or(0);
                for a in start..dim {
                    next.push(m.with(a));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out.sort();
        out
    }

    /// Concatenated names, e.g. `XXY`.
    pub fn render(&self, names: &[String]) -> String {
        self.indices().map(|i| names[i].as_str()).collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.indices().cmp(other.indices()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.indices()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::from_indices(v)
    }

    fn big(n: u32) -> BigUint {
        BigUint::from(n)
    }

    const X: usize = 0;
    const Y: usize = 1;

    #[test]
    fn factorial_weights() {
        assert_eq!(mi(&[]).factorial_weight(), big(1));
        assert_eq!(mi(&[X, X, Y]).factorial_weight(), big(2));
        assert_eq!(mi(&[X, X, X]).factorial_weight(), big(6));
    }

    #[test]
    fn multinomials() {
        assert_eq!(MultiIndex::multinomial(&mi(&[X, X]), &mi(&[X])), big(2));
        assert_eq!(MultiIndex::multinomial(&mi(&[X, Y, Y]), &mi(&[])), big(1));
        assert_eq!(MultiIndex::multinomial(&mi(&[X, Y]), &mi(&[Y, Y])), big(0));
    }

    #[test]
    fn splits() {
        assert_eq!(mi(&[]).sub_multisets(), vec![(mi(&[]), mi(&[]))]);
        assert_eq!(mi(&[X]).sub_multisets(), vec![(mi(&[]), mi(&[X])), (mi(&[X]), mi(&[]))]);
        assert_eq!(
            mi(&[X, X]).sub_multisets(),
            vec![(mi(&[]), mi(&[X, X])), (mi(&[X]), mi(&[X])), (mi(&[X, X]), mi(&[]))]
        );
    }

    #[test]
    fn splits_match_brute_force_selection() {
        // every subset of positions, deduplicated as multisets
        let c = [X, X, Y, X, Y];
        let mut seen = std::collections::BTreeSet::new();
        for mask in 0u32..(1 << c.len()) {
            let picked: Vec<usize> = (0..c.len()).filter(|i| mask & (1 << i) != 0).map(|i| c[i]).collect();
            seen.insert(mi(&picked));
        }
        let ours: Vec<MultiIndex> = mi(&c).sub_multisets().into_iter().map(|(a, _)| a).collect();
        assert_eq!(ours, seen.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn deletion() {
        assert_eq!(mi(&[X, X, Y]).delete_one(X), Some(mi(&[X, Y])));
        assert_eq!(mi(&[Y]).delete_one(X), None);
        assert_eq!(mi(&[]).delete_one(X), None);
    }

    #[test]
    fn ordering_is_graded_lex() {
        let z = 2;
        let mut v = vec![
            mi(&[Y, Y]),
            mi(&[X]),
            mi(&[]),
            mi(&[X, Y]),
            mi(&[Y]),
            mi(&[X, X]),
            mi(&[z]),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                mi(&[]),
                mi(&[X]),
                mi(&[Y]),
                mi(&[z]),
                mi(&[X, X]),
                mi(&[X, Y]),
                mi(&[Y, Y])
            ]
        );
    }

    #[test]
    fn enumeration_counts() {
        // C(d + n, n) multisets of size <= n over d symbols
        assert_eq!(MultiIndex::up_to_order(3, 2).len(), 10);
        assert_eq!(MultiIndex::up_to_order(2, 4).len(), 15);
        assert_eq!(MultiIndex::up_to_order(1, 5).len(), 6);
    }

    #[test]
    fn render_uses_names() {
        let names: Vec<String> = ["X", "Y"].iter().map(|s| s.to_string()).collect();
        assert_eq!(mi(&[Y, X, X]).render(&names), "XXY");
    }

    fn arb_multiindex() -> impl Strategy<Value = MultiIndex> {
        prop::collection::vec(0usize..3, 0..6).prop_map(|v| MultiIndex::from_indices(&v))
    }

    proptest! {
        #[test]
        fn vandermonde(c in arb_multiindex()) {
            let total: BigUint = c.sub_multisets().iter().map(|(a, _)| MultiIndex::multinomial(&c, a)).sum();
            prop_assert_eq!(total, BigUint::from(2u32).pow(c.order()));
        }

        #[test]
        fn multinomial_symmetry_and_reassembly(c in arb_multiindex()) {
            for (a, b) in c.sub_multisets() {
                prop_assert_eq!(MultiIndex::multinomial(&c, &a), MultiIndex::multinomial(&c, &b));
                prop_assert_eq!(a.union(&b), c.clone());
            }
        }

        #[test]
        fn insertion_order_irrelevant(v in prop::collection::vec(0usize..4, 0..7)) {
            let mut r = v.clone();
            r.reverse();
            prop_assert_eq!(MultiIndex::from_indices(&v), MultiIndex::from_indices(&r));
        }
    }
}
