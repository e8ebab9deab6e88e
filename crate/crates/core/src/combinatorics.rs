//! Binomial coefficients and lexicographic ranking of t-subsets.
//!
//! Subsets are sorted slices of 0-based elements; ranks are 0-based positions
//! in the lexicographic order of all `t`-subsets of `0..n`.

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (n - k + i) as u128 / i as u128;
    }
    usize::try_from(acc).expect("binomial coefficient overflows usize")
}

pub fn rank_subset(n: usize, subset: &[usize]) -> usize {
    let t = subset.len();
    let mut rank = 0;
    let mut start = 0;
    for (i, &c) in subset.iter().enumerate() {
        debug_assert!(c < n && c >= start);
        for j in start..c {
            rank += binomial(n - j - 1, t - i - 1);
        }
        start = c + 1;
    }
    rank
}

pub fn unrank_subset(n: usize, t: usize, mut rank: usize) -> Vec<usize> {
    debug_assert!(rank < binomial(n, t));
    let mut out = Vec::with_capacity(t);
    let mut c = 0;
    for i in 0..t {
        loop {
            let block = binomial(n - c - 1, t - i - 1);
            if rank < block {
                out.push(c);
                c += 1;
                break;
            }
            rank -= block;
            c += 1;
        }
    }
    out
}

/// All `t`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, t: usize) -> Subsets {
    Subsets {
        n,
        cur: if t <= n { Some((0..t).collect()) } else { None },
    }
}

pub struct Subsets {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.take()?;
        let t = out.len();
        let mut next = out.clone();
        // rightmost element that can still move
        let mut i = t;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - t + i {
                next[i] += 1;
                for j in i + 1..t {
                    next[j] = next[j - 1] + 1;
                }
                self.cur = Some(next);
                break;
            }
        }
        Some(out)
    }
}
