//! Enumeration order for role-set search: smaller sets first, then
//! lexicographic by node name.

/// All subsets of `pool` (sorted) with at most `max` elements, smallest first
/// and lexicographic within a size.
pub(crate) fn subsets(pool: &[String], max: usize) -> Vec<Vec<String>> {
    let mut pool = pool.to_vec();
    pool.sort();
    pool.dedup();
    let mut out = vec![vec![]];
    for k in 1..=max.min(pool.len()) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| pool[i].clone()).collect());
            let mut i = k;
            while i > 0 && idx[i - 1] == pool.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Every way to give each of `n` items one of `labels` labels, in
/// lexicographic order of the label vector.
pub(crate) fn labellings(n: usize, labels: usize) -> Vec<Vec<usize>> {
    if labels == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let cards = vec![labels; n];
    crate::model::Assignments::new(&cards).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_order() {
        let pool: Vec<String> = ["C", "A", "B"].iter().map(|s| s.to_string()).collect();
        let got: Vec<String> = subsets(&pool, 2).iter().map(|s| s.concat()).collect();
        assert_eq!(got, ["", "A", "B", "C", "AB", "AC", "BC"]);
        assert_eq!(subsets(&pool, 5).len(), 8);
        assert_eq!(subsets(&[], 3), vec![Vec::<String>::new()]);
    }

    #[test]
    fn labelling_order() {
        assert_eq!(labellings(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(labellings(0, 3), vec![Vec::<usize>::new()]);
    }
}
