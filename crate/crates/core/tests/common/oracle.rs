//! Brute-force edit distance: minimum over every alignment path, no memo.

pub fn brute_force_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let diag = brute_force_distance(ra, rb) + usize::from(x != y);
            let del = brute_force_distance(ra, b) + 1;
            let ins = brute_force_distance(a, rb) + 1;
            diag.min(del).min(ins)
        }
    }
}

/// Every sequence over `alphabet` of exactly `len` symbols.
pub fn sequences(alphabet: &[u8], len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                alphabet.iter().map(move |&c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

/// All (reference, hypothesis) pairs with combined length at most `max_total`.
pub fn pairs_up_to(alphabet: &[u8], max_total: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let by_len: Vec<Vec<Vec<u8>>> = (0..=max_total).map(|l| sequences(alphabet, l)).collect();
    let mut out = Vec::new();
    for i in 0..=max_total {
        for j in 0..=max_total - i {
            for a in &by_len[i] {
                for b in &by_len[j] {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
    }
    out
}
