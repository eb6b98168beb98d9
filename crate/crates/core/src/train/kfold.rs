use crate::{Error, Result, Rng};

const KFOLD_STREAM: u64 = 0x6b66;

/// Seeded shuffle followed by a contiguous partition into `k` folds; the
/// first `n % k` folds get one extra index. Returns `(train, val)` index
/// lists, each sorted ascending.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("need 2 <= k <= n for k-fold, got k={k}, n={n}")));
    }
    let perm = Rng::with_stream(seed, KFOLD_STREAM).permutation(n);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut val = perm[at..at + size].to_vec();
        val.sort_unstable();
        let mut in_val = vec![false; n];
        val.iter().for_each(|&i| in_val[i] = true);
        let train = (0..n).filter(|&i| !in_val[i]).collect();
        folds.push((train, val));
        at += size;
    }
    Ok(folds)
}
