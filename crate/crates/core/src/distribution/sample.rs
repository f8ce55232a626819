use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DistributionTable;

/// Inverse-transform sampling: `u ~ U[0, 1)`, then the smallest `y` with
/// `cdf(y) >= u`. The stream is a pure function of `seed`.
pub(super) fn inverse_transform(table: &DistributionTable, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| table.quantile_unchecked(rng.random::<f64>())).collect()
}
