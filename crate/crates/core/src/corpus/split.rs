use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Instance, TemporalCorpus};
use crate::error::{Error, Result};

/// Seeded shuffle of the `eval_year` partition; the first
/// `floor(dev_fraction * n)` instances go to dev, the rest to test.
pub fn split_eval(
    corpus: &TemporalCorpus,
    eval_year: i32,
    dev_fraction: f64,
    seed: u64,
) -> Result<(Vec<Instance>, Vec<Instance>)> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::Config(format!("dev_fraction must lie in (0, 1), got {dev_fraction}")));
    }
    let part = corpus
        .partition(eval_year)
        .ok_or_else(|| Error::Data(format!("corpus has no instances for year {eval_year}")))?;
    let mut shuffled = part.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (dev_fraction * shuffled.len() as f64).floor() as usize;
    let test = shuffled.split_off(n_dev);
    Ok((shuffled, test))
}
