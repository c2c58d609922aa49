use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed plus stream position of the battle's ChaCha8 generator.
///
/// Kept in the state rather than as a live generator so states stay plain values
/// that serialize, hash and compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngCursor {
    pub seed: u64,
    pub word_pos: u64,
}

impl RngCursor {
    pub fn new(seed: u64) -> Self {
        RngCursor { seed, word_pos: 0 }
    }

    pub fn open(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(self.word_pos));
        rng
    }

    pub fn save(&mut self, rng: &ChaCha8Rng) {
        self.word_pos = rng.get_word_pos() as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn reopening_continues_the_stream() {
        let mut cursor = RngCursor::new(11);
        let mut rng = cursor.open();
        let first: Vec<u32> = (0..5).map(|_| rng.gen()).collect();
        cursor.save(&rng);
        let tail: Vec<u32> = (0..5).map(|_| rng.gen()).collect();

        let mut reopened = cursor.open();
        let again: Vec<u32> = (0..5).map(|_| reopened.gen()).collect();
        assert_eq!(tail, again);

        let mut from_start = RngCursor::new(11).open();
        let replay: Vec<u32> = (0..5).map(|_| from_start.gen()).collect();
        assert_eq!(first, replay);
    }
}
