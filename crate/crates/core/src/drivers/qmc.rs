use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton points in `[0, 1)^dim` with a seeded Cranley–Patterson rotation.
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sampler supports up to {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self { shift, index: 1 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| {
                let u = radical_inverse(i, PRIMES[d]) + s;
                u - u.floor()
            })
            .collect()
    }
}
