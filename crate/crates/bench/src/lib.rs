//! Seeded fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xscale::grid::ascii::to_ascii_string;
use xscale::{binarize, BinaryGrid, CountGrid, GridHeader};

/// Count grid with `density` of cells holding 1..=9.
pub fn count_grid(side: usize, density: f64, seed: u64) -> CountGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..side * side)
        .map(|_| {
            if rng.gen_bool(density) {
                f64::from(rng.gen_range(1u8..=9))
            } else {
                0.0
            }
        })
        .collect();
    CountGrid::from_values(GridHeader::new(side, side, 0.0, 0.0, 250.0), values).expect("valid lattice")
}

/// Binarized test/reference pair with independent presence.
pub fn binary_pair(side: usize, density: f64, seed: u64) -> (BinaryGrid, BinaryGrid) {
    let t = binarize(&count_grid(side, density, seed), 1.0).expect("threshold 1");
    let r = binarize(&count_grid(side, density, seed + 1), 1.0).expect("threshold 1");
    (t, r)
}

pub fn ascii_text(side: usize, seed: u64) -> String {
    to_ascii_string(&count_grid(side, 0.2, seed))
}
