//! Seeded random test functions: sparse nonnegative bumps and dense Gaussian
//! vectors, supported on a chosen window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::{ExpWindow, GridFn, LatticeGrid};

pub struct ProbeGen {
    rng: ChaCha8Rng,
}

impl ProbeGen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One to three nonnegative bumps of width three, clipped to `window`.
    pub fn sparse_bump(&mut self, grid: LatticeGrid, window: &ExpWindow) -> GridFn {
        let mut f = GridFn::zeros(grid);
        let bumps = self.rng.random_range(1..=3);
        for _ in 0..bumps {
            let center = self.rng.random_range(window.lo..=window.hi);
            let amp: f64 = self.rng.random_range(0.2..1.0);
            for (off, scale) in [(-1, 0.5), (0, 1.0), (1, 0.5)] {
                let n = center + off;
                if window.contains(n) {
                    let k = grid.idx(n);
                    f.values[k] += amp * scale;
                }
            }
        }
        f
    }

    /// Independent standard normal values on `window`.
    pub fn dense(&mut self, grid: LatticeGrid, window: &ExpWindow) -> GridFn {
        let mut f = GridFn::zeros(grid);
        for n in window.iter() {
            let k = grid.idx(n);
            f.values[k] = self.rng.sample(StandardNormal);
        }
        f
    }

    /// `count` probes alternating between bumps and dense vectors.
    pub fn mixed(&mut self, grid: LatticeGrid, window: &ExpWindow, count: usize) -> Vec<GridFn> {
        (0..count)
            .map(|i| {
                if i % 2 == 0 {
                    self.sparse_bump(grid, window)
                } else {
                    self.dense(grid, window)
                }
            })
            .collect()
    }
}
