//! Seeded Gaussian matrices that any implementation can reproduce bit for bit.
//!
//! * State: xoshiro256** whose four state words are the first four outputs of
//!   splitmix64 started at `seed`.
//! * Uniform: `u = (next_u64() >> 11) · 2⁻⁵³`, in `[0, 1)`.
//! * Normal pairs (Box-Muller): draw `u₁` then `u₂`, set
//!   `r = √(−2 ln(1 − u₁))`, `θ = 2π u₂`, emit `r cos θ` then `r sin θ`.
//! * Matrices are filled row-major; an unused second value of the last pair
//!   is discarded.
//!
//! `ln`, `cos` and `sin` come from the platform libm, so bit-exactness across
//! platforms holds to the extent that those are correctly rounded.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::engine::DenseMatrix;

pub struct GaussianSource {
    rng: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256StarStar::seed_from_u64(seed), spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        self.spare = None;
        DenseMatrix::new(rows, cols, data).expect("Box-Muller values are finite")
    }
}

/// `rows × cols` matrix of independent standard normals.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    GaussianSource::new(seed).matrix(rows, cols)
}
