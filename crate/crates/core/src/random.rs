//! Seeded Haar-like random unitaries.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::operator::{Operator, Unitary, C64};

/// Deterministic generator used everywhere a seed is accepted.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Orthonormalizes the columns of a complex Gaussian matrix (twice-iterated
/// modified Gram–Schmidt), then fixes column phases.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Unitary> {
    let mut m = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = m.column(k).dotc(&m.column(j));
                let ck = m.column(k).clone_owned();
                m.column_mut(j).axpy(-proj, &ck, C64::new(1.0, 0.0));
            }
        }
        let n = m.column(j).norm();
        m.column_mut(j).unscale_mut(n);
    }
    Unitary::new(Operator::new(m)?)
}

pub fn random_unitary_seeded(dim: usize, seed: u64) -> Result<Unitary> {
    random_unitary(dim, &mut rng_from_seed(seed))
}
