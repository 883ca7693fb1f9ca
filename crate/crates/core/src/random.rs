//! Seeded random operators for property checks.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::{c, matrix_exp, DensityMatrix, HilbertSpace, Operator, I};

/// Deterministic generator; every randomized check in the crate is seeded.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1: f64 = 1.0 - self.0.gen::<f64>();
        let u2: f64 = self.0.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()) / 2f64.sqrt()
    }
}

pub fn random_operator(space: &HilbertSpace, rng: &mut Rng) -> Operator {
    Operator::from_fn(space, |_, _| rng.complex_normal())
}

pub fn random_hermitian(space: &HilbertSpace, rng: &mut Rng) -> Operator {
    let a = random_operator(space, rng);
    (&a + &a.adjoint()).scale(c(0.5))
}

pub fn random_unitary(space: &HilbertSpace, rng: &mut Rng) -> Operator {
    let h = random_hermitian(space, rng);
    matrix_exp(&h, I * 2.0)
}

/// `G G^dag / Tr[G G^dag]` for a Ginibre matrix `G`: full rank, positive.
pub fn random_density(space: &HilbertSpace, rng: &mut Rng) -> DensityMatrix {
    let g = random_operator(space, rng);
    let p = &g * &g.adjoint();
    let tr = p.trace().re;
    let p = p.scale(c(1.0 / tr));
    let sym = (&p + &p.adjoint()).scale(c(0.5));
    DensityMatrix::new(sym).expect("Ginibre construction is a valid state")
}
