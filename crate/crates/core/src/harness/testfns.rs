//! Random complex polynomials of low degree, evaluated exactly on jets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::jet::{seed_point, CJet2, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<Monomial>,
}

fn exponent_vectors(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|head: Vec<u32>| {
                let used: u32 = head.iter().sum();
                (0..=max_degree - used).map(move |e| {
                    let mut v = head.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    out
}

impl Polynomial {
    /// Every monomial of total degree at most `max_degree` with a standard
    /// complex Gaussian coefficient.
    pub fn random(rng: &mut impl Rng, dim: usize, max_degree: u32) -> Self {
        let terms = exponent_vectors(dim, max_degree)
            .into_iter()
            .map(|powers| Monomial {
                coeff: C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
                powers,
            })
            .collect();
        Polynomial { dim, terms }
    }

    pub fn eval_jets(&self, vars: &[CJet2]) -> CJet2 {
        let mut acc = CJet2::constant(self.dim, C64::new(0.0, 0.0));
        for t in &self.terms {
            let mut m = CJet2::constant(self.dim, t.coeff);
            for (v, &e) in vars.iter().zip(&t.powers) {
                if e > 0 {
                    m = &m * &v.powi(e);
                }
            }
            acc = &acc + &m;
        }
        acc
    }

    pub fn eval(&self, point: &[f64]) -> Result<CJet2> {
        Ok(self.eval_jets(&seed_point(point)?))
    }

    pub fn value(&self, point: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .zip(point)
                        .map(|(&e, x)| x.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }
}

/// A seeded stream of random cubic polynomials and evaluation points.
pub struct TestFunctions {
    rng: ChaCha8Rng,
    dim: usize,
}

impl TestFunctions {
    pub fn new(seed: u64, dim: usize) -> Self {
        TestFunctions {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
        }
    }

    pub fn next_poly(&mut self) -> Polynomial {
        Polynomial::random(&mut self.rng, self.dim, 3)
    }

    /// Point with coordinates uniform in `[-1.5, 1.5]`.
    pub fn next_point(&mut self) -> Vec<f64> {
        (0..self.dim).map(|_| self.rng.random_range(-1.5..1.5)).collect()
    }
}
