use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::solutions::kernel_values;

const OVERSAMPLING: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub space: Space,
    pub count: usize,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    /// Minimum `|y1 - a|` on Grushin planes.
    pub min_frame_offset: f64,
    /// Minimum `sum x_i^2` over the horizontal coordinates of `H^n`.
    pub min_horizontal_radius2: f64,
    /// Excluded band around `arg(g) = ±π`, in radians.
    pub branch_margin: f64,
}

impl GridSpec {
    pub fn new(space: Space) -> Self {
        GridSpec {
            space,
            count: 64,
            seed: 42,
            r_min: 0.5,
            r_max: 2.0,
            min_frame_offset: 0.1,
            min_horizontal_radius2: 0.01,
            branch_margin: 0.1,
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("grid: {msg}")));
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return bad("r_min must be positive");
        }
        if !(self.r_max >= self.r_min && self.r_max.is_finite()) {
            return bad("r_max must be finite and at least r_min");
        }
        for m in [self.min_frame_offset, self.min_horizontal_radius2, self.branch_margin] {
            if !(m > 0.0 && m.is_finite()) {
                return bad("exclusion margins must be positive");
            }
        }
        if self.count == 0 {
            return bad("count must be positive");
        }
        Ok(())
    }

    /// Whether `point` clears every exclusion margin.
    pub fn admits(&self, point: &[f64]) -> bool {
        match self.space {
            Space::Grushin { a, .. } => {
                if (point[0] - a).abs() < self.min_frame_offset {
                    return false;
                }
                match kernel_values(&self.space, point) {
                    Ok((g, _)) => g.arg().abs() <= std::f64::consts::PI - self.branch_margin,
                    Err(_) => false,
                }
            }
            Space::Heisenberg { n } => {
                point[..2 * n].iter().map(|x| x * x).sum::<f64>() >= self.min_horizontal_radius2
            }
        }
    }
}

fn sample(space: &Space, rng: &mut ChaCha8Rng, r_min: f64, r_max: f64) -> Vec<f64> {
    let r = (r_min.ln() + rng.random::<f64>() * (r_max.ln() - r_min.ln())).exp();
    match *space {
        Space::Grushin { a, b, .. } => {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            vec![a + r * theta.cos(), b + r * theta.sin()]
        }
        Space::Heisenberg { .. } => {
            let d = space.dim();
            loop {
                let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len > 1e-12 {
                    return dir.into_iter().map(|x| r * x / len).collect();
                }
            }
        }
    }
}

/// Seeded sample of `spec.count` points off the singular sets.
pub fn generate_grid(spec: &GridSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let budget = spec.count.saturating_mul(OVERSAMPLING);
    let mut points = Vec::with_capacity(spec.count);
    for _ in 0..budget {
        let pt = sample(&spec.space, &mut rng, spec.r_min, spec.r_max);
        if spec.admits(&pt) {
            points.push(pt);
            if points.len() == spec.count {
                return Ok(points);
            }
        }
    }
    Err(Error::GridExhausted {
        requested: spec.count,
        found: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> Space {
        Space::grushin(1, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn deterministic() {
        let spec = GridSpec::new(g1());
        assert_eq!(generate_grid(&spec).unwrap(), generate_grid(&spec).unwrap());
        let other = generate_grid(&spec.clone().with_seed(43)).unwrap();
        assert_ne!(generate_grid(&spec).unwrap(), other);
    }

    #[test]
    fn default_specs_fill() {
        for space in [g1(), Space::grushin(2, 0.5, -0.25, -1.5).unwrap(), Space::heisenberg(1).unwrap(), Space::heisenberg(2).unwrap()] {
            let pts = generate_grid(&GridSpec::new(space)).unwrap();
            assert_eq!(pts.len(), 64);
            for p in &pts {
                assert_eq!(p.len(), space.dim());
            }
        }
    }

    #[test]
    fn filters_hold() {
        let spec = GridSpec::new(Space::grushin(1, 0.3, 0.0, -1.0).unwrap()).with_count(200);
        for p in generate_grid(&spec).unwrap() {
            assert!((p[0] - 0.3).abs() >= 0.1);
            let (g, _) = kernel_values(&spec.space, &p).unwrap();
            assert!(g.arg().abs() <= std::f64::consts::PI - 0.1);
            let r = ((p[0] - 0.3).powi(2) + p[1].powi(2)).sqrt();
            assert!((0.5..=2.0).contains(&r));
        }
        let spec = GridSpec::new(Space::heisenberg(1).unwrap()).with_count(200);
        for p in generate_grid(&spec).unwrap() {
            assert!(p[0] * p[0] + p[1] * p[1] >= 0.01);
        }
    }

    #[test]
    fn impossible_margins_exhaust() {
        let mut spec = GridSpec::new(g1());
        spec.min_frame_offset = 10.0;
        assert!(matches!(generate_grid(&spec), Err(Error::GridExhausted { found: 0, .. })));
        spec.r_min = 0.0;
        assert!(matches!(generate_grid(&spec), Err(Error::InvalidParameter(_))));
    }
}
