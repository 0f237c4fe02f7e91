//! Synthetic 2D point-cloud pairs.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

pub const MOON_RADIUS: f64 = 1.0;
pub const MOON_NOISE: f64 = 0.08;
pub const GAUSSIAN_RING_RADIUS: f64 = 4.0;
pub const GAUSSIAN_COMPONENT_STD: f64 = 0.3;
pub const GAUSSIAN_COMPONENTS: usize = 8;
pub const INNER_RING_RADIUS: f64 = 1.0;
pub const OUTER_RING_RADIUS: f64 = 2.0;
pub const RING_NOISE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    HalfMoons,
    EightGaussians,
    TwoRings,
}

impl Dataset {
    pub const ALL: [Dataset; 3] = [
        Dataset::HalfMoons,
        Dataset::EightGaussians,
        Dataset::TwoRings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::HalfMoons => "half_moons",
            Dataset::EightGaussians => "eight_gaussians",
            Dataset::TwoRings => "two_rings",
        }
    }

    /// Default noise level (standard deviation) of the generator.
    pub fn default_noise(self) -> f64 {
        match self {
            Dataset::HalfMoons => MOON_NOISE,
            Dataset::EightGaussians => GAUSSIAN_COMPONENT_STD,
            Dataset::TwoRings => RING_NOISE,
        }
    }

    /// Generator parameters, one `key=value` per entry.
    pub fn parameters(self) -> String {
        match self {
            Dataset::HalfMoons => format!("radius={MOON_RADIUS} noise_std={MOON_NOISE}"),
            Dataset::EightGaussians => format!(
                "components={GAUSSIAN_COMPONENTS} circle_radius={GAUSSIAN_RING_RADIUS} component_std={GAUSSIAN_COMPONENT_STD}"
            ),
            Dataset::TwoRings => format!(
                "inner_radius={INNER_RING_RADIUS} outer_radius={OUTER_RING_RADIUS} radial_std={RING_NOISE}"
            ),
        }
    }
}

impl std::str::FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown dataset {s:?}")))
    }
}

impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Source and target clouds of `n` uniformly weighted points each.
pub fn generate(
    dataset: Dataset,
    n: usize,
    seed: u64,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    generate_with_noise(dataset, n, seed, dataset.default_noise())
}

pub fn generate_with_noise(
    dataset: Dataset,
    n: usize,
    seed: u64,
    noise: f64,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if n < 2 {
        return Err(Error::InvalidInput("datasets need n >= 2".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidInput("noise must be finite and >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut cloud = |f: &dyn Fn(usize, &mut ChaCha8Rng) -> [f64; 2]| {
        let mut a = Array2::zeros((n, 2));
        for i in 0..n {
            let p = f(i, &mut rng);
            a[[i, 0]] = p[0];
            a[[i, 1]] = p[1];
        }
        a
    };
    let (source, target) = match dataset {
        Dataset::HalfMoons => {
            // Upper moon for the source, the shifted lower moon for the target.
            let t = |i: usize| PI * i as f64 / (n - 1) as f64;
            let s = cloud(&|i, r| {
                let t = t(i);
                [
                    MOON_RADIUS * t.cos() + normal.sample(r),
                    MOON_RADIUS * t.sin() + normal.sample(r),
                ]
            });
            let g = cloud(&|i, r| {
                let t = t(i);
                [
                    MOON_RADIUS * (1.0 - t.cos()) + normal.sample(r),
                    MOON_RADIUS * (0.5 - t.sin()) + normal.sample(r),
                ]
            });
            (s, g)
        }
        Dataset::EightGaussians => {
            let draw = |_: usize, r: &mut ChaCha8Rng| {
                let k = r.random_range(0..GAUSSIAN_COMPONENTS);
                let angle = 2.0 * PI * k as f64 / GAUSSIAN_COMPONENTS as f64;
                [
                    GAUSSIAN_RING_RADIUS * angle.cos() + normal.sample(r),
                    GAUSSIAN_RING_RADIUS * angle.sin() + normal.sample(r),
                ]
            };
            (cloud(&draw), cloud(&draw))
        }
        Dataset::TwoRings => {
            let ring = |radius: f64| {
                move |_: usize, r: &mut ChaCha8Rng| {
                    let angle = r.random_range(0.0..2.0 * PI);
                    let rad = radius + normal.sample(r);
                    [rad * angle.cos(), rad * angle.sin()]
                }
            };
            (
                cloud(&ring(INNER_RING_RADIUS)),
                cloud(&ring(OUTER_RING_RADIUS)),
            )
        }
    };
    Ok((
        DiscreteMeasure::uniform(source)?,
        DiscreteMeasure::uniform(target)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn shapes_and_weights() {
        for d in Dataset::ALL {
            let (s, t) = generate(d, 240, 3).unwrap();
            assert_eq!((s.len(), s.dim(), t.len()), (240, 2, 240));
            assert!(s.weights().iter().all(|&w| (w - 1.0 / 240.0).abs() < 1e-15));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for d in Dataset::ALL {
            assert_eq!(generate(d, 50, 9).unwrap(), generate(d, 50, 9).unwrap());
            assert_ne!(generate(d, 50, 9).unwrap(), generate(d, 50, 10).unwrap());
        }
    }

    #[test]
    fn noiseless_gaussians_have_eight_atoms() {
        let (s, t) = generate_with_noise(Dataset::EightGaussians, 400, 1, 0.0).unwrap();
        for m in [s, t] {
            let distinct: HashSet<[u64; 2]> = m
                .atoms()
                .rows()
                .into_iter()
                .map(|r| [r[0].to_bits(), r[1].to_bits()])
                .collect();
            assert_eq!(distinct.len(), 8);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(generate(Dataset::TwoRings, 1, 0).is_err());
        assert!("spirals".parse::<Dataset>().is_err());
        assert_eq!("two_rings".parse::<Dataset>().unwrap(), Dataset::TwoRings);
    }
}
