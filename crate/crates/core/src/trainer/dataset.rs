//! Synthetic 2D Gaussian-mixture targets and the desk-scale diversity
//! metrics computed against their mode centers.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::EmpiricalDistribution;
use crate::seeding::{self, streams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// 8 Gaussian modes equally spaced on a circle of radius `scale`.
    Ring8,
    /// 5×5 grid of Gaussian modes with spacing `scale`, centered at the
    /// origin.
    Grid25,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub scale: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::InvalidConfig("dataset scale must be > 0".into()));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Mode centers in a fixed order (angular for the ring, row-major for
    /// the grid).
    pub fn centers(&self) -> Vec<[f64; 2]> {
        match self.kind {
            DatasetKind::Ring8 => (0..8)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                    [self.scale * theta.cos(), self.scale * theta.sin()]
                })
                .collect(),
            DatasetKind::Grid25 => {
                let mut centers = Vec::with_capacity(25);
                for i in 0..5 {
                    for j in 0..5 {
                        centers.push([
                            (i as f64 - 2.0) * self.scale,
                            (j as f64 - 2.0) * self.scale,
                        ]);
                    }
                }
                centers
            }
        }
    }
}

/// Draw `count` points as a count×2 matrix: uniform mode assignment, then
/// isotropic Gaussian noise. Advances the supplied rng so callers control
/// the stream.
pub(crate) fn mixture_matrix(
    centers: &[[f64; 2]],
    noise_std: f64,
    count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Matrix {
    let mut data = Vec::with_capacity(count * 2);
    for _ in 0..count {
        let c = centers[rng.gen_range(0..centers.len())];
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        data.push(c[0] + noise_std * nx);
        data.push(c[1] + noise_std * ny);
    }
    Matrix {
        rows: count,
        cols: 2,
        data,
    }
}

pub(crate) fn sample_mixture(
    centers: &[[f64; 2]],
    noise_std: f64,
    count: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> EmpiricalDistribution {
    let m = mixture_matrix(centers, noise_std, count, rng);
    EmpiricalDistribution::from_flat(m.data, vec![1.0 / count as f64; count], 2)
}

/// Seeded dataset draw on the spec's own seed (synthesis stream).
pub fn sample_dataset(spec: &DatasetSpec, count: usize) -> Result<EmpiricalDistribution> {
    spec.validate()?;
    if count < 1 {
        return Err(Error::InvalidConfig("sample count must be >= 1".into()));
    }
    let mut rng = seeding::stream(spec.seed, streams::SYNTH);
    Ok(sample_mixture(&spec.centers(), spec.noise_std, count, &mut rng))
}

/// Desk-scale diversity metrics: how many centers received at least one
/// sample within `radius`, and the fraction of samples within `radius` of
/// any center (the high-quality fraction).
pub fn mode_coverage(
    fake: &EmpiricalDistribution,
    centers: &[[f64; 2]],
    radius: f64,
) -> (usize, f64) {
    assert!(radius > 0.0, "mode_coverage radius must be > 0");
    assert_eq!(fake.dim(), 2, "mode_coverage expects 2D samples");
    let r2 = radius * radius;
    let mut covered = vec![false; centers.len()];
    let mut hq = 0usize;
    for i in 0..fake.len() {
        let pt = fake.point(i);
        let mut near_any = false;
        for (c, flag) in centers.iter().zip(covered.iter_mut()) {
            let dx = pt[0] - c[0];
            let dy = pt[1] - c[1];
            if dx * dx + dy * dy <= r2 {
                *flag = true;
                near_any = true;
            }
        }
        if near_any {
            hq += 1;
        }
    }
    let count = covered.iter().filter(|&&b| b).count();
    (count, hq as f64 / fake.len() as f64)
}
