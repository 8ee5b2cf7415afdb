//! Weighted empirical distributions on R^m and the p-centrality function.
//!
//! A distribution is a finite list of support points with nonnegative weights
//! that are renormalized to sum to one at construction. Coincident points are
//! kept separate; merging is never performed. All reductions run left to right
//! over the stored point order, so every derived quantity is bit-reproducible.

use crate::error::{Error, Result};
use crate::linalg::euclidean;

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    points: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl EmpiricalDistribution {
    /// Build a distribution from points (each of dimension m) and optional
    /// weights. Omitted weights default to uniform; given weights must be
    /// nonnegative with positive total mass and are renormalized to sum 1.
    pub fn new(points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySupport);
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::EmptySupport);
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        let n = points.len();
        let weights = match weights {
            None => vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(Error::WeightCountMismatch {
                        points: n,
                        weights: w.len(),
                    });
                }
                for (i, &wi) in w.iter().enumerate() {
                    if !(wi >= 0.0) {
                        return Err(Error::NegativeWeight {
                            index: i,
                            weight: wi,
                        });
                    }
                }
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return Err(Error::ZeroMass);
                }
                w.iter().map(|wi| wi / total).collect()
            }
        };
        Ok(EmpiricalDistribution {
            points: points.into_iter().flatten().collect(),
            weights,
            dim,
        })
    }

    /// Uniform weights over the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points, None)
    }

    /// The Dirac measure centered at x: a single point with weight 1.
    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::new(vec![x.to_vec()], None)
    }

    /// Internal constructor from pre-flattened storage; weights must already
    /// be normalized.
    pub(crate) fn from_flat(points: Vec<f64>, weights: Vec<f64>, dim: usize) -> Self {
        debug_assert_eq!(points.len(), weights.len() * dim);
        EmpiricalDistribution {
            points,
            weights,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one point
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// The p-centrality function sigma_{P,p}(x) = (sum_i w_i ||x - y_i||^p)^{1/p}.
    ///
    /// The moment accumulates left to right over the stored point order.
    /// A zero distance raised to p evaluates as exactly 0; no epsilon floor is
    /// applied here (the forward value is well-defined).
    pub fn p_centrality(&self, x: &[f64], p: f64) -> Result<f64> {
        check_order(p)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut moment = 0.0;
        for (i, y) in self.iter_points().enumerate() {
            moment += self.weights[i] * euclidean(x, y).powf(p);
        }
        Ok(moment.powf(1.0 / p))
    }

    /// Pushforward through f: every point is replaced by its image, weights
    /// are carried over unchanged, and coincident images are not merged.
    pub fn pushforward<F>(&self, mut f: F) -> Result<EmpiricalDistribution>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut out: Vec<f64> = Vec::new();
        let mut out_dim = 0usize;
        for (i, y) in self.iter_points().enumerate() {
            let img = f(y);
            if i == 0 {
                out_dim = img.len();
                if out_dim == 0 {
                    return Err(Error::Shape("pushforward image has dimension 0".into()));
                }
                out.reserve(out_dim * self.len());
            } else if img.len() != out_dim {
                return Err(Error::Shape(format!(
                    "pushforward image dimension changed from {} to {} at point {}",
                    out_dim,
                    img.len(),
                    i
                )));
            }
            out.extend_from_slice(&img);
        }
        Ok(EmpiricalDistribution {
            points: out,
            weights: self.weights.clone(),
            dim: out_dim,
        })
    }

    /// Largest pairwise distance of the support (diameter).
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                d = d.max(euclidean(self.point(i), self.point(j)));
            }
        }
        d
    }
}

/// Validate an order p for moments/transport: finite and >= 1.
pub fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn uniform_default_weights() {
        let d = EmpiricalDistribution::new(pts(&[&[0.0], &[2.0]]), None).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn weights_renormalized() {
        let d = EmpiricalDistribution::new(pts(&[&[0.0], &[1.0]]), Some(vec![2.0, 2.0])).unwrap();
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn dirac_single_point() {
        let d = EmpiricalDistribution::dirac(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.weights(), &[1.0]);
        assert_eq!(d.point(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            EmpiricalDistribution::new(vec![], None),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            EmpiricalDistribution::new(pts(&[&[0.0], &[1.0, 2.0]]), None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            EmpiricalDistribution::new(pts(&[&[0.0]]), Some(vec![-1.0])),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(matches!(
            EmpiricalDistribution::new(pts(&[&[0.0], &[1.0]]), Some(vec![0.0, 0.0])),
            Err(Error::ZeroMass)
        ));
        assert!(matches!(
            EmpiricalDistribution::new(pts(&[&[0.0]]), Some(vec![1.0, 1.0])),
            Err(Error::WeightCountMismatch { .. })
        ));
    }

    #[test]
    fn centrality_dirac_is_distance() {
        let d = EmpiricalDistribution::dirac(&[3.0]).unwrap();
        assert_eq!(d.p_centrality(&[0.0], 2.0).unwrap(), 3.0);
    }

    #[test]
    fn centrality_two_point_values() {
        let d = EmpiricalDistribution::uniform(pts(&[&[0.0], &[2.0]])).unwrap();
        assert!((d.p_centrality(&[1.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((d.p_centrality(&[0.0], 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn centrality_rejects_bad_order() {
        let d = EmpiricalDistribution::dirac(&[0.0]).unwrap();
        assert!(matches!(
            d.p_centrality(&[0.0], 0.5),
            Err(Error::InvalidOrder(_))
        ));
        assert!(matches!(
            d.p_centrality(&[0.0], f64::INFINITY),
            Err(Error::InvalidOrder(_))
        ));
    }

    #[test]
    fn pushforward_keeps_weights_and_order() {
        let d = EmpiricalDistribution::uniform(pts(&[&[0.0], &[2.0]])).unwrap();
        let g = d.pushforward(|y| vec![2.0 * y[0]]).unwrap();
        assert_eq!(g.point(0), &[0.0]);
        assert_eq!(g.point(1), &[4.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);

        // Constant map: coincident images stay separate.
        let c = d.pushforward(|_| vec![0.0]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(0), c.point(1));
    }
}
