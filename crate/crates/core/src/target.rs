//! Bounded target sets in `R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSet<T> {
    /// Closed Euclidean ball; radius 0 is a single point.
    Ball { center: Vec<T>, radius: T },
    /// Closed axis-aligned box.
    Box { lo: Vec<T>, hi: Vec<T> },
    Union { members: Vec<TargetSet<T>> },
    /// Finite set of points, matched up to `tolerance`.
    PointCloud { points: Vec<Vec<T>>, tolerance: T },
}

fn euclid<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

impl<T: Real> TargetSet<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Self {
        TargetSet::Ball { center, radius }
    }

    pub fn cube(d: usize, half_side: T) -> Self {
        TargetSet::Box {
            lo: vec![-half_side; d],
            hi: vec![half_side; d],
        }
    }

    /// Checks boundedness, nonemptiness and consistent dimensions.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        match self {
            TargetSet::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !radius.is_finite() || *radius < T::zero() {
                    return Err(Error::Domain("ball needs a finite center and radius >= 0".into()));
                }
            }
            TargetSet::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || !finite(lo) || !finite(hi) {
                    return Err(Error::Domain("box needs finite corners of equal dimension".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(Error::Domain("box is empty (lo > hi on some axis)".into()));
                }
            }
            TargetSet::Union { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::Domain("union has no members".into()))?;
                let d = first.dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != d {
                        return Err(Error::Domain("union members differ in dimension".into()));
                    }
                }
            }
            TargetSet::PointCloud { points, tolerance } => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::Domain("point cloud is empty".into()))?;
                if first.is_empty()
                    || points.iter().any(|p| p.len() != first.len() || !finite(p))
                    || !tolerance.is_finite()
                    || *tolerance < T::zero()
                {
                    return Err(Error::Domain(
                        "point cloud needs finite points of equal dimension and tolerance >= 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSet::Ball { center, .. } => center.len(),
            TargetSet::Box { lo, .. } => lo.len(),
            TargetSet::Union { members } => members.first().map_or(0, |m| m.dim()),
            TargetSet::PointCloud { points, .. } => points.first().map_or(0, |p| p.len()),
        }
    }

    /// Smallest axis-aligned box containing the set.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self {
            TargetSet::Ball { center, radius } => (
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            TargetSet::Box { lo, hi } => (lo.clone(), hi.clone()),
            TargetSet::Union { members } => {
                let d = self.dim();
                let mut lo = vec![T::infinity(); d];
                let mut hi = vec![T::neg_infinity(); d];
                for m in members {
                    let (a, b) = m.bounding_box();
                    for i in 0..d {
                        lo[i] = lo[i].min(a[i]);
                        hi[i] = hi[i].max(b[i]);
                    }
                }
                (lo, hi)
            }
            TargetSet::PointCloud { points, tolerance } => {
                let d = self.dim();
                let mut lo = vec![T::infinity(); d];
                let mut hi = vec![T::neg_infinity(); d];
                for p in points {
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i] - *tolerance);
                        hi[i] = hi[i].max(p[i] + *tolerance);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Euclidean distance from `z` to the set; zero exactly on the set.
    pub fn distance(&self, z: &[T]) -> T {
        match self {
            TargetSet::Ball { center, radius } => (euclid(z, center) - *radius).max(T::zero()),
            TargetSet::Box { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&x, (&a, &b))| {
                    let e = (a - x).max(x - b).max(T::zero());
                    e * e
                })
                .sum::<T>()
                .sqrt(),
            TargetSet::Union { members } => members
                .iter()
                .map(|m| m.distance(z))
                .fold(T::infinity(), |a, b| a.min(b)),
            TargetSet::PointCloud { points, tolerance } => {
                let near = points
                    .iter()
                    .map(|p| euclid(z, p))
                    .fold(T::infinity(), |a, b| a.min(b));
                (near - *tolerance).max(T::zero())
            }
        }
    }

    pub fn contains(&self, z: &[T]) -> bool {
        self.distance(z) == T::zero()
    }

    /// True when the set is a finite union of points (zero-dimensional).
    pub fn is_finite_set(&self) -> bool {
        match self {
            TargetSet::Ball { radius, .. } => *radius == T::zero(),
            TargetSet::Box { lo, hi } => lo == hi,
            TargetSet::Union { members } => members.iter().all(|m| m.is_finite_set()),
            TargetSet::PointCloud { .. } => true,
        }
    }

    /// Contraction by factor `s` about each piece's own center; point clouds
    /// are returned unchanged.
    pub fn shrunk(&self, s: T) -> Self {
        match self {
            TargetSet::Ball { center, radius } => TargetSet::Ball {
                center: center.clone(),
                radius: *radius * s,
            },
            TargetSet::Box { lo, hi } => {
                let half = T::lit(0.5);
                let (mut a, mut b) = (lo.clone(), hi.clone());
                for i in 0..lo.len() {
                    let c = (lo[i] + hi[i]) * half;
                    let r = (hi[i] - lo[i]) * half * s;
                    a[i] = c - r;
                    b[i] = c + r;
                }
                TargetSet::Box { lo: a, hi: b }
            }
            TargetSet::Union { members } => TargetSet::Union {
                members: members.iter().map(|m| m.shrunk(s)).collect(),
            },
            TargetSet::PointCloud { .. } => self.clone(),
        }
    }

    /// Dilation by `c` about the origin.
    pub fn scaled(&self, c: T) -> Self {
        let mul = |v: &[T]| v.iter().map(|&x| x * c).collect::<Vec<T>>();
        match self {
            TargetSet::Ball { center, radius } => TargetSet::Ball {
                center: mul(center),
                radius: *radius * c.abs(),
            },
            TargetSet::Box { lo, hi } => {
                let (a, b) = (mul(lo), mul(hi));
                let lo: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x.min(y)).collect();
                let hi: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x.max(y)).collect();
                TargetSet::Box { lo, hi }
            }
            TargetSet::Union { members } => TargetSet::Union {
                members: members.iter().map(|m| m.scaled(c)).collect(),
            },
            TargetSet::PointCloud { points, tolerance } => TargetSet::PointCloud {
                points: points.iter().map(|p| mul(p)).collect(),
                tolerance: *tolerance * c.abs(),
            },
        }
    }

    /// True when the set lies inside `[-m, m]^d`.
    pub fn inside_cube(&self, m: T) -> bool {
        let (lo, hi) = self.bounding_box();
        lo.iter().all(|&a| a >= -m) && hi.iter().all(|&b| b <= m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_matches_zero_distance() {
        let sets: Vec<TargetSet<f64>> = vec![
            TargetSet::ball(vec![0.3, 0.3], 0.1),
            TargetSet::Box {
                lo: vec![-1.0, 0.0],
                hi: vec![0.0, 2.0],
            },
            TargetSet::PointCloud {
                points: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
                tolerance: 0.05,
            },
        ];
        let union = TargetSet::Union {
            members: sets.clone(),
        };
        for s in sets.iter().chain(std::iter::once(&union)) {
            s.validate().unwrap();
            for i in -20..=20 {
                for j in -20..=20 {
                    let z = [i as f64 * 0.1, j as f64 * 0.1];
                    assert_eq!(s.contains(&z), s.distance(&z) == 0.0);
                    assert!(s.distance(&z) >= 0.0);
                }
            }
        }
        assert!(union.contains(&[0.3, 0.35]));
        assert!(union.contains(&[1.02, 1.0]));
        assert!(!union.contains(&[0.5, -0.5]));
    }

    #[test]
    fn box_distance_is_euclidean() {
        let b = TargetSet::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        assert!((b.distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.distance(&[0.5, 3.0]), 2.0);
    }

    #[test]
    fn invalid_sets_are_domain_errors() {
        assert!(TargetSet::<f64>::Union { members: vec![] }.validate().is_err());
        assert!(TargetSet::<f64>::ball(vec![0.0], -1.0).validate().is_err());
        assert!(TargetSet::Box {
            lo: vec![1.0],
            hi: vec![0.0]
        }
        .validate()
        .is_err());
        assert!(TargetSet::<f64>::PointCloud {
            points: vec![],
            tolerance: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn shrinking_keeps_centers() {
        let b = TargetSet::Box {
            lo: vec![0.0, 2.0],
            hi: vec![2.0, 4.0],
        };
        assert_eq!(
            b.shrunk(0.5),
            TargetSet::Box {
                lo: vec![0.5, 2.5],
                hi: vec![1.5, 3.5]
            }
        );
        assert!(TargetSet::ball(vec![0.0], 0.0).is_finite_set());
    }
}
