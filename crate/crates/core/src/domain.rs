//! Points and finite candidate sets.

use std::ops::Index;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain has no candidates")]
    Empty,
    #[error("candidate {index} has dimension {got}, expected {expected}")]
    RaggedDimensions { index: usize, expected: usize, got: usize },
    #[error("grid needs at least 2 points per coordinate, got {0}")]
    GridTooCoarse(usize),
}

/// A point in `R^d`. Points addressing a precomputed kernel are 1-d and hold the index.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T>(Vec<T>);

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self(coords)
    }

    /// A 1-d point carrying an integer index, as used by precomputed kernels.
    pub fn index(i: usize) -> Self {
        Self(vec![T::from_usize_lossy(i)])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.0
    }

    pub fn sq_distance(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
    }
}

impl<T> From<Vec<T>> for Point<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// Finite, nonempty candidate set over which every argmax runs. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Domain<T> {
    points: Arc<[Point<T>]>,
}

impl<T: Scalar> Domain<T> {
    pub fn new(points: Vec<Point<T>>) -> Result<Self, DomainError> {
        let first = points.first().ok_or(DomainError::Empty)?;
        let d = first.dim();
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.dim() != d) {
            return Err(DomainError::RaggedDimensions { index, expected: d, got: p.dim() });
        }
        Ok(Self { points: points.into() })
    }

    /// Evenly spaced points on `[lo, hi]`, endpoints included.
    pub fn linspace(lo: T, hi: T, n: usize) -> Result<Self, DomainError> {
        Self::grid(lo, hi, n, 1)
    }

    /// Tensor grid with `per_axis` evenly spaced points on `[lo, hi]` along each of `d` axes.
    /// The last coordinate varies fastest.
    pub fn grid(lo: T, hi: T, per_axis: usize, d: usize) -> Result<Self, DomainError> {
        if per_axis < 2 {
            return Err(DomainError::GridTooCoarse(per_axis));
        }
        let step = (hi - lo) / T::from_usize_lossy(per_axis - 1);
        let axis: Vec<T> = (0..per_axis)
            .map(|i| if i + 1 == per_axis { hi } else { lo + step * T::from_usize_lossy(i) })
            .collect();
        let total = per_axis.pow(d as u32);
        let points = (0..total)
            .map(|mut flat| {
                let mut c = vec![T::zero(); d];
                for slot in c.iter_mut().rev() {
                    *slot = axis[flat % per_axis];
                    flat /= per_axis;
                }
                Point(c)
            })
            .collect();
        Self::new(points)
    }

    /// Index points `0..n`, for precomputed kernels.
    pub fn indices(n: usize) -> Result<Self, DomainError> {
        Self::new((0..n).map(Point::index).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point<T>> {
        self.points.iter()
    }

    /// True when both handles share storage, or hold equal points.
    pub fn same_as(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points == other.points
    }
}

impl<T> Index<usize> for Domain<T> {
    type Output = Point<T>;

    fn index(&self, i: usize) -> &Point<T> {
        &self.points[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = Domain::<f64>::grid(0.0, 1.0, 31, 2).unwrap();
        assert_eq!(g.len(), 961);
        assert_eq!(g[0].coords(), &[0.0, 0.0]);
        assert_eq!(g[1].coords()[1], 1.0 / 30.0);
        assert_eq!(g[960].coords(), &[1.0, 1.0]);
        let line = Domain::<f64>::linspace(0.0, 1.0, 100).unwrap();
        assert_eq!(line.len(), 100);
        assert_eq!(line[99].coords(), &[1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Domain::<f64>::new(vec![]).unwrap_err(), DomainError::Empty);
        let ragged = vec![Point::new(vec![0.0]), Point::new(vec![0.0, 1.0])];
        assert!(matches!(Domain::new(ragged), Err(DomainError::RaggedDimensions { index: 1, .. })));
        assert_eq!(Domain::<f64>::linspace(0.0, 1.0, 1).unwrap_err(), DomainError::GridTooCoarse(1));
    }
}
