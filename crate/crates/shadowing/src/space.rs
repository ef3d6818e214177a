//! Finite metric spaces with exact pairwise distances.
//!
//! A [`FiniteMetricSpace`] is a labelled point set together with an exact
//! rational distance matrix. Construction validates the three metric axioms
//! and reports the first violating pair or triple, so an instance that exists
//! is always a genuine metric space.

use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{exact_sqrt, Rat};

/// Hard cap on the number of points, set by the width of [`PointSet`].
pub const MAX_POINTS: usize = 128;

/// Index of a point in a [`FiniteMetricSpace`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub usize);

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subset of points, stored as a bitset.
///
/// Supports spaces with up to [`MAX_POINTS`] points; all set algebra used by
/// the survivor-set machinery is constant-time word arithmetic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PointSet(pub u128);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn singleton(p: PointId) -> Self {
        PointSet(1u128 << p.0)
    }

    /// The full set on an `n`-point space.
    pub fn full(n: usize) -> Self {
        if n == 128 {
            PointSet(u128::MAX)
        } else {
            PointSet((1u128 << n) - 1)
        }
    }

    pub fn insert(&mut self, p: PointId) {
        self.0 |= 1u128 << p.0;
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.0 & (1u128 << p.0) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersect(&self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn union(&self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn is_subset_of(&self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Iterates members in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(PointId(i))
            }
        })
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p.0)?;
        }
        write!(f, "}}")
    }
}

/// First violation found when checking the metric axioms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricViolation {
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { n: usize, rows: usize, cols: usize },
    #[error("d({i},{i}) must be 0")]
    NonzeroDiagonal { i: usize },
    #[error("d({i},{j}) must be positive for distinct points")]
    NotPositive { i: usize, j: usize },
    #[error("asymmetric at ({i},{j}): d({i},{j}) != d({j},{i})")]
    Asymmetric { i: usize, j: usize },
    #[error("triangle inequality fails at ({i},{j},{k}): d({i},{k}) > d({i},{j}) + d({j},{k})")]
    Triangle { i: usize, j: usize, k: usize },
}

/// Errors raised while building a space.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("space must have at least one point")]
    Empty,
    #[error("space has {n} points, maximum supported is {max}", max = MAX_POINTS)]
    TooManyPoints { n: usize },
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error(transparent)]
    Metric(#[from] MetricViolation),
    #[error("L2 distance between points {i} and {j} is irrational; use L1/Linf or a matrix")]
    IrrationalDistance { i: usize, j: usize },
    #[error("coordinate vectors must share one dimension")]
    MixedDimensions,
    #[error("circle norm requires one coordinate per point")]
    CircleDimension,
}

/// Norms available for coordinate-embedded spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
    /// Arc distance on a circle of circumference one; points are positions mod 1.
    Circle,
}

/// Checks the metric axioms on a candidate square matrix, reporting the first
/// violation in scan order: diagonal, symmetry and positivity pair by pair,
/// then triangle triples `(i,j,k)` in lexicographic order.
pub fn validate_metric(dist: &[Vec<Rat>]) -> Result<(), MetricViolation> {
    let n = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(MetricViolation::Shape {
                n,
                rows: n,
                cols: row.len(),
            });
        }
        if !dist[i][i].is_zero() {
            return Err(MetricViolation::NonzeroDiagonal { i });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist[i][j] != dist[j][i] {
                return Err(MetricViolation::Asymmetric { i, j });
            }
            if dist[i][j] <= Rat::zero() {
                return Err(MetricViolation::NotPositive { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if dist[i][k] > &dist[i][j] + &dist[j][k] {
                    return Err(MetricViolation::Triangle { i, j, k });
                }
            }
        }
    }
    Ok(())
}

/// A finite metric space: labelled points with an exact distance matrix.
///
/// Immutable after construction; every operation on it is a pure function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    /// Row-major `n * n` distance matrix.
    dist: Vec<Rat>,
    n: usize,
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<Rat>>) -> Result<Arc<Self>, SpaceError> {
        let n = dist.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if n > MAX_POINTS {
            return Err(SpaceError::TooManyPoints { n });
        }
        if labels.len() != n {
            return Err(SpaceError::LabelCount(labels.len(), n));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(SpaceError::DuplicateLabel(l.clone()));
            }
        }
        validate_metric(&dist)?;
        let flat = dist.into_iter().flatten().collect();
        Ok(Arc::new(FiniteMetricSpace {
            labels,
            dist: flat,
            n,
        }))
    }

    /// Builds a space from coordinate vectors under the given norm.
    pub fn from_coords(
        labels: Vec<String>,
        coords: Vec<Vec<Rat>>,
        norm: Norm,
    ) -> Result<Arc<Self>, SpaceError> {
        let n = coords.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        let dim = coords[0].len();
        if coords.iter().any(|c| c.len() != dim) {
            return Err(SpaceError::MixedDimensions);
        }
        if norm == Norm::Circle && dim != 1 {
            return Err(SpaceError::CircleDimension);
        }
        let mut dist = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = match norm {
                    Norm::L1 => coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| abs(&(a - b)))
                        .fold(Rat::zero(), |acc, v| acc + v),
                    Norm::Linf => coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| abs(&(a - b)))
                        .max()
                        .unwrap_or_else(Rat::zero),
                    Norm::L2 => {
                        let sq = coords[i]
                            .iter()
                            .zip(&coords[j])
                            .map(|(a, b)| {
                                let d = a - b;
                                &d * &d
                            })
                            .fold(Rat::zero(), |acc, v| acc + v);
                        exact_sqrt(&sq).ok_or(SpaceError::IrrationalDistance { i, j })?
                    }
                    Norm::Circle => circle_distance(&coords[i][0], &coords[j][0]),
                };
                dist[i][j] = d.clone();
                dist[j][i] = d;
            }
        }
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> {
        (0..self.n).map(PointId)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.labels[p.0]
    }

    pub fn point_by_label(&self, label: &str) -> Option<PointId> {
        self.labels.iter().position(|l| l == label).map(PointId)
    }

    pub fn distance(&self, a: PointId, b: PointId) -> &Rat {
        &self.dist[a.0 * self.n + b.0]
    }

    /// Largest pairwise distance (zero on a one-point space).
    pub fn diameter(&self) -> Rat {
        let mut best = Rat::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = &self.dist[i * self.n + j];
                if *d > best {
                    best = d.clone();
                }
            }
        }
        best
    }

    /// Smallest positive pairwise distance, if any pair exists.
    pub fn min_positive_distance(&self) -> Option<Rat> {
        let mut best: Option<Rat> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = &self.dist[i * self.n + j];
                if best.as_ref().is_none_or(|b| d < b) {
                    best = Some(d.clone());
                }
            }
        }
        best
    }

    /// The open ball `{ z : d(z, center) < radius }` as a bitset.
    pub fn ball(&self, center: PointId, radius: &Rat) -> PointSet {
        let mut set = PointSet::EMPTY;
        for p in self.points() {
            if self.distance(p, center) < radius {
                set.insert(p);
            }
        }
        set
    }

    /// Distinct sorted pairwise distances between distinct points.
    pub fn pairwise_distances(&self) -> Vec<Rat> {
        let mut vals = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                vals.push(self.dist[i * self.n + j].clone());
            }
        }
        crate::rational::distinct_sorted(vals)
    }
}

fn abs(r: &Rat) -> Rat {
    if *r < Rat::zero() {
        -r.clone()
    } else {
        r.clone()
    }
}

/// Arc distance between positions `a`, `b` on a circumference-1 circle.
fn circle_distance(a: &Rat, b: &Rat) -> Rat {
    let one = crate::rational::rat_one();
    let mut t = abs(&(a - b));
    // reduce mod 1
    let floor = t.floor();
    t -= floor;
    let alt = &one - &t;
    if alt < t {
        alt
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn unit_equilateral(n: usize) -> Vec<Vec<Rat>> {
        let mut m = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[i][j] = rat_int(1);
                }
            }
        }
        m
    }

    #[test]
    fn valid_equilateral_space() {
        let m = unit_equilateral(3);
        assert_eq!(validate_metric(&m), Ok(()));
        let s = FiniteMetricSpace::new(vec!["a".into(), "b".into(), "c".into()], m).unwrap();
        assert_eq!(s.diameter(), rat_int(1));
        assert_eq!(s.min_positive_distance(), Some(rat_int(1)));
    }

    #[test]
    fn symmetry_violation_reported_first() {
        let mut m = unit_equilateral(2);
        m[1][0] = rat_int(2);
        assert_eq!(
            validate_metric(&m),
            Err(MetricViolation::Asymmetric { i: 0, j: 1 })
        );
    }

    #[test]
    fn triangle_violation_triple() {
        let m = vec![
            vec![rat_int(0), rat_int(1), rat_int(3)],
            vec![rat_int(1), rat_int(0), rat_int(1)],
            vec![rat_int(3), rat_int(1), rat_int(0)],
        ];
        assert_eq!(
            validate_metric(&m),
            Err(MetricViolation::Triangle { i: 0, j: 1, k: 2 })
        );
    }

    #[test]
    fn diagonal_and_positivity() {
        let mut m = unit_equilateral(2);
        m[0][0] = rat_int(1);
        assert_eq!(
            validate_metric(&m),
            Err(MetricViolation::NonzeroDiagonal { i: 0 })
        );
        let mut m = unit_equilateral(2);
        m[0][1] = rat_int(0);
        m[1][0] = rat_int(0);
        assert_eq!(
            validate_metric(&m),
            Err(MetricViolation::NotPositive { i: 0, j: 1 })
        );
    }

    #[test]
    fn circle_metric_four_points() {
        let coords = (0..4).map(|i| vec![rat(i, 4)]).collect();
        let labels = (0..4).map(|i| i.to_string()).collect();
        let s = FiniteMetricSpace::from_coords(labels, coords, Norm::Circle).unwrap();
        assert_eq!(*s.distance(PointId(0), PointId(1)), rat(1, 4));
        assert_eq!(*s.distance(PointId(0), PointId(2)), rat(1, 2));
        assert_eq!(*s.distance(PointId(0), PointId(3)), rat(1, 4));
        assert_eq!(s.diameter(), rat(1, 2));
    }

    #[test]
    fn l2_irrational_rejected() {
        let coords = vec![vec![rat_int(0), rat_int(0)], vec![rat_int(1), rat_int(1)]];
        let err = FiniteMetricSpace::from_coords(vec!["a".into(), "b".into()], coords, Norm::L2)
            .unwrap_err();
        assert_eq!(err, SpaceError::IrrationalDistance { i: 0, j: 1 });
    }

    #[test]
    fn l2_pythagorean_ok() {
        let coords = vec![vec![rat_int(0), rat_int(0)], vec![rat_int(3), rat_int(4)]];
        let s =
            FiniteMetricSpace::from_coords(vec!["a".into(), "b".into()], coords, Norm::L2).unwrap();
        assert_eq!(*s.distance(PointId(0), PointId(1)), rat_int(5));
    }

    #[test]
    fn ball_is_strict() {
        let coords = (0..4).map(|i| vec![rat(i, 4)]).collect::<Vec<_>>();
        let labels = (0..4).map(|i| i.to_string()).collect();
        let s = FiniteMetricSpace::from_coords(labels, coords, Norm::Circle).unwrap();
        // points within 2/5 of 0: distances 0, 1/4, 1/2, 1/4
        let b = s.ball(PointId(0), &rat(2, 5));
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![PointId(0), PointId(1), PointId(3)]);
        // strict: radius 1/4 excludes the neighbors
        let b = s.ball(PointId(0), &rat(1, 4));
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![PointId(0)]);
    }

    #[test]
    fn point_set_algebra() {
        let mut a = PointSet::EMPTY;
        a.insert(PointId(1));
        a.insert(PointId(3));
        let b = PointSet::full(3);
        assert_eq!(a.intersect(b).iter().collect::<Vec<_>>(), vec![PointId(1)]);
        assert_eq!(a.union(b).len(), 4);
        assert!(PointSet::EMPTY.is_empty());
        assert!(a.contains(PointId(3)));
        assert!(!a.is_subset_of(b));
    }
}
