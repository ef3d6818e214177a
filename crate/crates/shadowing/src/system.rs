//! Self-maps and eventually periodic map sequences on a finite metric space.
//!
//! A [`SystemMap`] is a total self-map of the point set; a
//! [`NonautonomousSystem`] is an eventually periodic sequence of such maps.
//! Restricting to eventually periodic sequences keeps every supremum over
//! infinite time computable on a finite window: any quantity that depends only
//! on `(f_i, x_i)` phases repeats once both the map sequence and the point
//! sequence have entered their cycles.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::rational::Rat;
use crate::space::{FiniteMetricSpace, PointId, PointSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("map image has {got} entries for a {expected}-point space")]
    ImageLength { got: usize, expected: usize },
    #[error("map image {value} out of range at point {point}")]
    ImageRange { point: usize, value: usize },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("nonautonomous system needs a nonempty period")]
    EmptyPeriod,
    #[error("point index {0} out of range")]
    PointRange(usize),
}

/// A total self-map of a finite metric space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemMap {
    space: Arc<FiniteMetricSpace>,
    image: Vec<PointId>,
}

impl SystemMap {
    pub fn new(space: Arc<FiniteMetricSpace>, image: Vec<usize>) -> Result<Self, SystemError> {
        let n = space.len();
        if image.len() != n {
            return Err(SystemError::ImageLength {
                got: image.len(),
                expected: n,
            });
        }
        for (point, &value) in image.iter().enumerate() {
            if value >= n {
                return Err(SystemError::ImageRange { point, value });
            }
        }
        Ok(SystemMap {
            space,
            image: image.into_iter().map(PointId).collect(),
        })
    }

    pub fn identity(space: Arc<FiniteMetricSpace>) -> Self {
        let image = (0..space.len()).map(PointId).collect();
        SystemMap { space, image }
    }

    /// Rebuilds the map with one point redirected.
    pub fn with_image(&self, at: PointId, to: PointId) -> Self {
        let mut image = self.image.clone();
        image[at.0] = to;
        SystemMap {
            space: self.space.clone(),
            image,
        }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn apply(&self, p: PointId) -> PointId {
        self.image[p.0]
    }

    pub fn image(&self) -> &[PointId] {
        &self.image
    }

    pub fn image_indices(&self) -> Vec<usize> {
        self.image.iter().map(|p| p.0).collect()
    }

    /// Pointwise image of a set.
    pub fn apply_set(&self, set: PointSet) -> PointSet {
        let mut out = PointSet::EMPTY;
        for p in set.iter() {
            out.insert(self.apply(p));
        }
        out
    }

    pub fn same_space(&self, other: &SystemMap) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || self.space == other.space
    }

    /// `f^k(p)`.
    pub fn iterate(&self, p: PointId, k: usize) -> PointId {
        let mut cur = p;
        for _ in 0..k {
            cur = self.apply(cur);
        }
        cur
    }
}

/// Supremum distance `max_x d(f(x), g(x))` between two maps on one space.
pub fn sup_distance(f: &SystemMap, g: &SystemMap) -> Result<Rat, SystemError> {
    if !f.same_space(g) {
        return Err(SystemError::SpaceMismatch);
    }
    let space = f.space();
    let mut best = Rat::zero();
    for p in space.points() {
        let d = space.distance(f.apply(p), g.apply(p));
        if *d > best {
            best = d.clone();
        }
    }
    Ok(best)
}

/// The orbit `(x, f(x), ..., f^h(x))`, length `horizon + 1`.
pub fn orbit(f: &SystemMap, x: PointId, horizon: usize) -> Vec<PointId> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut cur = x;
    out.push(cur);
    for _ in 0..horizon {
        cur = f.apply(cur);
        out.push(cur);
    }
    out
}

/// Preperiod and cycle of the eventually periodic orbit of `x` under `f`.
///
/// Returns `(preperiod, cycle)` with the orbit equal to
/// `preperiod, cycle, cycle, ...` and the cycle nonempty.
pub fn orbit_structure(f: &SystemMap, x: PointId) -> (Vec<PointId>, Vec<PointId>) {
    let n = f.space().len();
    let mut seen = vec![usize::MAX; n];
    let mut seq = Vec::new();
    let mut cur = x;
    loop {
        if seen[cur.0] != usize::MAX {
            let enter = seen[cur.0];
            let cycle = seq.split_off(enter);
            return (seq, cycle);
        }
        seen[cur.0] = seq.len();
        seq.push(cur);
        cur = f.apply(cur);
    }
}

/// An eventually periodic sequence of maps `f_0, f_1, ...` on one space:
/// `f_i = preperiod[i]` for `i < preperiod.len()`, then the period repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonautonomousSystem {
    preperiod: Vec<SystemMap>,
    period: Vec<SystemMap>,
}

impl NonautonomousSystem {
    pub fn new(preperiod: Vec<SystemMap>, period: Vec<SystemMap>) -> Result<Self, SystemError> {
        if period.is_empty() {
            return Err(SystemError::EmptyPeriod);
        }
        let space = period[0].space();
        for m in preperiod.iter().chain(&period) {
            if !(Arc::ptr_eq(m.space(), space) || m.space() == space) {
                return Err(SystemError::SpaceMismatch);
            }
        }
        Ok(NonautonomousSystem { preperiod, period })
    }

    /// The constant sequence `f, f, f, ...`.
    pub fn constant(f: SystemMap) -> Self {
        NonautonomousSystem {
            preperiod: Vec::new(),
            period: vec![f],
        }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        self.period[0].space()
    }

    pub fn preperiod(&self) -> &[SystemMap] {
        &self.preperiod
    }

    pub fn period(&self) -> &[SystemMap] {
        &self.period
    }

    pub fn preperiod_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn map_at(&self, i: usize) -> &SystemMap {
        if i < self.preperiod.len() {
            &self.preperiod[i]
        } else {
            &self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn same_space(&self, other: &NonautonomousSystem) -> bool {
        Arc::ptr_eq(self.space(), other.space()) || self.space() == other.space()
    }
}

/// Supremum over time of [`sup_distance`] between aligned members of two
/// eventually periodic sequences. The supremum is achieved on the window
/// `max(preperiods) + lcm(periods)`.
pub fn sup_distance_seq(
    f: &NonautonomousSystem,
    g: &NonautonomousSystem,
) -> Result<Rat, SystemError> {
    if !f.same_space(g) {
        return Err(SystemError::SpaceMismatch);
    }
    let window =
        f.preperiod_len().max(g.preperiod_len()) + f.period_len().lcm(&g.period_len());
    let mut best = Rat::zero();
    for i in 0..window {
        let d = sup_distance(f.map_at(i), g.map_at(i))?;
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// The orbit `x, f_0(x), f_1(f_0(x)), ...`, length `horizon + 1`.
pub fn orbit_nonaut(f: &NonautonomousSystem, x: PointId, horizon: usize) -> Vec<PointId> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut cur = x;
    out.push(cur);
    for i in 0..horizon {
        cur = f.map_at(i).apply(cur);
        out.push(cur);
    }
    out
}

/// Eventually periodic structure `(preperiod, cycle)` of a nonautonomous
/// orbit; the state that must repeat is the pair (map phase, point).
pub fn orbit_structure_nonaut(
    f: &NonautonomousSystem,
    x: PointId,
) -> (Vec<PointId>, Vec<PointId>) {
    let pre = f.preperiod_len();
    let p = f.period_len();
    let mut seq = Vec::new();
    let mut cur = x;
    let mut seen: std::collections::HashMap<(usize, PointId), usize> =
        std::collections::HashMap::new();
    let mut i = 0usize;
    loop {
        if i >= pre {
            let phase = (i - pre) % p;
            if let Some(&enter) = seen.get(&(phase, cur)) {
                let cycle = seq.split_off(enter);
                return (seq, cycle);
            }
            seen.insert((phase, cur), seq.len());
        }
        seq.push(cur);
        cur = f.map_at(i).apply(cur);
        i += 1;
    }
}

/// Class of admissible maps: everything, or maps with a Lipschitz bound.
///
/// On a finite space every map is continuous, so `All` is the discrete stand-in
/// for both the full function space and the continuous maps; `Lipschitz(L)`
/// models regularity classes of maps on discretized continua.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContinuityClass {
    All,
    Lipschitz(Rat),
}

impl ContinuityClass {
    /// Whether the class admits `f`: for `Lipschitz(L)`,
    /// `d(f(x), f(y)) <= L * d(x, y)` over all pairs.
    pub fn admits(&self, f: &SystemMap) -> bool {
        match self {
            ContinuityClass::All => true,
            ContinuityClass::Lipschitz(l) => {
                let space = f.space();
                for x in space.points() {
                    for y in space.points() {
                        if x >= y {
                            continue;
                        }
                        let lhs = space.distance(f.apply(x), f.apply(y));
                        let rhs = l * space.distance(x, y);
                        if *lhs > rhs {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}
