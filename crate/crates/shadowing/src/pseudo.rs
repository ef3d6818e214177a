//! δ-pseudo-orbits and the exact (ε,δ)-shadowing decision procedure.
//!
//! A δ-pseudo-orbit for `f` is a sequence whose every step lands strictly
//! within δ of the true image of the previous point. The system ε-shadows a
//! sequence when some genuine orbit stays strictly within ε of it at every
//! index. All inequalities here are strict, matching the definitions, and all
//! thresholds are exact rationals.
//!
//! The decision procedure works on *survivor sets*: after reading a prefix
//! `x_0..x_k`, the survivor set `T_k` holds the current positions `f^k(z)` of
//! all starting points `z` whose orbits have shadowed the prefix so far.
//! Future constraints depend only on the current position, never on `z`
//! itself, so the pair (current pseudo-orbit point, survivor set) is a
//! complete state and shadowability of every pseudo-orbit reduces to
//! reachability over finitely many such states.
//!
//! Infinite pseudo-orbits need no separate treatment. If every finite prefix
//! of an infinite pseudo-orbit keeps a nonempty survivor set, then the sets
//! `S_k = { z : orbit of z shadows x_0..x_k }` form a nonincreasing chain of
//! nonempty subsets of a finite space, so their intersection is nonempty and
//! any member shadows the whole infinite sequence. Conversely an infinite
//! failure always shows up as an empty survivor set after some finite prefix.
//! Hence FAILS is exactly "an empty survivor state is reachable".

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::rational::{distinct_sorted, probe_grid, rat_int, Rat};
use crate::space::{FiniteMetricSpace, PointId, PointSet};
use crate::system::{NonautonomousSystem, SystemMap};

/// Resource limits for the state-space searches.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Cap on distinct visited states in one search.
    pub max_states: usize,
    /// Cap on the number of points accepted by the graph-based algorithms.
    pub max_points: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_states: 4_000_000,
            max_points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PseudoError {
    #[error("state budget exceeded after visiting {visited} states")]
    BudgetExceeded { visited: usize },
    #[error("space has {n} points, graph algorithms capped at {cap}")]
    PointCapExceeded { n: usize, cap: usize },
    #[error("{0} must be positive")]
    RequiresPositive(&'static str),
    #[error("pseudo-orbit must be nonempty")]
    EmptySequence,
}

/// A finite or eventually periodic point sequence tagged with its δ.
///
/// The pseudo-orbit bound is checked by the operations that consume one, not
/// by the constructor: the same sequence can be tested against several maps
/// and several δ values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoOrbit {
    preperiod: Vec<PointId>,
    period: Vec<PointId>,
    delta: Rat,
}

impl PseudoOrbit {
    /// Eventually periodic sequence `preperiod, period, period, ...`.
    /// An empty period makes a plain finite prefix.
    pub fn new(
        preperiod: Vec<PointId>,
        period: Vec<PointId>,
        delta: Rat,
    ) -> Result<Self, PseudoError> {
        if preperiod.is_empty() && period.is_empty() {
            return Err(PseudoError::EmptySequence);
        }
        if delta <= Rat::zero() {
            return Err(PseudoError::RequiresPositive("delta"));
        }
        Ok(PseudoOrbit {
            preperiod,
            period,
            delta,
        })
    }

    pub fn finite(points: Vec<PointId>, delta: Rat) -> Result<Self, PseudoError> {
        Self::new(points, Vec::new(), delta)
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    pub fn preperiod(&self) -> &[PointId] {
        &self.preperiod
    }

    pub fn period(&self) -> &[PointId] {
        &self.period
    }

    pub fn is_eventually_periodic(&self) -> bool {
        !self.period.is_empty()
    }

    /// Points in one representative window (preperiod plus one period).
    pub fn window_len(&self) -> usize {
        self.preperiod.len() + self.period.len()
    }

    /// The i-th point. For finite sequences `i` must be in range.
    pub fn point_at(&self, i: usize) -> PointId {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            assert!(
                !self.period.is_empty(),
                "index {i} beyond finite pseudo-orbit"
            );
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// The first `k` points as a vector.
    pub fn prefix(&self, k: usize) -> Vec<PointId> {
        (0..k).map(|i| self.point_at(i)).collect()
    }

    pub fn start(&self) -> PointId {
        self.point_at(0)
    }
}

/// First index `i` with `d(f(x_i), x_{i+1}) >= delta`, or `None` when the
/// sequence is a δ-pseudo-orbit for `f`.
///
/// Eventually periodic sequences are checked over one full window including
/// the wrap edge; finite prefixes over their `len - 1` steps.
pub fn first_pseudo_orbit_violation(
    f: &SystemMap,
    xs: &PseudoOrbit,
    delta: &Rat,
) -> Option<usize> {
    let space = f.space();
    let steps = if xs.is_eventually_periodic() {
        xs.window_len()
    } else {
        xs.window_len().saturating_sub(1)
    };
    for i in 0..steps {
        let d = space.distance(f.apply(xs.point_at(i)), xs.point_at(i + 1));
        if d >= delta {
            return Some(i);
        }
    }
    None
}

pub fn is_pseudo_orbit(f: &SystemMap, xs: &PseudoOrbit, delta: &Rat) -> bool {
    first_pseudo_orbit_violation(f, xs, delta).is_none()
}

/// Nonautonomous variant: checks `d(f_i(x_i), x_{i+1}) < delta` over the
/// combined window `max(preperiods) + lcm(period lengths)`.
pub fn first_pseudo_orbit_violation_nonaut(
    f: &NonautonomousSystem,
    xs: &PseudoOrbit,
    delta: &Rat,
) -> Option<usize> {
    let space = f.space();
    let steps = if xs.is_eventually_periodic() {
        f.preperiod_len().max(xs.preperiod.len()) + f.period_len().lcm(&xs.period.len())
    } else {
        xs.window_len().saturating_sub(1)
    };
    for i in 0..steps {
        let d = space.distance(f.map_at(i).apply(xs.point_at(i)), xs.point_at(i + 1));
        if d >= delta {
            return Some(i);
        }
    }
    None
}

pub fn is_pseudo_orbit_nonaut(f: &NonautonomousSystem, xs: &PseudoOrbit, delta: &Rat) -> bool {
    first_pseudo_orbit_violation_nonaut(f, xs, delta).is_none()
}

/// The δ-step digraph of a map: edge `x -> y` iff `d(f(x), y) < delta`.
/// Paths in this graph are exactly the δ-pseudo-orbit prefixes of `f`.
#[derive(Debug, Clone)]
pub struct DeltaGraph {
    map: SystemMap,
    delta: Rat,
    succ: Vec<PointSet>,
}

impl DeltaGraph {
    pub fn new(f: &SystemMap, delta: &Rat) -> Self {
        let space = f.space();
        let succ = space
            .points()
            .map(|x| space.ball(f.apply(x), delta))
            .collect();
        DeltaGraph {
            map: f.clone(),
            delta: delta.clone(),
            succ,
        }
    }

    pub fn map(&self) -> &SystemMap {
        &self.map
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    pub fn successors(&self, x: PointId) -> PointSet {
        self.succ[x.0]
    }

    pub fn has_edge(&self, x: PointId, y: PointId) -> bool {
        self.succ[x.0].contains(y)
    }
}

/// Open ε-balls around every point, indexed by center.
pub(crate) fn ball_table(space: &FiniteMetricSpace, eps: &Rat) -> Vec<PointSet> {
    space.points().map(|p| space.ball(p, eps)).collect()
}

/// Survivor-set trace of a finite prefix: `T_0 = B_eps(x_0)` and
/// `T_{i+1} = f(T_i) ∩ B_eps(x_{i+1})`. The prefix is ε-shadowable through
/// step `k` iff `T_k` is nonempty.
pub fn shadow_survivors(f: &SystemMap, prefix: &[PointId], eps: &Rat) -> Vec<PointSet> {
    assert!(!prefix.is_empty(), "prefix must be nonempty");
    let balls = ball_table(f.space(), eps);
    let mut out = Vec::with_capacity(prefix.len());
    let mut cur = balls[prefix[0].0];
    out.push(cur);
    for x in &prefix[1..] {
        cur = f.apply_set(cur).intersect(balls[x.0]);
        out.push(cur);
    }
    out
}

/// Time-indexed survivor trace against a map sequence: the update at step `i`
/// uses `f_i`.
pub fn shadow_survivors_nonaut(
    f: &NonautonomousSystem,
    prefix: &[PointId],
    eps: &Rat,
) -> Vec<PointSet> {
    assert!(!prefix.is_empty(), "prefix must be nonempty");
    let balls = ball_table(f.space(), eps);
    let mut out = Vec::with_capacity(prefix.len());
    let mut cur = balls[prefix[0].0];
    out.push(cur);
    for (i, x) in prefix.iter().enumerate().skip(1) {
        cur = f.map_at(i - 1).apply_set(cur).intersect(balls[x.0]);
        out.push(cur);
    }
    out
}

/// Outcome of a shadowing decision: either every δ-pseudo-orbit is ε-shadowed,
/// or a shortest witness prefix that no orbit can ε-shadow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShadowingVerdict {
    Holds,
    Fails(ShadowingWitness),
}

impl ShadowingVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ShadowingVerdict::Holds)
    }

    pub fn witness(&self) -> Option<&ShadowingWitness> {
        match self {
            ShadowingVerdict::Holds => None,
            ShadowingVerdict::Fails(w) => Some(w),
        }
    }
}

/// A finite δ-pseudo-orbit prefix admitting no ε-shadowing point. Replaying it
/// through [`shadow_survivors`] ends in the empty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowingWitness {
    pub prefix: Vec<PointId>,
}

impl ShadowingWitness {
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn to_pseudo_orbit(&self, delta: Rat) -> PseudoOrbit {
        PseudoOrbit::finite(self.prefix.clone(), delta).expect("witness prefixes are nonempty")
    }
}

/// Decides whether every δ-pseudo-orbit of `f` (finite and infinite) is
/// ε-shadowed by a genuine `f`-orbit.
///
/// Breadth-first reachability over product states `(x, T)` where `x` is the
/// current pseudo-orbit point and `T` the survivor set; initial states are
/// `(x, B_eps(x))`, transitions follow δ-graph edges together with the
/// survivor update. FAILS iff a state with empty `T` is reachable, and the
/// breadth-first order makes the returned witness a shortest one. See the
/// module docs for why this finite search also covers infinite pseudo-orbits.
///
/// States dominated by an already-visited one are pruned: the survivor update
/// is monotone in `T`, so if `(x, T')` with `T' ⊆ T` has been discovered (no
/// later, since discovery is breadth-first), every point sequence that kills
/// `T` kills `T'` at the same step. The pruned search therefore reaches an
/// empty survivor iff the full search does, at the same minimal depth.
pub fn decide_shadowing(
    f: &SystemMap,
    eps: &Rat,
    delta: &Rat,
    budget: &Budget,
) -> Result<ShadowingVerdict, PseudoError> {
    if *eps <= Rat::zero() {
        return Err(PseudoError::RequiresPositive("epsilon"));
    }
    if *delta <= Rat::zero() {
        return Err(PseudoError::RequiresPositive("delta"));
    }
    let space = f.space();
    let n = space.len();
    if n > budget.max_points {
        return Err(PseudoError::PointCapExceeded {
            n,
            cap: budget.max_points,
        });
    }
    // With eps beyond the diameter every ball is the whole space and survivor
    // sets can never empty.
    if *eps > space.diameter() {
        return Ok(ShadowingVerdict::Holds);
    }

    let balls = ball_table(space, eps);
    let graph = DeltaGraph::new(f, delta);

    // BFS arena: states plus parent links for witness reconstruction, with a
    // per-point list of visited survivor sets for the domination check.
    let mut states: Vec<(PointId, PointSet)> = Vec::new();
    let mut parents: Vec<usize> = Vec::new();
    let mut visited: Vec<Vec<PointSet>> = vec![Vec::new(); n];
    let mut queue: VecDeque<usize> = VecDeque::new();

    let dominated = |visited: &[Vec<PointSet>], x: PointId, t: PointSet| {
        visited[x.0].iter().any(|s| s.is_subset_of(t))
    };

    for x in space.points() {
        let t = balls[x.0];
        if dominated(&visited, x, t) {
            continue;
        }
        if states.len() >= budget.max_states {
            return Err(PseudoError::BudgetExceeded {
                visited: states.len(),
            });
        }
        visited[x.0].push(t);
        states.push((x, t));
        parents.push(usize::MAX);
        queue.push_back(states.len() - 1);
    }

    while let Some(i) = queue.pop_front() {
        let (x, t) = states[i];
        let image = f.apply_set(t);
        for y in graph.successors(x).iter() {
            let t2 = image.intersect(balls[y.0]);
            if t2.is_empty() {
                let mut prefix = vec![y];
                let mut j = i;
                while j != usize::MAX {
                    prefix.push(states[j].0);
                    j = parents[j];
                }
                prefix.reverse();
                return Ok(ShadowingVerdict::Fails(ShadowingWitness { prefix }));
            }
            if dominated(&visited, y, t2) {
                continue;
            }
            if states.len() >= budget.max_states {
                return Err(PseudoError::BudgetExceeded {
                    visited: states.len(),
                });
            }
            visited[y.0].push(t2);
            states.push((y, t2));
            parents.push(i);
            queue.push_back(states.len() - 1);
        }
    }
    Ok(ShadowingVerdict::Holds)
}

/// Verdict of the exhaustive prefix enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForceVerdict {
    Holds,
    Fails(ShadowingWitness),
}

impl BruteForceVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, BruteForceVerdict::Holds)
    }

    pub fn witness(&self) -> Option<&ShadowingWitness> {
        match self {
            BruteForceVerdict::Holds => None,
            BruteForceVerdict::Fails(w) => Some(w),
        }
    }
}

/// Oracle for [`decide_shadowing`]: enumerates δ-graph path prefixes level by
/// level up to `horizon` steps and checks each discovered prefix through
/// [`shadow_survivors`].
///
/// All prefixes of a given length are covered implicitly: the survivor update
/// is deterministic given the next point, so prefixes sharing the pair
/// (last point, survivor set) are interchangeable for every future constraint
/// and one representative prefix per pair is enough. Enumeration stops early
/// once a level discovers no pair that was not already seen: from then on no
/// new pair, in particular no empty one, can ever appear. Since distinct pairs
/// number at most `n * 2^n`, a horizon of `n * 2^n` steps always reaches that
/// fixed point, which is why the oracle agrees with the decision procedure at
/// that horizon.
pub fn brute_force_shadowing(
    f: &SystemMap,
    eps: &Rat,
    delta: &Rat,
    horizon: usize,
    budget: &Budget,
) -> Result<BruteForceVerdict, PseudoError> {
    if *eps <= Rat::zero() {
        return Err(PseudoError::RequiresPositive("epsilon"));
    }
    if *delta <= Rat::zero() {
        return Err(PseudoError::RequiresPositive("delta"));
    }
    let space = f.space();
    let n = space.len();
    if n > budget.max_points {
        return Err(PseudoError::PointCapExceeded {
            n,
            cap: budget.max_points,
        });
    }
    let balls = ball_table(space, eps);
    let graph = DeltaGraph::new(f, delta);

    // Representative prefix per (point, survivor) pair, level-synchronous.
    let mut frontier: BTreeMap<(PointId, PointSet), Vec<PointId>> = BTreeMap::new();
    for x in space.points() {
        frontier.insert((x, balls[x.0]), vec![x]);
    }
    let mut seen: BTreeSet<(PointId, PointSet)> = frontier.keys().copied().collect();

    for _level in 1..=horizon {
        let mut next: BTreeMap<(PointId, PointSet), Vec<PointId>> = BTreeMap::new();
        for ((x, t), prefix) in &frontier {
            let image = f.apply_set(*t);
            for y in graph.successors(*x).iter() {
                let t2 = image.intersect(balls[y.0]);
                let mut extended = prefix.clone();
                extended.push(y);
                if t2.is_empty() {
                    let trace = shadow_survivors(f, &extended, eps);
                    assert!(
                        trace.last().is_some_and(PointSet::is_empty),
                        "survivor replay must confirm the failing prefix"
                    );
                    return Ok(BruteForceVerdict::Fails(ShadowingWitness {
                        prefix: extended,
                    }));
                }
                let key = (y, t2);
                if !seen.contains(&key) && !next.contains_key(&key) {
                    next.insert(key, extended);
                }
            }
        }
        if next.is_empty() {
            return Ok(BruteForceVerdict::Holds);
        }
        if seen.len() + next.len() > budget.max_states {
            return Err(PseudoError::BudgetExceeded {
                visited: seen.len() + next.len(),
            });
        }
        seen.extend(next.keys().copied());
        frontier = next;
    }
    Ok(BruteForceVerdict::Holds)
}

/// Default oracle horizon: an upper bound on the number of distinct
/// (point, survivor set) pairs, hence on the depth of any shortest failure.
pub fn oracle_horizon(n: usize) -> usize {
    n.saturating_mul(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))
}

/// A δ-threshold: a rational value with half-open semantics (the property
/// holds for every `δ <= value`), unbounded when every δ works, or zero when
/// no positive δ works.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    Zero,
    Value(Rat),
    Unbounded,
}

impl Threshold {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Threshold::Unbounded)
    }

    pub fn is_positive(&self) -> bool {
        !matches!(self, Threshold::Zero)
    }

    pub fn value(&self) -> Option<&Rat> {
        match self {
            Threshold::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn halved(&self) -> Threshold {
        match self {
            Threshold::Zero => Threshold::Zero,
            Threshold::Value(v) => Threshold::Value(v / rat_int(2)),
            Threshold::Unbounded => Threshold::Unbounded,
        }
    }
}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Threshold {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        use Threshold::*;
        match (self, other) {
            (Zero, Zero) | (Unbounded, Unbounded) => Ordering::Equal,
            (Zero, _) | (_, Unbounded) => Ordering::Less,
            (_, Zero) | (Unbounded, _) => Ordering::Greater,
            (Value(a), Value(b)) => a.cmp(b),
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Zero => write!(f, "0"),
            Threshold::Value(v) => write!(f, "{v}"),
            Threshold::Unbounded => write!(f, "inf"),
        }
    }
}

/// Distinct sorted positive values of `d(f(x), y)` over all pairs. Verdicts of
/// every δ-quantified property can only change when δ crosses one of these.
pub fn image_distance_values(f: &SystemMap) -> Vec<Rat> {
    let space = f.space();
    let mut vals = Vec::new();
    for x in space.points() {
        let fx = f.apply(x);
        for y in space.points() {
            let d = space.distance(fx, y);
            if *d > Rat::zero() {
                vals.push(d.clone());
            }
        }
    }
    distinct_sorted(vals)
}

/// Probe grid for δ-threshold searches: the image-distance values together
/// with the midpoints between consecutive ones.
pub fn delta_probe_grid(f: &SystemMap) -> Vec<Rat> {
    probe_grid(&image_distance_values(f))
}

/// Largest δ on the candidate grid for which (ε,δ)-shadowing holds, as a
/// half-open threshold, or [`Threshold::Unbounded`] when every δ works.
///
/// The verdict is antitone in δ (smaller δ admits fewer pseudo-orbits), so a
/// binary search over the probe grid is exact.
pub fn shadowing_modulus(f: &SystemMap, eps: &Rat, budget: &Budget) -> Result<Threshold, PseudoError> {
    threshold_search(&delta_probe_grid(f), |delta| {
        Ok(decide_shadowing(f, eps, delta, budget)?.holds())
    })
}

/// Generic largest-δ search over an ascending probe grid.
///
/// The predicate must be antitone in δ and constant on the gaps between
/// consecutive grid points (as well as below the smallest and above the
/// largest): this is the case for every property here, whose δ-dependence is
/// only through sets of the form `{d : d < δ}` with `d` ranging over the grid
/// values. One probe above the grid detects unboundedness, and a failure at
/// the smallest grid point means no positive δ works.
pub fn threshold_search<E>(
    grid: &[Rat],
    mut predicate: impl FnMut(&Rat) -> Result<bool, E>,
) -> Result<Threshold, E> {
    if grid.is_empty() {
        // No positive candidate value: one-point space, everything holds.
        return Ok(Threshold::Unbounded);
    }
    let top = grid.last().unwrap() + rat_int(1);
    if predicate(&top)? {
        return Ok(Threshold::Unbounded);
    }
    if !predicate(&grid[0])? {
        // The smallest candidate already fails. Below it the constraint set
        // is the same as at the smallest candidate (only zero-distance pairs
        // qualify), so no positive δ can work.
        return Ok(Threshold::Zero);
    }
    // Invariant: predicate(grid[lo]) is true, predicate(grid[hi]) is false
    // (hi == grid.len() means the off-grid top probe, already known false).
    let mut lo = 0usize;
    let mut hi = grid.len();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if predicate(&grid[mid])? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold::Value(grid[lo].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::space::Norm;
    use crate::system::orbit;
    use std::sync::Arc;

    fn rotation4() -> SystemMap {
        let coords = (0..4).map(|i| vec![rat(i, 4)]).collect();
        let labels = (0..4).map(|i| i.to_string()).collect();
        let space = FiniteMetricSpace::from_coords(labels, coords, Norm::Circle).unwrap();
        SystemMap::new(space, vec![1, 2, 3, 0]).unwrap()
    }

    fn line_space(n: usize) -> Arc<FiniteMetricSpace> {
        let coords = (0..n).map(|i| vec![rat(i as i64, n as i64)]).collect();
        let labels = (0..n).map(|i| i.to_string()).collect();
        FiniteMetricSpace::from_coords(labels, coords, Norm::L1).unwrap()
    }

    /// Direct restatement of the shadowing definition for finite prefixes:
    /// some z has d(f^i(z), x_i) < eps at every index.
    fn directly_shadowable(f: &SystemMap, prefix: &[PointId], eps: &Rat) -> bool {
        let space = f.space();
        space.points().any(|z| {
            orbit(f, z, prefix.len() - 1)
                .iter()
                .zip(prefix)
                .all(|(a, b)| space.distance(*a, *b) < eps)
        })
    }

    #[test]
    fn pseudo_orbit_checks() {
        let f = rotation4();
        // any true orbit is a pseudo-orbit for any positive delta
        let o = orbit(&f, PointId(2), 6);
        let po = PseudoOrbit::finite(o, rat(1, 100)).unwrap();
        assert!(is_pseudo_orbit(&f, &po, &rat(1, 100)));
        // constant-0 periodic sequence: step distance d(f(0), 0) = 1/4
        let constant = PseudoOrbit::new(vec![], vec![PointId(0)], rat(3, 10)).unwrap();
        assert!(is_pseudo_orbit(&f, &constant, &rat(3, 10)));
        assert_eq!(
            first_pseudo_orbit_violation(&f, &constant, &rat(1, 4)),
            Some(0)
        );
    }

    #[test]
    fn delta_graph_edges() {
        let f = rotation4();
        // tiny delta keeps only the functional graph
        let g = DeltaGraph::new(&f, &rat(1, 4));
        for x in f.space().points() {
            assert_eq!(
                g.successors(x).iter().collect::<Vec<_>>(),
                vec![f.apply(x)]
            );
        }
        // delta beyond the diameter gives the complete digraph
        let g = DeltaGraph::new(&f, &rat(3, 4));
        for x in f.space().points() {
            assert_eq!(g.successors(x).len(), 4);
        }
        // delta = 3/10 admits y with d(f(x), y) in {0, 1/4}: both circle
        // neighbors of f(x), i.e. x itself, f(x), and x+2. Confirmed by the
        // brute scan below.
        let g = DeltaGraph::new(&f, &rat(3, 10));
        for x in 0..4usize {
            let expect: Vec<PointId> = (0..4usize)
                .filter(|&y| {
                    f.space().distance(f.apply(PointId(x)), PointId(y)) < &rat(3, 10)
                })
                .map(PointId)
                .collect();
            assert_eq!(g.successors(PointId(x)).iter().collect::<Vec<_>>(), expect);
            let mut sorted = [x, (x + 1) % 4, (x + 2) % 4];
            sorted.sort_unstable();
            assert_eq!(
                g.successors(PointId(x)).iter().map(|p| p.0).collect::<Vec<_>>(),
                sorted.to_vec()
            );
        }
    }

    #[test]
    fn delta_graph_monotone_in_delta() {
        let f = rotation4();
        let small = DeltaGraph::new(&f, &rat(1, 4));
        let big = DeltaGraph::new(&f, &rat(2, 4));
        for x in f.space().points() {
            assert!(small.successors(x).is_subset_of(big.successors(x)));
            assert!(small.successors(x).contains(f.apply(x)));
        }
    }

    #[test]
    fn survivor_trace_of_constant_zero() {
        let f = rotation4();
        let eps = rat(2, 5);
        let prefix = vec![PointId(0); 5];
        let trace = shadow_survivors(&f, &prefix, &eps);
        // Cross-check every stage against the direct definition before
        // trusting the frozen sets below: T_k must be exactly the set of
        // current positions f^k(z) over all z whose orbit shadows the prefix.
        for (k, t) in trace.iter().enumerate() {
            let mut expect = PointSet::EMPTY;
            for z in f.space().points() {
                let shadows = orbit(&f, z, k)
                    .iter()
                    .zip(&prefix)
                    .all(|(a, b)| f.space().distance(*a, *b) < &eps);
                if shadows {
                    expect.insert(f.iterate(z, k));
                }
            }
            assert_eq!(*t, expect, "survivor stage {k} disagrees with z-scan");
        }
        let sets: Vec<Vec<usize>> = trace
            .iter()
            .map(|t| t.iter().map(|p| p.0).collect())
            .collect();
        assert_eq!(
            sets,
            vec![vec![0, 1, 3], vec![0, 1], vec![1], vec![], vec![]]
        );
        // shadowability through step k must agree with the direct z-scan
        for k in 0..prefix.len() {
            assert_eq!(
                !trace[k].is_empty(),
                directly_shadowable(&f, &prefix[..=k], &eps)
            );
        }
    }

    #[test]
    fn survivor_trace_beyond_diameter_never_empties() {
        let f = rotation4();
        // eps beyond the diameter: every ball is the full space, so the
        // trace is the chain of forward images of X and never empties
        let eps = rat_int(2);
        let prefix = [0usize, 2, 1, 3, 0, 0].map(PointId);
        let trace = shadow_survivors(&f, &prefix, &eps);
        let mut expect = PointSet::full(4);
        for t in &trace {
            assert_eq!(*t, expect);
            assert!(!t.is_empty());
            expect = f.apply_set(expect);
        }
    }

    #[test]
    fn survivor_trace_contains_true_orbit() {
        let f = rotation4();
        let z = PointId(1);
        let o = orbit(&f, z, 5);
        let trace = shadow_survivors(&f, &o, &rat(1, 10));
        for (k, t) in trace.iter().enumerate() {
            assert!(t.contains(f.iterate(z, k)));
        }
    }

    #[test]
    fn decide_rotation_examples() {
        let f = rotation4();
        let budget = Budget::default();
        // tiny delta admits only true orbits
        let v = decide_shadowing(&f, &rat(1, 10), &rat(1, 4), &budget).unwrap();
        assert!(v.holds());
        // the documented failure, with its shortest witness
        let v = decide_shadowing(&f, &rat(2, 5), &rat(3, 10), &budget).unwrap();
        let w = v.witness().expect("must fail");
        assert_eq!(w.prefix, vec![PointId(0); 4]);
        // epsilon beyond the diameter
        let v = decide_shadowing(&f, &rat(3, 5), &rat(100, 1), &budget).unwrap();
        assert!(v.holds());
    }

    #[test]
    fn witness_replays_to_empty_survivors() {
        let f = rotation4();
        let eps = rat(2, 5);
        let delta = rat(3, 10);
        let v = decide_shadowing(&f, &eps, &delta, &Budget::default()).unwrap();
        let w = v.witness().unwrap();
        let po = w.to_pseudo_orbit(delta.clone());
        assert!(is_pseudo_orbit(&f, &po, &delta));
        let trace = shadow_survivors(&f, &w.prefix, &eps);
        assert!(trace.last().unwrap().is_empty());
        // all earlier stages nonempty: the witness is minimal
        assert!(trace[..trace.len() - 1].iter().all(|t| !t.is_empty()));
    }

    #[test]
    fn brute_force_agrees_on_rotation() {
        let f = rotation4();
        let budget = Budget::default();
        let horizon = oracle_horizon(4);
        let bf = brute_force_shadowing(&f, &rat(2, 5), &rat(3, 10), horizon, &budget).unwrap();
        let de = decide_shadowing(&f, &rat(2, 5), &rat(3, 10), &budget).unwrap();
        assert_eq!(bf.witness().unwrap().len(), de.witness().unwrap().len());
        let bf = brute_force_shadowing(&f, &rat(1, 10), &rat(1, 4), horizon, &budget).unwrap();
        assert!(bf.holds());
    }

    #[test]
    fn brute_force_identity_tiny_delta() {
        let space = line_space(5);
        let id = SystemMap::identity(space);
        let v =
            brute_force_shadowing(&id, &rat(1, 10), &rat(1, 100), 200, &Budget::default()).unwrap();
        assert!(v.holds());
    }

    #[test]
    fn modulus_rotation_quarter() {
        let f = rotation4();
        let t = shadowing_modulus(&f, &rat(2, 5), &Budget::default()).unwrap();
        assert_eq!(t, Threshold::Value(rat(1, 4)));
        // epsilon beyond the diameter: unbounded sentinel
        let t = shadowing_modulus(&f, &rat(3, 5), &Budget::default()).unwrap();
        assert_eq!(t, Threshold::Unbounded);
    }

    #[test]
    fn modulus_monotone_in_eps() {
        let space = line_space(5);
        let f = SystemMap::new(space, vec![2, 0, 3, 1, 4]).unwrap();
        let budget = Budget::default();
        let grid = crate::rational::probe_grid(&f.space().pairwise_distances());
        let mut prev: Option<Threshold> = None;
        for eps in grid {
            let t = shadowing_modulus(&f, &eps, &budget).unwrap();
            if let Some(p) = prev {
                assert!(t >= p, "modulus must be nondecreasing in epsilon");
            }
            prev = Some(t);
        }
    }

    #[test]
    fn monotone_in_both_arguments() {
        let space = line_space(5);
        let f = SystemMap::new(space, vec![1, 3, 0, 2, 2]).unwrap();
        let budget = Budget::default();
        let eps_grid = [rat(1, 5), rat(2, 5), rat(3, 5)];
        let delta_grid = [rat(1, 10), rat(1, 5), rat(2, 5)];
        for (i, eps) in eps_grid.iter().enumerate() {
            for (j, delta) in delta_grid.iter().enumerate() {
                if !decide_shadowing(&f, eps, delta, &budget).unwrap().holds() {
                    continue;
                }
                // holds here implies holds at larger eps / smaller delta
                for eps2 in &eps_grid[i..] {
                    for delta2 in &delta_grid[..=j] {
                        assert!(
                            decide_shadowing(&f, eps2, delta2, &budget).unwrap().holds(),
                            "monotonicity violated at eps={eps2} delta={delta2}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn nonaut_pseudo_orbit_window() {
        let f = rotation4();
        let g = rotation4();
        let seq = NonautonomousSystem::new(vec![f.clone()], vec![g.clone()]).unwrap();
        let o = crate::system::orbit_nonaut(&seq, PointId(0), 8);
        let po = PseudoOrbit::finite(o, rat(1, 10)).unwrap();
        assert!(is_pseudo_orbit_nonaut(&seq, &po, &rat(1, 10)));
    }

    #[test]
    fn budget_and_cap_errors() {
        let f = rotation4();
        let tight = Budget {
            max_states: 2,
            max_points: 64,
        };
        // a HOLDS instance forces full exploration, which the cap interrupts
        let r = decide_shadowing(&f, &rat(2, 5), &rat(1, 4), &tight);
        assert!(matches!(r, Err(PseudoError::BudgetExceeded { .. })));
        let capped = Budget {
            max_states: 1000,
            max_points: 2,
        };
        let r = decide_shadowing(&f, &rat(1, 5), &rat(2, 5), &capped);
        assert!(matches!(r, Err(PseudoError::PointCapExceeded { .. })));
    }
}
