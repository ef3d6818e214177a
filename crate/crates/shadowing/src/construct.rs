//! Constructive realization of pseudo-orbits and finite-support perturbations.
//!
//! The operations here build nearby systems with prescribed orbits: a
//! δ-pseudo-orbit becomes a genuine orbit of a map sequence at sup-distance at
//! most δ (one redirected point per time step), a consistent pseudo-orbit
//! becomes an orbit of a single nearby map, repeating pseudo-cycles compress
//! to simple ones, and maps get redefined on finite supports subject to a
//! continuity class.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::pseudo::{
    first_pseudo_orbit_violation, first_pseudo_orbit_violation_nonaut, image_distance_values,
    threshold_search, Budget, PseudoOrbit, Threshold,
};
use crate::rational::Rat;
use crate::space::{PointId, PointSet};
use crate::system::{
    orbit, orbit_nonaut, sup_distance, sup_distance_seq, ContinuityClass, NonautonomousSystem,
    SystemMap,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("sequence is not functionally consistent: points {i} and {j} coincide with different successors")]
    Inconsistent { i: usize, j: usize },
    #[error("not a pseudo-orbit at the required bound: step {index} too wide")]
    NotPseudoOrbit { index: usize },
    #[error("realization over all time needs an eventually periodic sequence")]
    NotEventuallyPeriodic,
    #[error("cycle precondition fails at step {index}")]
    CycleBound { index: usize },
    #[error("no unused substitute within beta at index {index}")]
    PoolExhausted { index: usize, point: PointId },
    #[error("target values stray {at} beyond epsilon from the base map")]
    SupportTooFar { at: PointId },
    #[error("pseudo-orbit delta {delta} exceeds the class modulus {modulus}")]
    DeltaAboveModulus { delta: Rat, modulus: Rat },
    #[error("no class-admissible completion exists")]
    Infeasible,
    #[error("no class-admissible perturbation at step {step}")]
    InfeasibleAtStep { step: usize },
    #[error("sequence too short: index {index} required")]
    OutOfRange { index: usize },
    #[error("completion search exceeded the state budget ({visited} nodes)")]
    SearchBudget { visited: usize },
}

/// A system realizing a requested sequence as a genuine orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealizedSystem {
    Autonomous(SystemMap),
    Nonautonomous(NonautonomousSystem),
}

/// Output of the realization operations: the nearby system, the starting
/// point, and the exact achieved sup-distance to the input system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationResult {
    pub system: RealizedSystem,
    pub start: PointId,
    pub rho_bound: Rat,
}

impl RealizationResult {
    /// The orbit of `start` under the realized system, `horizon + 1` points.
    pub fn replay(&self, horizon: usize) -> Vec<PointId> {
        match &self.system {
            RealizedSystem::Autonomous(g) => orbit(g, self.start, horizon),
            RealizedSystem::Nonautonomous(g) => orbit_nonaut(g, self.start, horizon),
        }
    }
}

/// Realizes a pseudo-orbit of a map sequence as a genuine orbit of a nearby
/// sequence: each `g_i` equals `f_i` except `g_i(x_i) = x_{i+1}`.
///
/// Requires `xs` eventually periodic so the resulting sequence is finitely
/// representable; the preperiod stretches to cover both preperiods and the
/// period to the lcm of both periods, after which the redirected pairs repeat.
pub fn realize_nonautonomous(
    f: &NonautonomousSystem,
    xs: &PseudoOrbit,
) -> Result<RealizationResult, ConstructError> {
    if !xs.is_eventually_periodic() {
        return Err(ConstructError::NotEventuallyPeriodic);
    }
    if let Some(i) = first_pseudo_orbit_violation_nonaut(f, xs, xs.delta()) {
        return Err(ConstructError::NotPseudoOrbit { index: i });
    }
    let pre = f.preperiod_len().max(xs.preperiod().len());
    let cycle = f.period_len().lcm(&xs.period().len());
    let mut maps = Vec::with_capacity(pre + cycle);
    for i in 0..pre + cycle {
        maps.push(
            f.map_at(i)
                .with_image(xs.point_at(i), xs.point_at(i + 1)),
        );
    }
    let period = maps.split_off(pre);
    let g = NonautonomousSystem::new(maps, period).expect("period is nonempty by construction");
    let rho_bound = sup_distance_seq(f, &g).expect("realization stays on one space");
    Ok(RealizationResult {
        system: RealizedSystem::Nonautonomous(g),
        start: xs.start(),
        rho_bound,
    })
}

/// First pair `(i, j)`, lexicographically, with `x_i = x_j` but
/// `x_{i+1} != x_{j+1}`; `Ok` when equal points always have equal successors.
///
/// For eventually periodic sequences every distinct (point, successor) pair
/// occurs within one window, and any violating pair reduces modulo the period
/// to one with both indices inside the window, so the scan is complete.
pub fn check_consistency(xs: &PseudoOrbit) -> Result<(), (usize, usize)> {
    let last_step = if xs.is_eventually_periodic() {
        xs.window_len()
    } else {
        xs.window_len().saturating_sub(1)
    };
    // indices with a defined successor are 0..last_step
    for i in 0..last_step {
        for j in (i + 1)..last_step {
            if xs.point_at(i) == xs.point_at(j) && xs.point_at(i + 1) != xs.point_at(j + 1) {
                return Err((i, j));
            }
        }
    }
    Ok(())
}

fn prefix_inconsistency(prefix: &[PointId]) -> Option<(usize, usize)> {
    let steps = prefix.len().saturating_sub(1);
    for i in 0..steps {
        for j in (i + 1)..steps {
            if prefix[i] == prefix[j] && prefix[i + 1] != prefix[j + 1] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Realizes a consistent pseudo-orbit as an orbit of a single nearby map:
/// `g(x_i) = x_{i+1}` on the support, `g = f` elsewhere.
pub fn realize_autonomous(
    f: &SystemMap,
    xs: &PseudoOrbit,
) -> Result<RealizationResult, ConstructError> {
    if let Err((i, j)) = check_consistency(xs) {
        return Err(ConstructError::Inconsistent { i, j });
    }
    if let Some(i) = first_pseudo_orbit_violation(f, xs, xs.delta()) {
        return Err(ConstructError::NotPseudoOrbit { index: i });
    }
    let steps = if xs.is_eventually_periodic() {
        xs.window_len()
    } else {
        xs.window_len() - 1
    };
    let mut g = f.clone();
    for i in 0..steps {
        g = g.with_image(xs.point_at(i), xs.point_at(i + 1));
    }
    let rho_bound = sup_distance(f, &g).expect("same space");
    Ok(RealizationResult {
        system: RealizedSystem::Autonomous(g),
        start: xs.start(),
        rho_bound,
    })
}

/// Compresses a repeating γ-pseudo-cycle at `p` to a simple one by repeatedly
/// splicing out the loop between the earliest repeated element and its next
/// occurrence (minimal `n`, then minimal `t`). Gluing is sound because the
/// removed block starts and ends at the same point, so the bridging edge
/// `d(f(y_n), y_{n+t+1}) < γ` is the edge that closed the block.
pub fn compress_loops(
    ys: &[PointId],
    f: &SystemMap,
    gamma: &Rat,
) -> Result<Vec<PointId>, ConstructError> {
    if ys.is_empty() {
        return Err(ConstructError::OutOfRange { index: 0 });
    }
    let space = f.space();
    let n = ys.len();
    for i in 0..n {
        let next = ys[(i + 1) % n];
        if space.distance(f.apply(ys[i]), next) >= gamma {
            return Err(ConstructError::CycleBound { index: i });
        }
    }
    let mut zs = ys.to_vec();
    loop {
        let mut removal: Option<(usize, usize)> = None;
        'outer: for n0 in 0..zs.len() {
            for t in 1..zs.len() - n0 {
                if zs[n0 + t] == zs[n0] {
                    removal = Some((n0, t));
                    break 'outer;
                }
            }
        }
        match removal {
            Some((n0, t)) => {
                zs.drain(n0 + 1..=n0 + t);
            }
            None => break,
        }
    }
    debug_assert_eq!(zs[0], ys[0]);
    debug_assert!((0..zs.len())
        .all(|i| space.distance(f.apply(zs[i]), zs[(i + 1) % zs.len()]) < gamma));
    Ok(zs)
}

/// Rewrites a pseudo-orbit prefix into an injective one where possible:
/// each point is kept on first use and replaced by the nearest unused member
/// of its β-pool on later uses. `fresh_pool[x]` lists candidate substitutes
/// for point `x`; candidates at distance β or more are ignored.
///
/// On a finite space the pool can run dry; that is a reportable outcome
/// ([`ConstructError::PoolExhausted`]), not a panic.
pub fn perturb_to_injective(
    f: &SystemMap,
    xs: &[PointId],
    beta: &Rat,
    fresh_pool: &[Vec<PointId>],
) -> Result<Vec<PointId>, ConstructError> {
    let space = f.space();
    let mut used = PointSet::EMPTY;
    let mut ys = Vec::with_capacity(xs.len());
    for (index, &x) in xs.iter().enumerate() {
        let y = if !used.contains(x) {
            x
        } else {
            let mut candidates: Vec<PointId> = fresh_pool
                .get(x.0)
                .map(|pool| {
                    pool.iter()
                        .copied()
                        .filter(|c| !used.contains(*c) && space.distance(*c, x) < beta)
                        .collect()
                })
                .unwrap_or_default();
            candidates.sort_by(|a, b| {
                space
                    .distance(*a, x)
                    .cmp(space.distance(*b, x))
                    .then(a.cmp(b))
            });
            *candidates
                .first()
                .ok_or(ConstructError::PoolExhausted { index, point: x })?
        };
        used.insert(y);
        ys.push(y);
    }
    Ok(ys)
}

/// The full β-balls (minus the center's own slot only when listed) as a
/// default fresh pool: `pool[x] = { y : d(y, x) < beta }`.
pub fn beta_ball_pool(f: &SystemMap, beta: &Rat) -> Vec<Vec<PointId>> {
    let space = f.space();
    space
        .points()
        .map(|x| space.ball(x, beta).iter().collect())
        .collect()
}

/// Verifies the conclusion of the loop-compression distance estimate
/// directly: `d(x_{M+i}, f^i(x_M)) < bound` for `0 <= i <= P`. Returns the
/// first violating `i`, or `None` when the bound holds throughout.
pub fn telescoping_bound_check(
    f: &SystemMap,
    xs: &PseudoOrbit,
    m: usize,
    p: usize,
    gamma_p: &Rat,
    bound: &Rat,
) -> Result<Option<usize>, ConstructError> {
    if let Some(i) = first_pseudo_orbit_violation(f, xs, gamma_p) {
        return Err(ConstructError::NotPseudoOrbit { index: i });
    }
    if !xs.is_eventually_periodic() && m + p >= xs.window_len() {
        return Err(ConstructError::OutOfRange { index: m + p });
    }
    let space = f.space();
    let base = xs.point_at(m);
    for i in 0..=p {
        if space.distance(xs.point_at(m + i), f.iterate(base, i)) >= bound {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Largest γ (half-open) such that `d(a,b) < γ` forces
/// `d(f^i(a), f^i(b)) < bound` for all `i < steps`: the exact modulus of
/// uniform continuity of the first `steps` iterates.
pub fn iteration_modulus(f: &SystemMap, steps: usize, bound: &Rat) -> Threshold {
    let space = f.space();
    let mut worst: Option<Rat> = None;
    for a in space.points() {
        for b in space.points() {
            if b <= a {
                continue;
            }
            let violates = (0..steps)
                .any(|i| space.distance(f.iterate(a, i), f.iterate(b, i)) >= bound);
            if violates {
                let d = space.distance(a, b);
                if worst.as_ref().is_none_or(|w| d < w) {
                    worst = Some(d.clone());
                }
            }
        }
    }
    match worst {
        // every pair below its own distance is fine: γ = min violating distance
        Some(v) => {
            if v.is_zero() {
                Threshold::Zero
            } else {
                Threshold::Value(v)
            }
        }
        None => Threshold::Unbounded,
    }
}

/// A request to redefine a map on a finite support under a continuity class.
#[derive(Debug, Clone)]
pub struct PerturbationRequest {
    pub base: SystemMap,
    /// Prescribed values on the support.
    pub target: BTreeMap<PointId, PointId>,
    pub class: ContinuityClass,
    pub epsilon: Rat,
}

/// Completes a finite-support redefinition into a class-admissible map `g`
/// with `g = target` on the support and `rho(base, g) < epsilon`.
///
/// For the unrestricted class this is pointwise redefinition. For a Lipschitz
/// class the canonical completion (base map off the support) is tried first;
/// if it violates the class, a deterministic backtracking search over
/// admissible completions runs, trying points in index order and candidate
/// images in index order, so the result is reproducible. `Infeasible` is a
/// legitimate outcome: a Lipschitz constraint can be unsatisfiable.
pub fn perturb_finite_support(
    req: &PerturbationRequest,
    budget: &Budget,
) -> Result<SystemMap, ConstructError> {
    let f = &req.base;
    let space = f.space();
    // Necessary part of the precondition, and exactly the class-δ for the
    // unrestricted class: prescribed values must sit strictly inside the
    // epsilon ball of the base image.
    for (&p, &q) in &req.target {
        if space.distance(f.apply(p), q) >= &req.epsilon {
            return Err(ConstructError::SupportTooFar { at: p });
        }
    }
    let mut canonical = f.clone();
    for (&p, &q) in &req.target {
        canonical = canonical.with_image(p, q);
    }
    if req.class.admits(&canonical) {
        return Ok(canonical);
    }
    let lipschitz = match &req.class {
        ContinuityClass::All => unreachable!("the unrestricted class admits every map"),
        ContinuityClass::Lipschitz(l) => l.clone(),
    };

    // Backtracking over images for the free points.
    let n = space.len();
    let mut assigned: Vec<Option<PointId>> = vec![None; n];
    for (&p, &q) in &req.target {
        assigned[p.0] = Some(q);
    }
    // support values must be mutually Lipschitz-consistent
    let pairs_ok = |assigned: &[Option<PointId>], p: PointId, q: PointId| {
        assigned.iter().enumerate().all(|(other, img)| {
            let Some(img) = img else { return true };
            let other = PointId(other);
            if other == p {
                return true;
            }
            space.distance(q, *img) <= &(&lipschitz * space.distance(p, other))
        })
    };
    for (&p, &q) in &req.target {
        let mut rest = assigned.clone();
        rest[p.0] = None;
        if !pairs_ok(&rest, p, q) {
            return Err(ConstructError::Infeasible);
        }
    }

    let free: Vec<PointId> = space.points().filter(|p| assigned[p.0].is_none()).collect();
    let mut visited = 0usize;
    fn search(
        f: &SystemMap,
        lipschitz: &Rat,
        epsilon: &Rat,
        free: &[PointId],
        k: usize,
        assigned: &mut Vec<Option<PointId>>,
        visited: &mut usize,
        max_nodes: usize,
        pairs_ok: &impl Fn(&[Option<PointId>], PointId, PointId) -> bool,
    ) -> Result<bool, ConstructError> {
        if k == free.len() {
            return Ok(true);
        }
        let space = f.space();
        let p = free[k];
        for q in space.points() {
            if space.distance(f.apply(p), q) >= epsilon {
                continue;
            }
            *visited += 1;
            if *visited > max_nodes {
                return Err(ConstructError::SearchBudget { visited: *visited });
            }
            if !pairs_ok(assigned, p, q) {
                continue;
            }
            assigned[p.0] = Some(q);
            if search(
                f, lipschitz, epsilon, free, k + 1, assigned, visited, max_nodes, pairs_ok,
            )? {
                return Ok(true);
            }
            assigned[p.0] = None;
        }
        Ok(false)
    }
    let found = search(
        f,
        &lipschitz,
        &req.epsilon,
        &free,
        0,
        &mut assigned,
        &mut visited,
        budget.max_states,
        &pairs_ok,
    )?;
    if !found {
        return Err(ConstructError::Infeasible);
    }
    let image = assigned
        .into_iter()
        .map(|q| q.expect("search assigned every point").0)
        .collect();
    Ok(SystemMap::new(space.clone(), image).expect("assignments stay in range"))
}

/// Single-pair perturbation: a class-admissible `g` with `g(x) = y` and
/// `rho(f, g) < epsilon`.
pub fn weak_perturb(
    f: &SystemMap,
    x: PointId,
    y: PointId,
    class: &ContinuityClass,
    epsilon: &Rat,
    budget: &Budget,
) -> Result<SystemMap, ConstructError> {
    let req = PerturbationRequest {
        base: f.clone(),
        target: BTreeMap::from([(x, y)]),
        class: class.clone(),
        epsilon: epsilon.clone(),
    };
    perturb_finite_support(&req, budget)
}

/// Largest δ (half-open) such that every single-pair redefinition within δ of
/// the base image admits a class-completion within `epsilon`: the weak
/// perturbation modulus of `f` for the class, found by bisection over the
/// candidate grid of image distances.
pub fn weak_perturb_modulus(
    f: &SystemMap,
    class: &ContinuityClass,
    epsilon: &Rat,
    budget: &Budget,
) -> Result<Threshold, ConstructError> {
    if matches!(class, ContinuityClass::All) {
        return Ok(Threshold::Value(epsilon.clone()));
    }
    let space = f.space();
    let grid: Vec<Rat> = crate::rational::probe_grid(&image_distance_values(f))
        .into_iter()
        .filter(|v| v <= epsilon)
        .collect();
    threshold_search(&grid, |d| {
        for x in space.points() {
            for y in space.points() {
                if space.distance(f.apply(x), y) >= d {
                    continue;
                }
                match weak_perturb(f, x, y, class, epsilon, budget) {
                    Ok(_) => {}
                    // a pair beyond epsilon can never complete, so a probe
                    // admitting it is already too large
                    Err(ConstructError::Infeasible | ConstructError::SupportTooFar { .. }) => {
                        return Ok(false)
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(true)
    })
}

/// Realizes a pseudo-orbit of the constant sequence `f, f, ...` as an orbit
/// of a sequence of class-admissible maps, one weak perturbation per step.
///
/// Requires the pseudo-orbit bound to sit at or below the class's weak
/// perturbation modulus for `epsilon`. A finite prefix is continued by `f`
/// itself after its last step.
pub fn realize_by_continuous_sequence(
    f: &SystemMap,
    xs: &PseudoOrbit,
    class: &ContinuityClass,
    epsilon: &Rat,
    budget: &Budget,
) -> Result<RealizationResult, ConstructError> {
    if let Some(i) = first_pseudo_orbit_violation(f, xs, xs.delta()) {
        return Err(ConstructError::NotPseudoOrbit { index: i });
    }
    let modulus = weak_perturb_modulus(f, class, epsilon, budget)?;
    let ok = match &modulus {
        Threshold::Unbounded => true,
        Threshold::Zero => false,
        Threshold::Value(v) => xs.delta() <= v,
    };
    if !ok {
        let shown = match modulus {
            Threshold::Value(v) => v,
            _ => Rat::zero(),
        };
        return Err(ConstructError::DeltaAboveModulus {
            delta: xs.delta().clone(),
            modulus: shown,
        });
    }
    let (pre_len, cycle_len) = if xs.is_eventually_periodic() {
        (xs.preperiod().len(), xs.period().len())
    } else {
        (xs.window_len() - 1, 0)
    };
    let mut maps = Vec::with_capacity(pre_len + cycle_len.max(1));
    for i in 0..pre_len + cycle_len {
        let g = weak_perturb(f, xs.point_at(i), xs.point_at(i + 1), class, epsilon, budget)
            .map_err(|e| match e {
                ConstructError::Infeasible => ConstructError::InfeasibleAtStep { step: i },
                other => other,
            })?;
        maps.push(g);
    }
    let period = if cycle_len > 0 {
        maps.split_off(pre_len)
    } else {
        vec![f.clone()]
    };
    let g = NonautonomousSystem::new(maps, period).expect("period nonempty");
    let rho_bound = sup_distance_seq(&NonautonomousSystem::constant(f.clone()), &g)
        .expect("same space");
    Ok(RealizationResult {
        system: RealizedSystem::Nonautonomous(g),
        start: xs.start(),
        rho_bound,
    })
}

/// Realizes the first `n_steps` steps of a consistent pseudo-orbit by a single
/// class-admissible map within `target_delta` of `f`: the support is the
/// prefix `{x_i : i < n_steps}` with prescribed successors, completed by
/// [`perturb_finite_support`].
pub fn realize_prefix_continuous(
    f: &SystemMap,
    xs: &PseudoOrbit,
    n_steps: usize,
    class: &ContinuityClass,
    target_delta: &Rat,
    budget: &Budget,
) -> Result<RealizationResult, ConstructError> {
    if !xs.is_eventually_periodic() && n_steps >= xs.window_len() {
        return Err(ConstructError::OutOfRange { index: n_steps });
    }
    let prefix = xs.prefix(n_steps + 1);
    if let Some((i, j)) = prefix_inconsistency(&prefix) {
        return Err(ConstructError::Inconsistent { i, j });
    }
    if let Some(i) = first_pseudo_orbit_violation(f, xs, xs.delta()) {
        return Err(ConstructError::NotPseudoOrbit { index: i });
    }
    let modulus = weak_perturb_modulus(f, class, target_delta, budget)?;
    let ok = match &modulus {
        Threshold::Unbounded => true,
        Threshold::Zero => n_steps == 0,
        Threshold::Value(v) => xs.delta() <= v,
    };
    if !ok {
        let shown = match modulus {
            Threshold::Value(v) => v,
            _ => Rat::zero(),
        };
        return Err(ConstructError::DeltaAboveModulus {
            delta: xs.delta().clone(),
            modulus: shown,
        });
    }
    let mut target = BTreeMap::new();
    for i in 0..n_steps {
        target.insert(prefix[i], prefix[i + 1]);
    }
    let req = PerturbationRequest {
        base: f.clone(),
        target,
        class: class.clone(),
        epsilon: target_delta.clone(),
    };
    let g = perturb_finite_support(&req, budget)?;
    let rho_bound = sup_distance(f, &g).expect("same space");
    Ok(RealizationResult {
        system: RealizedSystem::Autonomous(g),
        start: prefix[0],
        rho_bound,
    })
}
