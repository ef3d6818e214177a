//! Shared generators for the integration suites. Everything is seeded and
//! deterministic. Not every suite uses every helper.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shadowing::pseudo::PseudoOrbit;
use shadowing::rational::{probe_grid, rat_int, Rat};
use shadowing::space::PointId;
use shadowing::system::{orbit_structure, NonautonomousSystem, SystemMap};
use shadowing::zoo::{build_zoo, ZooSpec};

/// Seeded random system from the zoo's random family.
pub fn random_system(points: usize, seed: u64) -> SystemMap {
    build_zoo(&ZooSpec::Random { points, seed }).expect("zoo random systems build")
}

/// ε probe grid: pairwise distances, their midpoints, and one value beyond
/// the diameter.
pub fn eps_probes(f: &SystemMap) -> Vec<Rat> {
    let space = f.space();
    let mut grid = probe_grid(&space.pairwise_distances());
    grid.push(space.diameter() + rat_int(1));
    grid
}

/// δ probe grid: image distances, midpoints, and one value beyond the top.
pub fn delta_probes(f: &SystemMap) -> Vec<Rat> {
    let mut grid = shadowing::pseudo::delta_probe_grid(f);
    let top = grid.last().cloned().unwrap_or_else(|| rat_int(1)) + rat_int(1);
    grid.push(top);
    grid
}

/// Random map within δ of `f`; every image drawn from its δ-ball.
pub fn nearby_map(f: &SystemMap, delta: &Rat, rng: &mut impl Rng) -> SystemMap {
    shadowing::analyze::sample_map_within(f, delta, rng)
}

/// A consistent δ-pseudo-orbit of `f`: the orbit of a random start under a
/// random committed map within δ, eventually periodic by construction.
pub fn random_consistent_pseudo_orbit(
    f: &SystemMap,
    delta: &Rat,
    rng: &mut impl Rng,
) -> PseudoOrbit {
    let c = nearby_map(f, delta, rng);
    let start = PointId(rng.gen_range(0..f.space().len()));
    let (pre, cycle) = orbit_structure(&c, start);
    PseudoOrbit::new(pre, cycle, delta.clone()).expect("orbits are nonempty")
}

/// A finite consistent δ-pseudo-orbit prefix of bounded length.
pub fn random_consistent_prefix(
    f: &SystemMap,
    delta: &Rat,
    max_len: usize,
    rng: &mut impl Rng,
) -> Vec<PointId> {
    let c = nearby_map(f, delta, rng);
    let start = PointId(rng.gen_range(0..f.space().len()));
    let len = rng.gen_range(1..=max_len.max(1));
    shadowing::system::orbit(&c, start, len)
}

/// Random eventually periodic system: per-slot random maps.
pub fn random_nonaut_system(points: usize, seed: u64) -> NonautonomousSystem {
    let base = random_system(points, seed);
    let space = base.space().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = space.len();
    let random_map = |rng: &mut ChaCha8Rng| {
        let image: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        SystemMap::new(space.clone(), image).expect("image in range")
    };
    let pre_len = rng.gen_range(0..2);
    let period_len = rng.gen_range(1..=2);
    let pre = (0..pre_len).map(|_| random_map(&mut rng)).collect();
    let period = (0..period_len).map(|_| random_map(&mut rng)).collect();
    NonautonomousSystem::new(pre, period).expect("period nonempty")
}

/// An eventually periodic δ-pseudo-orbit for a map sequence: a random walk
/// through the time-indexed δ-graph, closed at the first repeated
/// (period phase, point) pair.
pub fn random_nonaut_pseudo_orbit(
    f: &NonautonomousSystem,
    delta: &Rat,
    rng: &mut impl Rng,
) -> PseudoOrbit {
    let space = f.space();
    let pre_f = f.preperiod_len();
    let p_f = f.period_len();
    let mut walk = vec![PointId(rng.gen_range(0..space.len()))];
    let mut seen: std::collections::HashMap<(usize, PointId), usize> =
        std::collections::HashMap::new();
    let mut i = 0usize;
    loop {
        if i >= pre_f {
            let phase = (i - pre_f) % p_f;
            if let Some(&at) = seen.get(&(phase, walk[i])) {
                let period = walk[at..i].to_vec();
                let preperiod = walk[..at].to_vec();
                return PseudoOrbit::new(preperiod, period, delta.clone())
                    .expect("walks are nonempty");
            }
            seen.insert((phase, walk[i]), i);
        }
        let ball: Vec<PointId> = space
            .ball(f.map_at(i).apply(walk[i]), delta)
            .iter()
            .collect();
        walk.push(ball[rng.gen_range(0..ball.len())]);
        i += 1;
    }
}

/// A repeating γ-pseudo-cycle at a random base point: a walk of forced
/// repeating length whose closing edge lands back at the base within γ.
/// Returns `None` when the seed fails to close within the attempt cap.
pub fn random_gamma_cycle(
    f: &SystemMap,
    gamma: &Rat,
    rng: &mut impl Rng,
) -> Option<(PointId, Vec<PointId>)> {
    let space = f.space();
    let n = space.len();
    for _ in 0..50 {
        let p = PointId(rng.gen_range(0..n));
        let mut walk = vec![p];
        // long enough to force a repeat, then hunt for a closing edge
        let min_len = n + 2 + rng.gen_range(0..4);
        let mut ok = false;
        for step in 1..min_len + 30 {
            let ball: Vec<PointId> = space.ball(f.apply(walk[step - 1]), gamma).iter().collect();
            if ball.is_empty() {
                break;
            }
            if step >= min_len && space.distance(f.apply(walk[step - 1]), p) < gamma {
                ok = true;
                break;
            }
            walk.push(ball[rng.gen_range(0..ball.len())]);
        }
        if ok {
            return Some((p, walk));
        }
    }
    None
}
