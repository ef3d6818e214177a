//! Deterministic generators for a small corpus of example systems.
//!
//! Families:
//! - `rotation:M,K` — M points on a circumference-1 circle, arc metric,
//!   `i -> i+K mod M`;
//! - `tent:M`, `logistic:LAMBDA,M`, `affine:A,B,M` — the analytic interval
//!   map evaluated exactly on the uniform M-point grid over `[0,1]` and
//!   rounded to the nearest grid point (ties toward the smaller index);
//! - `shift:S,P` — the left shift on all periodic sequences over an S-symbol
//!   alphabet with period at most P, metric `2^-k` at the first disagreement;
//! - `random:N,SEED` — a seeded random system; even seeds embed N points on a
//!   line, odd seeds perturb an equilateral metric, the map is uniform.

use std::str::FromStr;

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rational::{parse_rat, rat, rat_int, Rat};
use crate::space::{FiniteMetricSpace, Norm, SpaceError, MAX_POINTS};
use crate::system::{SystemMap, SystemError};

#[derive(Debug, Error)]
pub enum ZooError {
    #[error("cannot parse zoo spec {spec:?}: {message}")]
    Parse { spec: String, message: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Interval map kinds for the grid families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntervalKind {
    Tent,
    Logistic(Rat),
    Affine(Rat, Rat),
}

/// A parsed zoo specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZooSpec {
    CircleRotation { points: usize, steps: usize },
    Interval { kind: IntervalKind, grid: usize },
    PeriodicShift { symbols: usize, max_period: usize },
    Random { points: usize, seed: u64 },
}

impl FromStr for ZooSpec {
    type Err = ZooError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |message: &str| ZooError::Parse {
            spec: s.to_string(),
            message: message.to_string(),
        };
        let (family, args) = s.split_once(':').ok_or_else(|| err("expected family:args"))?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let nat = |v: &str| -> Result<usize, ZooError> {
            v.parse().map_err(|_| err("expected a natural number"))
        };
        match family {
            "rotation" => {
                if parts.len() != 2 {
                    return Err(err("rotation:M,K"));
                }
                Ok(ZooSpec::CircleRotation {
                    points: nat(parts[0])?,
                    steps: nat(parts[1])?,
                })
            }
            "tent" => {
                if parts.len() != 1 {
                    return Err(err("tent:M"));
                }
                Ok(ZooSpec::Interval {
                    kind: IntervalKind::Tent,
                    grid: nat(parts[0])?,
                })
            }
            "logistic" => {
                if parts.len() != 2 {
                    return Err(err("logistic:LAMBDA,M"));
                }
                Ok(ZooSpec::Interval {
                    kind: IntervalKind::Logistic(
                        parse_rat(parts[0]).map_err(|m| err(&m))?,
                    ),
                    grid: nat(parts[1])?,
                })
            }
            "affine" => {
                if parts.len() != 3 {
                    return Err(err("affine:A,B,M"));
                }
                Ok(ZooSpec::Interval {
                    kind: IntervalKind::Affine(
                        parse_rat(parts[0]).map_err(|m| err(&m))?,
                        parse_rat(parts[1]).map_err(|m| err(&m))?,
                    ),
                    grid: nat(parts[2])?,
                })
            }
            "shift" => {
                if parts.len() != 2 {
                    return Err(err("shift:S,P"));
                }
                Ok(ZooSpec::PeriodicShift {
                    symbols: nat(parts[0])?,
                    max_period: nat(parts[1])?,
                })
            }
            "random" => {
                if parts.len() != 2 {
                    return Err(err("random:N,SEED"));
                }
                Ok(ZooSpec::Random {
                    points: nat(parts[0])?,
                    seed: parts[1].parse().map_err(|_| err("expected a seed"))?,
                })
            }
            other => Err(err(&format!("unknown family {other:?}"))),
        }
    }
}

impl std::fmt::Display for ZooSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZooSpec::CircleRotation { points, steps } => write!(f, "rotation:{points},{steps}"),
            ZooSpec::Interval { kind, grid } => match kind {
                IntervalKind::Tent => write!(f, "tent:{grid}"),
                IntervalKind::Logistic(l) => write!(f, "logistic:{l},{grid}"),
                IntervalKind::Affine(a, b) => write!(f, "affine:{a},{b},{grid}"),
            },
            ZooSpec::PeriodicShift {
                symbols,
                max_period,
            } => write!(f, "shift:{symbols},{max_period}"),
            ZooSpec::Random { points, seed } => write!(f, "random:{points},{seed}"),
        }
    }
}

/// Known families and their argument syntax, for `zoo list`.
pub fn zoo_catalog() -> &'static [(&'static str, &'static str)] {
    &[
        (
            "rotation:M,K",
            "M points on a circumference-1 circle, arc metric, i -> i+K mod M",
        ),
        (
            "tent:M",
            "tent map min(2x, 2-2x) on the uniform M-point grid over [0,1]",
        ),
        (
            "logistic:LAMBDA,M",
            "logistic map LAMBDA*x*(1-x) on the uniform M-point grid",
        ),
        (
            "affine:A,B,M",
            "affine map A*x+B on the uniform M-point grid",
        ),
        (
            "shift:S,P",
            "left shift on periodic S-symbol sequences of period <= P, metric 2^-k",
        ),
        (
            "random:N,SEED",
            "seeded random N-point system (even seed: line embedding, odd: perturbed equilateral)",
        ),
    ]
}

/// Nearest grid index for a value on the uniform grid `i/(m-1)`, ties toward
/// the smaller index.
fn round_to_grid(value: &Rat, m: usize) -> usize {
    let mut best = 0usize;
    let mut best_dist: Option<Rat> = None;
    for i in 0..m {
        let node = rat(i as i64, (m - 1) as i64);
        let mut d = value - &node;
        if d < Rat::zero() {
            d = -d;
        }
        if best_dist.as_ref().is_none_or(|b| d < *b) {
            best_dist = Some(d);
            best = i;
        }
    }
    best
}

fn interval_image(kind: &IntervalKind, x: &Rat) -> Rat {
    match kind {
        IntervalKind::Tent => {
            let two = rat_int(2);
            let a = &two * x;
            let b = &two - &a;
            if a < b {
                a
            } else {
                b
            }
        }
        IntervalKind::Logistic(l) => l * x * (Rat::one() - x),
        IntervalKind::Affine(a, b) => a * x + b,
    }
}

/// The primitive root of a word: the shortest prefix whose repetition
/// reproduces it.
fn primitive_root(word: &[u8]) -> Vec<u8> {
    let n = word.len();
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        if word.iter().enumerate().all(|(i, &c)| c == word[i % d]) {
            return word[..d].to_vec();
        }
    }
    word.to_vec()
}

fn shift_points(symbols: usize, max_period: usize) -> Vec<Vec<u8>> {
    let mut points: Vec<Vec<u8>> = Vec::new();
    let mut word = Vec::new();
    fn gen(
        symbols: usize,
        len: usize,
        word: &mut Vec<u8>,
        points: &mut Vec<Vec<u8>>,
    ) {
        if word.len() == len {
            if primitive_root(word).len() == len {
                points.push(word.clone());
            }
            return;
        }
        for c in 0..symbols {
            word.push(c as u8);
            gen(symbols, len, word, points);
            word.pop();
        }
    }
    for len in 1..=max_period {
        gen(symbols, len, &mut word, &mut points);
    }
    points.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    points
}

fn shift_label(word: &[u8]) -> String {
    word.iter()
        .map(|c| {
            std::char::from_digit(u32::from(*c), 36).expect("alphabet capped at 36 symbols")
        })
        .collect()
}

/// `2^-k` where k is the first index at which the two periodic sequences
/// disagree; requires the sequences distinct. Distinct periodic words
/// disagree within `|a| + |b| - gcd` positions, so k stays small, but the
/// power is taken exactly regardless.
fn shift_distance(a: &[u8], b: &[u8]) -> Rat {
    let window = num_integer::lcm(a.len(), b.len());
    for k in 0..window {
        if a[k % a.len()] != b[k % b.len()] {
            return Rat::new(1.into(), num_bigint::BigInt::from(1) << k);
        }
    }
    unreachable!("distinct periodic sequences disagree within the lcm window")
}

/// Builds the system described by a zoo spec. Deterministic: equal specs
/// produce identical systems.
pub fn build_zoo(spec: &ZooSpec) -> Result<SystemMap, ZooError> {
    match spec {
        ZooSpec::CircleRotation { points, steps } => {
            let m = *points;
            if m == 0 {
                return Err(ZooError::Parameter("rotation needs at least 1 point".into()));
            }
            let coords = (0..m).map(|i| vec![rat(i as i64, m as i64)]).collect();
            let labels = (0..m).map(|i| i.to_string()).collect();
            let space = FiniteMetricSpace::from_coords(labels, coords, Norm::Circle)?;
            Ok(SystemMap::new(space, (0..m).map(|i| (i + steps) % m).collect())?)
        }
        ZooSpec::Interval { kind, grid } => {
            let m = *grid;
            if m < 2 {
                return Err(ZooError::Parameter("interval grids need at least 2 points".into()));
            }
            let coords: Vec<Vec<Rat>> = (0..m)
                .map(|i| vec![rat(i as i64, (m - 1) as i64)])
                .collect();
            let labels = (0..m).map(|i| i.to_string()).collect();
            let image = coords
                .iter()
                .map(|c| round_to_grid(&interval_image(kind, &c[0]), m))
                .collect();
            let space = FiniteMetricSpace::from_coords(labels, coords, Norm::L1)?;
            Ok(SystemMap::new(space, image)?)
        }
        ZooSpec::PeriodicShift {
            symbols,
            max_period,
        } => {
            if *symbols < 1 || *symbols > 36 {
                return Err(ZooError::Parameter("shift alphabet must have 1..=36 symbols".into()));
            }
            if *max_period == 0 {
                return Err(ZooError::Parameter("shift needs period at least 1".into()));
            }
            if *max_period > 12 {
                return Err(ZooError::Parameter("shift period capped at 12".into()));
            }
            let words = shift_points(*symbols, *max_period);
            let n = words.len();
            if n > MAX_POINTS {
                return Err(ZooError::Parameter(format!(
                    "shift:{symbols},{max_period} has {n} points, maximum is {MAX_POINTS}"
                )));
            }
            let labels: Vec<String> = words.iter().map(|w| shift_label(w)).collect();
            let mut dist = vec![vec![Rat::zero(); n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = shift_distance(&words[i], &words[j]);
                    dist[i][j] = d.clone();
                    dist[j][i] = d;
                }
            }
            let image = words
                .iter()
                .map(|w| {
                    let mut rotated = w[1..].to_vec();
                    rotated.push(w[0]);
                    let root = primitive_root(&rotated);
                    words
                        .iter()
                        .position(|v| *v == root)
                        .expect("rotations of primitive words stay in the point set")
                })
                .collect();
            let space = FiniteMetricSpace::new(labels, dist)?;
            Ok(SystemMap::new(space, image)?)
        }
        ZooSpec::Random { points, seed } => {
            let n = *points;
            if n == 0 {
                return Err(ZooError::Parameter("random systems need at least 1 point".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let space = if seed % 2 == 0 {
                // distinct positions on a line, denominator 4n
                let den = (4 * n) as i64;
                let mut slots: Vec<i64> = (0..4 * n as i64).collect();
                let mut coords = Vec::with_capacity(n);
                for _ in 0..n {
                    let k = rng.gen_range(0..slots.len());
                    coords.push(slots.swap_remove(k));
                }
                coords.sort_unstable();
                let coords = coords.into_iter().map(|c| vec![rat(c, den)]).collect();
                FiniteMetricSpace::from_coords(labels, coords, Norm::L1)?
            } else {
                // equilateral metric with random bounded perturbations:
                // d in {8/8..11/8}, triangle holds since 11/8 <= 8/8 + 8/8
                let mut dist = vec![vec![Rat::zero(); n]; n];
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = rat(8 + rng.gen_range(0..4i64), 8);
                        dist[i][j] = d.clone();
                        dist[j][i] = d;
                    }
                }
                FiniteMetricSpace::new(labels, dist)?
            };
            let image = (0..n).map(|_| rng.gen_range(0..n)).collect();
            Ok(SystemMap::new(space, image)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::PointId;

    #[test]
    fn parse_and_display_round_trip() {
        for s in [
            "rotation:4,1",
            "tent:64",
            "logistic:7/2,16",
            "affine:1/2,1/4,8",
            "shift:2,2",
            "random:5,42",
        ] {
            let spec: ZooSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            build_zoo(&spec).unwrap();
        }
        assert!("tent".parse::<ZooSpec>().is_err());
        assert!("nope:1".parse::<ZooSpec>().is_err());
        assert!("rotation:4".parse::<ZooSpec>().is_err());
    }

    #[test]
    fn rotation_four_matches_fixture() {
        let f = build_zoo(&"rotation:4,1".parse().unwrap()).unwrap();
        assert_eq!(f.image_indices(), vec![1, 2, 3, 0]);
        assert_eq!(*f.space().distance(PointId(0), PointId(1)), rat(1, 4));
        assert_eq!(*f.space().distance(PointId(0), PointId(2)), rat(1, 2));
    }

    #[test]
    fn tent_grid_four_fixture() {
        // grid {0, 1/3, 2/3, 1}: recompute the expected images independently
        // of the builder before freezing them
        let m = 4usize;
        let expected: Vec<usize> = (0..m)
            .map(|i| {
                let x = rat(i as i64, 3);
                let tx = if x <= rat(1, 2) {
                    rat_int(2) * &x
                } else {
                    rat_int(2) - rat_int(2) * &x
                };
                // nearest grid point, ties to smaller index
                let mut best = 0;
                let mut best_d: Option<Rat> = None;
                for j in 0..m {
                    let mut d = &tx - &rat(j as i64, 3);
                    if d < Rat::zero() {
                        d = -d;
                    }
                    if best_d.as_ref().is_none_or(|b| d < *b) {
                        best_d = Some(d);
                        best = j;
                    }
                }
                best
            })
            .collect();
        assert_eq!(expected, vec![0, 2, 2, 0]);
        let f = build_zoo(&"tent:4".parse().unwrap()).unwrap();
        assert_eq!(f.image_indices(), expected);
    }

    #[test]
    fn rounding_ties_go_to_smaller_index() {
        // midpoint of a 3-point grid: 1/4 is equidistant from 0 and 1/2
        assert_eq!(round_to_grid(&rat(1, 4), 3), 0);
        assert_eq!(round_to_grid(&rat(3, 4), 3), 1);
        // values outside [0,1] clamp to the ends
        assert_eq!(round_to_grid(&rat(13, 10), 3), 2);
        assert_eq!(round_to_grid(&rat(-1, 2), 3), 0);
    }

    #[test]
    fn shift_two_two_fixture() {
        let f = build_zoo(&"shift:2,2".parse().unwrap()).unwrap();
        let space = f.space();
        assert_eq!(space.labels(), &["0", "1", "01", "10"]);
        // d(01~, 0~) = 2^-1: sequences 0101.. and 0000.. differ at index 1
        let a = space.point_by_label("01").unwrap();
        let b = space.point_by_label("0").unwrap();
        assert_eq!(*space.distance(a, b), rat(1, 2));
        // d(01~, 10~) = 2^0 = 1: differ at index 0
        let c = space.point_by_label("10").unwrap();
        assert_eq!(*space.distance(a, c), rat_int(1));
        // shift acts: 0 -> 0, 1 -> 1, 01 -> 10, 10 -> 01
        assert_eq!(f.apply(b), b);
        assert_eq!(f.apply(a), c);
        assert_eq!(f.apply(c), a);
    }

    #[test]
    fn shift_point_counts() {
        // primitive words over 2 symbols: 2, 2, 6, 12 for lengths 1..4
        assert_eq!(shift_points(2, 1).len(), 2);
        assert_eq!(shift_points(2, 2).len(), 4);
        assert_eq!(shift_points(2, 3).len(), 10);
        assert_eq!(shift_points(2, 4).len(), 22);
    }

    #[test]
    fn random_systems_deterministic_and_valid() {
        for seed in 0..6u64 {
            let spec = ZooSpec::Random { points: 5, seed };
            let a = build_zoo(&spec).unwrap();
            let b = build_zoo(&spec).unwrap();
            assert_eq!(a, b, "seed {seed} must be reproducible");
        }
        let even = build_zoo(&ZooSpec::Random { points: 5, seed: 2 }).unwrap();
        let odd = build_zoo(&ZooSpec::Random { points: 5, seed: 3 }).unwrap();
        assert_ne!(even.space(), odd.space());
    }
}
