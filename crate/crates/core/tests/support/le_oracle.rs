//! Quadratic scan-and-cut loop erasure and exhaustive walk enumeration,
//! shared by the test targets.

use lerw_core::geometry::{LatticePoint, UNIT_STEPS};
use lerw_core::loop_erasure::{loop_erase_stack, LoopEraser};
use lerw_core::SeedSpec;
use rand::Rng;

/// Append points one at a time; whenever the new point already lies on the
/// current path at position `i`, cut the path back to `i`.
pub fn scan_and_cut(walk: &[LatticePoint]) -> Vec<LatticePoint> {
    let mut path: Vec<LatticePoint> = Vec::new();
    for &p in walk {
        match path.iter().position(|q| *q == p) {
            Some(i) => path.truncate(i + 1),
            None => path.push(p),
        }
    }
    path
}

pub fn random_walk(len: usize, seed: SeedSpec) -> Vec<LatticePoint> {
    let mut rng = seed.rng();
    let mut p = LatticePoint::ORIGIN;
    let mut out = Vec::with_capacity(len + 1);
    out.push(p);
    for _ in 0..len {
        p = p + UNIT_STEPS[rng.random_range(0..6usize)];
        out.push(p);
    }
    out
}

fn in_cube(p: LatticePoint) -> bool {
    p.x.abs() <= 1 && p.y.abs() <= 1 && p.z.abs() <= 1
}

/// Scan-and-cut step: the erased path of `walk + [p]` from that of `walk`.
fn cut_step(path: &[LatticePoint], p: LatticePoint, out: &mut Vec<LatticePoint>) {
    out.clear();
    match path.iter().position(|q| *q == p) {
        Some(i) => out.extend_from_slice(&path[..=i]),
        None => {
            out.extend_from_slice(path);
            out.push(p);
        }
    }
}

struct Enumeration {
    walk: Vec<LatticePoint>,
    /// `oracle[k]` is the scan-and-cut erasure of the first `k + 1` points.
    oracle: Vec<Vec<LatticePoint>>,
    eraser: LoopEraser,
    buf: Vec<LatticePoint>,
    count: u64,
}

/// Depth-first enumeration of every walk from the origin of length at most
/// `max_len` staying in `[-1, 1]^3`.
fn enumerate(e: &mut Enumeration, max_len: usize) {
    let depth = e.walk.len() - 1;
    e.eraser.erase_into(&e.walk, &mut e.buf);
    assert_eq!(e.buf, e.oracle[depth], "walk {:?}", e.walk);
    e.count += 1;
    if depth == max_len {
        return;
    }
    let tip = *e.walk.last().unwrap();
    for d in 0..6 {
        let q = tip.step(d);
        if in_cube(q) {
            let (done, rest) = e.oracle.split_at_mut(depth + 1);
            cut_step(&done[depth], q, &mut rest[0]);
            e.walk.push(q);
            enumerate(e, max_len);
            e.walk.pop();
        }
    }
}

/// Compare `erase_into` and the stack method with the oracle on `n` random
/// walks: the first 16 of length `10^4`, the rest of log-uniform length.
pub fn check_random_walks(n: u64, seed: u64) {
    let mut eraser = LoopEraser::default();
    let mut erased = Vec::new();
    for t in 0..n {
        let mut rng = SeedSpec::new(seed, t).lane(3);
        let len = if t < 16 { 10_000 } else { 10f64.powf(rng.random_range(0.0..4.0)).round() as usize };
        let walk = random_walk(len, SeedSpec::new(seed, t));
        let oracle = scan_and_cut(&walk);
        eraser.erase_into(&walk, &mut erased);
        assert_eq!(erased, oracle, "trial {t}");
        assert_eq!(loop_erase_stack(&walk), oracle, "stack, trial {t}");
    }
}

/// Check every walk from the origin of length at most `max_len` in
/// `[-1, 1]^3` against the oracle. Returns the number of walks checked.
pub fn check_cube_walks(max_len: usize) -> u64 {
    let mut e = Enumeration {
        walk: vec![LatticePoint::ORIGIN],
        oracle: vec![Vec::new(); max_len + 1],
        eraser: LoopEraser::default(),
        buf: Vec::new(),
        count: 0,
    };
    e.oracle[0].push(LatticePoint::ORIGIN);
    enumerate(&mut e, max_len);
    e.count
}

/// Number of walks from the origin of length at most `max_len` in
/// `[-1, 1]^3`, by transfer matrix.
pub fn cube_walk_count(max_len: usize) -> u64 {
    let sites: Vec<LatticePoint> = (-1..=1)
        .flat_map(|x| (-1..=1).flat_map(move |y| (-1..=1).map(move |z| LatticePoint::new(x, y, z))))
        .collect();
    let mut ways: Vec<u64> = sites.iter().map(|p| (*p == LatticePoint::ORIGIN) as u64).collect();
    let mut total = 0;
    for _ in 0..=max_len {
        total += ways.iter().sum::<u64>();
        ways = sites
            .iter()
            .map(|p| p.neighbors().iter().filter_map(|q| sites.iter().position(|s| s == q)).map(|j| ways[j]).sum())
            .collect();
    }
    total
}
