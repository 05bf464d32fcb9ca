//! Lattice points, ball domains, dyadic boxes and the curve metrics used to
//! compare discrete paths.
//!
//! Lattice coordinates are stored as `i64` in lattice units; physical
//! coordinates are `point / m` and are only materialized on demand.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of the cubic lattice, in lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

/// The six unit steps, ordered +x, -x, +y, -y, +z, -z.
pub const UNIT_STEPS: [LatticePoint; 6] = [
    LatticePoint::new(1, 0, 0),
    LatticePoint::new(-1, 0, 0),
    LatticePoint::new(0, 1, 0),
    LatticePoint::new(0, -1, 0),
    LatticePoint::new(0, 0, 1),
    LatticePoint::new(0, 0, -1),
];

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint::new(0, 0, 0);

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        LatticePoint { x, y, z }
    }

    #[inline]
    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    #[inline]
    pub fn l1_distance(self, other: LatticePoint) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs() + (self.z - other.z).abs()
    }

    /// Two sites are neighbors iff their L1 distance is exactly one.
    #[inline]
    pub fn is_neighbor(self, other: LatticePoint) -> bool {
        self.l1_distance(other) == 1
    }

    #[inline]
    pub fn step(self, dir: usize) -> LatticePoint {
        self + UNIT_STEPS[dir]
    }

    pub fn neighbors(self) -> [LatticePoint; 6] {
        UNIT_STEPS.map(|d| self + d)
    }

    /// Physical coordinates on the lattice of mesh `1/m`.
    #[inline]
    pub fn to_physical(self, m: f64) -> [f64; 3] {
        [self.x as f64 / m, self.y as f64 / m, self.z as f64 / m]
    }

    pub fn as_array(self) -> [i64; 3] {
        [self.x, self.y, self.z]
    }

    /// Index of the unit step leading from `self` to `next`, if they are neighbors.
    pub fn direction_to(self, next: LatticePoint) -> Option<usize> {
        let d = next - self;
        UNIT_STEPS.iter().position(|&u| u == d)
    }
}

impl std::ops::Add for LatticePoint {
    type Output = LatticePoint;
    #[inline]
    fn add(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for LatticePoint {
    type Output = LatticePoint;
    #[inline]
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Euclidean norm of a physical vector.
#[inline]
pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Nearest lattice point to the physical point `x` on the lattice of mesh `1/m`.
///
/// Each coordinate of `m * x` is rounded to the nearest integer; exact half
/// ties go toward negative infinity.
pub fn nearest_lattice_point(x: [f64; 3], m: f64) -> LatticePoint {
    assert!(m > 0.0, "mesh must be positive");
    let round = |v: f64| -> i64 {
        let s = v * m;
        // ceil(s - 1/2) is round-half-down
        (s - 0.5).ceil() as i64
    };
    LatticePoint::new(round(x[0]), round(x[1]), round(x[2]))
}

/// Lattice discretization of an open Euclidean ball, in lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    pub radius: f64,
    pub center: LatticePoint,
}

impl BallDomain {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0, "domain radius must be positive");
        BallDomain { radius, center: LatticePoint::ORIGIN }
    }

    pub fn centered(radius: f64, center: LatticePoint) -> Self {
        assert!(radius > 0.0, "domain radius must be positive");
        BallDomain { radius, center }
    }

    /// The discretized unit ball on the lattice of mesh `1/m`.
    pub fn unit_ball(m: f64) -> Self {
        BallDomain::new(m)
    }

    /// Strict membership: `|p - center| < radius`.
    #[inline]
    pub fn contains(&self, p: LatticePoint) -> bool {
        ((p - self.center).norm_sq() as f64) < self.radius * self.radius
    }

    /// Half-width of the smallest integer cube around the center holding the domain.
    pub fn extent(&self) -> i64 {
        self.radius.ceil() as i64
    }

    /// All domain sites in lexicographic (x, y, z) order.
    pub fn points(&self) -> Vec<LatticePoint> {
        let e = self.extent();
        let c = self.center;
        let mut out = Vec::new();
        for x in -e..=e {
            for y in -e..=e {
                for z in -e..=e {
                    let p = LatticePoint::new(c.x + x, c.y + y, c.z + z);
                    if self.contains(p) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Domain sites with at least one neighbor outside the domain.
pub fn inner_boundary(domain: &BallDomain) -> Vec<LatticePoint> {
    domain
        .points()
        .into_iter()
        .filter(|p| p.neighbors().iter().any(|q| !domain.contains(*q)))
        .collect()
}

/// Half-open dyadic cube `prod_i (k_i / 2^n, (k_i + 1) / 2^n]` in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicBox {
    pub scale: u32,
    pub index: [i64; 3],
}

impl DyadicBox {
    pub fn new(scale: u32, index: [i64; 3]) -> Self {
        DyadicBox { scale, index }
    }

    pub fn side(&self) -> f64 {
        (-(self.scale as f64)).exp2()
    }

    pub fn lower(&self) -> [f64; 3] {
        let s = self.side();
        self.index.map(|k| k as f64 * s)
    }

    pub fn upper(&self) -> [f64; 3] {
        let s = self.side();
        self.index.map(|k| (k + 1) as f64 * s)
    }

    pub fn center(&self) -> [f64; 3] {
        let s = self.side();
        self.index.map(|k| (k as f64 + 0.5) * s)
    }

    pub fn as_axis_box(&self) -> AxisBox {
        AxisBox { lower: self.lower(), upper: self.upper() }
    }

    /// Membership of a physical point (half-open on the lower side).
    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.as_axis_box().contains(p)
    }

    /// The dyadic box of scale `n` containing the physical point `p`.
    pub fn containing(p: [f64; 3], n: u32) -> DyadicBox {
        let k = n as f64;
        DyadicBox::new(n, p.map(|v| ((v * k.exp2()).ceil() as i64) - 1))
    }

    /// The dyadic box of scale `n` containing the lattice point `p` of mesh `1/m`.
    ///
    /// Exact when `m` is a power of two.
    pub fn containing_lattice(p: LatticePoint, m: f64, n: u32) -> DyadicBox {
        let scale = (n as f64).exp2() / m;
        let idx = |c: i64| ((c as f64 * scale).ceil() as i64) - 1;
        DyadicBox::new(n, [idx(p.x), idx(p.y), idx(p.z)])
    }

    /// Euclidean distance from the origin to the box closure.
    pub fn dist_to_origin(&self) -> f64 {
        let lo = self.lower();
        let hi = self.upper();
        let clamp = |l: f64, h: f64| if 0.0 < l { l } else if 0.0 > h { h } else { 0.0 };
        norm3([clamp(lo[0], hi[0]), clamp(lo[1], hi[1]), clamp(lo[2], hi[2])])
    }

    /// Largest norm over the box closure (attained at a corner).
    pub fn max_norm(&self) -> f64 {
        let lo = self.lower();
        let hi = self.upper();
        let far = |l: f64, h: f64| l.abs().max(h.abs());
        norm3([far(lo[0], hi[0]), far(lo[1], hi[1]), far(lo[2], hi[2])])
    }

    /// Membership in the admissible family: the box lies in the punctured
    /// unit ball and is at distance at least its own side length from both
    /// the origin and the unit sphere.
    pub fn is_admissible(&self) -> bool {
        let side = self.side();
        let d0 = self.dist_to_origin();
        let d1 = 1.0 - self.max_norm();
        d0 >= side && d1 >= side
    }

    /// Partition of `self` into the `2^{3(target - n)}` boxes of scale `target`.
    pub fn partition(&self, target_scale: u32) -> Result<Vec<DyadicBox>> {
        if target_scale < self.scale {
            return Err(Error::InvalidScale(format!(
                "target scale {target_scale} is coarser than box scale {}",
                self.scale
            )));
        }
        let f = 1i64 << (target_scale - self.scale);
        let base = self.index.map(|k| k * f);
        let mut out = Vec::with_capacity((f * f * f) as usize);
        for i in 0..f {
            for j in 0..f {
                for l in 0..f {
                    out.push(DyadicBox::new(target_scale, [base[0] + i, base[1] + j, base[2] + l]));
                }
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`DyadicBox::partition`].
pub fn dyadic_partition(v: &DyadicBox, target_scale: u32) -> Result<Vec<DyadicBox>> {
    v.partition(target_scale)
}

/// Axis-aligned box, half-open `(lower, upper]` per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl AxisBox {
    /// Cube of side `side` centered at `center`.
    pub fn cube(center: [f64; 3], side: f64) -> Self {
        let h = side / 2.0;
        AxisBox { lower: center.map(|c| c - h), upper: center.map(|c| c + h) }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] > self.lower[i] && p[i] <= self.upper[i])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.upper[i] - self.lower[i]).product()
    }

    /// Distance from `p` to the box closure.
    pub fn distance_to(&self, p: [f64; 3]) -> f64 {
        let d = |i: usize| (self.lower[i] - p[i]).max(0.0).max(p[i] - self.upper[i]);
        norm3([d(0), d(1), d(2)])
    }
}

/// Mesh together with the reference point `(1/2, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryContext {
    pub mesh: f64,
    pub reference: [f64; 3],
}

impl GeometryContext {
    pub fn new(mesh: f64) -> Self {
        assert!(mesh > 0.0);
        GeometryContext { mesh, reference: REFERENCE_POINT }
    }

    pub fn reference_site(&self) -> LatticePoint {
        nearest_lattice_point(self.reference, self.mesh)
    }
}

/// The reference point `x̂ = (1/2, 0, 0)`.
pub const REFERENCE_POINT: [f64; 3] = [0.5, 0.0, 0.0];

/// Distance scale `min(|x|, 1 - |x|)` of a point of the punctured unit ball.
pub fn boundary_distance(x: [f64; 3]) -> f64 {
    let r = norm3(x);
    r.min(1.0 - r)
}

/// Up-to-constant one-point scale: `d^{β-3}` for `|x| <= 1/2`, `d^{β-1}` otherwise.
pub fn one_point_scale(x: [f64; 3], beta: f64) -> f64 {
    let d = boundary_distance(x);
    if norm3(x) <= 0.5 {
        d.powf(beta - 3.0)
    } else {
        d.powf(beta - 1.0)
    }
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let directed = |from: &[[f64; 3]], to: &[[f64; 3]]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist3(*p, *q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// A parametrized curve: equally spaced samples over `[0, duration]`,
/// linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub duration: f64,
    pub samples: Vec<[f64; 3]>,
}

impl Curve {
    pub fn new(duration: f64, samples: Vec<[f64; 3]>) -> Self {
        assert!(duration >= 0.0, "curve duration must be nonnegative");
        assert!(!samples.is_empty(), "curve needs at least one sample");
        Curve { duration, samples }
    }

    /// Lattice path traversed one edge per `time_per_edge`, in physical units.
    pub fn from_lattice_path(points: &[LatticePoint], m: f64, time_per_edge: f64) -> Self {
        let samples: Vec<_> = points.iter().map(|p| p.to_physical(m)).collect();
        let duration = (samples.len().saturating_sub(1)) as f64 * time_per_edge;
        Curve::new(duration, samples)
    }

    /// Position at fraction `s` in `[0, 1]` of the duration.
    pub fn at_fraction(&self, s: f64) -> [f64; 3] {
        let n = self.samples.len();
        if n == 1 {
            return self.samples[0];
        }
        let u = s.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (u.floor() as usize).min(n - 2);
        let t = u - i as f64;
        let a = self.samples[i];
        let b = self.samples[i + 1];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    }
}

/// Default number of grid points for the sup in [`rho_distance`].
pub const RHO_GRID_DEFAULT: usize = 1025;

/// Curve distance `|T2 - T1| + sup_s |γ1(s T1) - γ2(s T2)|`, with the sup
/// taken over `grid` equally spaced values of `s`. For Lipschitz curves the
/// grid error is `O(1 / grid)`.
pub fn rho_distance(a: &Curve, b: &Curve, grid: usize) -> f64 {
    let grid = grid.max(2);
    let sup = (0..grid)
        .map(|i| {
            let s = i as f64 / (grid - 1) as f64;
            dist3(a.at_fraction(s), b.at_fraction(s))
        })
        .fold(0.0, f64::max);
    (b.duration - a.duration).abs() + sup
}
