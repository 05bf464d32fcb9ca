//! Loop erasure against an independent quadratic scan-and-cut oracle.

#[path = "support/le_oracle.rs"]
mod le_oracle;

use le_oracle::{check_cube_walks, check_random_walks, cube_walk_count, scan_and_cut};
use lerw_core::geometry::LatticePoint;
use lerw_core::loop_erasure::loop_erase;
use lerw_core::walk::LatticePath;

#[test]
fn random_walks_match_oracle() {
    check_random_walks(10_000, 91);
}

#[test]
fn exhaustive_cube_walks_match_oracle() {
    assert_eq!(check_cube_walks(12), cube_walk_count(12));
}

#[test]
fn hand_traced_and_self_avoiding_cases() {
    let e1 = LatticePoint::new(1, 0, 0);
    let e2 = LatticePoint::new(0, 1, 0);
    let o = LatticePoint::ORIGIN;
    let walk = LatticePath::new(vec![o, e1, o, e2], 1.0);
    assert_eq!(loop_erase(&walk).points, vec![o, e2]);
    let saw: Vec<LatticePoint> = (0..20).map(|i| LatticePoint::new(i, i % 2, 0)).collect();
    let straight: Vec<LatticePoint> = (0..20).map(|i| LatticePoint::new(i, 0, 0)).collect();
    for p in [saw, straight] {
        assert_eq!(scan_and_cut(&p), p);
    }
}
