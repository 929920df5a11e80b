mod common;

use insulate::analysis::{
    blowup_scan, check_lower_bound, convexity_defect, density_profile, hole_geometry, BlowupClass, BlowupOptions,
};
use insulate::{CellMask, FaceSet, Grid, GridField};
use proptest::prelude::*;

fn line_faces(grid: Grid) -> FaceSet {
    let mut k = FaceSet::empty(grid);
    for f in grid.faces() {
        if f.midpoint[1].abs() < 1e-12 {
            k.insert(&f);
        }
    }
    k
}

proptest! {
    #[test]
    fn straight_line_has_density_two(x in -0.3f64..0.3, r in 0.1f64..0.6) {
        let grid = Grid::square(128, [0.0, 0.0], 1.0);
        let dx = grid.spacing[0];
        let rep = density_profile(&line_faces(grid), &[[x, 0.0]], &[r]).unwrap();
        prop_assert_eq!(rep.samples.len(), 1);
        // the ball catches 2r/dx face midpoints, up to one at either end
        prop_assert!((rep.samples[0].ratio - 2.0).abs() <= 2.0 * dx / r + 1e-12);
    }

    #[test]
    fn lower_bound_only_sees_the_positive_set(values in prop::collection::vec(0.0f64..1.0, 100), cut in 0.05f64..0.5) {
        let grid = Grid::new(10, 10, [0.0, 0.0], [0.1, 0.1]).unwrap();
        let u = GridField::from_values(grid, values.clone()).unwrap();
        let zeroed = GridField::from_values(grid, values.iter().map(|&v| if v > cut { v } else { 0.0 }).collect()).unwrap();
        let a = check_lower_bound(&u, cut).unwrap();
        let b = check_lower_bound(&zeroed, cut).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn convexity_defect_matches_the_hull_oracle(bits in 1u32..(1 << 25), dx in -20i64..20, dy in -20i64..20) {
        let cells: Vec<(i64, i64)> = (0..25).filter(|b| bits >> b & 1 == 1).map(|b| ((b % 5) as i64, (b / 5) as i64)).collect();
        let oracle = common::hull_lattice_count(&cells) as f64 / cells.len() as f64 - 1.0;
        let d = convexity_defect(&cells);
        prop_assert_eq!(d, oracle);
        // lattice symmetries and translations leave the defect unchanged
        let moved: Vec<(i64, i64)> = cells.iter().map(|&(x, y)| (dx - y, dy + x)).collect();
        prop_assert_eq!(convexity_defect(&moved), d);
        let mirrored: Vec<(i64, i64)> = cells.iter().map(|&(x, y)| (-x, y)).collect();
        prop_assert_eq!(convexity_defect(&mirrored), d);
    }
}

#[test]
fn l_shape_defect() {
    assert_eq!(convexity_defect(&[(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)]), 6.0 / 5.0 - 1.0);
    assert_eq!(convexity_defect(&[(0, 0), (1, 2)]), 0.0);
    assert_eq!(convexity_defect(&[(0, 0), (2, 2)]), 0.5);
}

#[test]
fn blowup_separates_flat_and_crack_tip_points() {
    let grid = Grid::square(512, [0.0, 0.0], 1.0);
    let radii = [0.4, 0.2, 0.1, 0.05];
    // two-sided jump along y = 0 with linear profiles
    let u = GridField::from_fn(grid, |p| if p[1] > 0.0 { 0.5 + 0.2 * p[0] } else { 0.1 });
    let rep = blowup_scan(&u, &line_faces(grid), [0.0, 0.0], &radii, &BlowupOptions::default()).unwrap();
    assert_eq!(rep.classification, BlowupClass::FlatCandidate, "{rep:?}");
    assert!(rep.flatness.iter().all(|&f| f < 1e-12));

    let tip = GridField::from_fn(grid, |p| p[0].hypot(p[1]).sqrt() * (0.5 * p[1].atan2(p[0])).sin());
    let mut cut = FaceSet::empty(grid);
    for f in grid.faces() {
        if f.midpoint[1].abs() < 1e-12 && f.midpoint[0] < 0.0 {
            cut.insert(&f);
        }
    }
    let rep = blowup_scan(&tip, &cut, [0.0, 0.0], &radii, &BlowupOptions::default()).unwrap();
    assert_eq!(rep.classification, BlowupClass::SingularCandidate, "{rep:?}");
    for e in &rep.e_r {
        assert!((e - std::f64::consts::FRAC_PI_2).abs() < 0.05, "{e}");
    }

    // radii below two cells are not resolved
    let rep = blowup_scan(&tip, &cut, [0.0, 0.0], &[0.01, 0.002], &BlowupOptions::default()).unwrap();
    assert_eq!(rep.classification, BlowupClass::Unresolved);
}

#[test]
fn hole_reports() {
    let grid = Grid::square(64, [0.0, 0.0], 1.0);
    let disk = CellMask::from_fn(grid, |k| {
        let c = grid.center_of(k);
        c[0].hypot(c[1]) < 0.3
    });
    let l = CellMask::from_fn(grid, |k| {
        let c = grid.center_of(k);
        (c[0].abs() < 0.5 && c[1].abs() < 0.5) && !(c[0] > 0.0 && c[1] > 0.0)
    });
    let border = CellMask::from_fn(grid, |k| grid.center_of(k)[0] < -0.9);
    let reps = hole_geometry(&[disk, l, border], None);
    let d = reps[0].as_ref().unwrap();
    assert_eq!(d.convexity_defect, 0.0);
    // width 2r over the staircase perimeter 8r
    assert!((d.roundness - 0.25).abs() < 0.03, "{}", d.roundness);
    assert!((reps[1].as_ref().unwrap().convexity_defect - 1.0 / 6.0).abs() < 0.02);
    assert!(reps[2].is_none());
}

#[test]
fn radii_below_four_cells_are_refused() {
    let grid = Grid::square(64, [0.0, 0.0], 1.0);
    assert!(density_profile(&line_faces(grid), &[[0.0, 0.0]], &[3.0 * grid.spacing[0]]).is_err());
}
