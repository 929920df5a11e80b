//! Structural diagnostics on an extracted phase-field solution: lower bound,
//! density of the jump set and blow-up at a boundary point.

use insulate::analysis::{blowup_scan, check_lower_bound, density_profile, sample_points, BlowupOptions};
use insulate::phase_field::{at_minimize, PFParams};
use insulate::{Grid, ProblemConfig};

fn main() -> insulate::Result<()> {
    let cfg = ProblemConfig::disk(3.0, 1.0, 1.0)?;
    let grid = Grid::square(128, [0.0, 0.0], 2.0);
    let p = PFParams::for_spacing(grid.spacing[0]);
    let res = at_minimize(&cfg, &grid, &p, 0)?;
    let e = &res.extraction;

    let lb = check_lower_bound(&e.classical, p.delta_cut)?;
    println!(
        "lower bound: delta_obs {:?}, delta_core {:?}, gap mass {:.2e} (budget {:.2e})",
        lb.delta_obs, lb.delta_core, lb.gap_mass, lb.halo_budget
    );

    let dx = grid.spacing[0];
    let radii = [0.5, 0.35, 0.25, 0.18, 4.0 * dx];
    let pts = sample_points(&e.jump_set, 8);
    let dens = density_profile(&e.jump_set, &pts, &radii)?;
    println!("density ratios in [{:.3}, {:.3}]", dens.min_ratio, dens.max_ratio);

    let rep = blowup_scan(&e.classical, &e.jump_set, pts[0], &radii, &BlowupOptions::default())?;
    println!("blow-up at {:?}: {:?}", rep.point, rep.classification);
    for ((r, er), fl) in rep.radii.iter().zip(&rep.e_r).zip(&rep.flatness) {
        println!("  r {r:.3}  e_r {er:.4}  flatness {fl:.4}");
    }
    Ok(())
}
