//! A small body placed inside the insulation layer of a disk: the relaxed
//! insulator splits into components that touch along a jump with positive
//! temperature on both sides.
//!
//! cargo run --release --example shared_boundary -- [n]

use insulate::phase_field::{at_minimize, disk_with_inclusion, PFParams};
use insulate::{optimize_radius, Grid, ProblemConfig};

fn main() -> insulate::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(320);
    let (h, c0) = (1.2, 0.048);
    let r_star = optimize_radius(2, h, c0, 1.0)?.r_star;
    let x = 1.0 + 0.85 * (r_star - 1.0);
    let cfg = ProblemConfig::new(2, h, c0, disk_with_inclusion(1.0, [x, 0.0], 0.1))?;
    let grid = Grid::square(n, [0.0, 0.0], 1.25 * r_star);
    let dx = grid.spacing[0];
    let mut p = PFParams::for_spacing(dx);
    p.epsilon_schedule = vec![4.0 * dx, 2.0 * 2f64.sqrt() * dx, 2.0 * dx];

    let res = at_minimize(&cfg, &grid, &p, 0)?;
    let e = &res.extraction;
    println!(
        "{} positive components, touching pairs {:?}, multiplicity-2 length {:.4}, energy {:.5}",
        e.positive_components, e.touching_pairs, e.multiplicity_two_length, e.energy.total
    );
    Ok(())
}
