//! Phase-field relaxation of the radial benchmark on a Cartesian grid and the
//! extracted sharp configuration.
//!
//! cargo run --release --example phase_field -- [n]

use insulate::phase_field::{at_minimize, PFParams};
use insulate::{optimize_radius, Grid, ProblemConfig};

fn main() -> insulate::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let cfg = ProblemConfig::disk(3.0, 1.0, 1.0)?;
    let grid = Grid::square(n, [0.0, 0.0], 2.0);
    let p = PFParams::for_spacing(grid.spacing[0]);
    let res = at_minimize(&cfg, &grid, &p, 0)?;
    for st in &res.stages {
        println!(
            "eps {:.4}: {} alternations, F_eps {:.5}, extracted {:.5}",
            st.epsilon,
            st.energies.len() - 1,
            st.final_energy.total,
            st.extracted.total
        );
    }
    let oracle = optimize_radius(2, 3.0, 1.0, 1.0)?;
    let e = &res.extraction;
    println!(
        "{} positive component(s), |K| = {:.4} (2 pi R* = {:.4}), energy {:.5} = {:.3} F*",
        e.positive_components,
        e.jump_set.length(),
        2.0 * std::f64::consts::PI * oracle.r_star,
        e.energy.total,
        e.energy.total / oracle.f_star
    );
    Ok(())
}
