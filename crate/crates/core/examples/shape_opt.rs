//! Gradient descent on the insulator boundary from a perturbed start,
//! compared with the radial optimum.

use insulate::shape_opt::{optimize_shape, OptOptions};
use insulate::{optimize_radius, ProblemConfig, StarShape};

fn main() -> insulate::Result<()> {
    let cfg = ProblemConfig::disk(3.0, 1.0, 1.0)?;
    let oracle = optimize_radius(2, 3.0, 1.0, 1.0)?;
    let mut init = StarShape::circle([0.0, 0.0], 1.3, 8);
    init.radius.cos[2] = 0.1;
    init.radius.sin[1] = 0.05;

    let res = optimize_shape(&cfg, &init, &OptOptions::default())?;
    for row in res.trace.iter().step_by(10) {
        println!("iter {:>4}  F {:.8}  |g| {:.2e}", row.iter, row.energy.total, row.grad_norm);
    }
    let c = &res.shape.radius;
    let wobble = c.cos.iter().chain(&c.sin).fold(0.0f64, |m, a| m.max(a.abs()));
    println!(
        "{:?}, converged = {}: a0 = {:.5} (R* = {:.5}), max mode {wobble:.1e}, F = {:.6} (F* = {:.6})",
        res.minimizer, res.converged, c.a0, oracle.r_star, res.final_energy, oracle.f_star
    );
    Ok(())
}
