//! Concentric insulation of a disk: profile, energy curve and optimal radius.
//!
//! cargo run --release --example radial -- [h] [C0]

use insulate::{optimize_radius, radial_energy, radial_profile};

fn main() -> insulate::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let h = args.first().copied().unwrap_or(3.0);
    let c0 = args.get(1).copied().unwrap_or(1.0);

    let opt = optimize_radius(2, h, c0, 1.0)?;
    println!("h = {h}, C0 = {c0}: R* = {:.6}, F* = {:.6}", opt.r_star, opt.f_star);
    let prof = radial_profile(2, h, 1.0, opt.r_star)?;
    println!(
        "u(R*) = {:.4}, flux = {:.6}, robin residual = {:.1e}",
        prof.u_outer,
        prof.flux(),
        prof.robin_residual()
    );
    println!("{:>8} {:>12}", "R", "F(R)");
    for k in 0..=10 {
        let r = 1.0 + 0.1 * k as f64 * (2.0 * opt.r_star - 1.0).max(0.5);
        println!("{r:>8.3} {:>12.6}", radial_energy(2, h, c0, 1.0, r)?.total);
    }
    // three dimensions: the ball
    let ball = optimize_radius(3, h, c0, 1.0)?;
    println!("n = 3: R* = {:.6}, F* = {:.6}", ball.r_star, ball.f_star);
    Ok(())
}
