//! Robin state on a star-shaped insulator, checked against the closed form on
//! a circle and the flux identity on a perturbed shape.

use insulate::{energy_from_flux, radial_profile, solve_state, FourierCurve, ProblemConfig, StarShape};

fn main() -> insulate::Result<()> {
    let cfg = ProblemConfig::disk(1.0, 1.0, 1.0)?;
    let exact = radial_profile(2, 1.0, 1.0, 2.0)?;
    for n in [32, 64, 128] {
        let s = solve_state(&StarShape::circle([0.0, 0.0], 2.0, 0), &cfg, n, n)?;
        let mut err: f64 = 0.0;
        for i in 0..=s.n_s {
            for j in 0..s.n_theta {
                let p = s.node_position(i, j);
                err = err.max((s.node(i, j) - exact.value(p[0].hypot(p[1]))).abs());
            }
        }
        println!("circle {n:>3}x{n:<3} max nodal error {err:.3e}");
    }

    let mut radius = FourierCurve::circle(2.0, 3);
    radius.cos[2] = 0.2;
    let shape = StarShape {
        center: [0.0, 0.0],
        radius,
    };
    for n in [32, 64, 128] {
        let s = solve_state(&shape, &cfg, n, n)?;
        let q = s.quadrature_energy();
        let f = energy_from_flux(&s)?;
        println!(
            "trefoil {n:>3}: quadrature {:.8}, flux {:.8}, robin residual {:.1e}",
            q.total, f.total, s.robin_residual_sup
        );
    }
    Ok(())
}
