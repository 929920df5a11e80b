use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Truncated Fourier series `r(θ) = a0 + Σ_k a_k cos kθ + b_k sin kθ`, k = 1..M.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCurve {
    pub a0: f64,
    /// `cos[k-1]` is the coefficient of `cos kθ`.
    pub cos: Vec<f64>,
    /// `sin[k-1]` is the coefficient of `sin kθ`.
    pub sin: Vec<f64>,
}

impl FourierCurve {
    pub fn circle(radius: f64, modes: usize) -> Self {
        FourierCurve {
            a0: radius,
            cos: vec![0.0; modes],
            sin: vec![0.0; modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    /// Radius and its first two θ-derivatives.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = self.a0;
        let mut dr = 0.0;
        let mut ddr = 0.0;
        for (idx, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (idx + 1) as f64;
            let (s, c) = (k * theta).sin_cos();
            r += a * c + b * s;
            dr += k * (b * c - a * s);
            ddr -= k * k * (a * c + b * s);
        }
        (r, dr, ddr)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }

    /// Enclosed area `½∮ r² dθ`, exact by Parseval.
    pub fn area(&self) -> f64 {
        let modes: f64 = self
            .cos
            .iter()
            .zip(&self.sin)
            .map(|(a, b)| a * a + b * b)
            .sum();
        PI * self.a0 * self.a0 + 0.5 * PI * modes
    }

    /// Arc length by the periodic trapezoidal rule on `samples` points.
    pub fn perimeter(&self, samples: usize) -> f64 {
        let dt = 2.0 * PI / samples as f64;
        (0..samples)
            .map(|j| {
                let (r, dr, _) = self.eval(j as f64 * dt);
                (r * r + dr * dr).sqrt()
            })
            .sum::<f64>()
            * dt
    }

    /// Signed curvature of the polar curve, positive where the curve is convex.
    pub fn curvature(&self, theta: f64) -> f64 {
        let (r, dr, ddr) = self.eval(theta);
        let speed2 = r * r + dr * dr;
        (r * r + 2.0 * dr * dr - r * ddr) / speed2.powf(1.5)
    }

    /// Coefficients flattened as `[a0, a1, b1, a2, b2, ...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.modes());
        out.push(self.a0);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            out.push(*a);
            out.push(*b);
        }
        out
    }

    pub fn from_slice(coeffs: &[f64]) -> Self {
        assert!(coeffs.len() % 2 == 1, "coefficient vector must have odd length");
        let modes = coeffs.len() / 2;
        FourierCurve {
            a0: coeffs[0],
            cos: (0..modes).map(|k| coeffs[1 + 2 * k]).collect(),
            sin: (0..modes).map(|k| coeffs[2 + 2 * k]).collect(),
        }
    }

    /// Mode number of each entry of [`FourierCurve::to_vec`].
    pub fn mode_of_index(index: usize) -> usize {
        if index == 0 {
            0
        } else {
            (index + 1) / 2
        }
    }

    /// The basis function multiplying entry `index` of the flattened coefficients.
    pub fn basis(index: usize, theta: f64) -> f64 {
        if index == 0 {
            return 1.0;
        }
        let k = Self::mode_of_index(index) as f64;
        if index % 2 == 1 {
            (k * theta).cos()
        } else {
            (k * theta).sin()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_geometry() {
        let c = FourierCurve::circle(2.0, 3);
        assert!((c.area() - 4.0 * PI).abs() < 1e-14);
        assert!((c.perimeter(64) - 4.0 * PI).abs() < 1e-12);
        assert!((c.curvature(0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = FourierCurve {
            a0: 1.5,
            cos: vec![0.1, 0.0, 0.05],
            sin: vec![0.0, -0.07, 0.02],
        };
        let t = 0.77;
        let step = 1e-5;
        let (_, dr, ddr) = c.eval(t);
        let fd1 = (c.radius(t + step) - c.radius(t - step)) / (2.0 * step);
        let fd2 = (c.radius(t + step) - 2.0 * c.radius(t) + c.radius(t - step)) / (step * step);
        assert!((dr - fd1).abs() < 1e-8);
        assert!((ddr - fd2).abs() < 1e-4);
    }

    #[test]
    fn area_matches_quadrature() {
        let c = FourierCurve {
            a0: 1.2,
            cos: vec![0.1, 0.2],
            sin: vec![0.05, -0.1],
        };
        let n = 256;
        let dt = 2.0 * PI / n as f64;
        let quad: f64 = (0..n).map(|j| 0.5 * c.radius(j as f64 * dt).powi(2)).sum::<f64>() * dt;
        assert!((quad - c.area()).abs() < 1e-12);
    }

    #[test]
    fn flatten_round_trip() {
        let c = FourierCurve {
            a0: 1.0,
            cos: vec![0.1, 0.2],
            sin: vec![0.3, 0.4],
        };
        assert_eq!(FourierCurve::from_slice(&c.to_vec()), c);
        assert_eq!(FourierCurve::mode_of_index(3), 2);
        assert!((FourierCurve::basis(4, 0.5) - (1.0f64).sin()).abs() < 1e-15);
    }
}
