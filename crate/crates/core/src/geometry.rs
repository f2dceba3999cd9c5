//! Angle and line conventions shared by every transform in the crate.
//!
//! A direction is an angle ω in [0, 2π) standing for the unit vector
//! (cos ω, sin ω). The line l(ω, p) is the set of points x with ⟨x, ω⟩ = p,
//! traced as x = p·ω + u·ω⊥ where ω⊥ = (−sin ω, cos ω). The same point set
//! appears again as l(ω + π, −p) with the opposite orientation, which is why
//! sinogram grids sample the full circle.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::{Error, Result};

/// Unit direction on the circle, stored as an angle normalized to [0, 2π).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    /// Builds a direction from any finite angle, reducing it mod 2π.
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(TAU);
        // rem_euclid can round a tiny negative input up to exactly 2π.
        if a >= TAU {
            a = 0.0;
        }
        Direction { angle: a }
    }

    /// The normalized angle in [0, 2π).
    pub fn angle(self) -> f64 {
        self.angle
    }

    /// The unit vector (cos ω, sin ω).
    pub fn unit_vector(self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }

    /// The perpendicular unit vector ω⊥ = (−sin ω, cos ω).
    pub fn perp(self) -> [f64; 2] {
        [-self.angle.sin(), self.angle.cos()]
    }

    /// Direction rotated by `delta` radians.
    pub fn rotated(self, delta: f64) -> Self {
        Direction::new(self.angle + delta)
    }

    /// The direction ω + π/2, whose unit vector is `perp(ω)`.
    pub fn perp_direction(self) -> Self {
        self.rotated(FRAC_PI_2)
    }

    /// The opposite direction ω + π.
    pub fn opposite(self) -> Self {
        self.rotated(std::f64::consts::PI)
    }
}

/// A line addressed by its unit normal and signed offset: ⟨x, ω⟩ = p.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineCoord {
    pub omega: Direction,
    pub p: f64,
}

impl LineCoord {
    pub fn new(omega: Direction, p: f64) -> Self {
        LineCoord { omega, p }
    }
}

/// The point p·ω + u·ω⊥ at arc-length parameter `u` along the line.
pub fn point_on_line(line: LineCoord, u: f64) -> [f64; 2] {
    let w = line.omega.unit_vector();
    let wp = line.omega.perp();
    [line.p * w[0] + u * wp[0], line.p * w[1] + u * wp[1]]
}

/// Inverse of [`point_on_line`]: the (p, u) coordinates of `x` in the frame
/// of `omega`, i.e. p = ⟨x, ω⟩ and u = ⟨x, ω⊥⟩.
pub fn line_coords_of_point(x: [f64; 2], omega: Direction) -> (f64, f64) {
    let w = omega.unit_vector();
    let wp = omega.perp();
    (x[0] * w[0] + x[1] * w[1], x[0] * wp[0] + x[1] * wp[1])
}

/// Sampling grid for sinograms: `n_angles` directions uniform on [0, 2π)
/// and `n_p` offsets uniform on [−p_max, p_max], endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinogramGrid {
    n_angles: usize,
    n_p: usize,
    p_max: f64,
}

impl SinogramGrid {
    pub fn new(n_angles: usize, n_p: usize, p_max: f64) -> Result<Self> {
        if n_angles < 2 {
            return Err(Error::InvalidGrid(format!(
                "n_angles = {n_angles}, need at least 2"
            )));
        }
        if n_p < 2 {
            return Err(Error::InvalidGrid(format!("n_p = {n_p}, need at least 2")));
        }
        if p_max <= 0.0 || !p_max.is_finite() {
            return Err(Error::InvalidGrid(format!("p_max = {p_max}, need > 0")));
        }
        Ok(SinogramGrid {
            n_angles,
            n_p,
            p_max,
        })
    }

    pub fn n_angles(self) -> usize {
        self.n_angles
    }

    pub fn n_p(self) -> usize {
        self.n_p
    }

    pub fn p_max(self) -> f64 {
        self.p_max
    }

    /// The k-th grid direction ω_k = 2πk/n_angles.
    pub fn angle(self, k: usize) -> Direction {
        debug_assert!(k < self.n_angles);
        Direction::new(TAU * k as f64 / self.n_angles as f64)
    }

    /// The j-th offset p_j = −p_max + j·Δp.
    pub fn offset(self, j: usize) -> f64 {
        debug_assert!(j < self.n_p);
        -self.p_max + j as f64 * self.dp()
    }

    /// Offset spacing Δp = 2·p_max/(n_p − 1).
    pub fn dp(self) -> f64 {
        2.0 * self.p_max / (self.n_p - 1) as f64
    }

    /// Angular spacing Δω = 2π/n_angles.
    pub fn domega(self) -> f64 {
        TAU / self.n_angles as f64
    }

    /// The line at grid node (k, j).
    pub fn line(self, k: usize, j: usize) -> LineCoord {
        LineCoord::new(self.angle(k), self.offset(j))
    }

    /// All offsets as a vector.
    pub fn offsets(self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.offset(j)).collect()
    }
}
