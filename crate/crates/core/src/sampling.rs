//! Random smooth fields for property tests and verification runs.
//!
//! Fields are finite sums of Dirichlet sine modes with smooth time factors,
//! so the same seed describes the same continuous function on every mesh.
//! The coefficients satisfy `Σ|a| ≤ amplitude`, which bounds the sup norm.

use std::f64::consts::PI;

use rand::Rng;

use crate::domain::{ScalarField, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::error::Result;
use crate::state::WaveProblem;

/// Number of modes per random field.
const MODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    amp: f64,
    kx: f64,
    ky: f64,
    /// Time factor `cos(ω t + θ) e^{-r t}`.
    omega: f64,
    phase: f64,
    rate: f64,
}

impl Mode {
    fn space(&self, g: &SpatialGrid, x: [f64; 2]) -> f64 {
        let mut v = (self.kx * PI * x[0] / g.extent(0)).sin();
        if g.dimension() == 2 {
            v *= (self.ky * PI * x[1] / g.extent(1)).sin();
        }
        v
    }

    fn time(&self, t: f64) -> f64 {
        (self.omega * t + self.phase).cos() * (-self.rate * t).exp()
    }
}

/// A random smooth function of `(t, x)`; evaluate with [`SmoothField::on`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    modes: Vec<Mode>,
}

impl SmoothField {
    pub fn random(rng: &mut impl Rng, amplitude: f64) -> Self {
        let mut modes: Vec<Mode> = (0..MODES)
            .map(|_| Mode {
                amp: rng.gen_range(-1.0..1.0),
                kx: rng.gen_range(1..=4) as f64,
                ky: rng.gen_range(1..=3) as f64,
                omega: rng.gen_range(0.0..3.0),
                phase: rng.gen_range(0.0..2.0 * PI),
                rate: rng.gen_range(0.0..0.5),
            })
            .collect();
        let total: f64 = modes.iter().map(|m| m.amp.abs()).sum();
        if total > 0.0 {
            for m in &mut modes {
                m.amp *= amplitude / total;
            }
        }
        Self { modes }
    }

    pub fn eval(&self, g: &SpatialGrid, t: f64, x: [f64; 2]) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amp * m.space(g, x) * m.time(t))
            .sum()
    }

    pub fn on(&self, g: &SpatialGrid, tg: &TimeGrid) -> SpaceTimeField {
        SpaceTimeField::from_fn(g, tg, |t, x| self.eval(g, t, x))
    }

    /// The spatial profile at `t = 0`.
    pub fn at_start(&self, g: &SpatialGrid) -> ScalarField {
        ScalarField::from_fn(g, |x| self.eval(g, 0.0, x))
    }
}

/// Mesh-independent description of a random admissible problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomScenario {
    pub y0: SmoothField,
    pub y1: SmoothField,
    pub f: SmoothField,
    pub u: SmoothField,
    pub yd: SmoothField,
    pub gamma: f64,
}

impl RandomScenario {
    /// Controls are bounded by `control_amplitude` and stay inside `[-1, 1]`
    /// when it is at most 1.
    pub fn random(rng: &mut impl Rng, control_amplitude: f64) -> Self {
        Self {
            y0: SmoothField::random(rng, 1.0),
            y1: SmoothField::random(rng, 1.0),
            f: SmoothField::random(rng, 1.0),
            u: SmoothField::random(rng, control_amplitude),
            yd: SmoothField::random(rng, 0.5),
            gamma: rng.gen_range(0.1..2.0),
        }
    }

    pub fn problem(&self, g: &SpatialGrid, tg: &TimeGrid) -> Result<WaveProblem> {
        WaveProblem::builder(*g, *tg)
            .initial(self.y0.at_start(g), self.y1.at_start(g))
            .forcing(self.f.on(g, tg))
            .control(self.u.on(g, tg))
            .target(self.yd.on(g, tg))
            .gamma(self.gamma)
            .build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn amplitude_bounds_sup_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = SpatialGrid::new_2d([1.0, 2.0], [9, 9]).unwrap();
        let tg = TimeGrid::new(3.0, 12).unwrap();
        for _ in 0..20 {
            let f = SmoothField::random(&mut rng, 0.7).on(&g, &tg);
            assert!(f.max_abs() <= 0.7 + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_function_on_refined_mesh() {
        let g = SpatialGrid::new_1d(1.0, 7).unwrap();
        let tg = TimeGrid::new(2.0, 8).unwrap();
        let a = SmoothField::random(&mut ChaCha8Rng::seed_from_u64(9), 1.0);
        let b = SmoothField::random(&mut ChaCha8Rng::seed_from_u64(9), 1.0);
        let (coarse, fine) = (a.on(&g, &tg), b.on(&g.refined(), &tg.refined()));
        // coarse node i sits at fine node 2i+1; coarse step k at fine step 2k
        for k in 0..tg.nodes() {
            for i in 0..g.len() {
                assert_eq!(coarse.slice(k)[i], fine.slice(2 * k)[2 * i + 1]);
            }
        }
    }
}
