//! First and second linearized state equations.
//!
//! Both reuse the forward kernel with zero initial data and a modified
//! source: `h ⊙ y` for `z = S'(u)h`, and `h1 ⊙ z2 + h2 ⊙ z1` for
//! `ζ = S''(u)[h1, h2]`.

use crate::domain::SpaceTimeField;
use crate::error::{Result, WaveError};
use crate::kernel::{march, velocity};
use crate::state::{StateTrajectory, WaveProblem};

/// Which derivative of the control-to-state map produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTrajectory {
    pub z: SpaceTimeField,
    pub z_dot: SpaceTimeField,
    pub direction: Direction,
}

fn solve_with_source(
    p: &WaveProblem,
    source: &SpaceTimeField,
    direction: Direction,
) -> Result<LinearizedTrajectory> {
    let (g, tg) = (p.grid(), p.time());
    let zero = vec![0.0; g.len()];
    let z = march(g, tg, p.control(), Some(source), &zero, &zero)?;
    let z_dot = velocity(&z, tg, &zero);
    Ok(LinearizedTrajectory {
        z,
        z_dot,
        direction,
    })
}

fn check_state(p: &WaveProblem, tr: &StateTrajectory) -> Result<()> {
    if tr.grid != *p.grid() || tr.time != *p.time() {
        return Err(WaveError::ShapeMismatch(
            "trajectory was computed on different grids".into(),
        ));
    }
    tr.y.check_shape(p.grid(), p.time(), "state")
}

/// `z̈ + ż = Δz + u z + h y`, `z(0) = ż(0) = 0`.
pub fn solve_linearized(
    p: &WaveProblem,
    tr: &StateTrajectory,
    h: &SpaceTimeField,
) -> Result<LinearizedTrajectory> {
    check_state(p, tr)?;
    h.check_shape(p.grid(), p.time(), "direction")?;
    solve_with_source(p, &h.hadamard(&tr.y), Direction::First)
}

/// `ζ̈ + ζ̇ = Δζ + u ζ + h1 z2 + h2 z1`, `ζ(0) = ζ̇(0) = 0`.
pub fn solve_second_linearized(
    p: &WaveProblem,
    h1: &SpaceTimeField,
    z1: &LinearizedTrajectory,
    h2: &SpaceTimeField,
    z2: &LinearizedTrajectory,
) -> Result<LinearizedTrajectory> {
    let (g, tg) = (p.grid(), p.time());
    for (f, what) in [(h1, "h1"), (h2, "h2"), (&z1.z, "z1"), (&z2.z, "z2")] {
        f.check_shape(g, tg, what)?;
    }
    if z1.direction != Direction::First || z2.direction != Direction::First {
        return Err(WaveError::InvalidProblem(
            "second linearization needs first-order trajectories".into(),
        ));
    }
    let source = h1.hadamard(&z2.z).add(&h2.hadamard(&z1.z));
    solve_with_source(p, &source, Direction::Second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ScalarField, SpatialGrid, TimeGrid};
    use crate::state::solve_forward;
    use std::f64::consts::PI;

    fn problem() -> WaveProblem {
        let g = SpatialGrid::new_1d(1.0, 15).unwrap();
        let tg = TimeGrid::new(2.0, 64).unwrap();
        WaveProblem::builder(g, tg)
            .initial(
                ScalarField::from_fn(&g, |x| (PI * x[0]).sin()),
                ScalarField::zeros(&g),
            )
            .control(SpaceTimeField::from_fn(&g, &tg, |t, x| -0.3 * (t + x[0]).cos()))
            .build()
            .unwrap()
    }

    #[test]
    fn zero_direction_gives_zero() {
        let p = problem();
        let tr = solve_forward(&p).unwrap();
        let h = SpaceTimeField::zeros(p.grid(), p.time());
        let z = solve_linearized(&p, &tr, &h).unwrap();
        assert!(z.z.values().iter().all(|&v| v == 0.0));
        let zeta = solve_second_linearized(&p, &h, &z, &h, &z).unwrap();
        assert!(zeta.z.values().iter().all(|&v| v == 0.0));
        assert_eq!(zeta.direction, Direction::Second);
    }

    #[test]
    fn second_order_source_is_symmetric() {
        let p = problem();
        let tr = solve_forward(&p).unwrap();
        let (g, tg) = (p.grid(), p.time());
        let h1 = SpaceTimeField::from_fn(g, tg, |t, x| (3.0 * x[0] + t).sin());
        let h2 = SpaceTimeField::from_fn(g, tg, |t, x| (t * x[0]).cos());
        let z1 = solve_linearized(&p, &tr, &h1).unwrap();
        let z2 = solve_linearized(&p, &tr, &h2).unwrap();
        let a = solve_second_linearized(&p, &h1, &z1, &h2, &z2).unwrap();
        let b = solve_second_linearized(&p, &h2, &z2, &h1, &z1).unwrap();
        assert_eq!(a.z, b.z);
        assert!(solve_second_linearized(&p, &h1, &a, &h2, &z2).is_err());
    }
}
