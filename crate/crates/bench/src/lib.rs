//! Benchmark fixtures shared by the criterion targets.

use std::f64::consts::PI;

use bwave_core::{ScalarField, SpaceTimeField, SpatialGrid, TimeGrid, WaveProblem};

/// Decaying first mode on `(0, 1)` with `n` interior nodes and `steps` steps
/// over `T_h = 8`, under a smooth interior control.
pub fn decaying_mode(n: usize, steps: usize) -> WaveProblem {
    let g = SpatialGrid::new_1d(1.0, n).unwrap();
    let tg = TimeGrid::new(8.0, steps).unwrap();
    let y0 = ScalarField::from_fn(&g, |x| (PI * x[0]).sin());
    let u = SpaceTimeField::from_fn(&g, &tg, |t, x| 0.5 * (-t).exp() * (2.0 * PI * x[0]).sin());
    WaveProblem::builder(g, tg)
        .initial(y0, ScalarField::zeros(&g))
        .control(u)
        .build()
        .unwrap()
}
