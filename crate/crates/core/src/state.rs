//! Forward solves of the bilinear damped wave equation and the a priori
//! energy, acceleration and Lipschitz estimates evaluated on discrete
//! trajectories.

use crate::domain::{
    dot_l2, h10_sq, norm_control, norm_forcing, norm_l2_linf, norm_linf, norm_linf_l2,
    poincare_constant, spacetime_dot, NegLaplacianSolver, ScalarField, SpaceTimeField,
    SpatialGrid, TimeGrid,
};
use crate::error::{Result, WaveError};
use crate::kernel::{apply_k, march, velocity};

/// Relative slack allowed when comparing an estimate's left side to its right side.
pub const ENERGY_TOL: f64 = 1e-6;

/// A complete discrete instance of the control problem.
#[derive(Debug, Clone)]
pub struct WaveProblem {
    grid: SpatialGrid,
    time: TimeGrid,
    y0: ScalarField,
    y1: ScalarField,
    f: SpaceTimeField,
    u: SpaceTimeField,
    alpha: SpaceTimeField,
    beta: SpaceTimeField,
    gamma: f64,
    yd: SpaceTimeField,
}

/// Builder for [`WaveProblem`]. Unset data defaults to zero, bounds to `[-1, 1]`
/// and `γ` to 1.
#[derive(Debug, Clone)]
pub struct WaveProblemBuilder {
    grid: SpatialGrid,
    time: TimeGrid,
    y0: Option<ScalarField>,
    y1: Option<ScalarField>,
    f: Option<SpaceTimeField>,
    u: Option<SpaceTimeField>,
    alpha: Option<SpaceTimeField>,
    beta: Option<SpaceTimeField>,
    gamma: f64,
    yd: Option<SpaceTimeField>,
}

impl WaveProblemBuilder {
    pub fn initial(mut self, y0: ScalarField, y1: ScalarField) -> Self {
        self.y0 = Some(y0);
        self.y1 = Some(y1);
        self
    }

    pub fn forcing(mut self, f: SpaceTimeField) -> Self {
        self.f = Some(f);
        self
    }

    pub fn control(mut self, u: SpaceTimeField) -> Self {
        self.u = Some(u);
        self
    }

    pub fn bounds(mut self, alpha: SpaceTimeField, beta: SpaceTimeField) -> Self {
        self.alpha = Some(alpha);
        self.beta = Some(beta);
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn target(mut self, yd: SpaceTimeField) -> Self {
        self.yd = Some(yd);
        self
    }

    pub fn build(self) -> Result<WaveProblem> {
        let g = self.grid;
        let tg = self.time;
        let zeros = || SpaceTimeField::zeros(&g, &tg);
        let p = WaveProblem {
            y0: self.y0.unwrap_or_else(|| ScalarField::zeros(&g)),
            y1: self.y1.unwrap_or_else(|| ScalarField::zeros(&g)),
            f: self.f.unwrap_or_else(zeros),
            u: self.u.unwrap_or_else(zeros),
            alpha: self
                .alpha
                .unwrap_or_else(|| SpaceTimeField::constant(&g, &tg, -1.0)),
            beta: self
                .beta
                .unwrap_or_else(|| SpaceTimeField::constant(&g, &tg, 1.0)),
            gamma: self.gamma,
            yd: self.yd.unwrap_or_else(zeros),
            grid: g,
            time: tg,
        };
        p.validate()?;
        Ok(p)
    }
}

impl WaveProblem {
    pub fn builder(grid: SpatialGrid, time: TimeGrid) -> WaveProblemBuilder {
        WaveProblemBuilder {
            grid,
            time,
            y0: None,
            y1: None,
            f: None,
            u: None,
            alpha: None,
            beta: None,
            gamma: 1.0,
            yd: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let (g, tg) = (&self.grid, &self.time);
        for (name, v) in [("y0", &self.y0), ("y1", &self.y1)] {
            if v.len() != g.len() {
                return Err(WaveError::ShapeMismatch(format!(
                    "{name}: expected {} values, got {}",
                    g.len(),
                    v.len()
                )));
            }
        }
        self.f.check_shape(g, tg, "f")?;
        self.u.check_shape(g, tg, "u")?;
        self.alpha.check_shape(g, tg, "alpha")?;
        self.beta.check_shape(g, tg, "beta")?;
        self.yd.check_shape(g, tg, "yd")?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(WaveError::InvalidProblem(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        for (index, (&a, &b)) in self
            .alpha
            .values()
            .iter()
            .zip(self.beta.values())
            .enumerate()
        {
            if !(a <= b) {
                return Err(WaveError::BoundsInverted {
                    index,
                    alpha: a,
                    beta: b,
                });
            }
        }
        Ok(())
    }

    /// Copy of the problem with the control replaced.
    pub fn with_control(&self, u: SpaceTimeField) -> Result<Self> {
        u.check_shape(&self.grid, &self.time, "u")?;
        Ok(Self { u, ..self.clone() })
    }

    /// Copy of the problem with the forcing replaced.
    pub fn with_forcing(&self, f: SpaceTimeField) -> Result<Self> {
        f.check_shape(&self.grid, &self.time, "f")?;
        Ok(Self { f, ..self.clone() })
    }

    /// Copy of the problem with the tracking target replaced.
    pub fn with_target(&self, yd: SpaceTimeField) -> Result<Self> {
        yd.check_shape(&self.grid, &self.time, "yd")?;
        Ok(Self { yd, ..self.clone() })
    }

    /// Copy with a new regularization weight.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let p = Self {
            gamma,
            ..self.clone()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }
    pub fn time(&self) -> &TimeGrid {
        &self.time
    }
    pub fn y0(&self) -> &ScalarField {
        &self.y0
    }
    pub fn y1(&self) -> &ScalarField {
        &self.y1
    }
    pub fn forcing(&self) -> &SpaceTimeField {
        &self.f
    }
    pub fn control(&self) -> &SpaceTimeField {
        &self.u
    }
    pub fn alpha(&self) -> &SpaceTimeField {
        &self.alpha
    }
    pub fn beta(&self) -> &SpaceTimeField {
        &self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn target(&self) -> &SpaceTimeField {
        &self.yd
    }
}

/// Discrete displacement and velocity at every time node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    pub y: SpaceTimeField,
    pub v: SpaceTimeField,
}

impl StateTrajectory {
    pub(crate) fn from_displacement(
        grid: SpatialGrid,
        time: TimeGrid,
        y: SpaceTimeField,
        v0: &[f64],
    ) -> Self {
        let v = velocity(&y, &time, v0);
        Self { grid, time, y, v }
    }
}

/// Forward solve at the problem's own control.
pub fn solve_forward(p: &WaveProblem) -> Result<StateTrajectory> {
    solve_forward_at(p, &p.u)
}

/// Forward solve with the problem data but control `u`.
pub fn solve_forward_at(p: &WaveProblem, u: &SpaceTimeField) -> Result<StateTrajectory> {
    u.check_shape(&p.grid, &p.time, "u")?;
    let y = march(
        &p.grid,
        &p.time,
        u,
        Some(&p.f),
        p.y0.values(),
        p.y1.values(),
    )?;
    Ok(StateTrajectory::from_displacement(
        p.grid,
        p.time,
        y,
        p.y1.values(),
    ))
}

/// `E(t_k) = ½‖v(t_k)‖² + ½‖y(t_k)‖²_{H¹₀}`.
pub fn energy(tr: &StateTrajectory, k: usize) -> Result<f64> {
    let m = tr.time.steps();
    if k > m {
        return Err(WaveError::IndexOutOfRange { index: k, max: m });
    }
    let g = &tr.grid;
    let v = tr.v.slice(k);
    Ok(0.5 * dot_l2(g, v, v) + 0.5 * h10_sq(g, tr.y.slice(k)))
}

/// Energy carried by the scheme between nodes `k` and `k+1`:
/// `½‖(y[k+1] - y[k])/Δt‖² + ½‖(y[k+1] + y[k])/2‖²_{H¹₀}`.
///
/// With `u ≡ 0` and `f ≡ 0` it decreases by exactly `‖y[k+1] - y[k-1]‖²/(4Δt)`
/// per step, whereas the node energy [`energy`] is monotone only up to the
/// truncation error of the velocity.
pub fn staggered_energy(tr: &StateTrajectory, k: usize) -> Result<f64> {
    let m = tr.time.steps();
    if k >= m {
        return Err(WaveError::IndexOutOfRange { index: k, max: m - 1 });
    }
    let g = &tr.grid;
    let dt = tr.time.dt();
    let (a, b) = (tr.y.slice(k), tr.y.slice(k + 1));
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / dt).collect();
    let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    Ok(0.5 * dot_l2(g, &d, &d) + 0.5 * h10_sq(g, &s))
}

/// Outcome of comparing one a priori estimate against a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Per-node quantity whose supremum forms the left-hand side.
    pub per_step: Vec<f64>,
    pub lhs: f64,
    /// The multiplicative constant of the estimate.
    pub constant: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl EnergyReport {
    pub(crate) fn new(per_step: Vec<f64>, constant: f64, rhs: f64) -> Self {
        let lhs = per_step.iter().copied().fold(0.0, f64::max);
        let satisfied = lhs <= rhs * (1.0 + ENERGY_TOL);
        Self {
            per_step,
            lhs,
            constant,
            rhs,
            satisfied,
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// `‖y0‖²_{H¹₀} + ‖y1‖² + ‖f‖²_{L²(Q_T)}`.
fn data_size(p: &WaveProblem) -> f64 {
    let g = &p.grid;
    h10_sq(g, p.y0.values())
        + dot_l2(g, p.y1.values(), p.y1.values())
        + spacetime_dot(&p.f, &p.f, &p.time, g)
}

/// `exp(c_Ω ‖u‖²_{L²(0,T;L∞)})`
pub fn energy_constant(p: &WaveProblem) -> f64 {
    let c_omega = poincare_constant(&p.grid);
    (c_omega * norm_l2_linf(&p.u, &p.time).powi(2)).exp()
}

/// `3 (1 + √c_Ω ‖u‖_{L∞(Q)})² exp(c_Ω ‖u‖²_{L²(0,T;L∞)})`
pub fn accel_constant(p: &WaveProblem) -> f64 {
    let c_omega = poincare_constant(&p.grid);
    3.0 * (1.0 + c_omega.sqrt() * norm_linf(&p.u)).powi(2) * energy_constant(p)
}

pub fn verify_energy_estimate(p: &WaveProblem, tr: &StateTrajectory) -> EnergyReport {
    let g = &p.grid;
    let per_step: Vec<f64> = (0..p.time.nodes())
        .map(|k| h10_sq(g, tr.y.slice(k)) + dot_l2(g, tr.v.slice(k), tr.v.slice(k)))
        .collect();
    let c = energy_constant(p);
    EnergyReport::new(per_step, c, c * data_size(p))
}

/// Node values of `ÿ = Δ_h y + u y + f - ẏ`.
pub fn acceleration(
    g: &SpatialGrid,
    tg: &TimeGrid,
    y: &SpaceTimeField,
    v: &SpaceTimeField,
    u: &SpaceTimeField,
    f: &SpaceTimeField,
) -> SpaceTimeField {
    let mut acc = SpaceTimeField::zeros(g, tg);
    for k in 0..tg.nodes() {
        let out = acc.slice_mut(k);
        apply_k(g, u.slice(k), y.slice(k), out);
        for ((o, fi), vi) in out.iter_mut().zip(f.slice(k)).zip(v.slice(k)) {
            *o += fi - vi;
        }
    }
    acc
}

pub fn verify_accel_estimate(p: &WaveProblem, tr: &StateTrajectory) -> Result<EnergyReport> {
    let g = &p.grid;
    let solver = NegLaplacianSolver::new(g)?;
    let acc = acceleration(g, &p.time, &tr.y, &tr.v, &p.u, &p.f);
    let per_step: Vec<f64> = (0..p.time.nodes())
        .map(|k| solver.hminus1_sq(acc.slice(k)))
        .collect();
    let c = accel_constant(p);
    let rhs = c * data_size(p) + 3.0 * norm_linf_l2(&p.f, g).powi(2);
    Ok(EnergyReport::new(per_step, c, rhs))
}

/// Ratio of the stability estimate's left side to the data perturbation size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzProbe {
    pub ratio: f64,
    /// `sup‖δy‖²_{H¹₀} + sup‖δẏ‖² + sup‖δÿ‖²_{H⁻¹}`
    pub lhs: f64,
    /// `‖δu‖²_U + ‖δf‖²_F`
    pub perturbation: f64,
    /// Set when the two problems carry identical `(u, f)`; the ratio is then 0.
    pub degenerate: bool,
}

/// Compares the solutions of two problems that differ only in control and forcing.
pub fn lipschitz_probe(p1: &WaveProblem, p2: &WaveProblem) -> Result<LipschitzProbe> {
    if p1.grid != p2.grid || p1.time != p2.time {
        return Err(WaveError::ShapeMismatch(
            "lipschitz probe needs problems on identical grids".into(),
        ));
    }
    if p1.y0 != p2.y0 || p1.y1 != p2.y1 {
        return Err(WaveError::InvalidProblem(
            "lipschitz probe needs identical initial data".into(),
        ));
    }
    let (g, tg) = (&p1.grid, &p1.time);
    let du = p1.u.sub(&p2.u);
    let df = p1.f.sub(&p2.f);
    let perturbation = norm_control(&du, tg).powi(2) + norm_forcing(&df, tg, g).powi(2);
    if perturbation == 0.0 {
        return Ok(LipschitzProbe {
            ratio: 0.0,
            lhs: 0.0,
            perturbation,
            degenerate: true,
        });
    }
    let t1 = solve_forward(p1)?;
    let t2 = solve_forward(p2)?;
    let a1 = acceleration(g, tg, &t1.y, &t1.v, &p1.u, &p1.f);
    let a2 = acceleration(g, tg, &t2.y, &t2.v, &p2.u, &p2.f);
    let (dy, dv, da) = (t1.y.sub(&t2.y), t1.v.sub(&t2.v), a1.sub(&a2));
    let solver = NegLaplacianSolver::new(g)?;
    let (mut sy, mut sv, mut sa) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..tg.nodes() {
        sy = sy.max(h10_sq(g, dy.slice(k)));
        sv = sv.max(dot_l2(g, dv.slice(k), dv.slice(k)));
        sa = sa.max(solver.hminus1_sq(da.slice(k)));
    }
    let lhs = sy + sv + sa;
    Ok(LipschitzProbe {
        ratio: lhs / perturbation,
        lhs,
        perturbation,
        degenerate: false,
    })
}
