//! Tracking cost `J(u) = ½‖y_u - y_d‖² + (γ/2)‖u‖²`, its adjoint gradient
//! `φ y + γ u` and the second derivative
//! `J''(u)[h1,h2] = ⟨z1,z2⟩ + ⟨φ, h1 z2 + h2 z1⟩ + γ⟨h1,h2⟩`.
//!
//! All inner products are the trapezoid-in-time, midpoint-in-space quadrature
//! of [`spacetime_dot`]. With the default adjoint scheme the gradient and the
//! Hessian form are the exact derivatives of the discrete cost.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::adjoint::{adjoint_for_source, solve_adjoint_with, AdjointScheme, AdjointTrajectory};
use crate::domain::{norm_control, spacetime_dot, SpaceTimeField};
use crate::error::{Result, WaveError};
use crate::sensitivity::{solve_linearized, LinearizedTrajectory};
use crate::state::{solve_forward, StateTrajectory, WaveProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub j: f64,
    pub tracking_part: f64,
    pub control_part: f64,
    pub kkt_residual: Option<f64>,
    pub gradient_norm_l2: Option<f64>,
}

const KEYS: [&str; 5] = [
    "J",
    "tracking_part",
    "control_part",
    "kkt_residual",
    "gradient_norm_l2",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.16e}"))
}

impl CostReport {
    pub fn from_state(p: &WaveProblem, tr: &StateTrajectory) -> Self {
        let (g, tg) = (p.grid(), p.time());
        let r = tr.y.sub(p.target());
        let tracking_part = 0.5 * spacetime_dot(&r, &r, tg, g);
        let u = p.control();
        let control_part = 0.5 * p.gamma() * spacetime_dot(u, u, tg, g);
        Self {
            j: tracking_part + control_part,
            tracking_part,
            control_part,
            kkt_residual: None,
            gradient_norm_l2: None,
        }
    }

    fn values(&self) -> [String; 5] {
        [
            format!("{:.16e}", self.j),
            format!("{:.16e}", self.tracking_part),
            format!("{:.16e}", self.control_part),
            fmt_opt(self.kkt_residual),
            fmt_opt(self.gradient_norm_l2),
        ]
    }

    /// One `key=value` line per field; unset optional fields print as `nan`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn from_key_value(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| WaveError::InvalidConfig(format!("malformed line '{line}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| WaveError::InvalidConfig(format!("bad number in '{line}'")))?;
            map.insert(k.trim().to_string(), v);
        }
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| WaveError::InvalidConfig(format!("missing key '{k}'")))
        };
        let opt = |k: &str| get(k).map(|v| (!v.is_nan()).then_some(v));
        Ok(Self {
            j: get("J")?,
            tracking_part: get("tracking_part")?,
            control_part: get("control_part")?,
            kkt_residual: opt("kkt_residual")?,
            gradient_norm_l2: opt("gradient_norm_l2")?,
        })
    }

    pub fn csv_header() -> String {
        KEYS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }
}

pub fn evaluate_cost(p: &WaveProblem) -> Result<CostReport> {
    let tr = solve_forward(p)?;
    Ok(CostReport::from_state(p, &tr))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub g: SpaceTimeField,
}

impl GradientField {
    pub fn norm_l2(&self, p: &WaveProblem) -> f64 {
        spacetime_dot(&self.g, &self.g, p.time(), p.grid()).sqrt()
    }
}

/// State, adjoint, cost and gradient at the problem's control.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    pub state: StateTrajectory,
    pub adjoint: AdjointTrajectory,
    pub cost: CostReport,
    pub gradient: GradientField,
}

pub fn first_order(p: &WaveProblem, scheme: AdjointScheme) -> Result<FirstOrder> {
    let state = solve_forward(p)?;
    let adjoint = solve_adjoint_with(p, &state, scheme)?;
    let mut g = adjoint.phi.hadamard(&state.y);
    g.axpy(p.gamma(), p.control());
    let gradient = GradientField { g };
    let mut cost = CostReport::from_state(p, &state);
    cost.gradient_norm_l2 = Some(gradient.norm_l2(p));
    Ok(FirstOrder {
        state,
        adjoint,
        cost,
        gradient,
    })
}

pub fn gradient(p: &WaveProblem) -> Result<GradientField> {
    gradient_with(p, AdjointScheme::default())
}

pub fn gradient_with(p: &WaveProblem, scheme: AdjointScheme) -> Result<GradientField> {
    first_order(p, scheme).map(|f| f.gradient)
}

/// `J'(u)h = ⟨φ y + γ u, h⟩`.
pub fn directional_derivative(p: &WaveProblem, h: &SpaceTimeField) -> Result<f64> {
    h.check_shape(p.grid(), p.time(), "direction")?;
    let g = gradient(p)?;
    Ok(spacetime_dot(&g.g, h, p.time(), p.grid()))
}

/// `J'(u)h = ⟨y - y_d, z⟩ + γ⟨u, h⟩` with `z = S'(u)h`.
pub fn directional_derivative_linearized(p: &WaveProblem, h: &SpaceTimeField) -> Result<f64> {
    h.check_shape(p.grid(), p.time(), "direction")?;
    let (g, tg) = (p.grid(), p.time());
    let tr = solve_forward(p)?;
    let z = solve_linearized(p, &tr, h)?;
    let r = tr.y.sub(p.target());
    Ok(spacetime_dot(&r, &z.z, tg, g) + p.gamma() * spacetime_dot(p.control(), h, tg, g))
}

/// The three integrals of the second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianTerms {
    /// `⟨z1, z2⟩`
    pub tracking: f64,
    /// `⟨φ, h1 z2 + h2 z1⟩`
    pub adjoint: f64,
    /// `γ⟨h1, h2⟩`
    pub control: f64,
}

impl HessianTerms {
    pub fn total(&self) -> f64 {
        self.tracking + self.adjoint + self.control
    }
}

/// State and adjoint frozen at one control, for repeated second-order queries.
#[derive(Debug, Clone)]
pub struct SecondOrderModel<'a> {
    problem: &'a WaveProblem,
    state: StateTrajectory,
    adjoint: AdjointTrajectory,
}

impl<'a> SecondOrderModel<'a> {
    pub fn new(problem: &'a WaveProblem) -> Result<Self> {
        let state = solve_forward(problem)?;
        let adjoint = solve_adjoint_with(problem, &state, AdjointScheme::DiscreteTranspose)?;
        Ok(Self {
            problem,
            state,
            adjoint,
        })
    }

    pub fn from_parts(
        problem: &'a WaveProblem,
        state: StateTrajectory,
        adjoint: AdjointTrajectory,
    ) -> Self {
        Self {
            problem,
            state,
            adjoint,
        }
    }

    pub fn state(&self) -> &StateTrajectory {
        &self.state
    }

    pub fn adjoint(&self) -> &AdjointTrajectory {
        &self.adjoint
    }

    pub fn linearize(&self, h: &SpaceTimeField) -> Result<LinearizedTrajectory> {
        solve_linearized(self.problem, &self.state, h)
    }

    pub fn terms(&self, h1: &SpaceTimeField, h2: &SpaceTimeField) -> Result<HessianTerms> {
        let z1 = self.linearize(h1)?;
        let z2 = self.linearize(h2)?;
        Ok(self.terms_with(h1, &z1, h2, &z2))
    }

    pub fn terms_with(
        &self,
        h1: &SpaceTimeField,
        z1: &LinearizedTrajectory,
        h2: &SpaceTimeField,
        z2: &LinearizedTrajectory,
    ) -> HessianTerms {
        let (g, tg) = (self.problem.grid(), self.problem.time());
        let phi = &self.adjoint.phi;
        HessianTerms {
            tracking: spacetime_dot(&z1.z, &z2.z, tg, g),
            adjoint: spacetime_dot(phi, &h1.hadamard(&z2.z), tg, g)
                + spacetime_dot(phi, &h2.hadamard(&z1.z), tg, g),
            control: self.problem.gamma() * spacetime_dot(h1, h2, tg, g),
        }
    }

    /// `J''(u)[h, h]` from a single linearized solve.
    pub fn quadratic_form(&self, h: &SpaceTimeField) -> Result<f64> {
        let z = self.linearize(h)?;
        Ok(self.terms_with(h, &z, h, &z).total())
    }

    /// `H h = y ⊙ p + φ ⊙ z_h + γ h`, where `p` is the adjoint driven by
    /// `z_h + φ ⊙ h`; then `⟨H h1, h2⟩ = J''(u)[h1, h2]`.
    pub fn hessian_vector(&self, h: &SpaceTimeField) -> Result<SpaceTimeField> {
        let p = self.problem;
        let z = self.linearize(h)?;
        let source = z.z.add(&self.adjoint.phi.hadamard(h));
        let adj = adjoint_for_source(p, p.control(), &source, AdjointScheme::DiscreteTranspose)?;
        let mut out = self.state.y.hadamard(&adj.phi);
        out.axpy(1.0, &self.adjoint.phi.hadamard(&z.z));
        out.axpy(p.gamma(), h);
        Ok(out)
    }
}

pub fn second_derivative_terms(
    p: &WaveProblem,
    h1: &SpaceTimeField,
    h2: &SpaceTimeField,
) -> Result<HessianTerms> {
    h1.check_shape(p.grid(), p.time(), "h1")?;
    h2.check_shape(p.grid(), p.time(), "h2")?;
    SecondOrderModel::new(p)?.terms(h1, h2)
}

pub fn second_derivative(p: &WaveProblem, h1: &SpaceTimeField, h2: &SpaceTimeField) -> Result<f64> {
    second_derivative_terms(p, h1, h2).map(|t| t.total())
}

pub fn hessian_vector_product(p: &WaveProblem, h: &SpaceTimeField) -> Result<SpaceTimeField> {
    h.check_shape(p.grid(), p.time(), "direction")?;
    SecondOrderModel::new(p)?.hessian_vector(h)
}

/// Central-difference comparison of a derivative against its analytic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub finite_difference: f64,
    pub analytic: f64,
}

impl DerivativeCheck {
    /// `|fd - analytic| / max(1, |analytic|)`
    pub fn relative_error(&self) -> f64 {
        (self.finite_difference - self.analytic).abs() / self.analytic.abs().max(1.0)
    }
}

fn cost_at(p: &WaveProblem, u: SpaceTimeField) -> Result<f64> {
    evaluate_cost(&p.with_control(u)?).map(|c| c.j)
}

/// `(J(u+εh) - J(u-εh)) / 2ε` against `⟨g, h⟩` with the chosen adjoint scheme.
pub fn gradient_check(
    p: &WaveProblem,
    h: &SpaceTimeField,
    eps: f64,
    scheme: AdjointScheme,
) -> Result<DerivativeCheck> {
    h.check_shape(p.grid(), p.time(), "direction")?;
    let u = p.control();
    let mut up = u.clone();
    up.axpy(eps, h);
    let mut um = u.clone();
    um.axpy(-eps, h);
    let fd = (cost_at(p, up)? - cost_at(p, um)?) / (2.0 * eps);
    let g = gradient_with(p, scheme)?;
    Ok(DerivativeCheck {
        finite_difference: fd,
        analytic: spacetime_dot(&g.g, h, p.time(), p.grid()),
    })
}

/// `(J(u+εh) - 2J(u) + J(u-εh)) / ε²` against `J''(u)[h, h]`.
pub fn hessian_check(p: &WaveProblem, h: &SpaceTimeField, eps: f64) -> Result<DerivativeCheck> {
    h.check_shape(p.grid(), p.time(), "direction")?;
    let u = p.control();
    let mut up = u.clone();
    up.axpy(eps, h);
    let mut um = u.clone();
    um.axpy(-eps, h);
    let j0 = evaluate_cost(p)?.j;
    let fd = (cost_at(p, up)? - 2.0 * j0 + cost_at(p, um)?) / (eps * eps);
    Ok(DerivativeCheck {
        finite_difference: fd,
        analytic: second_derivative(p, h, h)?,
    })
}

/// Measured ratios of the four derivative bounds, in the discrete control norm:
///
/// 0. `|J'(u1)h1| / ‖h1‖`
/// 1. `|J''(u1)[h1,h2]| / (‖h1‖‖h2‖)`
/// 2. `|J'(u1)h1 - J'(u2)h1| / (‖u1-u2‖‖h1‖)`
/// 3. `|J''(u1)[h1,h1] - J''(u2)[h1,h1]| / (‖u1-u2‖‖h1‖²)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    pub ratios: [f64; 4],
    /// Set where the denominator vanished; the ratio is then reported as 0.
    pub zero_denominator: [bool; 4],
}

pub fn derivative_bound_probe(
    p: &WaveProblem,
    u1: &SpaceTimeField,
    u2: &SpaceTimeField,
    h1: &SpaceTimeField,
    h2: &SpaceTimeField,
) -> Result<DerivativeBounds> {
    let tg = p.time();
    let p1 = p.with_control(u1.clone())?;
    let p2 = p.with_control(u2.clone())?;
    for (f, what) in [(h1, "h1"), (h2, "h2")] {
        f.check_shape(p.grid(), tg, what)?;
    }
    let nh1 = norm_control(h1, tg);
    let nh2 = norm_control(h2, tg);
    let du = norm_control(&u1.sub(u2), tg);
    let denoms = [nh1, nh1 * nh2, du * nh1, du * nh1 * nh1];
    let zero_denominator = denoms.map(|d| d == 0.0);

    let m1 = SecondOrderModel::new(&p1)?;
    let m2 = SecondOrderModel::new(&p2)?;
    let d1 = directional_derivative(&p1, h1)?;
    let d2 = directional_derivative(&p2, h1)?;
    let z1 = m1.linearize(h1)?;
    let z2 = m1.linearize(h2)?;
    let s12 = m1.terms_with(h1, &z1, h2, &z2).total();
    let s11 = m1.terms_with(h1, &z1, h1, &z1).total();
    let s11_2 = m2.quadratic_form(h1)?;
    let numer = [d1.abs(), s12.abs(), (d1 - d2).abs(), (s11 - s11_2).abs()];
    let mut ratios = [0.0; 4];
    for i in 0..4 {
        if !zero_denominator[i] {
            ratios[i] = numer[i] / denoms[i];
        }
    }
    Ok(DerivativeBounds {
        ratios,
        zero_denominator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ScalarField, SpatialGrid, TimeGrid};
    use std::f64::consts::PI;

    fn problem() -> WaveProblem {
        let g = SpatialGrid::new_1d(1.0, 15).unwrap();
        let tg = TimeGrid::new(2.0, 64).unwrap();
        WaveProblem::builder(g, tg)
            .initial(
                ScalarField::from_fn(&g, |x| (PI * x[0]).sin()),
                ScalarField::zeros(&g),
            )
            .control(SpaceTimeField::from_fn(&g, &tg, |t, x| 0.4 * (2.0 * t - x[0]).sin()))
            .gamma(0.5)
            .build()
            .unwrap()
    }

    #[test]
    fn parts_add_up_and_gamma_scales_control_part() {
        let p = problem();
        let c = evaluate_cost(&p).unwrap();
        assert_eq!(c.j, c.tracking_part + c.control_part);
        let c2 = evaluate_cost(&p.with_gamma(1.0).unwrap()).unwrap();
        assert_eq!(c2.control_part, 2.0 * c.control_part);
        assert_eq!(c2.tracking_part, c.tracking_part);
    }

    #[test]
    fn key_value_round_trip() {
        let mut c = evaluate_cost(&problem()).unwrap();
        assert_eq!(CostReport::from_key_value(&c.to_key_value()).unwrap(), c);
        c.kkt_residual = Some(1.5e-7);
        assert_eq!(CostReport::from_key_value(&c.to_key_value()).unwrap(), c);
        assert_eq!(c.csv_row().split(',').count(), 5);
        assert!(CostReport::from_key_value("J=1").is_err());
    }

    #[test]
    fn zero_direction_gives_zero_derivatives() {
        let p = problem();
        let h = SpaceTimeField::zeros(p.grid(), p.time());
        assert_eq!(directional_derivative(&p, &h).unwrap(), 0.0);
        assert_eq!(second_derivative(&p, &h, &h).unwrap(), 0.0);
        let b = derivative_bound_probe(&p, p.control(), p.control(), &h, &h).unwrap();
        assert_eq!(b.ratios, [0.0; 4]);
        assert_eq!(b.zero_denominator, [true; 4]);
    }

    #[test]
    fn hessian_vector_matches_form() {
        let p = problem();
        let (g, tg) = (p.grid(), p.time());
        let h1 = SpaceTimeField::from_fn(g, tg, |t, x| (t * x[0]).sin());
        let h2 = SpaceTimeField::from_fn(g, tg, |t, x| (3.0 * x[0] - t).cos());
        let hv = hessian_vector_product(&p, &h1).unwrap();
        let lhs = spacetime_dot(&hv, &h2, tg, g);
        let rhs = second_derivative(&p, &h1, &h2).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "{lhs} {rhs}");
    }
}
