//! Projected gradient descent over the box `α ≤ u ≤ β` and the first- and
//! second-order optimality diagnostics at its output.
//!
//! The iteration is `u ← Π(u - s g)` with Armijo backtracking on `s`. It stops
//! on the fixed-point residual `‖u - Π(-φ y / γ)‖`, which vanishes exactly at
//! stationary controls.
//!
//! Second-order information is sampled: random directions are restricted to
//! the critical cone and then pushed toward low Rayleigh quotients of `J''`
//! by a projected power iteration. The minimum observed quotient is an upper
//! estimate of the cone's true minimum.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adjoint::AdjointScheme;
use crate::domain::{spacetime_dot, SpaceTimeField};
use crate::error::{Result, WaveError};
use crate::objective::{evaluate_cost, first_order, CostReport, FirstOrder, SecondOrderModel};
use crate::state::WaveProblem;

/// Step size below which the line search gives up.
pub const MIN_STEP: f64 = 1e-14;
/// Resampling budget for critical directions.
pub const MAX_CONE_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub active_set_eps: f64,
    pub rayleigh_samples: usize,
    pub rayleigh_power_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            kkt_tol: 1e-6,
            armijo_slope: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            active_set_eps: 1e-8,
            rayleigh_samples: 64,
            rayleigh_power_iters: 50,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let bad = |what: &str, v: String| Err(WaveError::InvalidConfig(format!("{what} = {v}")));
        if !open_unit(self.armijo_slope) {
            return bad("armijo_slope must lie in (0,1)", self.armijo_slope.to_string());
        }
        if !open_unit(self.backtrack) {
            return bad("backtrack must lie in (0,1)", self.backtrack.to_string());
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad("initial_step must be positive", self.initial_step.to_string());
        }
        if !(self.kkt_tol > 0.0) {
            return bad("kkt_tol must be positive", self.kkt_tol.to_string());
        }
        if !(self.active_set_eps >= 0.0) {
            return bad("active_set_eps must be non-negative", self.active_set_eps.to_string());
        }
        if self.rayleigh_samples == 0 {
            return bad("rayleigh_samples must be positive", "0".into());
        }
        Ok(())
    }
}

/// Pointwise `min(max(w, α), β)`.
pub fn project(w: &SpaceTimeField, alpha: &SpaceTimeField, beta: &SpaceTimeField) -> Result<SpaceTimeField> {
    if !w.same_shape(alpha) || !w.same_shape(beta) {
        return Err(WaveError::ShapeMismatch("projection operands differ in shape".into()));
    }
    let mut out = w.clone();
    for (i, ((o, &a), &b)) in out
        .values_mut()
        .iter_mut()
        .zip(alpha.values())
        .zip(beta.values())
        .enumerate()
    {
        if a > b {
            return Err(WaveError::BoundsInverted {
                index: i,
                alpha: a,
                beta: b,
            });
        }
        *o = o.max(a).min(b);
    }
    Ok(out)
}

/// `-(1/γ) φ ⊙ y`
fn projection_argument(p: &WaveProblem, fo: &FirstOrder) -> SpaceTimeField {
    fo.adjoint.phi.hadamard(&fo.state.y).scale(-1.0 / p.gamma())
}

fn residual_from(p: &WaveProblem, fo: &FirstOrder) -> Result<f64> {
    let target = project(&projection_argument(p, fo), p.alpha(), p.beta())?;
    let d = p.control().sub(&target);
    Ok(spacetime_dot(&d, &d, p.time(), p.grid()).sqrt())
}

/// `‖u - Π_{[α,β]}(-(1/γ) φ y)‖_{L²(Q)}`.
pub fn kkt_residual(p: &WaveProblem) -> Result<f64> {
    residual_from(p, &first_order(p, AdjointScheme::DiscreteTranspose)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub cost: f64,
    pub tracking_part: f64,
    pub control_part: f64,
    pub grad_norm: f64,
    pub kkt_residual: f64,
    /// Step that produced this iterate (0 for the initial control).
    pub step: f64,
    pub n_backtracks: usize,
}

pub fn iterate_log_csv(log: &[IterateRecord]) -> String {
    let mut out =
        String::from("iter,J,tracking_part,control_part,grad_norm,kkt_residual,step,n_backtracks\n");
    for r in log {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.iter,
            r.cost,
            r.tracking_part,
            r.control_part,
            r.grad_norm,
            r.kkt_residual,
            r.step,
            r.n_backtracks
        );
    }
    out
}

/// Flat space-time indices where the control sits on a bound.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSets {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

pub fn active_sets(
    u: &SpaceTimeField,
    alpha: &SpaceTimeField,
    beta: &SpaceTimeField,
    eps: f64,
) -> ActiveSets {
    let mut sets = ActiveSets::default();
    for (i, ((&v, &a), &b)) in u.values().iter().zip(alpha.values()).zip(beta.values()).enumerate() {
        if (v - a).abs() <= eps {
            sets.lower.push(i);
        }
        if (v - b).abs() <= eps {
            sets.upper.push(i);
        }
    }
    sets
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub control: SpaceTimeField,
    pub log: Vec<IterateRecord>,
    pub converged: bool,
    pub cost: CostReport,
    pub gradient: SpaceTimeField,
    /// `-(1/γ) φ y` at the final control.
    pub projection_argument: SpaceTimeField,
    pub active: ActiveSets,
    pub first_order: FirstOrder,
    pub second_order: Option<SecondOrderReport>,
}

impl OptimizeResult {
    pub fn kkt_residual(&self) -> f64 {
        self.cost.kkt_residual.unwrap_or(f64::NAN)
    }

    /// Problem with the final control substituted.
    pub fn problem_at(&self, p: &WaveProblem) -> Result<WaveProblem> {
        p.with_control(self.control.clone())
    }
}

/// Projected gradient with Armijo backtracking.
pub fn projected_gradient_solve(p: &WaveProblem, cfg: &OptimizerConfig) -> Result<OptimizeResult> {
    cfg.validate()?;
    let (g, tg) = (p.grid(), p.time());
    let mut current = p.with_control(project(p.control(), p.alpha(), p.beta())?)?;
    let mut fo = first_order(&current, AdjointScheme::DiscreteTranspose)?;
    let mut residual = residual_from(&current, &fo)?;
    let mut log = Vec::new();
    let mut step = 0.0;
    let mut n_backtracks = 0;
    let mut iter = 0;
    let converged = loop {
        log.push(IterateRecord {
            iter,
            cost: fo.cost.j,
            tracking_part: fo.cost.tracking_part,
            control_part: fo.cost.control_part,
            grad_norm: fo.gradient.norm_l2(&current),
            kkt_residual: residual,
            step,
            n_backtracks,
        });
        if residual <= cfg.kkt_tol {
            break true;
        }
        if iter >= cfg.max_iter {
            break false;
        }
        let u = current.control();
        let grad = &fo.gradient.g;
        let mut s = cfg.initial_step;
        n_backtracks = 0;
        let accepted = loop {
            let mut trial = u.clone();
            trial.axpy(-s, grad);
            let trial = project(&trial, p.alpha(), p.beta())?;
            let decrease = spacetime_dot(grad, &trial.sub(u), tg, g);
            let candidate = current.with_control(trial)?;
            let j_trial = evaluate_cost(&candidate)?.j;
            if j_trial <= fo.cost.j + cfg.armijo_slope * decrease {
                break candidate;
            }
            s *= cfg.backtrack;
            n_backtracks += 1;
            if s < MIN_STEP {
                return Err(WaveError::LineSearchStalled { iter, step: s });
            }
        };
        current = accepted;
        fo = first_order(&current, AdjointScheme::DiscreteTranspose)?;
        residual = residual_from(&current, &fo)?;
        step = s;
        iter += 1;
    };
    let mut cost = fo.cost.clone();
    cost.kkt_residual = Some(residual);
    let active = active_sets(current.control(), p.alpha(), p.beta(), cfg.active_set_eps);
    Ok(OptimizeResult {
        control: current.control().clone(),
        log,
        converged,
        cost,
        gradient: fo.gradient.g.clone(),
        projection_argument: projection_argument(&current, &fo),
        active,
        first_order: fo,
        second_order: None,
    })
}

/// Count of indices violating the pointwise sign pattern of a stationary point:
/// `g ≥ -ε` on the lower active set, `g ≤ ε` on the upper one, `|g| ≤ ε` elsewhere.
pub fn pointwise_kkt_violations(result: &OptimizeResult, eps: f64) -> usize {
    let n = result.gradient.values().len();
    let mut class = vec![0u8; n];
    for &i in &result.active.lower {
        class[i] |= 1;
    }
    for &i in &result.active.upper {
        class[i] |= 2;
    }
    result
        .gradient
        .values()
        .iter()
        .zip(&class)
        .filter(|(&g, &c)| match c {
            0 => g.abs() > eps,
            1 => g < -eps,
            2 => g > eps,
            _ => false,
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Free,
    Zero,
    NonNegative,
    NonPositive,
}

/// Linear constraints describing the critical cone at a converged control.
struct Cone {
    slots: Vec<Slot>,
    gradient: SpaceTimeField,
    /// Gradient restricted to free indices.
    free_gradient: SpaceTimeField,
    free_gradient_sq: f64,
    gradient_norm: f64,
    eps: f64,
}

impl Cone {
    fn new(p: &WaveProblem, result: &OptimizeResult, eps: f64) -> Self {
        let (g, tg) = (p.grid(), p.time());
        let mut slots = vec![Slot::Free; result.control.values().len()];
        let grad = result.gradient.values();
        let gamma = p.gamma();
        for &i in &result.active.lower {
            slots[i] = if grad[i] / gamma > eps { Slot::Zero } else { Slot::NonNegative };
        }
        for &i in &result.active.upper {
            slots[i] = match slots[i] {
                // both bounds active: α = β up to ε
                Slot::Zero | Slot::NonNegative => Slot::Zero,
                _ if grad[i] / gamma < -eps => Slot::Zero,
                _ => Slot::NonPositive,
            };
        }
        let mut free_gradient = result.gradient.clone();
        for (v, s) in free_gradient.values_mut().iter_mut().zip(&slots) {
            if *s != Slot::Free {
                *v = 0.0;
            }
        }
        let free_gradient_sq = spacetime_dot(&free_gradient, &free_gradient, tg, g);
        let gradient_norm = spacetime_dot(&result.gradient, &result.gradient, tg, g).sqrt();
        Self {
            slots,
            gradient: result.gradient.clone(),
            free_gradient,
            free_gradient_sq,
            gradient_norm,
            eps,
        }
    }

    /// Maps `h` into the cone: sign clipping followed by removal of the
    /// gradient pairing along the free indices.
    fn restrict(&self, p: &WaveProblem, h: &mut SpaceTimeField) {
        let (g, tg) = (p.grid(), p.time());
        for (v, s) in h.values_mut().iter_mut().zip(&self.slots) {
            match s {
                Slot::Free => {}
                Slot::Zero => *v = 0.0,
                Slot::NonNegative => *v = v.max(0.0),
                Slot::NonPositive => *v = v.min(0.0),
            }
        }
        if self.gradient_norm <= self.eps {
            return;
        }
        let pair = spacetime_dot(&self.gradient, h, tg, g);
        if self.free_gradient_sq > 0.0 {
            h.axpy(-pair / self.free_gradient_sq, &self.free_gradient);
        }
        let norm = spacetime_dot(h, h, tg, g).sqrt();
        if spacetime_dot(&self.gradient, h, tg, g).abs() > self.eps * norm {
            // weakly active entries carry the remaining pairing
            for (v, s) in h.values_mut().iter_mut().zip(&self.slots) {
                if *s != Slot::Free {
                    *v = 0.0;
                }
            }
            if self.free_gradient_sq > 0.0 {
                let pair = spacetime_dot(&self.gradient, h, tg, g);
                h.axpy(-pair / self.free_gradient_sq, &self.free_gradient);
            }
        }
    }

    fn describe(&self, p: &WaveProblem, h: SpaceTimeField, seed: u64) -> CriticalDirection {
        let signs = h.values().iter().zip(&self.slots).all(|(&v, s)| match s {
            Slot::Free => true,
            Slot::Zero => v == 0.0,
            Slot::NonNegative => v >= 0.0,
            Slot::NonPositive => v <= 0.0,
        });
        let pairing = spacetime_dot(&self.gradient, &h, p.time(), p.grid()).abs();
        CriticalDirection {
            h,
            satisfies_sign_conditions: signs,
            gradient_pairing: pairing,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalDirection {
    /// Unit `L²(Q)` norm.
    pub h: SpaceTimeField,
    pub satisfies_sign_conditions: bool,
    /// `|⟨g, h⟩|`
    pub gradient_pairing: f64,
    /// Seed of the accepted draw.
    pub seed: u64,
}

fn normalize(p: &WaveProblem, h: &mut SpaceTimeField) -> f64 {
    let norm = spacetime_dot(h, h, p.time(), p.grid()).sqrt();
    if norm > 0.0 {
        for v in h.values_mut() {
            *v /= norm;
        }
    }
    norm
}

fn sample_in(p: &WaveProblem, cone: &Cone, seed: u64) -> Result<CriticalDirection> {
    for attempt in 0..MAX_CONE_ATTEMPTS as u64 {
        let s = seed.wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut h = SpaceTimeField::zeros(p.grid(), p.time());
        for v in h.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        cone.restrict(p, &mut h);
        // a direction that survives only at roundoff level is treated as zero
        if normalize(p, &mut h) > 1e-12 {
            return Ok(cone.describe(p, h, s));
        }
    }
    Err(WaveError::DegenerateCone {
        attempts: MAX_CONE_ATTEMPTS,
    })
}

/// Draws a unit direction from the critical cone at `result`.
pub fn sample_critical_direction(
    p: &WaveProblem,
    result: &OptimizeResult,
    seed: u64,
    eps: f64,
) -> Result<CriticalDirection> {
    sample_in(p, &Cone::new(p, result, eps), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderReport {
    /// Smallest Rayleigh quotient `J''[h,h] / ‖h‖²` observed.
    pub min_quotient: f64,
    /// Index of the direction attaining it (samples first, then smooth modes).
    pub argmin: usize,
    /// Per-direction minimum over its power iterates.
    pub quotients: Vec<f64>,
    /// `μ̂ ≥ -1e-6 γ`
    pub necessary: Verdict,
    /// `μ̂ > 1e-3 γ`
    pub sufficient: Verdict,
    pub tolerance: f64,
}

impl SecondOrderReport {
    fn vacuous(tolerance: f64) -> Self {
        Self {
            min_quotient: f64::NAN,
            argmin: 0,
            quotients: Vec::new(),
            necessary: Verdict::Vacuous,
            sufficient: Verdict::Vacuous,
            tolerance,
        }
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "min_quotient={:.16e}\nargmin={}\nsamples={}\nnecessary={}\nsufficient={}\ntolerance={:.16e}\n",
            self.min_quotient,
            self.argmin,
            self.quotients.len(),
            self.necessary.as_str(),
            self.sufficient.as_str(),
            self.tolerance
        )
    }
}

/// Number of low-frequency space-time modes added to the random samples.
const SMOOTH_DIRECTIONS: usize = 4;

fn smooth_mode(p: &WaveProblem, k: usize) -> SpaceTimeField {
    let (g, tg) = (p.grid(), p.time());
    let (lx, th) = (g.extent(0), tg.horizon());
    let (ks, kt) = (1 + k / 2, k % 2);
    SpaceTimeField::from_fn(g, tg, |t, x| {
        let mut v = (ks as f64 * std::f64::consts::PI * x[0] / lx).sin();
        if g.dimension() == 2 {
            v *= (std::f64::consts::PI * x[1] / g.extent(1)).sin();
        }
        v * (kt as f64 * std::f64::consts::PI * t / th).cos()
    })
}

/// Sampled second-order check on the critical cone at `result`.
///
/// `p` supplies the problem data; its control is replaced by the result's.
pub fn second_order_report(
    p: &WaveProblem,
    result: &OptimizeResult,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<SecondOrderReport> {
    let gamma = p.gamma();
    let tolerance = 1e-6 * gamma;
    let at = result.problem_at(p)?;
    let cone = Cone::new(&at, result, cfg.active_set_eps);
    let fo = &result.first_order;
    let model = SecondOrderModel::from_parts(&at, fo.state.clone(), fo.adjoint.clone());

    let mut starts = Vec::with_capacity(cfg.rayleigh_samples + SMOOTH_DIRECTIONS);
    for i in 0..cfg.rayleigh_samples as u64 {
        match sample_in(&at, &cone, seed.wrapping_add(i * MAX_CONE_ATTEMPTS as u64)) {
            Ok(d) => starts.push(d.h),
            Err(WaveError::DegenerateCone { .. }) => return Ok(SecondOrderReport::vacuous(tolerance)),
            Err(e) => return Err(e),
        }
    }
    for k in 0..SMOOTH_DIRECTIONS {
        let mut h = smooth_mode(&at, k);
        cone.restrict(&at, &mut h);
        if normalize(&at, &mut h) > 1e-12 {
            starts.push(h);
        }
    }

    // Shift for the power iteration: a bound on the largest eigenvalue of J''.
    let mut v = starts[0].clone();
    let mut lambda_max: f64 = gamma;
    for _ in 0..10 {
        v = model.hessian_vector(&v)?;
        lambda_max = lambda_max.max(normalize(&at, &mut v));
    }
    let shift = 1.1 * lambda_max;

    let quotients: Vec<f64> = starts
        .into_par_iter()
        .map(|mut h| -> Result<f64> {
            let (g, tg) = (at.grid(), at.time());
            let mut best = f64::INFINITY;
            for it in 0..=cfg.rayleigh_power_iters {
                let hv = model.hessian_vector(&h)?;
                let q = spacetime_dot(&hv, &h, tg, g);
                best = best.min(q);
                if it == cfg.rayleigh_power_iters {
                    break;
                }
                let mut next = h.scale(shift);
                next.axpy(-1.0, &hv);
                cone.restrict(&at, &mut next);
                if normalize(&at, &mut next) <= 1e-12 {
                    break;
                }
                h = next;
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;

    let (argmin, min_quotient) = quotients
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, q)| if q < acc.1 { (i, q) } else { acc });
    Ok(SecondOrderReport {
        min_quotient,
        argmin,
        necessary: if min_quotient >= -tolerance { Verdict::Pass } else { Verdict::Fail },
        sufficient: if min_quotient > 1e-3 * gamma { Verdict::Pass } else { Verdict::Fail },
        quotients,
        tolerance,
    })
}

/// Smallest `(J(u) - J(ū)) / ‖u - ū‖²` over random feasible perturbations.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProbe {
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
}

/// Perturbs `ū` by random fields of `L²(Q)` norm at most `radius`, projected
/// back onto the box.
pub fn quadratic_growth_probe(
    p: &WaveProblem,
    result: &OptimizeResult,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<GrowthProbe> {
    let at = result.problem_at(p)?;
    let (g, tg) = (at.grid(), at.time());
    let j_bar = result.cost.j;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut d = SpaceTimeField::zeros(g, tg);
        for v in d.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        normalize(&at, &mut d);
        let r = radius * rng.gen_range(0.05..=1.0);
        dirs.push(d.scale(r));
    }
    let ratios = dirs
        .into_par_iter()
        .map(|d| -> Result<Option<f64>> {
            let mut u = result.control.clone();
            u.axpy(1.0, &d);
            let u = project(&u, at.alpha(), at.beta())?;
            let diff = u.sub(&result.control);
            let dn = spacetime_dot(&diff, &diff, tg, g);
            if dn == 0.0 {
                return Ok(None);
            }
            let j = evaluate_cost(&at.with_control(u)?)?.j;
            Ok(Some((j - j_bar) / dn))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GrowthProbe { ratios, min_ratio })
}

/// Smallest `⟨g, w - ū⟩` over random feasible `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalProbe {
    pub min_pairing: f64,
    /// `kkt_tol (‖g‖ + 1)`
    pub slack: f64,
    pub satisfied: bool,
}

pub fn variational_inequality_probe(
    p: &WaveProblem,
    result: &OptimizeResult,
    samples: usize,
    kkt_tol: f64,
    seed: u64,
) -> VariationalProbe {
    let (g, tg) = (p.grid(), p.time());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_pairing = f64::INFINITY;
    for _ in 0..samples {
        let mut w = result.control.clone();
        for ((v, &a), &b) in w.values_mut().iter_mut().zip(p.alpha().values()).zip(p.beta().values()) {
            *v = a + rng.gen_range(0.0..=1.0) * (b - a);
        }
        let pairing = spacetime_dot(&result.gradient, &w.sub(&result.control), tg, g);
        min_pairing = min_pairing.min(pairing);
    }
    let grad_norm = spacetime_dot(&result.gradient, &result.gradient, tg, g).sqrt();
    let slack = kkt_tol * (grad_norm + 1.0);
    VariationalProbe {
        min_pairing,
        slack,
        satisfied: min_pairing >= -slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ScalarField, SpatialGrid, TimeGrid};
    use std::f64::consts::PI;

    fn small() -> (SpatialGrid, TimeGrid) {
        (
            SpatialGrid::new_1d(1.0, 7).unwrap(),
            TimeGrid::new(2.0, 16).unwrap(),
        )
    }

    #[test]
    fn projection_clips_and_rejects_inverted_bounds() {
        let (g, tg) = small();
        let lo = SpaceTimeField::constant(&g, &tg, -1.0);
        let hi = SpaceTimeField::constant(&g, &tg, 1.0);
        let w = SpaceTimeField::constant(&g, &tg, -10.0);
        assert_eq!(project(&w, &lo, &hi).unwrap(), lo);
        let inside = SpaceTimeField::constant(&g, &tg, 0.3);
        assert_eq!(project(&inside, &lo, &hi).unwrap(), inside);
        assert!(matches!(
            project(&w, &hi, &lo),
            Err(WaveError::BoundsInverted { index: 0, .. })
        ));
    }

    #[test]
    fn active_sets_of_interior_and_lower_controls() {
        let (g, tg) = small();
        let lo = SpaceTimeField::constant(&g, &tg, -1.0);
        let hi = SpaceTimeField::constant(&g, &tg, 1.0);
        let mid = SpaceTimeField::zeros(&g, &tg);
        assert_eq!(active_sets(&mid, &lo, &hi, 1e-8), ActiveSets::default());
        let sets = active_sets(&lo, &lo, &hi, 1e-8);
        assert_eq!(sets.lower.len(), lo.values().len());
        assert!(sets.upper.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            backtrack: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn perfect_tracking_converges_immediately() {
        let (g, tg) = small();
        let base = WaveProblem::builder(g, tg)
            .initial(
                ScalarField::from_fn(&g, |x| (PI * x[0]).sin()),
                ScalarField::zeros(&g),
            )
            .build()
            .unwrap();
        let yd = crate::state::solve_forward(&base).unwrap().y;
        let p = base.with_target(yd).unwrap();
        let r = projected_gradient_solve(&p, &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.log.len(), 1);
        assert_eq!(r.kkt_residual(), 0.0);
        let d = sample_critical_direction(&p, &r, 3, 1e-8).unwrap();
        assert!(d.satisfies_sign_conditions);
        let n = spacetime_dot(&d.h, &d.h, &tg, &g);
        assert!((n - 1.0).abs() < 1e-12);
    }
}
