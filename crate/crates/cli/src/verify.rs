//! The verification suite behind `bwave verify`.
//!
//! Each check measures one quantity on the scenario and compares it with a
//! tolerance. Checks run concurrently; the report lists them sorted by name.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use bwave_core::adjoint::{
    adjoint_for_source, decay_certificate, solve_adjoint_with, verify_adjoint_accel,
    verify_adjoint_energy,
};
use bwave_core::domain::spacetime_dot;
use bwave_core::objective::{
    derivative_bound_probe, directional_derivative, directional_derivative_linearized,
    gradient_check, hessian_check, second_derivative,
};
use bwave_core::optimizer::{
    pointwise_kkt_violations, project, projected_gradient_solve, quadratic_growth_probe,
    second_order_report, variational_inequality_probe,
};
use bwave_core::sampling::SmoothField;
use bwave_core::sensitivity::solve_linearized;
use bwave_core::state::{
    lipschitz_probe, solve_forward, verify_accel_estimate, verify_energy_estimate, ENERGY_TOL,
};
use bwave_core::{
    AdjointScheme, EnergyReport, OptimizeResult, OptimizerConfig, ProblemFamily, SecondOrderReport,
    StateTrajectory, Verdict, WaveProblem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliResult;
use crate::output::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Vacuous => "vacuous",
        }
    }
}

/// Direction of the comparison between value and tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

impl Bound {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifySuiteReport {
    /// False iff some non-vacuous check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name)
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Deterministic part of the report; runtimes are left out.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,status,value,bound,tolerance\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.name,
                c.status.as_str(),
                num(c.value),
                c.bound.as_str(),
                num(c.tolerance)
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("seed={}\n", self.seed);
        let _ = writeln!(out, "overall={}", if self.passed() { "pass" } else { "fail" });
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<32} {:<8} {:>24} {} {:<24} {:>9.3}s",
                c.name,
                c.status.as_str(),
                num(c.value),
                c.bound.as_str(),
                num(c.tolerance),
                c.runtime.as_secs_f64()
            );
        }
        out
    }
}

struct Measured {
    status: Status,
    value: f64,
    tolerance: f64,
    bound: Bound,
}

fn compare(value: f64, tolerance: f64, bound: Bound) -> Measured {
    let ok = match bound {
        Bound::AtMost => value <= tolerance,
        Bound::AtLeast => value >= tolerance,
    };
    Measured {
        status: if ok { Status::Pass } else { Status::Fail },
        value,
        tolerance,
        bound,
    }
}

fn at_most(value: f64, tolerance: f64) -> Measured {
    compare(value, tolerance, Bound::AtMost)
}

fn vacuous(tolerance: f64, bound: Bound) -> Measured {
    Measured {
        status: Status::Vacuous,
        value: f64::NAN,
        tolerance,
        bound,
    }
}

fn estimate(r: &EnergyReport) -> Measured {
    Measured {
        status: if r.satisfied { Status::Pass } else { Status::Fail },
        value: r.ratio(),
        tolerance: 1.0 + ENERGY_TOL,
        bound: Bound::AtMost,
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}

/// Relative change of a mesh-dependent ratio, with a floor for ratios that
/// vanish up to rounding.
fn variation(coarse: f64, fine: f64) -> f64 {
    (coarse - fine).abs() / coarse.abs().max(fine.abs()).max(1e-12)
}

/// Number of random draws in the sampled checks.
const PAIRS: usize = 5;
const STABILITY_SAMPLES: usize = 3;
const VI_SAMPLES: usize = 100;
const GROWTH_SAMPLES: usize = 50;

/// Everything the suite needs about one scenario.
pub struct SuiteInput<'a, F: ProblemFamily + Sync> {
    /// Problem with the scenario's initial control.
    pub problem: &'a WaveProblem,
    /// The same problem after one refinement of both grids.
    pub refined: &'a WaveProblem,
    /// Re-instantiates the problem on longer horizons.
    pub family: &'a F,
    pub config: OptimizerConfig,
    pub seed: u64,
}

type Check<'a> = (&'static str, Box<dyn Fn(u64) -> CliResult<Measured> + Sync + 'a>);

pub fn run_suite<F: ProblemFamily + Sync>(input: &SuiteInput<'_, F>) -> CliResult<VerifySuiteReport> {
    let p = input.problem;
    let cfg = input.config;
    let tr = solve_forward(p)?;
    let opt = projected_gradient_solve(p, &cfg)?;
    let so = second_order_report(p, &opt, &cfg, input.seed)?;
    let checks = state_checks(p, input.refined, &tr)
        .into_iter()
        .chain(adjoint_checks(p, &tr, input.family))
        .chain(derivative_checks(p, input.refined))
        .chain(optimality_checks(p, &opt, &so, cfg))
        .collect::<Vec<Check<'_>>>();

    let mut results = checks
        .par_iter()
        .enumerate()
        .map(|(i, (name, run))| -> CliResult<CheckResult> {
            let start = Instant::now();
            let m = run(input.seed.wrapping_add(1000 * i as u64))?;
            Ok(CheckResult {
                name,
                status: m.status,
                value: m.value,
                tolerance: m.tolerance,
                bound: m.bound,
                runtime: start.elapsed(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    results.sort_by(|a, b| a.name.cmp(b.name));
    Ok(VerifySuiteReport {
        seed: input.seed,
        checks: results,
    })
}

fn state_checks<'a>(p: &'a WaveProblem, refined: &'a WaveProblem, tr: &'a StateTrajectory) -> Vec<Check<'a>> {
    vec![
        (
            "energy_estimate",
            Box::new(move |_| Ok(estimate(&verify_energy_estimate(p, tr)))),
        ),
        (
            "accel_estimate",
            Box::new(move |_| Ok(estimate(&verify_accel_estimate(p, tr)?))),
        ),
        (
            "lipschitz_mesh_stability",
            Box::new(move |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut worst = 0.0_f64;
                for _ in 0..STABILITY_SAMPLES {
                    let du = SmoothField::random(&mut rng, 0.5);
                    let df = SmoothField::random(&mut rng, 0.5);
                    let ratio = |q: &WaveProblem| -> CliResult<f64> {
                        let (g, tg) = (q.grid(), q.time());
                        let other = q
                            .with_control(q.control().add(&du.on(g, tg)))?
                            .with_forcing(q.forcing().add(&df.on(g, tg)))?;
                        Ok(lipschitz_probe(q, &other)?.ratio)
                    };
                    worst = worst.max(variation(ratio(p)?, ratio(refined)?));
                }
                Ok(at_most(worst, 0.2))
            }),
        ),
    ]
}

fn adjoint_checks<'a, F: ProblemFamily + Sync>(
    p: &'a WaveProblem,
    tr: &'a StateTrajectory,
    family: &'a F,
) -> Vec<Check<'a>> {
    vec![
        (
            "adjoint_energy_estimate",
            Box::new(move |_| {
                let adj = solve_adjoint_with(p, tr, AdjointScheme::ReversedKernel)?;
                Ok(estimate(&verify_adjoint_energy(p, tr, &adj)))
            }),
        ),
        (
            "adjoint_accel_estimate",
            Box::new(move |_| {
                let adj = solve_adjoint_with(p, tr, AdjointScheme::ReversedKernel)?;
                Ok(estimate(&verify_adjoint_accel(p, tr, &adj)?))
            }),
        ),
        (
            "adjoint_duality",
            Box::new(move |seed| {
                let (g, tg) = (p.grid(), p.time());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut worst = 0.0_f64;
                for _ in 0..PAIRS {
                    let h = SmoothField::random(&mut rng, 1.0).on(g, tg);
                    let w = SmoothField::random(&mut rng, 1.0).on(g, tg);
                    let z = solve_linearized(p, tr, &h)?.z;
                    let phi = adjoint_for_source(p, p.control(), &w, AdjointScheme::DiscreteTranspose)?.phi;
                    let lhs = spacetime_dot(&z, &w, tg, g);
                    let rhs = spacetime_dot(&h.hadamard(&tr.y), &phi, tg, g);
                    worst = worst.max(relative(lhs, rhs));
                }
                Ok(at_most(worst, 1e-9))
            }),
        ),
        (
            "adjoint_horizon_decay",
            Box::new(move |_| {
                let cert = decay_certificate(family, p.time(), 2)?;
                Ok(at_most(cert.relative_tail(), 1e-2))
            }),
        ),
    ]
}

fn derivative_checks<'a>(p: &'a WaveProblem, refined: &'a WaveProblem) -> Vec<Check<'a>> {
    let direction = move |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h1 = SmoothField::random(&mut rng, 1.0);
        let h2 = SmoothField::random(&mut rng, 1.0);
        (h1.on(p.grid(), p.time()), h2.on(p.grid(), p.time()))
    };
    vec![
        (
            "gradient_representation",
            Box::new(move |seed| {
                let (h, _) = direction(seed);
                let a = directional_derivative(p, &h)?;
                let b = directional_derivative_linearized(p, &h)?;
                Ok(at_most(relative(a, b), 1e-8))
            }),
        ),
        (
            "gradient_fd",
            Box::new(move |seed| {
                let (h, _) = direction(seed);
                let c = gradient_check(p, &h, 1e-4, AdjointScheme::DiscreteTranspose)?;
                Ok(at_most(c.relative_error(), 5e-3))
            }),
        ),
        (
            "gradient_fd_continuous_adjoint",
            Box::new(move |seed| {
                let (h, _) = direction(seed);
                let c = gradient_check(p, &h, 1e-4, AdjointScheme::ReversedKernel)?;
                Ok(at_most(c.relative_error(), 5e-3))
            }),
        ),
        (
            "hessian_fd",
            Box::new(move |seed| {
                let (h, _) = direction(seed);
                Ok(at_most(hessian_check(p, &h, 1e-3)?.relative_error(), 5e-3))
            }),
        ),
        (
            "hessian_symmetry",
            Box::new(move |seed| {
                let (h1, h2) = direction(seed);
                let a = second_derivative(p, &h1, &h2)?;
                let b = second_derivative(p, &h2, &h1)?;
                Ok(at_most(relative(a, b), 1e-12))
            }),
        ),
        (
            "derivative_bounds_mesh_stability",
            Box::new(move |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut worst = 0.0_f64;
                for _ in 0..STABILITY_SAMPLES {
                    let du = SmoothField::random(&mut rng, 0.5);
                    let h1 = SmoothField::random(&mut rng, 1.0);
                    let h2 = SmoothField::random(&mut rng, 1.0);
                    let probe = |q: &WaveProblem| -> CliResult<_> {
                        let (g, tg) = (q.grid(), q.time());
                        let u2 = project(&q.control().add(&du.on(g, tg)), q.alpha(), q.beta())?;
                        Ok(derivative_bound_probe(q, q.control(), &u2, &h1.on(g, tg), &h2.on(g, tg))?)
                    };
                    let (a, b) = (probe(p)?, probe(refined)?);
                    for i in 0..4 {
                        if !(a.zero_denominator[i] || b.zero_denominator[i]) {
                            worst = worst.max(variation(a.ratios[i], b.ratios[i]));
                        }
                    }
                }
                Ok(at_most(worst, 0.2))
            }),
        ),
    ]
}

/// Largest pointwise gradient compatible with an `L²` stationarity residual of
/// `kkt_tol`: the smallest quadrature cell carries weight `½ Δt |cell|`.
fn pointwise_tolerance(p: &WaveProblem, kkt_tol: f64) -> f64 {
    p.gamma() * kkt_tol / (0.5 * p.time().dt() * p.grid().cell_volume()).sqrt()
}

fn optimality_checks<'a>(
    p: &'a WaveProblem,
    opt: &'a OptimizeResult,
    so: &'a SecondOrderReport,
    cfg: OptimizerConfig,
) -> Vec<Check<'a>> {
    vec![
        (
            "kkt_residual",
            Box::new(move |_| {
                let mut m = at_most(opt.kkt_residual(), cfg.kkt_tol);
                if !opt.converged {
                    m.status = Status::Fail;
                }
                Ok(m)
            }),
        ),
        (
            "kkt_pointwise_signs",
            Box::new(move |_| {
                let eps = pointwise_tolerance(p, cfg.kkt_tol);
                Ok(at_most(pointwise_kkt_violations(opt, eps) as f64, 0.0))
            }),
        ),
        (
            "variational_inequality",
            Box::new(move |seed| {
                let vi = variational_inequality_probe(p, opt, VI_SAMPLES, cfg.kkt_tol, seed);
                Ok(compare(vi.min_pairing, -vi.slack, Bound::AtLeast))
            }),
        ),
        (
            "second_order_necessary",
            Box::new(move |_| {
                Ok(match so.necessary {
                    Verdict::Vacuous => vacuous(-so.tolerance, Bound::AtLeast),
                    _ => compare(so.min_quotient, -so.tolerance, Bound::AtLeast),
                })
            }),
        ),
        (
            "quadratic_growth",
            Box::new(move |seed| {
                if so.sufficient != Verdict::Pass {
                    return Ok(vacuous(f64::NAN, Bound::AtLeast));
                }
                let delta = 0.25 * p.gamma().min(so.min_quotient);
                let growth = quadratic_growth_probe(p, opt, GROWTH_SAMPLES, 0.1, seed)?;
                Ok(compare(growth.min_ratio, delta, Bound::AtLeast))
            }),
        ),
    ]
}
