use std::path::PathBuf;

use bwave_core::adjoint::{decay_certificate, solve_adjoint_with};
use bwave_core::objective::evaluate_cost;
use bwave_core::optimizer::{iterate_log_csv, kkt_residual, projected_gradient_solve, second_order_report};
use bwave_core::state::{solve_forward, verify_accel_estimate, verify_energy_estimate};
use bwave_core::{AdjointScheme, CostReport, EnergyReport, TimeGrid, WaveProblem};

use crate::error::{CliError, CliResult};
use crate::output::{key_values, num, trajectory_csv, OutDir};
use crate::scenario::{into_wave, Scenario};
use crate::verify::{run_suite, SuiteInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Adjoint,
    Optimize,
    Verify,
    SweepHorizon,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Number of halvings of `Δx` and `Δt`.
    pub refine: u32,
    /// Ratio between successive horizons in the decay certificate and the
    /// horizon sweep; 2 when unset.
    pub horizon_factor: Option<usize>,
}

/// Rows of the horizon sweep.
const SWEEP_ROWS: u32 = 3;

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Short human-readable summary for standard output.
    pub summary: String,
    /// Set when the command ran to completion but a check failed.
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, CliError::exit_code)
    }
}

struct Run {
    scenario: Scenario,
    refine: u32,
    factor: usize,
    out: OutDir,
}

impl Run {
    fn problem(&self) -> CliResult<WaveProblem> {
        self.scenario.problem(self.refine)
    }

    fn seed(&self) -> u64 {
        self.scenario.seed
    }

    fn finish(self, summary: String, failure: Option<CliError>) -> Outcome {
        Outcome {
            files: self.out.files,
            summary,
            failure,
        }
    }
}

pub fn run_subcommand(command: Command, scenario: &Scenario, flags: &Flags) -> CliResult<Outcome> {
    let mut scenario = scenario.clone();
    if let Some(seed) = flags.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let factor = flags.horizon_factor.unwrap_or(2);
    if factor < 2 {
        return Err(CliError::Validation(format!(
            "horizon factor must be at least 2, got {factor}"
        )));
    }
    let dir = flags.out.clone().unwrap_or_else(|| scenario.output.dir.clone());
    let mut out = OutDir::create(&dir)?;
    out.write("scenario.toml", &scenario.to_toml())?;
    let run = Run {
        scenario,
        refine: flags.refine,
        factor,
        out,
    };
    match command {
        Command::Solve => solve(run),
        Command::Adjoint => adjoint(run),
        Command::Optimize => optimize(run),
        Command::Verify => verify(run),
        Command::SweepHorizon => sweep_horizon(run),
    }
}

fn report_pairs(prefix: &str, r: &EnergyReport) -> Vec<(String, String)> {
    vec![
        (format!("{prefix}_lhs"), num(r.lhs)),
        (format!("{prefix}_rhs"), num(r.rhs)),
        (format!("{prefix}_constant"), num(r.constant)),
        (format!("{prefix}_satisfied"), r.satisfied.to_string()),
    ]
}

fn borrowed(pairs: &[(String, String)]) -> Vec<(&str, String)> {
    pairs.iter().map(|(k, v)| (k.as_str(), v.clone())).collect()
}

fn solve(mut run: Run) -> CliResult<Outcome> {
    let p = run.problem()?;
    let (g, tg) = (*p.grid(), *p.time());
    let tr = solve_forward(&p)?;
    let energy = verify_energy_estimate(&p, &tr);
    let accel = verify_accel_estimate(&p, &tr)?;
    let cost = CostReport::from_state(&p, &tr);
    let stride = run.scenario.output.stride;
    run.out
        .write("state.csv", &trajectory_csv(&g, &tg, &["y", "v"], &[&tr.y, &tr.v], stride))?;

    let mut csv = String::from("t,energy,accel_hminus1_sq\n");
    for k in 0..tg.nodes() {
        csv.push_str(&format!(
            "{},{},{}\n",
            num(tg.t(k)),
            num(energy.per_step[k]),
            num(accel.per_step[k])
        ));
    }
    run.out.write("energy.csv", &csv)?;

    let mut pairs = vec![("seed".to_string(), run.seed().to_string())];
    pairs.extend(report_pairs("energy", &energy));
    pairs.extend(report_pairs("accel", &accel));
    let mut text = key_values(&borrowed(&pairs));
    text.push_str(&cost.to_key_value());
    run.out.write("energy.txt", &text)?;

    let summary = format!(
        "solve: J={} energy_ratio={} accel_ratio={}",
        num(cost.j),
        num(energy.ratio()),
        num(accel.ratio())
    );
    Ok(run.finish(summary, None))
}

fn adjoint(mut run: Run) -> CliResult<Outcome> {
    let p = run.problem()?;
    let (g, tg) = (*p.grid(), *p.time());
    let tr = solve_forward(&p)?;
    // Pointwise samples of φ; the gradient uses the exact discrete transpose.
    let adj = solve_adjoint_with(&p, &tr, AdjointScheme::ReversedKernel)?;
    let stride = run.scenario.output.stride;
    run.out.write(
        "adjoint.csv",
        &trajectory_csv(&g, &tg, &["phi", "phi_dot"], &[&adj.phi, &adj.phi_dot], stride),
    )?;

    let family = |t: &TimeGrid| -> bwave_core::Result<WaveProblem> {
        run.scenario.problem_on(&g, t).map_err(into_wave)
    };
    let cert = decay_certificate(&family, &tg, run.factor)?;
    let text = key_values(&[
        ("seed", run.seed().to_string()),
        ("horizon", num(cert.horizon)),
        ("factor", cert.factor.to_string()),
        ("sup_difference", num(cert.sup_difference)),
        ("tail_l2", num(cert.tail_l2)),
        ("tail_hminus1", num(cert.tail_hminus1)),
        ("tail", num(cert.tail())),
        ("scale", num(cert.scale)),
        ("relative_tail", num(cert.relative_tail())),
    ]);
    run.out.write("decay.txt", &text)?;
    let summary = format!(
        "adjoint: tail={} relative_tail={} sup_difference={}",
        num(cert.tail()),
        num(cert.relative_tail()),
        num(cert.sup_difference)
    );
    Ok(run.finish(summary, None))
}

fn optimize(mut run: Run) -> CliResult<Outcome> {
    let p = run.problem()?;
    let (g, tg) = (*p.grid(), *p.time());
    let cfg = run.scenario.optimizer_config();
    let r = projected_gradient_solve(&p, &cfg)?;
    let so = second_order_report(&p, &r, &cfg, run.seed())?;
    run.out.write("iterates.csv", &iterate_log_csv(&r.log))?;
    let stride = run.scenario.output.stride;
    run.out
        .write("control.csv", &trajectory_csv(&g, &tg, &["u"], &[&r.control], stride))?;

    let mut text = key_values(&[
        ("seed", run.seed().to_string()),
        ("converged", r.converged.to_string()),
        ("iterations", (r.log.len() - 1).to_string()),
        ("active_lower", r.active.lower.len().to_string()),
        ("active_upper", r.active.upper.len().to_string()),
    ]);
    text.push_str(&r.cost.to_key_value());
    run.out.write("result.txt", &text)?;
    run.out
        .write("second_order.txt", &format!("seed={}\n{}", run.seed(), so.to_key_value()))?;

    let summary = format!(
        "optimize: converged={} iterations={} J={} kkt_residual={} min_quotient={} necessary={}",
        r.converged,
        r.log.len() - 1,
        num(r.cost.j),
        num(r.kkt_residual()),
        num(so.min_quotient),
        so.necessary.as_str()
    );
    Ok(run.finish(summary, None))
}

fn verify(mut run: Run) -> CliResult<Outcome> {
    let p = run.problem()?;
    let refined = run.scenario.problem(run.refine + 1)?;
    let g = *p.grid();
    let family = |t: &TimeGrid| -> bwave_core::Result<WaveProblem> {
        run.scenario.problem_on(&g, t).map_err(into_wave)
    };
    let report = run_suite(&SuiteInput {
        problem: &p,
        refined: &refined,
        family: &family,
        config: run.scenario.optimizer_config(),
        seed: run.seed(),
    })?;
    run.out.write("verify.csv", &report.to_csv())?;
    let text = report.to_text();
    run.out.write("verify.txt", &text)?;
    let failure = (!report.passed())
        .then(|| CliError::Verification(format!("failed checks: {}", report.failed().join(","))));
    Ok(run.finish(text, failure))
}

/// `T_h`, `J` and the KKT residual at the scenario's control, and the
/// adjoint tail, on horizons `T_h k^i` at fixed `Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub horizon: f64,
    pub j: f64,
    pub kkt_residual: f64,
    pub adjoint_tail: f64,
}

pub fn sweep_rows(scenario: &Scenario, refine: u32, factor: usize) -> CliResult<Vec<SweepRow>> {
    let (g, tg) = scenario.grids(refine)?;
    let family = |t: &TimeGrid| -> bwave_core::Result<WaveProblem> {
        scenario.problem_on(&g, t).map_err(into_wave)
    };
    (0..SWEEP_ROWS)
        .map(|i| {
            let t = tg.extended(factor.pow(i));
            let p = scenario.problem_on(&g, &t)?;
            let cost = evaluate_cost(&p)?;
            let cert = decay_certificate(&family, &t, factor)?;
            Ok(SweepRow {
                horizon: t.horizon(),
                j: cost.j,
                kkt_residual: kkt_residual(&p)?,
                adjoint_tail: cert.tail(),
            })
        })
        .collect()
}

fn sweep_horizon(mut run: Run) -> CliResult<Outcome> {
    let rows = sweep_rows(&run.scenario, run.refine, run.factor)?;
    let mut csv = String::from("horizon,J,kkt_residual,adjoint_tail\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(r.horizon),
            num(r.j),
            num(r.kkt_residual),
            num(r.adjoint_tail)
        ));
    }
    run.out.write("sweep.csv", &csv)?;
    let diffs: Vec<String> = rows.windows(2).map(|w| num((w[1].j - w[0].j).abs())).collect();
    let summary = format!("sweep-horizon: seed={} |dJ|=[{}]", run.seed(), diffs.join(", "));
    Ok(run.finish(summary, None))
}
