use bwave_cli::scenario::{PerAxis, Shape};
use bwave_cli::{parse_scenario, CliError, Initializer, Scenario};
use bwave_core::OptimizerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MINIMAL: &str = r#"
[grid]
dimension = 1
n = 63
extent = 1.0

[time]
horizon = 8.0
steps = 512

[init]
y0 = "sine-mode 1"

[cost]
gamma = 1.0
"#;

#[test]
fn minimal_document_gets_defaults() {
    let s = parse_scenario(MINIMAL).unwrap();
    let mut expected = Scenario::minimal(63, 8.0, 512);
    expected.init.y0 = Initializer::new(Shape::SineMode(vec![1]));
    assert_eq!(s, expected);
    assert_eq!(s.seed, 0);
    assert_eq!(s.bounds.alpha.constant_value(), Some(-1.0));
    assert_eq!(s.bounds.beta.constant_value(), Some(1.0));
    assert_eq!(s.init.yd, Initializer::zero());
    assert_eq!(s.optimizer_config(), OptimizerConfig::default());
}

#[test]
fn constant_bounds_are_checked_symbolically() {
    let doc = format!("{MINIMAL}\n[bounds]\nalpha = \"constant 2\"\nbeta = \"constant 1\"\n");
    let err = parse_scenario(&doc).unwrap_err();
    assert!(matches!(err, CliError::Validation(_)));
    assert!(err.to_string().contains("bounds inverted"), "{err}");
    assert_eq!(err.exit_code(), 1);

    let scaled = format!("{MINIMAL}\n[bounds]\nalpha = \"-3 * constant 1\"\nbeta = \"zero\"\n");
    assert!(parse_scenario(&scaled).is_ok());
}

#[test]
fn unknown_keys_and_names_are_rejected() {
    for doc in [
        format!("{MINIMAL}\nverbose = true\n"),
        MINIMAL.replace("gamma = 1.0", "gamma = 1.0\nbeta = 2.0"),
        MINIMAL.replace("sine-mode 1", "cosine-mode 1"),
        format!("{MINIMAL}\n[optimizer]\nmax_iters = 3\n"),
        MINIMAL.replace("y0 = \"sine-mode 1\"", "y0 = \"uncontrolled-state\""),
        MINIMAL.replace("steps = 512", "steps = \"many\""),
    ] {
        let err = parse_scenario(&doc).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }
}

#[test]
fn grid_shape_must_match_dimension() {
    let two = MINIMAL.replace("n = 63", "n = [7, 9]");
    assert!(parse_scenario(&two).is_err());
    let ok = two.replace("dimension = 1", "dimension = 2");
    let s = parse_scenario(&ok).unwrap();
    let (g, _) = s.grids(0).unwrap();
    assert_eq!(g.len(), 63);
    let bump = ok.replace("sine-mode 1", "gaussian-bump 0.5 0.2");
    assert!(parse_scenario(&bump).is_err());
    assert!(parse_scenario(&bump.replace("0.5 0.2", "0.5 0.5 0.2")).is_ok());
}

#[test]
fn invalid_optimizer_overrides_are_validation_errors() {
    let doc = format!("{MINIMAL}\n[optimizer]\nbacktrack = 1.5\n");
    assert_eq!(parse_scenario(&doc).unwrap_err().exit_code(), 1);
}

fn random_number(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-3.0..3.0),
        1 => rng.gen_range(1..5) as f64 * 0.25,
        2 => rng.gen_range(-1e-6..1e-6),
        _ => rng.gen_range(1e3..1e18),
    }
}

fn random_initializer(rng: &mut ChaCha8Rng, dim: usize, allow_state: bool) -> Initializer {
    let modes = |rng: &mut ChaCha8Rng| (0..rng.gen_range(1..=dim)).map(|_| rng.gen_range(1..6)).collect();
    let shape = match rng.gen_range(0..if allow_state { 6 } else { 5 }) {
        0 => Shape::Zero,
        1 => Shape::Constant(random_number(rng)),
        2 => Shape::SineMode(modes(rng)),
        3 => Shape::GaussianBump {
            center: (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
            width: rng.gen_range(0.01..1.0),
        },
        4 => Shape::DecayingExp {
            rate: random_number(rng),
            modes: modes(rng),
        },
        _ => Shape::UncontrolledState,
    };
    let amplitude = if rng.gen_bool(0.5) { 1.0 } else { random_number(rng) };
    Initializer { amplitude, shape }
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let dim = rng.gen_range(1..=2);
    let mut s = Scenario::minimal(rng.gen_range(1..200), rng.gen_range(0.1..50.0), rng.gen_range(2..5000));
    s.grid.dimension = dim;
    if dim == 2 && rng.gen_bool(0.5) {
        s.grid.n = PerAxis::Axes([rng.gen_range(1..50), rng.gen_range(1..50)]);
        s.grid.extent = PerAxis::Axes([rng.gen_range(0.1..4.0), rng.gen_range(0.1..4.0)]);
    } else {
        s.grid.extent = PerAxis::Uniform(rng.gen_range(0.1..4.0));
    }
    s.seed = rng.gen_range(0..i64::MAX as u64);
    s.init.y0 = random_initializer(rng, dim, false);
    s.init.y1 = random_initializer(rng, dim, false);
    s.init.f = random_initializer(rng, dim, false);
    s.init.yd = random_initializer(rng, dim, true);
    s.control.u0 = random_initializer(rng, dim, false);
    if rng.gen_bool(0.5) {
        let a = rng.gen_range(-2.0..0.0);
        s.bounds.alpha = Initializer::constant(a);
        s.bounds.beta = Initializer::constant(a + rng.gen_range(0.0..3.0));
    } else {
        s.bounds.alpha = random_initializer(rng, dim, false).scaled(-1.0);
        s.bounds.beta = Initializer::new(Shape::SineMode(vec![1]));
        if let Some(a) = s.bounds.alpha.constant_value() {
            s.bounds.alpha = Initializer::constant(-a.abs());
        }
    }
    s.cost.gamma = rng.gen_range(1e-3..10.0);
    s.optimizer.max_iter = rng.gen_range(1..1000);
    s.optimizer.kkt_tol = rng.gen_range(1e-10..1e-2);
    s.optimizer.backtrack = rng.gen_range(0.1..0.9);
    s.optimizer.rayleigh_samples = rng.gen_range(1..100);
    s.output.dir = format!("runs/case-{}", rng.gen_range(0..1000)).into();
    s.output.stride = rng.gen_range(1..10);
    s
}

#[test]
fn serialization_round_trips_on_random_documents() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..50 {
        let s = random_scenario(&mut rng);
        s.validate().unwrap_or_else(|e| panic!("document {i} invalid: {e}"));
        let text = s.to_toml();
        let back = parse_scenario(&text).unwrap_or_else(|e| panic!("document {i}: {e}\n{text}"));
        assert_eq!(back, s, "document {i}:\n{text}");
        assert_eq!(back.to_toml(), text);
    }
}
