//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use detbb84::adversary::{AttackKind, AttackStrategy};
use detbb84::channel::{
    transmission_probability, transmission_probability_det, DetectorParams, FiberParams,
};
use detbb84::config::AppConfig;
use detbb84::model::SourceModel;
use detbb84::postprocess::{
    binary_entropy, error_correct, hamming_distance, privacy_amplify, tau_fraction,
};
use detbb84::protocol::{
    run_session, write_transcript, AbortReason, SessionConfig, SessionTranscript, Variant,
};
use detbb84::rates::{
    beta, crossover_distance, evaluate, optimize_mu, optimized_ratio, p_exp, p_signal, qber_model,
    secure_rate_bb84, secure_rate_det, sweep, write_curves, RateParams, RateVariant,
};
use detbb84::rng_stream;

type Criterion = (&'static str, u64, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn run(cfg: &AppConfig, seed: u64) -> SessionTranscript {
    run_session(
        &cfg.session(),
        &cfg.fiber,
        &cfg.detector(),
        &cfg.timing(),
        &cfg.source,
        &cfg.attack,
        seed,
    )
    .expect("valid configuration")
}

/// Lossless fiber, perfect detector, single-photon source.
fn ideal_link(variant: Variant, n_target: usize, pulses: Option<usize>) -> AppConfig {
    let mut cfg = AppConfig::default();
    cfg.fiber.alpha_db_per_km = 0.0;
    cfg.fiber.receiver_loss_db = 0.0;
    cfg.fiber.length_km = 10.0;
    cfg.detector = DetectorParams::ideal(cfg.epsilon_ns);
    cfg.source = SourceModel::single_photon();
    cfg.session = SessionConfig {
        n_target,
        eta_c: 0.0,
        eta_m: 0.0,
        variant,
        pulses,
        ..cfg.session
    };
    cfg
}

fn formulas() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    check("h(0)", binary_entropy(0.0).unwrap() == 0.0);
    check("h(0.5)", (binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-12);
    check(
        "h(0.11)",
        (binary_entropy(0.11).unwrap() - 0.49993).abs() <= 1e-4,
    );
    check("tau(0)", tau_fraction(0.0).unwrap() == 0.0);
    check("tau(0.5)", (tau_fraction(0.5).unwrap() - 1.0).abs() < 1e-12);
    check(
        "tau(0.1)",
        (tau_fraction(0.1).unwrap() - 0.44360).abs() <= 1e-4,
    );

    // Reference values from independent high-precision evaluation.
    check("p_exp", rel(p_exp(0.1, 0.01), 0.109) <= 1e-6);
    check("p_exp dark only", p_exp(0.0, 8.5e-7) == 8.5e-7);
    check(
        "p_signal",
        rel(p_signal(0.045, 10f64.powf(-0.2), 0.1), 0.002_835_281_027_28) <= 1e-6,
    );
    check("p_signal mu=0", p_signal(0.045, 0.63, 0.0) == 0.0);
    let fiber = FiberParams {
        alpha_db_per_km: 0.2,
        length_km: 10.0,
        receiver_loss_db: 0.0,
        refractive_index: 1.468,
    };
    check(
        "eta_T",
        rel(transmission_probability(&fiber), 0.630_957_344_48) <= 1e-6,
    );
    check(
        "eta_T'",
        rel(transmission_probability_det(&fiber, 0.02), 0.397_740_669_1) <= 1e-6,
    );
    check(
        "beta",
        rel(beta(0.109, 0.009).unwrap(), 0.917_431_192_66) <= 1e-6,
    );
    check("beta S_m=0", beta(0.3, 0.0).unwrap() == 1.0);
    check(
        "qber_model",
        rel(
            qber_model(0.0028, 8.5e-5, 0.01).unwrap(),
            0.024_438_757_859_4,
        ) <= 1e-6,
    );
    let detail = if failures.is_empty() {
        "all spot values within tolerance".to_string()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    Outcome::new(failures.is_empty(), detail)
}

fn determinism() -> Outcome {
    let mut det_ok = 0;
    let mut worst = 0.0f64;
    let mut bb84_ok = 0;
    for seed in 0..100 {
        let cfg = ideal_link(Variant::DetPractical, 50, None);
        let t = run(&cfg, seed);
        if t.sifted.len() == cfg.session().pulse_count() && t.discarded() == 0 {
            det_ok += 1;
        }
        let cfg = ideal_link(Variant::Bb84, 10_000, Some(100_000));
        let t = run(&cfg, seed);
        let fraction = t.sifted.len() as f64 / t.clicks() as f64;
        worst = worst.max((fraction - 0.5).abs());
        if (0.4950..=0.5050).contains(&fraction) {
            bb84_ok += 1;
        }
    }
    Outcome::new(
        det_ok == 100 && bb84_ok == 100,
        format!(
            "det sifted = W in {det_ok}/100; bb84 sifted/clicked in band {bb84_ok}/100 (max |f - 0.5| = {worst:.4})"
        ),
    )
}

fn timing_security() -> Outcome {
    let mut cfg = AppConfig::default();
    cfg.detector.dark_prob = 0.0;
    cfg.detector.misalignment = 0.0;
    cfg.session.n_target = 50;
    assert_eq!((cfg.delta_cap_ns, cfg.epsilon_ns), (100, 10));

    let mut caught = 0;
    let mut clean_checks = 0;
    let mut honest_ok = 0;
    for seed in 0..100 {
        cfg.attack = AttackStrategy::delay_for_basis(1.0);
        let t = run(&cfg, seed);
        if t.abort == Some(AbortReason::TimingViolation) {
            caught += 1;
        }
        if t.check_qber == Some(0.0) {
            clean_checks += 1;
        }
        cfg.attack = AttackStrategy::none();
        let t = run(&cfg, seed);
        if t.abort != Some(AbortReason::TimingViolation) {
            honest_ok += 1;
        }
    }
    Outcome::new(
        caught == 100 && clean_checks == 100 && honest_ok == 100,
        format!(
            "attack caught {caught}/100, zero check QBER {clean_checks}/100, honest never flagged {honest_ok}/100"
        ),
    )
}

fn intercept_resend() -> Outcome {
    let mut cfg = ideal_link(Variant::DetPractical, 50_000, None);
    cfg.attack = AttackStrategy::intercept_resend(1.0);
    let t = run(&cfg, 2024);
    let checked = t.check_indices.len();
    let q = t.check_qber.unwrap_or(f64::NAN);
    Outcome::new(
        checked >= 100_000 && (q - 0.25).abs() <= 0.005,
        format!("QBER {q:.5} over {checked} check bits (oracle 0.25)"),
    )
}

fn monte_carlo() -> Outcome {
    let mut cfg = AppConfig::default();
    cfg.session.pulses = Some(1_000_000);
    let mut lines = Vec::new();
    let mut pass = true;
    for (variant, rate_variant) in [
        (Variant::DetPractical, RateVariant::Det),
        (Variant::Bb84, RateVariant::Bb84),
    ] {
        for (k, l) in [2.0, 8.0, 16.0].into_iter().enumerate() {
            cfg.fiber.length_km = l;
            cfg.session.variant = variant;
            let t = run(&cfg, 500 + k as u64);
            let n = t.pulses() as f64;
            let observed = t.clicks() as f64 / n;
            let expected = evaluate(&cfg.rate_params(), rate_variant).unwrap().p_exp;
            let sigma = (expected * (1.0 - expected) / n).sqrt();
            let z = (observed - expected) / sigma;
            pass &= z.abs() <= 3.0;
            lines.push(format!("{}@{l}km z={z:+.2}", variant.name()));
        }
    }
    Outcome::new(pass, lines.join(", "))
}

fn cross_equation() -> Outcome {
    let mut rng = rng_stream(77, 0);
    let base = AppConfig::default().rate_params();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut p = base;
        p.mu = rng.random_range(1e-3..1.0);
        p.fiber.alpha_db_per_km = rng.random_range(0.1..0.5);
        p.fiber.receiver_loss_db = rng.random_range(0.0..6.0);
        p.fiber.length_km = rng.random_range(0.0..60.0);
        p.detector.efficiency = rng.random_range(0.01..1.0);
        p.detector.dark_prob = rng.random_range(0.0..1e-4);
        p.detector.misalignment = rng.random_range(0.0..0.1);
        p.storage_loop_km = rng.random_range(0.0..0.5);
        let det = secure_rate_det(&p).unwrap().rate;
        let effective = p.with_length(2.0 * p.fiber.length_km + p.storage_loop_km);
        let bb = secure_rate_bb84(&effective).unwrap().rate;
        let err = if det == 0.0 && bb == 0.0 {
            0.0
        } else {
            rel(2.0 * bb, det)
        };
        worst = worst.max(err);
    }
    Outcome::new(
        worst <= 1e-12,
        format!("max relative error {worst:.2e} over 1000 draws"),
    )
}

fn ratio_table() -> Outcome {
    let p = AppConfig::default().rate_params();
    let published = [(2.0, 1.6587), (4.0, 1.3759), (8.0, 0.9460), (16.0, 0.4396)];
    let ratios: Vec<f64> = published
        .iter()
        .map(|&(l, _)| optimized_ratio(&p, l).unwrap())
        .collect();
    let monotone = ratios.windows(2).all(|w| w[1] < w[0]);
    let crossover = crossover_distance(&p, 0.5, 20.0).unwrap_or(f64::NAN);
    let crossover_ok = crossover > 4.0 && crossover < 8.0;
    let at_two = (1.5..=1.8).contains(&ratios[0]);
    let within_15 = ratios
        .iter()
        .zip(&published)
        .all(|(r, (_, t))| rel(*r, *t) <= 0.15);

    let mut limit = p;
    limit.detector.dark_prob = 0.0;
    limit.storage_loop_km = 0.0;
    let limiting = optimized_ratio(&limit, 0.1).unwrap();
    let limit_ok = (limiting - 2.0).abs() <= 0.02;

    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    Outcome::new(
        monotone && crossover_ok && at_two && within_15 && limit_ok,
        format!(
            "ratios [{}] vs [1.6587, 1.3759, 0.9460, 0.4396]; crossover {crossover:.2} km; limit {limiting:.4}",
            shown.join(", ")
        ),
    )
}

fn max_distance() -> Outcome {
    let p = AppConfig::default().rate_params();
    let secure = |l: f64| optimize_mu(&p, l, RateVariant::Bb84).is_ok();
    let (mut lo, mut hi) = (1.0, 200.0);
    if !secure(lo) || secure(hi) {
        return Outcome::new(false, "no sign change on [1, 200] km");
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if secure(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Outcome::new(
        (45.0..=75.0).contains(&lo),
        format!("BB84 rate reaches 0 at {lo:.2} km (target 60 +/- 15)"),
    )
}

fn optimizer() -> Outcome {
    let p = AppConfig::default().rate_params();
    let mut worst = 0.0f64;
    for v in [RateVariant::Bb84, RateVariant::Det] {
        for l in [2.0, 4.0, 8.0, 16.0] {
            let golden = optimize_mu(&p, l, v).unwrap().mu_opt;
            let at = p.with_length(l);
            let (grid, _) = (1..=10_000)
                .map(|i| i as f64 * 1e-4)
                .map(|mu| (mu, evaluate(&at.with_mu(mu), v).unwrap().rate))
                .fold(
                    (0.0, f64::NEG_INFINITY),
                    |b, x| if x.1 > b.1 { x } else { b },
                );
            worst = worst.max((golden - grid).abs());
        }
    }
    Outcome::new(
        worst <= 1e-4,
        format!("max |mu_golden - mu_grid| = {worst:.2e}"),
    )
}

fn postprocessing() -> Outcome {
    let mut rng = rng_stream(10, 0);
    let mut residual = 0usize;
    for _ in 0..1000 {
        let alice: Vec<bool> = (0..2000).map(|_| rng.random()).collect();
        let bob: Vec<bool> = alice.iter().map(|&b| b ^ rng.random_bool(0.05)).collect();
        let fixed = error_correct(&alice, &bob, 0.05, &mut rng).unwrap();
        residual += hamming_distance(&alice, &fixed.corrected);
    }
    let residual_rate = residual as f64 / 2e6;

    let mut avalanche = 0.0;
    for t in 0..1000u64 {
        let key: Vec<bool> = (0..256).map(|_| rng.random()).collect();
        let mut flipped = key.clone();
        let pos = rng.random_range(0..256);
        flipped[pos] = !flipped[pos];
        let a = privacy_amplify(&key, 128, t).unwrap();
        let b = privacy_amplify(&flipped, 128, t).unwrap();
        avalanche += hamming_distance(&a, &b) as f64 / 128.0;
    }
    avalanche /= 1000.0;

    let cfg = AppConfig {
        attack: AttackStrategy {
            kind: AttackKind::InterceptResend,
            fraction: 0.1,
            eve_to_bob_delay: 0,
        },
        ..AppConfig::default()
    };
    let transcript_bytes = |seed| {
        let mut buf = Vec::new();
        write_transcript(&run(&cfg, seed), &mut buf).unwrap();
        buf
    };
    let curve_bytes = || {
        let rp: RateParams = AppConfig::default().rate_params();
        let grid: Vec<f64> = (2..=60).map(f64::from).collect();
        let curves = [
            sweep(&rp, &grid, RateVariant::Det).unwrap(),
            sweep(&rp, &grid, RateVariant::Bb84).unwrap(),
        ];
        let mut buf = Vec::new();
        write_curves(&curves, &mut buf).unwrap();
        buf
    };
    let replay = transcript_bytes(5) == transcript_bytes(5) && curve_bytes() == curve_bytes();

    Outcome::new(
        residual_rate <= 1e-3 && avalanche >= 0.45 && replay,
        format!(
            "residual error rate {residual_rate:.2e}; avalanche {avalanche:.4}; replay identical: {replay}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("formula unit suite", 1, formulas),
        ("determinism yield", 30, determinism),
        ("timing security", 30, timing_security),
        ("intercept-resend QBER", 30, intercept_resend),
        ("Monte-Carlo vs analytic", 120, monte_carlo),
        ("cross-equation identity", 1, cross_equation),
        ("published ratio table", 10, ratio_table),
        ("maximum BB84 distance", 5, max_distance),
        ("mu optimizer vs grid", 10, optimizer),
        ("postprocessing", 120, postprocessing),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.2} s of {} s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget
        );
    }
    println!("acceptance: {} passed, {} failed", 10 - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
