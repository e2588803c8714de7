//! Acceptance criteria, one line per criterion. Runs as a plain binary so the
//! pass/fail lines are always printed by `cargo test`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mimicry::analysis::{
    contraction_rate, count_preserved_distinctions, diagnose, estimate_transfer, valley_trajectory,
    AnalysisReport, DiagnoseConfig, DistinctionSetup, Verdict, DEFAULT_BINS,
};
use mimicry::chain::{sweep_points, DEFAULT_ITERATIONS};
use mimicry::contour::{uniform_grid, Contour};
use mimicry::io::{read_run_dir, write_run_dir};
use mimicry::stimulus::DEFAULT_BLOCK_SIZE;
use mimicry::{
    gen_stimuli, hz_to_semitones, run_chain, sweep_inverter, Assignment, AttractorSpec, BasisSet,
    ChainRun64, Inverter, ResponseMap64, VariationModel, WeightMode, WeightScheme, Window64,
};

/// Seeds for the ensemble criteria, fixed before any run was inspected.
const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Frozen from the analytic oracle: level outputs g(x) are exact means and
/// the pooled sd is the transposition sd, so the greedy scan over sorted
/// g(x) with gap 2 · 0.5 keeps 6 levels (smallest margin 0.12 st).
const COMPRESSIVE_DISTINCTIONS: usize = 6;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn attractors() -> AttractorSpec<f64> {
    AttractorSpec::low_high(-3.0, 1.0).unwrap()
}

fn compressive() -> ResponseMap64 {
    ResponseMap64::compressive(attractors(), 0.3, Assignment::Utterance).unwrap()
}

fn pipeline(map: &ResponseMap64, variation: &VariationModel, seed: u64) -> ChainRun64 {
    let scheme = WeightScheme {
        mode: WeightMode::UniformSimplex,
        seed,
    };
    let stimuli = gen_stimuli(&BasisSet::synthetic_default(), DEFAULT_BLOCK_SIZE, scheme).unwrap();
    run_chain(&stimuli, map, variation, DEFAULT_ITERATIONS, seed).unwrap()
}

fn depths(run: &ChainRun64) -> Vec<f64> {
    valley_trajectory(&run.ensembles, &Window64::analysis_default())
        .unwrap()
        .depths()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

fn timed(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn inverter_digitization() -> Outcome {
    let start = Instant::now();
    let inputs = sweep_points(0.0, 3.3, 3.3 / 999.0).unwrap();
    assert_eq!(inputs.len(), 1000);
    let strings = sweep_inverter(&inputs, 8, &Inverter::default()).unwrap();
    let near = strings
        .iter()
        .filter(|s| {
            let v = s[8];
            (v - 0.2).abs() <= 0.05 || (v - 3.1).abs() <= 0.05
        })
        .count();
    let elapsed = start.elapsed();
    timed(Duration::from_secs(1), elapsed)?;
    let frac = near as f64 / inputs.len() as f64;
    let detail = format!(
        "{:.1}% of outputs within 0.05 V of a rail in {elapsed:?}",
        100.0 * frac
    );
    if frac >= 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradual_emergence() -> Outcome {
    let start = Instant::now();
    let mut good = 0;
    let mut lines = Vec::new();
    for seed in SEEDS {
        let d = depths(&pipeline(&compressive(), &VariationModel::default(), seed));
        let ok = d[0] < 0.2 && d.windows(2).all(|w| w[1] >= w[0] - 0.1) && d[4] > 1.0;
        good += ok as usize;
        lines.push(format!(
            "seed {seed}{} {}",
            if ok { "" } else { " (miss)" },
            fmt(&d)
        ));
    }
    let elapsed = start.elapsed();
    timed(Duration::from_secs(10), elapsed)?;
    let detail = format!("{good}/10 seeds in {elapsed:?}; {}", lines.join("; "));
    if good >= 9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn discrete_signature() -> Outcome {
    let q = ResponseMap64::quantizer(attractors());
    let mut good = 0;
    let mut first = Vec::new();
    for seed in SEEDS {
        let d = depths(&pipeline(&q, &VariationModel::default(), seed));
        good += (d[1] > 1.0) as usize;
        first.push(d[1]);
    }
    let detail = format!(
        "{good}/10 seeds with depth > 1 at iteration 1: {}",
        fmt(&first)
    );
    if good == 10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn continuous_signature() -> Outcome {
    let id = ResponseMap64::identity();
    let mut flat = 0;
    let mut verdicts = 0;
    let mut maxima = Vec::new();
    for seed in SEEDS {
        let run = pipeline(&id, &VariationModel::default(), seed);
        let d = depths(&run);
        flat += d.iter().all(|&x| x < 0.2) as usize;
        maxima.push(d.iter().copied().fold(0.0, f64::max));
        let v =
            diagnose(&run.ensembles, &Window64::analysis_default()).map_err(|e| e.to_string())?;
        verdicts += (v.verdict == Verdict::Continuous) as usize;
    }
    let detail = format!(
        "{flat}/10 seeds below 0.2 throughout (max depths {}); {verdicts}/10 diagnosed continuous",
        fmt(&maxima)
    );
    if flat >= 9 && verdicts >= 9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn map_recovery() -> Outcome {
    let w = Window64::analysis_default();
    let noisy = pipeline(&compressive(), &VariationModel::default(), SEEDS[0]);
    let fit = estimate_transfer(&noisy.ensembles, &w, DEFAULT_BINS)
        .map_err(|e| e.to_string())?
        .fitted;
    let rho_noisy = contraction_rate(&noisy.ensembles, &w).map_err(|e| e.to_string())?;
    let quiet = pipeline(&compressive(), &VariationModel::noiseless(), SEEDS[0]);
    let rho_quiet = contraction_rate(&quiet.ensembles, &w).map_err(|e| e.to_string())?;
    let detail = format!(
        "lambda {:.4}, a_lo {:.3}, a_hi {:.3}, rho noisy {:.4}, rho noise-free {:.9}",
        fit.lambda, fit.a_lo, fit.a_hi, rho_noisy, rho_quiet
    );
    let ok = (fit.lambda - 0.3).abs() <= 0.05
        && (fit.a_lo + 3.0).abs() <= 0.2
        && (fit.a_hi - 1.0).abs() <= 0.2
        && (rho_noisy - 0.7).abs() <= 0.05
        && (rho_quiet - 0.7).abs() <= 1e-6;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn distinction_bound() -> Outcome {
    let setup = DistinctionSetup {
        iterations: 1,
        n_levels: 16,
        span: (-5.0, 3.0),
        trials: 200,
        z: 2.0,
    };
    let noise = VariationModel {
        transposition_sd: 0.5,
        jitter_sd: 0.0,
        smooth_halfwidth: 0,
        seed: 2024,
    };
    let count = |map: &ResponseMap64, v: &VariationModel| {
        count_preserved_distinctions(map, v, &setup).map_err(|e| e.to_string())
    };
    let identity = count(&ResponseMap64::identity(), &VariationModel::noiseless())?;
    let quantizer = count(&ResponseMap64::quantizer(attractors()), &noise)?;
    let pull = count(&compressive(), &noise)?;
    let detail = format!(
        "identity {identity}/16, quantizer {quantizer}, compressive {pull} (oracle {COMPRESSIVE_DISTINCTIONS})"
    );
    if identity == 16 && quantizer == 2 && pull > 2 && pull < 16 && pull == COMPRESSIVE_DISTINCTIONS
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for f in [
        1e-3f64, 0.5, 27.5, 100.0, 196.0, 440.0, 1234.5678, 8000.0, 1e6,
    ] {
        worst = worst.max((hz_to_semitones(2.0 * f, f).unwrap() - 12.0).abs());
    }
    if worst > 1e-12 {
        return Err(format!("octave error {worst:e}"));
    }
    let q = ResponseMap64::quantizer(attractors());
    let pull0 = ResponseMap64::compressive(attractors(), 0.0, Assignment::Pointwise).unwrap();
    for i in 0..=20_000 {
        let x = -10.0 + i as f64 * 1e-3;
        let once = q.apply_scalar(x).unwrap();
        if q.apply_scalar(once).unwrap() != once {
            return Err(format!("quantizer not idempotent at {x}"));
        }
        if pull0.apply_scalar(x).unwrap().to_bits() != x.to_bits() {
            return Err(format!("lambda = 0 map moved {x}"));
        }
    }
    let grid = uniform_grid::<f64>(101).unwrap();
    let c = Contour::from_knots("u", grid, &[(0.0, 4.0), (0.5, -2.3), (1.0, 1.7)]).unwrap();
    let utt0 = ResponseMap64::compressive(attractors(), 0.0, Assignment::Utterance).unwrap();
    let out = utt0
        .apply_contour(&c, &Window64::analysis_default())
        .unwrap();
    if out
        .values()
        .iter()
        .zip(c.values())
        .any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err("utterance-level lambda = 0 changed a contour".into());
    }
    Ok(format!(
        "octave error {worst:e}; quantizer idempotent and lambda = 0 bit-exact on 20001 points"
    ))
}

fn report_bytes(seed: u64, threads: usize) -> Result<String, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| {
        let run = pipeline(&compressive(), &VariationModel::default(), seed);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_run_dir(dir.path(), &run).map_err(|e| e.to_string())?;
        let ensembles = read_run_dir::<f64>(dir.path()).map_err(|e| e.to_string())?;
        if ensembles != run.ensembles {
            return Err("CSV round trip changed the ensembles".to_string());
        }
        AnalysisReport::build(
            &ensembles,
            &Window64::analysis_default(),
            DEFAULT_BINS,
            DiagnoseConfig::default(),
        )
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())
    })
}

fn determinism() -> Outcome {
    let serial = report_bytes(SEEDS[2], 1)?;
    let again = report_bytes(SEEDS[2], 1)?;
    let parallel = report_bytes(SEEDS[2], 8)?;
    if serial == again && serial == parallel {
        Ok(format!(
            "{} report bytes identical across 1- and 8-thread runs",
            serial.len()
        ))
    } else {
        Err("report JSON differs between runs".into())
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("inverter digitization", inverter_digitization),
        ("gradual attractor emergence", gradual_emergence),
        ("discrete signature", discrete_signature),
        ("continuous signature", continuous_signature),
        ("map recovery", map_recovery),
        ("distinction bound", distinction_bound),
        ("exactness", exactness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
