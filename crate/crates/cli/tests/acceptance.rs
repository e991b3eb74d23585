//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 10 is a diagnostic; it only fails the run when
//! `ITERPERIOD_GATE_HARRIS=1` is set.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::One;

use iterperiod::asymptotics::{compute_constants, constants};
use iterperiod::exact::{
    brute_force_expectations, exact_e_b_conditional, exact_e_t, partition_count, partition_sums,
    z_pmf, M_MAX,
};
use iterperiod::fungraph::Analyzer;
use iterperiod::montecarlo::{run_experiment, z_gof, ExperimentConfig};
use iterperiod::renyi::{connected_count, kappa, DEFAULT_EXACT_CEILING};
use iterperiod::scalar::ln_biguint;
use iterperiod::series::{expected_b, rankin_sweep, saddle_point, Mode, SeriesTable};
use iterperiod::Rational;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    gating: bool,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Outcome {
    for n in 1..=7 {
        let brute = brute_force_expectations(n).map_err(|e| e.to_string())?;
        let series_b = expected_b(n, Mode::Exact).map_err(|e| e.to_string())?;
        let cond_b = exact_e_b_conditional(n).map_err(|e| e.to_string())?;
        let cond_t = exact_e_t(n).map_err(|e| e.to_string())?;
        if series_b != brute.e_b || cond_b != brute.e_b || cond_t != brute.e_t {
            return Err(format!(
                "n = {n}: brute (T {}, B {}), series B {series_b}, conditional (T {cond_t}, B {cond_b})",
                brute.e_t, brute.e_b
            ));
        }
    }
    let last = brute_force_expectations(7).map_err(|e| e.to_string())?;
    Ok(format!(
        "n = 1..7 identical; E_7(T) = {}, E_7(B) = {}",
        last.e_t, last.e_b
    ))
}

fn normalization() -> Outcome {
    for n in 1..=500 {
        let d = z_pmf(n).map_err(|e| e.to_string())?;
        if d.total() != Some(Rational::one()) {
            return Err(format!("n = {n}: sum is not 1"));
        }
    }
    Ok("sum_m P_n(Z = m) = 1 exactly for n = 1..500".into())
}

fn constants_check() -> Outcome {
    let c = compute_constants(1e-8).map_err(|e| e.to_string())?;
    let closure = (c.beta0 * c.beta0 - 8.0 * c.i).abs();
    check(
        (3.35..=3.37).contains(&c.k0) && closure <= 8.0 * c.quadrature_error,
        format!(
            "k0 = {:.10}, beta0 = {:.10}, |beta0^2 - 8I| = {closure:.2e} <= 8 * {:.2e}",
            c.k0, c.beta0, c.quadrature_error
        ),
    )
}

fn e_b_trend() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, lo, hi) in [(10_000usize, 0.7, 1.3), (20_000, 0.75, 1.25)] {
        let table = SeriesTable::build(n, Mode::Float).map_err(|e| e.to_string())?;
        let ln_e = table.log_expected_b(n).map_err(|e| e.to_string())?;
        let ratio = ln_e / (1.5 * (n as f64).cbrt());
        ok &= (lo..=hi).contains(&ratio);
        parts.push(format!("n = {n}: ratio {ratio:.4} in [{lo}, {hi}]"));
    }
    check(ok, parts.join("; "))
}

fn rankin() -> Outcome {
    let max_n = 20_000;
    let table = SeriesTable::build(max_n, Mode::Float).map_err(|e| e.to_string())?;
    let ns: Vec<usize> = (1..=max_n).collect();
    let checks = rankin_sweep(&table, &ns).map_err(|e| e.to_string())?;
    let violations: Vec<usize> = checks.iter().filter(|c| !c.holds).map(|c| c.n).collect();
    let tightest = checks
        .iter()
        .map(|c| c.log_bound - c.log_mu)
        .fold(f64::INFINITY, f64::min);
    check(
        violations.is_empty(),
        format!(
            "{} of {} n violate; smallest log margin {tightest:.4}; first violations {:?}",
            violations.len(),
            checks.len(),
            &violations[..violations.len().min(5)]
        ),
    )
}

fn saddle() -> Outcome {
    let r = saddle_point(1_000_000).map_err(|e| e.to_string())?;
    let ok = (0.9..=1.1).contains(&r.s_ratio)
        && (0.9..=1.1).contains(&r.a_ratio)
        && (0.85..=1.15).contains(&r.g3_ratio)
        && r.odlyzko_ok;
    check(
        ok,
        format!(
            "s* 2n^(2/3) = {:.4}, A_n/(3n^(5/3)) = {:.4}, |g'''|/(15n^(7/3)) = {:.4}, |g'''| <= A_n^(3/2): {}",
            r.s_ratio, r.a_ratio, r.g3_ratio, r.odlyzko_ok
        ),
    )
}

fn renyi() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [100usize, 1_000, 10_000] {
        let k = kappa(d, DEFAULT_EXACT_CEILING).to_f64();
        let ratio = k / (2.0 * d as f64 / std::f64::consts::PI).sqrt();
        let band = 5.0 / (d as f64).sqrt();
        ok &= (ratio - 1.0).abs() <= band;
        parts.push(format!("d = {d}: {ratio:.6}"));
    }
    let mut analyzer = Analyzer::new();
    for d in 1..=7usize {
        let total = d.pow(d as u32);
        let mut targets = vec![0u32; d];
        let mut connected = 0u64;
        for mut code in 0..total {
            for t in targets.iter_mut() {
                *t = (code % d) as u32;
                code /= d;
            }
            analyzer.run(&targets);
            if analyzer.cycle_lengths().len() == 1 {
                connected += 1;
            }
        }
        if connected_count(d) != connected.into() {
            ok = false;
            parts.push(format!("|U_{d}| mismatch: enumeration {connected}"));
        }
    }
    parts.push("|U_d| matches enumeration for d <= 7".into());
    check(ok, parts.join("; "))
}

fn stong() -> Outcome {
    let sums = partition_sums(60, M_MAX).map_err(|e| e.to_string())?;
    if sums.partitions != partition_count(60) || sums.partitions != 966_467 {
        return Err(format!("visited {} partitions", sums.partitions));
    }
    let ln_fact: f64 = (2..=60).map(|k| (k as f64).ln()).sum();
    let log_m = ln_biguint(&sums.lcm_total) - ln_fact;
    let reference = constants().beta0 * (60.0f64 / 60.0f64.ln()).sqrt();
    let ratio = log_m / reference;
    check(
        (0.5..=1.5).contains(&ratio),
        format!("log M_60 = {log_m:.6}, beta0 sqrt(60/log 60) = {reference:.6}, ratio {ratio:.4}"),
    )
}

fn monte_carlo() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, samples, seed) in [(10_000usize, 10_000u64, 1u64), (100_000, 1_000, 2)] {
        let s =
            run_experiment(&ExperimentConfig::new(n, samples, seed)).map_err(|e| e.to_string())?;
        let bound = 10.0 * (n as f64).ln() * (n as f64).ln().ln().powi(2);
        ok &= s.violations.total() == 0;
        parts.push(format!(
            "n = {n}: {} violations, mean log B - log T = {:.3} (10 log n (log log n)^2 = {bound:.1})",
            s.violations.total(),
            s.log_gap.mean
        ));
    }
    let s = run_experiment(&ExperimentConfig::new(100, 100_000, 3)).map_err(|e| e.to_string())?;
    let gof = z_gof(&s, &z_pmf(100).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ok &= gof.pvalue > 1e-3 && s.violations.total() == 0;
    parts.push(format!(
        "Z at n = 100: chi2 = {:.2} on {} dof, p = {:.4}",
        gof.chi2, gof.dof, gof.pvalue
    ));
    check(ok, parts.join("; "))
}

fn harris() -> Outcome {
    let s =
        run_experiment(&ExperimentConfig::new(100_000, 10_000, 4)).map_err(|e| e.to_string())?;
    let f = s.fraction_le_zero();
    check(
        (0.35..=0.65).contains(&f),
        format!("fraction of (log T - a_n)/b_n <= 0 at n = 1e5: {f:.4}"),
    )
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_iterperiod"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("iterperiod-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mapping: PathBuf = dir.join("mapping.txt");
    std::fs::write(&mapping, "8 2 3 1 5 4 4 8 7").map_err(|e| e.to_string())?;
    let mapping = mapping.to_string_lossy().into_owned();
    let runs: Vec<Vec<&str>> = vec![
        vec!["analyze", &mapping],
        vec!["exact", "--n", "7"],
        vec!["exact", "--n", "20", "--format", "json"],
        vec![
            "series",
            "--degree",
            "300",
            "--n",
            "100,300",
            "--paper-variant",
        ],
        vec![
            "series", "--degree", "40", "--mode", "exact", "--format", "json",
        ],
        vec!["asymptotics", "--n", "1000,100000", "--format", "json"],
        vec!["constants", "--tolerance", "1e-8"],
        vec![
            "simulate",
            "--n",
            "1000",
            "--samples",
            "2000",
            "--seed",
            "9",
            "--crosscheck",
            "--gof",
        ],
        vec!["renyi", "--max-d", "60"],
    ];
    for args in &runs {
        let (code_a, a) = run_cli(args);
        let (code_b, b) = run_cli(args);
        if code_a != Some(0) || code_a != code_b || a != b || a.is_empty() {
            return Err(format!(
                "{args:?}: exit {code_a:?}/{code_b:?}, outputs equal: {}",
                a == b
            ));
        }
    }
    let sim = [
        "simulate",
        "--n",
        "5000",
        "--samples",
        "500",
        "--seed",
        "5",
        "--format",
        "json",
    ];
    let (_, one) = run_cli(&[&sim[..], &["--blocks", "1"]].concat());
    let (_, four) = run_cli(&[&sim[..], &["--blocks", "4"]].concat());
    let _ = std::fs::remove_dir_all(&dir);
    check(
        one == four,
        format!(
            "{} subcommand runs byte-identical; simulate identical across 1 and 4 workers",
            runs.len()
        ),
    )
}

fn main() {
    let gate_harris = std::env::var("ITERPERIOD_GATE_HARRIS").is_ok_and(|v| v == "1");
    let criteria = [
        Criterion {
            id: 1,
            name: "oracle equivalence (exact)",
            budget: Duration::from_secs(300),
            gating: true,
            run: oracle_equivalence,
        },
        Criterion {
            id: 2,
            name: "normalization (exact)",
            budget: Duration::from_secs(60),
            gating: true,
            run: normalization,
        },
        Criterion {
            id: 3,
            name: "constants",
            budget: Duration::from_secs(1),
            gating: true,
            run: constants_check,
        },
        Criterion {
            id: 4,
            name: "E_n(B) growth trend",
            budget: Duration::from_secs(600),
            gating: true,
            run: e_b_trend,
        },
        Criterion {
            id: 5,
            name: "Rankin bound",
            budget: Duration::from_secs(600),
            gating: true,
            run: rankin,
        },
        Criterion {
            id: 6,
            name: "saddle point",
            budget: Duration::from_secs(60),
            gating: true,
            run: saddle,
        },
        Criterion {
            id: 7,
            name: "connected-mapping asymptotics",
            budget: Duration::from_secs(120),
            gating: true,
            run: renyi,
        },
        Criterion {
            id: 8,
            name: "Stong comparison",
            budget: Duration::from_secs(120),
            gating: true,
            run: stong,
        },
        Criterion {
            id: 9,
            name: "Monte-Carlo invariants",
            budget: Duration::from_secs(300),
            gating: true,
            run: monte_carlo,
        },
        Criterion {
            id: 10,
            name: "Harris CLT diagnostic",
            budget: Duration::from_secs(300),
            gating: gate_harris,
            run: harris,
        },
        Criterion {
            id: 11,
            name: "determinism",
            budget: Duration::from_secs(300),
            gating: true,
            run: determinism,
        },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (mut pass, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let mut timing = format!("{:.2}s", elapsed.as_secs_f64());
        if elapsed > c.budget {
            pass = false;
            timing = format!("{timing} exceeds budget {}s", c.budget.as_secs());
        }
        let tag = match (pass, c.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (non-gating)",
        };
        println!("{tag} criterion {}: {} [{timing}] {detail}", c.id, c.name);
        if !pass && c.gating {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all gating criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
