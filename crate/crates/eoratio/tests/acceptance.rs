//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::Instant;

use eoratio::config::parse_coefficients;
use eoratio::report::{simulation_csv, EvaluationRecord};
use eoratio::runner;
use eoratio_core::simulation::replicate_rng;
use eoratio_core::{
    evaluate, greenwood_variance, kaplan_meier, paper_grid, rcm_log_incidence, t_year_risk, Cohort,
    Method, RcmCoefficients, RcmCovariates, SimulationSummary, Subject, UniformModel,
};
use rand_core::RngCore;

const SEED: u64 = 1;

/// Mean, CI width and coverage for M0..M3, by lambda (100, 200, 400) and
/// unknown-status rate (0, 5, 10, 20%).
#[rustfmt::skip]
const REFERENCE: [[[[f64; 3]; 4]; 4]; 3] = [
    [
        [[1.000, 0.088, 0.967], [0.950, 0.083, 0.374], [1.000, 0.088, 0.967], [1.000, 0.083, 0.957]],
        [[0.976, 0.087, 0.809], [0.951, 0.085, 0.406], [1.001, 0.089, 0.955], [1.001, 0.084, 0.946]],
        [[0.950, 0.086, 0.391], [0.951, 0.086, 0.410], [1.002, 0.090, 0.967], [1.001, 0.086, 0.961]],
        [[0.893, 0.083, 0.003], [0.953, 0.088, 0.462], [1.004, 0.093, 0.963], [1.001, 0.088, 0.951]],
    ],
    [
        [[1.000, 0.124, 0.954], [0.975, 0.121, 0.876], [1.000, 0.124, 0.954], [1.000, 0.121, 0.949]],
        [[0.976, 0.123, 0.891], [0.978, 0.123, 0.891], [1.003, 0.126, 0.960], [1.002, 0.123, 0.953]],
        [[0.949, 0.121, 0.620], [0.976, 0.124, 0.898], [1.002, 0.128, 0.958], [1.001, 0.124, 0.956]],
        [[0.890, 0.117, 0.066], [0.977, 0.128, 0.887], [1.003, 0.132, 0.959], [1.001, 0.128, 0.955]],
    ],
    [
        [[1.002, 0.176, 0.950], [0.990, 0.174, 0.931], [1.002, 0.176, 0.950], [1.002, 0.174, 0.950]],
        [[0.976, 0.174, 0.907], [0.989, 0.176, 0.939], [1.002, 0.178, 0.964], [1.002, 0.181, 0.960]],
        [[0.948, 0.171, 0.783], [0.989, 0.178, 0.942], [1.001, 0.181, 0.968], [1.001, 0.178, 0.964]],
        [[0.893, 0.166, 0.313], [0.992, 0.184, 0.965], [1.005, 0.187, 0.968], [1.004, 0.185, 0.966]],
    ],
];

const REFERENCE_CASES: [[f64; 4]; 3] = [
    [2000.0, 1947.0, 1895.0, 1787.0],
    [1001.0, 973.0, 948.0, 896.0],
    [500.0, 488.0, 475.0, 448.0],
];

/// Published C0-tilde range per unknown-status rate, across lambda.
const C0_RANGES: [(f64, f64); 4] = [
    (1.000, 1.000),
    (1.025, 1.026),
    (1.053, 1.055),
    (1.120, 1.125),
];
/// Published C1 range per lambda, across rates.
const C1_RANGES: [(f64, f64); 3] = [(1.053, 1.055), (1.026, 1.027), (1.013, 1.013)];

const LAMBDA_LABELS: [&str; 3] = ["100", "200", "400"];
const RATE_LABELS: [&str; 4] = ["0%", "5%", "10%", "20%"];

#[derive(Default)]
struct Checks {
    count: usize,
    failures: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.count += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn within(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, || {
            format!(
                "{label}: got {got:.4}, expected {want:.3} +/- {tol} (off by {:.4})",
                (got - want).abs()
            )
        });
    }
}

fn report(number: u32, title: &str, started: Instant, checks: Checks) -> bool {
    let ok = checks.failures.is_empty();
    println!(
        "criterion {number} {title}: {} ({} checks, {} failed, {:.1}s)",
        if ok { "PASS" } else { "FAIL" },
        checks.count,
        checks.failures.len(),
        started.elapsed().as_secs_f64()
    );
    for f in &checks.failures {
        println!("    {f}");
    }
    ok
}

fn cell(grid: &[SimulationSummary], l: usize, r: usize) -> &SimulationSummary {
    &grid[l * RATE_LABELS.len() + r]
}

fn label(l: usize, r: usize) -> String {
    format!("lambda={}/{}", LAMBDA_LABELS[l], RATE_LABELS[r])
}

fn estimator_summaries(grid: &[SimulationSummary]) -> Checks {
    let mut c = Checks::default();
    for l in 0..3 {
        for r in 0..4 {
            let s = cell(grid, l, r);
            c.check(s.valid, || {
                format!("{}: summary flagged invalid", label(l, r))
            });
            for (k, m) in Method::ALL.into_iter().enumerate() {
                let [mean, width, coverage] = REFERENCE[l][r][k];
                let got = s.method(m);
                let at = format!("{} {m}", label(l, r));
                c.within(&format!("{at} mean"), got.mean, mean, 0.010);
                c.within(&format!("{at} width"), got.mean_width, width, 0.006);
                c.within(&format!("{at} coverage"), got.coverage, coverage, 0.030);
            }
        }
    }
    c
}

fn range_distance(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

fn corrections(grid: &[SimulationSummary]) -> Checks {
    let mut c = Checks::default();
    for l in 0..3 {
        for r in 0..4 {
            let s = cell(grid, l, r);
            let d0 = range_distance(s.mean_c0_tilde, C0_RANGES[r]);
            c.check(d0 <= 0.006, || {
                format!(
                    "{} C0~ {:.4} outside {:?} +/- 0.006",
                    label(l, r),
                    s.mean_c0_tilde,
                    C0_RANGES[r]
                )
            });
            let d1 = range_distance(s.mean_c1, C1_RANGES[l]);
            c.check(d1 <= 0.004, || {
                format!(
                    "{} C1 {:.4} outside {:?} +/- 0.004",
                    label(l, r),
                    s.mean_c1,
                    C1_RANGES[l]
                )
            });
        }
    }
    c
}

fn worked_example() -> Checks {
    let mut c = Checks::default();
    let mut subjects = Vec::with_capacity(10_000);
    for year in 1..=5 {
        subjects.extend((0..100).map(|_| Subject::new(year as f64, true, ()).unwrap()));
    }
    subjects.extend((0..9_500).map(|_| Subject::new(5.0, false, ()).unwrap()));
    let cohort = Cohort::new(subjects, 5.0).unwrap();
    let rep = evaluate(&cohort, &UniformModel::new(100.0).unwrap()).unwrap();
    let want = [1.0, 0.98, 1.0, 1.0];
    for (m, w) in Method::ALL.into_iter().zip(want) {
        let p = rep.estimate(m).point;
        c.check((p - w).abs() < 1e-12, || format!("{m} = {p}, expected {w}"));
    }
    let csv = EvaluationRecord::new(&rep, &Method::ALL, Vec::new()).to_csv();
    for (key, value) in [
        ("m0_point", "1.0000"),
        ("m1_point", "0.9800"),
        ("m2_point", "1.0000"),
        ("m3_point", "1.0000"),
    ] {
        let line = format!("{key},{value}");
        c.check(csv.lines().any(|l| l == line), || {
            format!("report lacks `{line}`")
        });
    }
    c
}

fn observed_cases(grid: &[SimulationSummary]) -> Checks {
    let mut c = Checks::default();
    for l in 0..3 {
        for r in 0..4 {
            let got = cell(grid, l, r).mean_observed_cases;
            c.check((got - REFERENCE_CASES[l][r]).abs() <= 6.0, || {
                format!(
                    "{}: {got:.1} observed cases, expected {} +/- 6",
                    label(l, r),
                    REFERENCE_CASES[l][r]
                )
            });
        }
    }
    c
}

/// Product limit written out from the definition: for every distinct event
/// time u <= t, count who is still at risk and who fails at u.
fn oracle_km(data: &[(u32, bool)], t: u32) -> (f64, f64, bool) {
    let mut s = 1.0;
    let mut sum = 0.0;
    let mut degenerate = false;
    for u in 1..=t {
        let n = data.iter().filter(|&&(z, _)| z >= u).count();
        let d = data.iter().filter(|&&(z, e)| z == u && e).count();
        if d == 0 {
            continue;
        }
        s *= 1.0 - d as f64 / n as f64;
        if d == n {
            degenerate = true;
        } else {
            sum += d as f64 / (n as f64 * (n - d) as f64);
        }
    }
    let var = if degenerate { 0.0 } else { s * s * sum };
    (s, var, degenerate)
}

fn for_each_multiset(kinds: usize, max_len: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        start: usize,
        kinds: usize,
        max_len: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if !cur.is_empty() {
            f(cur);
        }
        if cur.len() == max_len {
            return;
        }
        for k in start..kinds {
            cur.push(k);
            rec(k, kinds, max_len, cur, f);
            cur.pop();
        }
    }
    rec(0, kinds, max_len, &mut Vec::new(), f);
}

fn km_oracle() -> Checks {
    let mut c = Checks::default();
    let mut cohorts = 0usize;
    for_each_multiset(12, 8, &mut |kinds| {
        cohorts += 1;
        let data: Vec<(u32, bool)> = kinds
            .iter()
            .map(|&k| ((k / 2 + 1) as u32, k % 2 == 1))
            .collect();
        let subjects: Vec<_> = data
            .iter()
            .map(|&(z, e)| Subject::new(z as f64, e, ()).unwrap())
            .collect();
        let max_z = data.iter().map(|d| d.0).max().unwrap();
        let cohort = Cohort::new(subjects, 1.0).unwrap();
        for t in 1..=max_z {
            let km = kaplan_meier(&cohort, t as f64).unwrap();
            let (s, var, degenerate) = oracle_km(&data, t);
            let gw = greenwood_variance(&km.path, t as f64);
            let ok = (km.survival - s).abs() <= 1e-12
                && (km.incidence - (1.0 - s)).abs() <= 1e-12
                && (km.greenwood.variance - var).abs() <= 1e-12
                && km.greenwood.degenerate == degenerate
                && gw == km.greenwood;
            c.check(ok, || {
                format!("{data:?} at t={t}: got S={} var={:?}, oracle S={s} var={var} degenerate={degenerate}", km.survival, km.greenwood)
            });
        }
    });
    c.check(cohorts == 125_969, || {
        format!("enumerated {cohorts} cohorts")
    });
    c
}

fn unit(rng: &mut impl RngCore) -> f64 {
    1.0 - (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn random_cohort(index: u64) -> (Cohort, f64, bool) {
    let mut rng = replicate_rng(0xACCE_7000 + SEED, index);
    let n = 1_000 + (rng.next_u64() % 3_001) as usize;
    let t0 = 2.0 + 18.0 * unit(&mut rng);
    let lambda = t0 * (2.0 + 18.0 * unit(&mut rng));
    let censored = !index.is_multiple_of(4);
    let omega = t0 * (1.0 + 20.0 * unit(&mut rng));
    let mut subjects = Vec::with_capacity(n);
    for _ in 0..n {
        let y = lambda * unit(&mut rng);
        let c = if censored {
            omega * unit(&mut rng)
        } else {
            f64::INFINITY
        };
        subjects.push(Subject::new(y.min(c), y <= c, ()).unwrap());
    }
    (Cohort::new(subjects, t0).unwrap(), lambda, censored)
}

fn properties(grid: &[SimulationSummary]) -> Checks {
    let mut c = Checks::default();
    for i in 0..1_000 {
        let (cohort, lambda, censored) = random_cohort(i);
        let rep = match evaluate(&cohort, &UniformModel::new(lambda).unwrap()) {
            Ok(r) => r,
            Err(e) => {
                c.check(false, || format!("cohort {i}: {e}"));
                continue;
            }
        };
        if !censored {
            for m in [&rep.m2, &rep.m3] {
                c.check(
                    (m.point - rep.m0.point).abs() <= 1e-12 * rep.m0.point,
                    || {
                        format!(
                            "cohort {i} uncensored: {} = {} but M0 = {}",
                            m.method, m.point, rep.m0.point
                        )
                    },
                );
            }
        }
        c.check(rep.m1.point <= rep.m2.point && rep.c1 >= 1.0, || {
            format!("cohort {i}: M1 {} > M2 {}", rep.m1.point, rep.m2.point)
        });
        c.check(rep.f_ks >= rep.km_incidence - 0.01, || {
            format!(
                "cohort {i} (n={}): F_ks {} < K {} - 0.01",
                rep.n, rep.f_ks, rep.km_incidence
            )
        });
    }

    for l in 0..3 {
        for r in 0..4 {
            let s = cell(grid, l, r);
            let (w2, w3) = (
                s.method(Method::M2).mean_width,
                s.method(Method::M3).mean_width,
            );
            c.check(w3 <= w2, || {
                format!("{}: M3 width {w3:.4} > M2 width {w2:.4}", label(l, r))
            });
            if r > 0 {
                let mean = |m| s.method(m).mean;
                c.check(
                    mean(Method::M0) < mean(Method::M2) && mean(Method::M1) < mean(Method::M2),
                    || format!("{}: M0/M1 not below M2", label(l, r)),
                );
            }
            let truth = s.design.t0 / s.design.lambda;
            c.check(
                (s.true_case_rate - truth).abs() <= 3.0 * s.true_case_rate_se,
                || {
                    format!(
                        "{}: true case rate {} not within 3 s.e. of {truth}",
                        label(l, r),
                        s.true_case_rate
                    )
                },
            );
        }
    }

    let picks = [paper_grid(SEED)[1], paper_grid(SEED)[11]];
    for threads in [1, 3] {
        let again = runner::with_threads(threads, || runner::run_designs(&picks)).unwrap();
        for (s, d) in again.iter().zip([1, 11]) {
            c.check(format!("{s:?}") == format!("{:?}", grid[d]), || {
                format!("design {d} differs with {threads} thread(s)")
            });
        }
        c.check(
            simulation_csv(&again) == simulation_csv(&[grid[1].clone(), grid[11].clone()]),
            || format!("CSV output differs with {threads} thread(s)"),
        );
    }
    c
}

/// Log incidence at `age`, written out term by term.
fn oracle_log_incidence(cov: &RcmCovariates, coef: &RcmCoefficients, age: f64) -> f64 {
    let menopausal = cov.menopausal || cov.age_menopause.is_some_and(|am| age >= am);
    let a_star = match (menopausal, cov.age_menopause) {
        (true, Some(am)) => am.min(age),
        _ => age,
    };
    let m = if menopausal {
        age - cov.age_menopause.unwrap()
    } else {
        0.0
    };
    let b: f64 = cov
        .birth_ages
        .iter()
        .filter(|&&a| a <= a_star)
        .map(|&a| a_star - a)
        .sum();
    let first = cov
        .birth_ages
        .first()
        .map_or(0.0, |&a1| coef.beta3 * (a1 - cov.age_menarche));
    coef.alpha
        + coef.beta0 * cov.age_menarche
        + coef.beta1 * (a_star - cov.age_menarche)
        + coef.beta2 * m
        + first
        + coef.beta4 * b
        + coef.beta5 * b * m
}

fn oracle_risk(cov: &RcmCovariates, coef: &RcmCoefficients, t: f64) -> f64 {
    let mut cumulative = 0.0;
    let mut year = 0;
    while (year as f64) < t {
        let share = (t - year as f64).min(1.0);
        cumulative += share * oracle_log_incidence(cov, coef, cov.age + year as f64).exp();
        year += 1;
    }
    1.0 - (-cumulative).exp()
}

fn random_covariates(rng: &mut impl RngCore) -> RcmCovariates {
    let age_menarche = 10.0 + 6.0 * unit(rng);
    let age = 30.0 + 45.0 * unit(rng);
    let age_menopause = (unit(rng) < 0.7).then(|| 42.0 + 16.0 * unit(rng));
    let menopausal = age_menopause.is_some_and(|am| age >= am);
    let parity = (rng.next_u64() % 5) as usize;
    let mut birth_ages = Vec::new();
    let mut a = age_menarche + 4.0;
    for _ in 0..parity {
        a += 1.0 + 5.0 * unit(rng);
        if a > age {
            break;
        }
        birth_ages.push(a);
    }
    RcmCovariates {
        age,
        age_menarche,
        menopausal,
        age_menopause,
        birth_ages,
    }
}

fn rcm() -> Checks {
    let mut c = Checks::default();
    let coef = RcmCoefficients::default();
    let published = [-9.687, 0.048, 0.081, 0.050, 0.013, -0.0036, -0.00020];
    for (key, want) in RcmCoefficients::KEYS.iter().zip(published) {
        c.check(coef.get(key) == Some(want), || {
            format!("{key} = {:?}, expected {want}", coef.get(key))
        });
    }
    let listed: String = RcmCoefficients::KEYS
        .iter()
        .zip(published)
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    c.check(parse_coefficients(&listed).ok() == Some(coef), || {
        "coefficient file does not load exactly".into()
    });

    let hand = RcmCovariates {
        age: 50.0,
        age_menarche: 13.0,
        menopausal: false,
        age_menopause: None,
        birth_ages: Vec::new(),
    };
    let li = rcm_log_incidence(&hand, &coef).unwrap();
    c.check((li - -6.066).abs() <= 1e-9, || {
        format!("hand case log incidence {li}")
    });

    let mut rng = replicate_rng(0x7CA1 + SEED, 0);
    for i in 0..100 {
        let cov = random_covariates(&mut rng);
        let mut previous = 0.0;
        for step in 0..=40 {
            let t = step as f64 * 0.5;
            let got = t_year_risk(&cov, &coef, t).unwrap();
            let want = oracle_risk(&cov, &coef, t);
            c.check((got - want).abs() <= 1e-12, || {
                format!("covariates {i} t={t}: {got} vs oracle {want}")
            });
            c.check(got >= previous, || {
                format!("covariates {i}: risk decreases at t={t}")
            });
            previous = got;
        }
    }
    c
}

fn main() -> ExitCode {
    let started = Instant::now();
    let grid = runner::run_designs(&paper_grid(SEED)).expect("paper grid runs");
    println!(
        "built-in grid, seed {SEED}: {:.1}s",
        started.elapsed().as_secs_f64()
    );

    let mut all = true;
    let t = Instant::now();
    all &= report(
        1,
        "estimator means/widths/coverage",
        t,
        estimator_summaries(&grid),
    );
    let t = Instant::now();
    all &= report(2, "correction factors", t, corrections(&grid));
    let t = Instant::now();
    all &= report(3, "worked example", t, worked_example());
    let t = Instant::now();
    all &= report(4, "observed cases", t, observed_cases(&grid));
    let t = Instant::now();
    all &= report(5, "KM oracle", t, km_oracle());
    let t = Instant::now();
    all &= report(6, "property suite", t, properties(&grid));
    let t = Instant::now();
    all &= report(7, "RCM checks", t, rcm());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
