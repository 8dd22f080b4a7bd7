//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use ncwss::harness::{render_csv, run_experiment, ExperimentConfig, RsMode};
use ncwss::policy::{BeliefState, PolicyMode};
use ncwss::reconstruction::{direct_solve, oracle_sense, signal_sense, RecoveryConfig};
use ncwss::rng::{seeded, stream, Stream};
use ncwss::selection::{
    exploration_threshold, mu_correct, optimize_size, poisson_binomial_pmf, rank_bands,
};
use ncwss::sns::{draw_sensing_matrix, measure, Snr};
use ncwss::spectrum::{
    occupancy_trajectory, synthesize_band_spectra, BandStatistics, OccupancyState, CASE1_VACANCY,
    CASE2_VACANCY,
};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

/// Exhaustive pmf of the number of successes.
fn enumerate_pmf(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut pmf = vec![0.0; m + 1];
    for mask in 0u32..(1 << m) {
        let prob: f64 = (0..m)
            .map(|i| if mask >> i & 1 == 1 { p[i] } else { 1.0 - p[i] })
            .product();
        pmf[mask.count_ones() as usize] += prob;
    }
    pmf
}

/// Objective of an arbitrary band set, from the exhaustive pmf.
fn subset_objective(vacancy: &[f64], k: usize) -> f64 {
    let m = vacancy.len();
    let gamma = if m <= k { m } else { k / 2 };
    let busy: Vec<f64> = vacancy.iter().map(|v| 1.0 - v).collect();
    let success: f64 = enumerate_pmf(&busy)[..=gamma].iter().sum();
    success * vacancy.iter().sum::<f64>()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let c1 = optimize_size(&CASE1_VACANCY, 4).map(|d| d.size);
    let c2 = optimize_size(&CASE2_VACANCY, 4).map(|d| d.size);
    let elapsed = start.elapsed();
    let pass = matches!((&c1, &c2), (Ok(7), Ok(5))) && within(elapsed, Duration::from_millis(1));
    verdict(pass, format!("case1 {c1:?}, case2 {c2:?}, {elapsed:?}"))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded(2002);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=12);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let dp = poisson_binomial_pmf(&p, m);
        let brute = enumerate_pmf(&p);
        for (a, b) in dp.iter().zip(&brute) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && within(elapsed, Duration::from_secs(10)),
        format!("max deviation {worst:.2e}, {elapsed:?}"),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded(3003);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(1..=n);
        let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut best_value = f64::NEG_INFINITY;
        let mut best_set = Vec::new();
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let vac: Vec<f64> = set.iter().map(|&i| p[i]).collect();
            let v = subset_objective(&vac, k);
            if v > best_value + 1e-12 {
                best_value = v;
                best_set = set;
            }
        }
        let decision = optimize_size(&p, k).expect("valid instance");
        let mut prefix: Vec<usize> = rank_bands(&p)[..decision.size].to_vec();
        prefix.sort_unstable();
        if prefix != best_set || (decision.objective_value - best_value).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && within(elapsed, Duration::from_secs(30)),
        format!("{mismatches} mismatches in 200 instances, {elapsed:?}"),
    )
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

struct Case1Run {
    oldm_regret: f64,
    ldm_regret: f64,
}

fn criteria_4_5() -> (Verdict, Verdict, Case1Run) {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let s = run_experiment(&cfg).expect("case 1 experiment");
    let elapsed = start.elapsed();
    let oldm = s.throughput(PolicyMode::Oldm).unwrap();
    let imp = s.throughput(PolicyMode::Imp).unwrap();
    let late_oldm = mean(&oldm[8000..]);
    let late_imp = mean(&imp[8000..]);
    let gap = (late_imp - late_oldm).abs() / late_imp;
    let r = s.regret(PolicyMode::Oldm).unwrap();
    let early_slope = (r[2999] - r[0]) / 2999.0;
    let late_slope = (r[9999] - r[4999]) / 5000.0;
    let ratio = late_slope / early_slope;
    let c4 = verdict(
        gap <= 0.05 && ratio < 0.1 && within(elapsed, Duration::from_secs(120)),
        format!(
            "late throughput OLDM {late_oldm:.3} vs IMP {late_imp:.3} ({:.2}%), slope ratio {ratio:.3}, {elapsed:?}",
            100.0 * gap
        ),
    );
    let run = Case1Run {
        oldm_regret: s.final_regret(PolicyMode::Oldm).unwrap(),
        ldm_regret: s.final_regret(PolicyMode::Ldm).unwrap(),
    };
    let c5 = verdict(
        run.oldm_regret < run.ldm_regret,
        format!(
            "final regret OLDM {:.1} vs LDM {:.1}",
            run.oldm_regret, run.ldm_regret
        ),
    );
    (c4, c5, run)
}

fn criterion_6(base: &Case1Run) -> Verdict {
    let final_regrets = |field: &str, values: &[usize]| -> (Vec<f64>, Vec<f64>) {
        let mut oldm = Vec::new();
        let mut ldm = Vec::new();
        for &v in values {
            if v == 4 && field == "k_branches" || v == 8 && field == "n_bands" {
                oldm.push(base.oldm_regret);
                ldm.push(base.ldm_regret);
                continue;
            }
            let mut cfg = ExperimentConfig::default();
            cfg.set(field, &v.to_string()).unwrap();
            let s = run_experiment(&cfg).expect("sweep experiment");
            oldm.push(s.final_regret(PolicyMode::Oldm).unwrap());
            ldm.push(s.final_regret(PolicyMode::Ldm).unwrap());
        }
        (oldm, ldm)
    };
    let (k_oldm, k_ldm) = final_regrets("k_branches", &[3, 4, 5]);
    let (n_oldm, n_ldm) = final_regrets("n_bands", &[8, 12, 16]);
    let decreasing = k_oldm.windows(2).all(|w| w[1] <= w[0]);
    let increasing = n_oldm.windows(2).all(|w| w[1] >= w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.0}"))
            .collect::<Vec<_>>()
            .join("/")
    };
    verdict(
        decreasing && increasing,
        format!(
            "OLDM regret K=3/4/5 {}, N=8/12/16 {} (LDM: {}, {})",
            fmt(&k_oldm),
            fmt(&n_oldm),
            fmt(&k_ldm),
            fmt(&n_ldm)
        ),
    )
}

/// Fraction of replications whose estimates from `q` forced observations per
/// band are mu-correct.
fn mu_correct_rate(lambda: f64, q: usize, n: usize, k: usize, mu: f64, reps: u64) -> f64 {
    let stats = BandStatistics::from_stationary(&CASE1_VACANCY, lambda).unwrap();
    let truth = stats.stationary_vacancy();
    // exploration cadence: group g is sensed in slots 2g and 2g+1 of every
    // cycle, giving one transition pair per band per cycle
    let cycle = 2 * n.div_ceil(k);
    let mut correct = 0;
    for rep in 0..reps {
        let traj =
            occupancy_trajectory(&stats, q * cycle, &mut stream(7007, Stream::Occupancy, rep));
        let mut belief = BeliefState::new(n);
        for c in 0..q {
            for band in 0..n {
                let t = c * cycle + 2 * (band / k);
                belief.record_transition(band, traj[t].busy[band], traj[t + 1].busy[band]);
            }
        }
        if mu_correct(&belief.stationary_estimates(), &truth, mu) {
            correct += 1;
        }
    }
    correct as f64 / reps as f64
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let (n, k, mu, delta) = (8, 4, 0.1, 0.1);
    let q = exploration_threshold(n, k, mu, delta).unwrap().per_band as usize;
    let rate = mu_correct_rate(0.5, q, n, k, mu, 500);
    let memoryless = mu_correct_rate(1.0, q, n, k, mu, 500);
    let elapsed = start.elapsed();
    verdict(
        rate >= 1.0 - delta - 0.05 && within(elapsed, Duration::from_secs(120)),
        format!(
            "Q={q}, mu-correct rate {rate:.3} (memoryless chains {memoryless:.3}), {elapsed:?}"
        ),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let k = 4;
    let mut rng = seeded(8008);

    // noiseless direct solve for every |A_N| <= K
    let mut worst = 0.0f64;
    let a = draw_sensing_matrix(k, 8, &mut rng).unwrap();
    for m in 1..=k {
        for trial in 0..25 {
            let selected: Vec<usize> = rand::seq::index::sample(&mut rng, 8, m).into_vec();
            let state = OccupancyState {
                busy: vec![true; 8],
                slot_index: trial,
            };
            let spectra = synthesize_band_spectra(&state, 32, 1.0, &mut rng).unwrap();
            let truth = spectra.rows(&selected);
            let a_sub = a.select_submatrix(&selected).unwrap();
            let batch = measure(&a_sub, &truth, &selected, 0.0, &mut rng).unwrap();
            let x = direct_solve(&batch, &a_sub).unwrap();
            worst = worst.max((x - truth).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }

    // 20 dB agreement on six-band sets
    let cfg = ExperimentConfig {
        rs_mode: RsMode::Signal,
        snr_db: Snr::Db(20.0),
        ..ExperimentConfig::default()
    };
    let params = cfg.recovery_params();
    let stats = cfg.statistics().unwrap();
    let p0 = stats.stationary_vacancy();
    let selected: Vec<usize> = (2..8).collect();
    let prior: Vec<f64> = selected.iter().map(|&b| 1.0 - p0[b]).collect();
    let traj = occupancy_trajectory(&stats, 1000, &mut stream(8008, Stream::Occupancy, 0));
    let matrix = draw_sensing_matrix(k, 8, &mut stream(8008, Stream::Matrix, 0)).unwrap();
    let a_sub = matrix.select_submatrix(&selected).unwrap();
    let mut agree = 0;
    for (t, state) in traj.iter().enumerate() {
        let mut slot_rng = stream(8008, Stream::Slot, t as u64);
        let spectra =
            synthesize_band_spectra(state, cfg.bins_per_band, cfg.signal_power, &mut slot_rng)
                .unwrap();
        let batch = measure(
            &a_sub,
            &spectra.rows(&selected),
            &selected,
            params.noise_variance,
            &mut slot_rng,
        )
        .unwrap();
        let rc = RecoveryConfig::new(k, prior.clone(), &params).unwrap();
        let sensed = signal_sense(&batch, &a_sub, &rc).unwrap();
        let truth: Vec<bool> = selected.iter().map(|&b| state.busy[b]).collect();
        if sensed.failed == oracle_sense(&truth, k).failed {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    let rate = agree as f64 / traj.len() as f64;
    verdict(
        worst <= 1e-9 && rate >= 0.95 && within(elapsed, Duration::from_secs(120)),
        format!("direct-solve error {worst:.2e}, failure agreement {agree}/1000 ({rate:.3}), {elapsed:?}"),
    )
}

fn criterion_9() -> Verdict {
    let oracle = ExperimentConfig {
        horizon: 2000,
        replications: 8,
        seed: 99,
        ..ExperimentConfig::default()
    };
    let signal = ExperimentConfig {
        horizon: 200,
        replications: 3,
        rs_mode: RsMode::Signal,
        snr_db: Snr::Db(15.0),
        bins_per_band: 16,
        ..oracle.clone()
    };
    let mut identical = true;
    for cfg in [&oracle, &signal] {
        let a = render_csv(&run_experiment(cfg).unwrap()).unwrap();
        let b = render_csv(&run_experiment(cfg).unwrap()).unwrap();
        identical &= a == b;
    }
    verdict(
        identical,
        "repeated oracle and signal runs give byte-identical CSV",
    )
}

fn main() {
    let mut results: Vec<(u32, Verdict)> =
        vec![(1, criterion_1()), (2, criterion_2()), (3, criterion_3())];
    let (c4, c5, base) = criteria_4_5();
    results.push((4, c4));
    results.push((5, c5));
    results.push((6, criterion_6(&base)));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    let mut failed = 0;
    for (id, v) in &results {
        println!(
            "criterion {id}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
