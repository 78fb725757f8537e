//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use pcfb_core::channel::{sample_channel, sample_postcoder, svd_canonical};
use pcfb_core::givens::{decompose_postcoder, reconstruct_postcoder};
use pcfb_core::linalg::fro_dist;
use pcfb_core::montecarlo::{run_ber, run_experiment, run_rate_sweep, run_single_vs_full, ExperimentKind, ExperimentSpec, ResultTable};
use pcfb_core::quantizer::{
    empirical_postcoder_mse, lloyd_run, mse_bound_theorem1, mse_exact_2x2, theta_mse_highrate, BitAllocation,
    CodebookCache, LLOYD_MAX_ITERS, LLOYD_TOL,
};
use pcfb_core::rates::zf_rate;
use pcfb_core::spectral::{capacity_full_csi, db_to_linear, eigen_density, eigen_expectation, waterfill_threshold};
use pcfb_core::stats::{ks_statistic, run_trials};
use pcfb_core::{Error, Streams};

const TRIALS: usize = 100_000;

type Outcome = (bool, String);

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for r in 2..=5 {
        let s = Streams::new(1000 + r as u64);
        let errs = run_trials(1000, &s, |rng| {
            let u = sample_postcoder(r, rng).unwrap();
            fro_dist(&u, &reconstruct_postcoder(&decompose_postcoder(&u).unwrap()).unwrap())
        });
        worst = errs.into_iter().fold(worst, f64::max);
    }
    let secs = start.elapsed().as_secs_f64();
    (worst < 1e-10 && secs < 10.0, format!("max round-trip error {worst:.3e}, {secs:.2} s"))
}

fn criterion_2() -> Outcome {
    let r = 3;
    let angles = run_trials(TRIALS, &Streams::new(2), |rng| decompose_postcoder(&sample_postcoder(r, rng).unwrap()).unwrap());
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for k in 0..r - 1 {
        for l in 1..r - k {
            let xs: Vec<f64> = angles.iter().map(|a| a.rotations[k][l - 1]).collect();
            let d = ks_statistic(&xs, |t| t.clamp(0.0, FRAC_PI_2).sin().powi(2 * l as i32));
            parts.push(format!("theta[{},{l}]={d:.4}", k + 1));
            worst = worst.max(d);
        }
        for i in 0..r - 1 - k {
            let xs: Vec<f64> = angles.iter().map(|a| a.phases[k][i]).collect();
            let d = ks_statistic(&xs, |p| ((p + PI) / (2.0 * PI)).clamp(0.0, 1.0));
            parts.push(format!("phi[{},{}]={d:.4}", k + 1, i + 1));
            worst = worst.max(d);
        }
    }
    (worst < 0.01, format!("KS {}", parts.join(" ")))
}

fn criterion_3(cache: &CodebookCache) -> Outcome {
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for r in [2usize, 3] {
        for b in 1..=6 {
            let books = cache.books(r, &BitAllocation::uniform(r, b)).unwrap();
            let eps: Vec<f64> = books.theta_books.iter().map(|x| x.trained_mse.unwrap()).collect();
            let bound = mse_bound_theorem1(r, b, &eps).unwrap();
            let est = empirical_postcoder_mse(&books, TRIALS, &Streams::new(300 + 10 * r as u64 + b as u64)).unwrap();
            let margin = (bound + 3.0 * est.std_error - est.mean) / bound;
            worst_margin = worst_margin.min(margin);
            if est.mean > bound + 3.0 * est.std_error {
                ok = false;
            }
        }
    }
    (ok, format!("smallest relative slack (bound + 3se - mse)/bound = {worst_margin:.4}"))
}

fn criterion_4(cache: &CodebookCache) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for b in 1..=6 {
        let books = cache.books(2, &BitAllocation::uniform(2, b)).unwrap();
        let exact = mse_exact_2x2(&books.phase_book, &books.theta_books[0]).unwrap();
        let est = empirical_postcoder_mse(&books, TRIALS, &Streams::new(400 + b as u64)).unwrap();
        let diff = (est.mean - exact).abs();
        let pass = diff <= 0.005 * exact || diff <= 3.0 * est.std_error;
        ok &= pass;
        parts.push(format!("b={b}: rel {:.4}% ({:.2} se)", 100.0 * diff / exact, diff / est.std_error));
    }
    (ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let (mut rmin, mut rmax, mut worst_hr) = (f64::INFINITY, 0.0f64, 0.0f64);
    for l in 1..=3 {
        let mses: Vec<f64> = (3..=12)
            .map(|b| lloyd_run(l, b, LLOYD_TOL, LLOYD_MAX_ITERS).unwrap().codebook.trained_mse.unwrap())
            .collect();
        for w in mses.windows(2) {
            let ratio = w[1] / w[0];
            rmin = rmin.min(ratio);
            rmax = rmax.max(ratio);
            ok &= (0.15..=0.35).contains(&ratio);
        }
        for (i, b) in (3..=12).enumerate() {
            if b >= 4 {
                let rel = (theta_mse_highrate(l, b).unwrap() / mses[i] - 1.0).abs();
                worst_hr = worst_hr.max(rel);
                ok &= rel <= 0.2;
            }
        }
    }
    (ok, format!("ratios in [{rmin:.4}, {rmax:.4}], worst high-rate deviation {:.2}%", 100.0 * worst_hr))
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, t) in [(1usize, 1usize), (2, 2), (2, 4), (3, 6)] {
        let mass = eigen_expectation(r, t, |_| 1.0).unwrap();
        let mean = eigen_expectation(r, t, |e| e).unwrap();
        let pass = (mass - 1.0).abs() <= 1e-6 && (mean / t as f64 - 1.0).abs() <= 0.005;
        ok &= pass;
        parts.push(format!("({r},{t}) mass-1={:.1e} mean={mean:.5}", mass - 1.0));
    }
    let worst = (0..=400)
        .map(|i| {
            let e = i as f64 * 0.1;
            (eigen_density(1, 1, e).unwrap() - (-e).exp()).abs()
        })
        .fold(0.0, f64::max);
    ok &= worst <= 1e-12;
    parts.push(format!("(1,1) max |g - e^-e| = {worst:.1e}"));
    (ok, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, t) in [(2usize, 4usize), (3, 6)] {
        for snr in [0.0, 10.0, 20.0] {
            let p_total = db_to_linear(snr);
            let policy = waterfill_threshold(r, t, p_total).unwrap();
            let resid = (policy.constraint_value() - p_total).abs();
            let streams = Streams::new(700 + 10 * t as u64 + snr as u64);
            let eig = |rng: &mut pcfb_core::streams::TrialRng| svd_canonical(&sample_channel(r, t, rng).unwrap()).unwrap().eigenvalues();
            let rows = run_trials(TRIALS, &streams, eig);
            let power = rows.iter().map(|e| e.iter().map(|&x| policy.mode_power(x)).sum::<f64>()).sum::<f64>() / TRIALS as f64;
            let cap_mc = rows.iter().map(|e| policy.block_rate(e)).sum::<f64>() / TRIALS as f64;
            let cap = capacity_full_csi(&policy);
            let (dp, dc) = ((power / p_total - 1.0).abs(), (cap_mc / cap - 1.0).abs());
            ok &= resid < 1e-6 && dp <= 0.01 && dc <= 0.01;
            parts.push(format!("({t}x{r},{snr}dB) resid {resid:.1e} power {:.2}% cap {:.2}%", 100.0 * dp, 100.0 * dc));
        }
    }
    (ok, parts.join(", "))
}

fn col<'a>(t: &'a ResultTable, name: &str) -> &'a [f64] {
    t.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

fn criterion_8(tables: &[(&str, &ResultTable)]) -> Outcome {
    let mut ok = true;
    let mut points = 0;
    let mut parts = Vec::new();
    for (name, t) in tables {
        let tight = col(t, "tight_10db");
        let tse = col(t, "tight_10db_se");
        let simple = col(t, "simple_10db");
        let sse = col(t, "simple_10db_se");
        let cap = col(t, "capacity_10db");
        let mut chain = true;
        let mut mono = true;
        for i in 0..t.rows() {
            points += 1;
            let slack = 3.0 * (tse[i] * tse[i] + sse[i] * sse[i]).sqrt();
            chain &= simple[i] <= tight[i] + slack && tight[i] <= cap[i] + 3.0 * tse[i];
            if i > 0 {
                mono &= tight[i] >= tight[i - 1] && simple[i] >= simple[i - 1];
            }
        }
        ok &= chain && mono;
        parts.push(format!("{name}: chain {} monotone {}", chain, mono));
    }
    (ok, format!("{points} points; {}", parts.join(", ")))
}

fn value_at(t: &ResultTable, name: &str, budget: f64) -> f64 {
    let i = t.axis_values.iter().position(|&b| b == budget).expect("budget in sweep");
    col(t, name)[i]
}

fn criterion_9(t42: &ResultTable) -> Outcome {
    let cap = value_at(t42, "capacity_10db", 10.0);
    let at10 = value_at(t42, "tight_10db", 10.0) / cap;
    let worst_hi = t42
        .axis_values
        .iter()
        .zip(col(t42, "tight_10db"))
        .filter(|(b, _)| **b >= 14.0)
        .map(|(_, v)| v / cap)
        .fold(f64::INFINITY, f64::min);
    (
        at10 >= 0.9 && worst_hi >= 0.97,
        format!("10 bits: {:.2}% of C; >=14 bits: min {:.2}% of C (C = {cap:.4})", 100.0 * at10, 100.0 * worst_hi),
    )
}

fn criterion_10(t22: &ResultTable) -> Outcome {
    let tight = value_at(t22, "tight_10db", 3.0);
    let si = value_at(t22, "si_10db", 3.0);
    (tight > si, format!("tight bound at 3 bits {tight:.4} vs R_si {si:.4}"))
}

fn criterion_11(t33: &ResultTable) -> Outcome {
    let single = col(t33, "single_10db");
    let full = col(t33, "full_10db");
    let b = &t33.axis_values;
    let at4 = value_at(t33, "single_10db", 4.0) > value_at(t33, "full_10db", 4.0);
    let at20 = value_at(t33, "full_10db", 20.0) > value_at(t33, "single_10db", 20.0);
    let crossover = (0..b.len()).find(|&i| full[i] >= single[i]).map(|i| b[i]);
    let in_range = crossover.is_some_and(|c| (6.0..=12.0).contains(&c));
    (
        at4 && at20 && in_range,
        format!(
            "single>full at 4: {at4}; full>single at 20: {at20}; crossover {:?} (single {:.3} / full {:.3} at 12 bits)",
            crossover,
            value_at(t33, "single_10db", 12.0),
            value_at(t33, "full_10db", 12.0)
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let p = db_to_linear(10.0);
    let mut rates = Vec::new();
    for t in [4usize, 6, 12] {
        let zf = zf_rate(2, t, p, TRIALS, &Streams::new(1200)).unwrap();
        let cap = capacity_full_csi(&waterfill_threshold(2, t, p).unwrap());
        if t <= 6 {
            ok &= zf.mean < cap;
        }
        parts.push(format!("{t}x2 ZF {:.4}±{:.4} C {cap:.4}", zf.mean, zf.std_error));
        rates.push(zf.mean);
    }
    ok &= rates.windows(2).all(|w| w[1] > w[0]);
    let square = matches!(zf_rate(2, 2, p, 10, &Streams::new(1)), Err(Error::UnboundedMoment(_)));
    ok &= square;
    parts.push(format!("2x2 unbounded-moment error: {square}"));
    (ok, parts.join(", "))
}

fn criterion_13(ber: &ResultTable) -> Outcome {
    let q = col(ber, "ber_10db");
    let qe = col(ber, "errors_10db");
    let p = col(ber, "perfect_10db")[0];
    let pe = col(ber, "perfect_errors_10db")[0];
    let mut ok = pe >= 100.0 && qe.iter().all(|&e| e >= 100.0);
    let mut parts = vec![format!("perfect {p:.3e} ({pe} errors)")];
    for (i, &b) in ber.axis_values.iter().enumerate() {
        let ratio = q[i] / p;
        if b == 12.0 {
            ok &= ratio <= 2.0;
        }
        if b <= 6.0 {
            ok &= ratio >= 3.0;
        }
        parts.push(format!("{b}b x{ratio:.2} ({} errors)", qe[i]));
    }
    (ok, parts.join(", "))
}

fn criterion_14() -> Outcome {
    let mut specs = Vec::new();
    let mut s = ExperimentSpec::new(ExperimentKind::MseSweep, 3, 3);
    s.trials = 2000;
    s.seed = 77;
    s.bit_budgets = vec![0, 3, 6, 9];
    specs.push(s);
    let mut s = ExperimentSpec::new(ExperimentKind::Ber, 2, 4);
    s.trials = 2000;
    s.seed = 78;
    s.bit_budgets = vec![4, 8];
    specs.push(s);
    let mut s = ExperimentSpec::new(ExperimentKind::RateSweep, 2, 4);
    s.trials = 2000;
    s.seed = 79;
    s.snr_db = vec![5.0, 15.0];
    s.bit_budgets = vec![2, 6];
    specs.push(s);
    let mut ok = true;
    for spec in &specs {
        let outputs: Vec<String> = [1usize, 3, 1]
            .iter()
            .map(|&n| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
                pool.install(|| run_experiment(spec).unwrap().to_csv())
            })
            .collect();
        ok &= outputs.windows(2).all(|w| w[0] == w[1]);
    }
    (ok, format!("{} experiments, runs at 1, 3, 1 threads byte-identical: {ok}", specs.len()))
}

fn sweep(kind: ExperimentKind, r: usize, t: usize, budgets: Vec<u32>, seed: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(kind, r, t);
    s.bit_budgets = budgets;
    s.trials = TRIALS;
    s.seed = seed;
    s
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {n:>2}: {} ({secs:.1} s) {}", if out.0 { "PASS" } else { "FAIL" }, out.1);
        results.push((n, out, secs));
    };
    let cache = CodebookCache::new();
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut || criterion_3(&cache));
    run(4, &mut || criterion_4(&cache));
    run(5, &mut criterion_5);
    run(6, &mut criterion_6);
    run(7, &mut criterion_7);

    let t42 = run_rate_sweep(&sweep(ExperimentKind::RateSweep, 2, 4, (0..=16).collect(), 42)).unwrap();
    let t22 = run_rate_sweep(&sweep(ExperimentKind::RateSweep, 2, 2, (0..=8).collect(), 22)).unwrap();
    let t33 = run_single_vs_full(&sweep(ExperimentKind::SingleVsFull, 3, 3, (2..=20).collect(), 33)).unwrap();
    let t33_rates = run_rate_sweep(&sweep(ExperimentKind::RateSweep, 3, 3, (0..=20).step_by(4).collect(), 34)).unwrap();
    run(8, &mut || criterion_8(&[("4x2", &t42), ("2x2", &t22), ("3x3", &t33_rates)]));
    run(9, &mut || criterion_9(&t42));
    run(10, &mut || criterion_10(&t22));
    run(11, &mut || criterion_11(&t33));
    run(12, &mut criterion_12);
    let ber = run_ber(&sweep(ExperimentKind::Ber, 2, 4, vec![2, 4, 6, 8, 10, 12, 14], 13)).unwrap();
    run(13, &mut || criterion_13(&ber));
    run(14, &mut criterion_14);

    let failed: Vec<usize> = results.iter().filter(|r| !r.1 .0).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria pass in {:.1} s{}",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
