//! Acceptance suite.
//!
//! One test per criterion; each prints a single `PASS`/`FAIL` line (visible
//! with `cargo test --test acceptance -- --nocapture`) and asserts the
//! criterion at its stated tolerance. The twelve (function, n) reference
//! cells are balanced once with stepsize 1e-5 and shared across criteria.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwlopt::balancer::{
    balance, balance_from, BalanceReport, BalanceSettings, Partition, PwlApproximation,
};
use pwlopt::bounds::{error_bounds, rate_check, BoundsReport};
use pwlopt::functions::{builtin, Interval, TargetFunction};
use pwlopt::relu::{build_fixed_depth, build_fixed_width, verify_equivalence};
use pwlopt::segment::{fit_segment, segment_error_oracle, SegmentFit};

const STEPSIZE: f64 = 1e-5;
const FIT_TOL: f64 = 1e-12;

/// Reference experimental results: (function, n, mean error, upper, lower).
const REFERENCE: [(&str, usize, f64, f64, f64); 12] = [
    ("exp", 2, 0.02635, 0.04247, 0.01563),
    ("exp", 3, 0.01170, 0.01886, 0.00694),
    ("exp", 5, 0.00421, 0.00680, 0.00250),
    ("exp", 10, 0.00105, 0.00171, 0.00063),
    ("square", 2, 0.125, 0.125, 0.125),
    ("square", 3, 0.05556, 0.05556, 0.05556),
    ("square", 5, 0.02000, 0.02000, 0.02000),
    ("square", 10, 0.00500, 0.00500, 0.00500),
    ("cube", 2, 0.04486, 0.09375, 0.0),
    ("cube", 3, 0.01946, 0.04167, 0.0),
    ("cube", 5, 0.00687, 0.01500, 0.0),
    ("cube", 10, 0.00169, 0.00375, 0.0),
];

fn settings() -> BalanceSettings {
    BalanceSettings {
        stepsize: STEPSIZE,
        ..BalanceSettings::default()
    }
}

struct Cell {
    name: &'static str,
    n: usize,
    expected_mean: f64,
    expected_upper: f64,
    expected_lower: f64,
    pwl: PwlApproximation,
    report: BalanceReport,
    bounds: BoundsReport,
}

static CELLS: LazyLock<Vec<Cell>> = LazyLock::new(|| {
    std::thread::scope(|scope| {
        let handles: Vec<_> = REFERENCE
            .iter()
            .map(|&(name, n, mean, upper, lower)| {
                scope.spawn(move || {
                    let f = builtin(name).unwrap();
                    let (pwl, report) = balance(&f, n, &settings()).unwrap();
                    let bounds = error_bounds(&f, n).unwrap();
                    Cell {
                        name,
                        n,
                        expected_mean: mean,
                        expected_upper: upper,
                        expected_lower: lower,
                        pwl,
                        report,
                        bounds,
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
});

fn target(name: &str) -> TargetFunction {
    builtin(name).unwrap()
}

fn max_abs_d1(name: &str) -> f64 {
    let f = target(name);
    f.domain()
        .grid(1024)
        .map(|x| f.d1(x).abs())
        .fold(0.0, f64::max)
}

/// Rounds to 5 significant figures.
fn sig5(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(4 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn report(criterion: &str, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance {criterion}: {verdict}");
    assert!(failures.is_empty(), "{criterion}:\n{}", failures.join("\n"));
}

fn random_subinterval(rng: &mut ChaCha8Rng, domain: Interval) -> Interval {
    let min_width = domain.width() * 0.01;
    loop {
        let a = rng.random_range(domain.lo()..domain.hi());
        let b = rng.random_range(domain.lo()..domain.hi());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if hi - lo >= min_width {
            return Interval::new(lo, hi).unwrap();
        }
    }
}

#[test]
fn criterion_01_mean_error_reproduction() {
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        let dev = (cell.report.mean_error - cell.expected_mean).abs();
        if dev > 1e-4 {
            failures.push(format!(
                "{} n={}: mean {} deviates from {} by {dev:.2e}",
                cell.name, cell.n, cell.report.mean_error, cell.expected_mean
            ));
        }
    }
    report("01 mean-error reproduction (12 cells, +/-1e-4)", &failures);
}

#[test]
fn criterion_02_bounds_reproduction() {
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        let b = &cell.bounds;
        if (b.upper - cell.expected_upper).abs() > 1e-4 {
            failures.push(format!(
                "{} n={}: upper {} vs {}",
                cell.name, cell.n, b.upper, cell.expected_upper
            ));
        }
        if (b.lower - cell.expected_lower).abs() > 1e-4 {
            failures.push(format!(
                "{} n={}: lower {} vs {}",
                cell.name, cell.n, b.lower, cell.expected_lower
            ));
        }
        // The sweep quantizes breakpoints to the stepsize grid, so the
        // measured mean can sit a stepsize^2-scale epsilon above the exact
        // optimum; bounds that coincide with the optimum (constant f'')
        // need that much slack for the sandwich to be checkable.
        let quant = STEPSIZE * STEPSIZE * b.f2_max;
        let mean = cell.report.mean_error;
        if !(b.lower - quant <= mean && mean <= b.upper + quant) {
            failures.push(format!(
                "{} n={}: sandwich violated: {} <= {} <= {}",
                cell.name, cell.n, b.lower, mean, b.upper
            ));
        }
        if cell.name == "square" {
            // Constant curvature: bounds and achieved error coincide to five
            // significant figures.
            let (l, m, u) = (sig5(b.lower), sig5(mean), sig5(b.upper));
            if l != m || m != u {
                failures.push(format!(
                    "square n={}: expected 5-figure equality, got {l} / {m} / {u}",
                    cell.n
                ));
            }
        }
    }
    report("02 bounds reproduction and sandwich", &failures);
}

#[test]
fn criterion_03_convergence_gap() {
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        let gap = *cell.report.per_round_gap.last().unwrap();
        if gap > 5e-6 {
            failures.push(format!("{} n={}: final gap {gap:.3e}", cell.name, cell.n));
        }
    }
    report("03 final max-min gap <= 5e-6", &failures);
}

#[test]
fn criterion_04_gap_diminishes_per_round() {
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        // Discrete steps can overshoot by one move per adjustment, so allow
        // jitter of 2 * stepsize * max |f'|.
        let jitter = 2.0 * STEPSIZE * max_abs_d1(cell.name);
        for (round, w) in cell.report.per_round_gap.windows(2).enumerate() {
            if w[1] > w[0] + jitter {
                failures.push(format!(
                    "{} n={}: gap rose {:.3e} -> {:.3e} at round {}",
                    cell.name,
                    cell.n,
                    w[0],
                    w[1],
                    round + 2
                ));
            }
        }
    }
    report(
        "04 per-round gap nonincreasing (up to step jitter)",
        &failures,
    );
}

#[test]
fn criterion_05_closed_form_vs_grid_oracle() {
    let mut failures = Vec::new();
    for name in ["exp", "square", "cube"] {
        let f = target(name);
        let mut rng = ChaCha8Rng::seed_from_u64(0x05);
        for trial in 0..100 {
            let iv = random_subinterval(&mut rng, f.domain());
            let fit = fit_segment(&f, iv, FIT_TOL).unwrap();
            let oracle = segment_error_oracle(&f, &fit, 100_000);
            let dev = (fit.error - oracle).abs();
            if dev > 1e-7 * fit.error.max(1.0) {
                failures.push(format!(
                    "{name} trial {trial} on [{}, {}]: closed form {} vs oracle {}",
                    iv.lo(),
                    iv.hi(),
                    fit.error,
                    oracle
                ));
            }
        }
    }
    report(
        "05 closed-form error vs 1e5-point oracle (300 intervals)",
        &failures,
    );
}

#[test]
fn criterion_06_equioscillation() {
    let mut failures = Vec::new();
    let mut check = |f: &TargetFunction, s: &SegmentFit, label: String| {
        let res = |x: f64| f.eval(x) - s.evaluate(x);
        let allow = 1e-9 * s.error.max(1.0);
        let (a, b) = (s.interval.lo(), s.interval.hi());
        if (res(a) - s.error).abs() > allow
            || (res(s.c) + s.error).abs() > allow
            || (res(b) - s.error).abs() > allow
        {
            failures.push(label);
        }
    };
    for cell in CELLS.iter() {
        let f = target(cell.name);
        for (i, s) in cell.pwl.segments().iter().enumerate() {
            check(&f, s, format!("{} n={} segment {i}", cell.name, cell.n));
        }
    }
    for name in ["exp", "square", "cube"] {
        let f = target(name);
        let mut rng = ChaCha8Rng::seed_from_u64(0x06);
        for trial in 0..100 {
            let iv = random_subinterval(&mut rng, f.domain());
            let s = fit_segment(&f, iv, FIT_TOL).unwrap();
            check(&f, &s, format!("{name} random trial {trial}"));
        }
    }
    report("06 equioscillation of every fitted segment", &failures);
}

#[test]
fn criterion_07_interval_monotonicity() {
    let mut failures = Vec::new();
    for name in ["exp", "square", "cube"] {
        let f = target(name);
        let domain = f.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(0x07);
        for trial in 0..50 {
            let outer = random_subinterval(&mut rng, domain);
            // Shrink one endpoint to nest a strictly smaller interval; even
            // trials move hi, odd trials move lo.
            let shrink = 0.5 * outer.width() * rng.random_range(0.2..0.8);
            let inner = if trial % 2 == 0 {
                Interval::new(outer.lo(), outer.hi() - shrink).unwrap()
            } else {
                Interval::new(outer.lo() + shrink, outer.hi()).unwrap()
            };
            let small = fit_segment(&f, inner, FIT_TOL).unwrap().error;
            let large = fit_segment(&f, outer, FIT_TOL).unwrap().error;
            if small >= large {
                failures.push(format!(
                    "{name} trial {trial}: error {small} on nested interval not below {large}"
                ));
            }
        }
    }
    report(
        "07 nested-interval error monotonicity (150 pairs)",
        &failures,
    );
}

#[test]
fn criterion_08_uniqueness_across_initializations() {
    let mut failures = Vec::new();
    for name in ["exp", "square", "cube"] {
        let f = target(name);
        for n in [2usize, 3, 5] {
            let uniform = CELLS
                .iter()
                .find(|c| c.name == name && c.n == n)
                .expect("cell exists");
            let start = Partition::random(f.domain(), n, 7).unwrap();
            let (random_pwl, random_report) = balance_from(&f, start, &settings()).unwrap();
            if !random_report.converged {
                failures.push(format!("{name} n={n}: random start did not converge"));
                continue;
            }
            let worst = uniform
                .pwl
                .breakpoints()
                .iter()
                .zip(random_pwl.breakpoints())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if worst > 10.0 * STEPSIZE {
                failures.push(format!(
                    "{name} n={n}: breakpoints differ by {worst:.3e} across initializations"
                ));
            }
        }
    }
    report(
        "08 uniqueness: uniform vs random init within 10 steps",
        &failures,
    );
}

#[test]
fn criterion_09_network_equivalence_and_shapes() {
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        let fd = build_fixed_depth(&cell.pwl).unwrap();
        let fw = build_fixed_width(&cell.pwl).unwrap();
        let rd = verify_equivalence(&fd, &cell.pwl, 10_000);
        let rw = verify_equivalence(&fw, &cell.pwl, 10_000);
        if rd > 1e-9 {
            failures.push(format!(
                "{} n={}: fixed-depth residual {rd:.2e}",
                cell.name, cell.n
            ));
        }
        if rw > 1e-9 {
            failures.push(format!(
                "{} n={}: fixed-width residual {rw:.2e}",
                cell.name, cell.n
            ));
        }
        if fd.hidden_neuron_count() != 3 * cell.n {
            failures.push(format!(
                "{} n={}: fixed-depth hidden count {}",
                cell.name,
                cell.n,
                fd.hidden_neuron_count()
            ));
        }
        if fw.max_hidden_width() > 5 || fw.hidden_neuron_count() > 20 * cell.n {
            failures.push(format!(
                "{} n={}: fixed-width shape {}x{} exceeds limits",
                cell.name,
                cell.n,
                fw.max_hidden_width(),
                fw.hidden_neuron_count()
            ));
        }
    }
    report(
        "09 network equivalence <= 1e-9 and neuron budgets",
        &failures,
    );
}

#[test]
fn criterion_10_quadratic_rate() {
    let mut failures = Vec::new();
    for name in ["exp", "square", "cube"] {
        let entries: Vec<(usize, f64)> = CELLS
            .iter()
            .filter(|c| c.name == name)
            .map(|c| (c.n, c.report.mean_error))
            .collect();
        let ratio = rate_check(&entries).unwrap();
        let bounds = &CELLS.iter().find(|c| c.name == name).unwrap().bounds;
        let cap = bounds.f2_max / bounds.f2_min * 1.01;
        if !(1.0 <= ratio && ratio <= cap) {
            failures.push(format!("{name}: ratio {ratio} outside [1, {cap}]"));
        }
        if name == "square" && ratio > 1.01 {
            failures.push(format!("square: ratio {ratio} should be about 1"));
        }
    }
    report("10 error*n^2 rate certificate", &failures);
}

#[test]
fn criterion_11_rounds_finite_under_cap() {
    // Round counts and runtimes are machine dependent and never compared to
    // published numbers; only boundedness is asserted.
    let mut failures = Vec::new();
    for cell in CELLS.iter() {
        if !cell.report.converged || cell.report.rounds >= settings().max_rounds {
            failures.push(format!(
                "{} n={}: rounds {} converged {}",
                cell.name, cell.n, cell.report.rounds, cell.report.converged
            ));
        }
        if cell.report.per_round_gap.iter().any(|g| !g.is_finite()) {
            failures.push(format!("{} n={}: non-finite gap entry", cell.name, cell.n));
        }
    }
    report("11 rounds finite and under the cap", &failures);
}
