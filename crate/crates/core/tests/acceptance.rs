//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use ldtensor::harness::verify::{self, grid, CheckResult, GridPoint};

type Criterion<'a> = (&'a str, Box<dyn Fn() -> CheckResult + 'a>);

fn main() -> ExitCode {
    let small = grid(&[2, 3, 4], &[2, 3], 3, &[1, 2]);
    let with_zero = grid(&[2, 3, 4], &[2, 3], 3, &[0, 1, 2]);
    let degrees: Vec<usize> = (2..=10).collect();
    let mc_point = GridPoint { n: 3, r: 2, k: 3, degree: 2 };

    let criteria: Vec<Criterion> = vec![
        ("left inverse M+M = I", Box::new(|| verify::check_left_inverse(&small))),
        ("corr^2 <= |w|^2 <= v-bound", Box::new(|| verify::check_sandwich(&small, 1e-9))),
        ("bad paths cancel", Box::new(|| verify::check_cancellation(5, 3, &[1, 2, 3, 4], 3))),
        ("v table laws", Box::new(|| verify::check_v_laws(5, 3, &[1, 2, 3, 4], 3))),
        (
            "hard-regime series <= n^-1/2",
            Box::new(|| verify::check_theorem_sweep(&[1e2, 1e4, 1e6], &[3, 5], &degrees, &[1.0, 0.5], 1e-12)),
        ),
        ("even-cover count bound", Box::new(|| verify::check_even_cover_count(5, 3, 2))),
        ("rank-one estimator is exact", Box::new(|| verify::check_rank_one_estimator(12, 100, 3))),
        ("Monte Carlo within 4 SE", Box::new(|| verify::check_mc_unbiased(12, 3, 100_000, 20, 4.0, 1))),
        ("P = M^T M and sampled moments", Box::new(|| verify::check_p_matrix(&small, mc_point, 10, 100_000, 4.0))),
        ("MMSE in [0,1], non-increasing in D", Box::new(|| verify::check_mmse_monotone(&with_zero))),
        ("expander certificates", Box::new(|| verify::check_expander(10, 3, 20, 100))),
    ];

    let mut failed = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!result.passed);
        println!(
            "{status} [{:>2}] {label} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
