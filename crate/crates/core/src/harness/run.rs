//! Grid runs for each mode and CSV emission.

use std::io::Write;

use num_traits::Signed;
use rayon::prelude::*;

use crate::bound::{r_threshold, theorem_bound};
use crate::coeffmap::BasisIndexing;
use crate::error::{Error, Result};
use crate::estimator::{build_h, choose_degree, estimate_vector, f2_f3_bounds, threshold_recover};
use crate::expander::{generate_certified, DEFAULT_C, DEFAULT_EPS};
use crate::harness::config::{parse_fraction_arg, ExperimentConfig, Mode};
use crate::harness::verify::{self, grid, CheckResult, GridPoint};
use crate::model::{sample_instance, ModelParams};
use crate::oracle::{corr_exact, mmse_exact, oracle_point, MomentData};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::Rational;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const GENERATION_ATTEMPTS: usize = 100;

/// Rows of one CSV file plus `#` notes for its header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

/// Results of a run; `checks` is only filled in verify mode.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub table: Table,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Shortest round-trip formatting, in exponent form for very large or small magnitudes;
/// `NaN` becomes an empty cell.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

fn int_axis(values: &[u64], what: &str) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| usize::try_from(v).map_err(|_| Error::Usage(format!("{what} = {v} too large"))))
        .collect()
}

fn lambda2_abs(lambda: &[Rational]) -> f64 {
    lambda.get(1).map_or(0.0, |x| x.abs().to_f64())
}

pub fn run(config: &ExperimentConfig, mode: Mode) -> Result<Report> {
    config.validate()?;
    match mode {
        Mode::Oracle => oracle_table(config).map(table_report),
        Mode::Bound => bound_table(config).map(table_report),
        Mode::Estimate => estimate_table(config).map(table_report),
        Mode::Sweep => sweep_table(config).map(table_report),
        Mode::Verify => Ok(verify_report(config)),
    }
}

fn table_report(table: Table) -> Report {
    Report {
        table,
        checks: Vec::new(),
    }
}

fn oracle_table(config: &ExperimentConfig) -> Result<Table> {
    let g = &config.grid;
    let mut points = Vec::new();
    for &k in &g.k {
        points.extend(grid(&int_axis(&g.n, "n")?, &int_axis(&g.r, "r")?, k, &g.degree));
    }
    let rows = points
        .par_iter()
        .map(|p| -> Result<Vec<String>> {
            let params = ModelParams::new(p.n, p.r, p.k, config.weights(p.r)?, 0)?;
            let (corr, mmse, w, v) = if p.degree <= p.r {
                let row = oracle_point(&params, p.degree, config.pruned)?;
                (row.corr_exact, row.mmse_exact, row.corr_w_bound, row.corr_v_bound)
            } else {
                // the left-inverse bounds need D <= r
                let basis = BasisIndexing::new(&params, p.degree, config.pruned)?;
                let corr = corr_exact(&MomentData::<Rational>::assemble(&params, &basis)?)?;
                (corr, mmse_exact(corr)?, f64::NAN, f64::NAN)
            };
            Ok(vec![
                p.n.to_string(),
                p.r.to_string(),
                p.k.to_string(),
                p.degree.to_string(),
                num(params.lambda_min().to_f64()),
                num(corr),
                num(mmse),
                num(w),
                num(v),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec!["n", "r", "k", "D", "lambda_min", "corr_exact", "mmse_exact", "corr_w_bound", "corr_v_bound"],
        rows,
        notes: Vec::new(),
    })
}

fn bound_table(config: &ExperimentConfig) -> Result<Table> {
    let g = &config.grid;
    let mut rows = Vec::new();
    for &n in &g.n {
        for &k in &g.k {
            for &degree in &g.degree {
                let ranks: Vec<Option<u64>> = if config.r_at_threshold {
                    vec![None]
                } else {
                    g.r.iter().copied().map(Some).collect()
                };
                for r in ranks {
                    let lambda_mins: Vec<f64> = if config.lambda_min.is_empty() {
                        match r {
                            Some(r) => vec![config.weights(r as usize)?.iter().map(|x| x.abs()).min().unwrap().to_f64()],
                            None => vec![1.0],
                        }
                    } else {
                        config
                            .lambda_min
                            .iter()
                            .map(|s| parse_fraction_arg(s).map(|x| x.to_f64()))
                            .collect::<Result<_>>()?
                    };
                    for lm in lambda_mins {
                        let n_f = n as f64;
                        let r_f = r.map_or_else(|| r_threshold(n_f, k, degree, lm), |r| r as f64);
                        let b = theorem_bound(n_f, k, degree, r_f, lm);
                        rows.push(vec![
                            n.to_string(),
                            num(r_f),
                            k.to_string(),
                            degree.to_string(),
                            num(lm),
                            b.assumption_holds.to_string(),
                            num(b.bound),
                            num(b.mmse_lower_bound()),
                        ]);
                    }
                }
            }
        }
    }
    Ok(Table {
        columns: vec!["n", "r", "k", "D", "lambda_min", "assumption_holds", "corr2_bound", "mmse_lower_bound"],
        rows,
        notes: Vec::new(),
    })
}

/// Empirical errors of the network estimator at one `(n, r, k, D)`.
struct EstimatePoint {
    n: usize,
    r: usize,
    k: usize,
    degree: usize,
    coord_mse: f64,
    vector_mse: f64,
    recovery_rate: f64,
    f2_bound: f64,
    f3_bound: f64,
    assumption: bool,
}

fn estimate_point(config: &ExperimentConfig, n: usize, r: usize, k: usize, degree: usize) -> Result<EstimatePoint> {
    if degree.is_multiple_of(2) || degree < 5 {
        return Err(Error::Usage(format!("estimator degree D = {degree} must be odd and at least 5")));
    }
    let lambda = config.weights(r)?;
    let graph_seed = derive_seed(config.seeds[0], 0x0067_7261_7068);
    let g = generate_certified(degree - 1, k, DEFAULT_EPS, DEFAULT_C, graph_seed, GENERATION_ATTEMPTS)?;
    let h = build_h(&g, k, graph_seed)?;
    let mut coord = 0.0;
    let mut vector = 0.0;
    let mut recovered = 0usize;
    let mut bounds = None;
    for &seed in &config.seeds {
        let params = ModelParams::new(n, r, k, lambda.clone(), seed)?;
        let inst = sample_instance(&params)?;
        let f = estimate_vector(&h, &inst, config.samples, derive_seed(seed, 1))?;
        let a1 = inst.component(0);
        coord += (f[0] - a1[0] as f64).powi(2);
        vector += f.iter().zip(&a1).map(|(x, &a)| (x - a as f64).powi(2)).sum::<f64>();
        recovered += usize::from(threshold_recover(&f) == a1);
        bounds.get_or_insert_with(|| f2_f3_bounds(&params, &h));
    }
    let m = config.seeds.len() as f64;
    let b = bounds.expect("at least one seed");
    Ok(EstimatePoint {
        n,
        r,
        k,
        degree,
        coord_mse: coord / m,
        vector_mse: vector / m,
        recovery_rate: recovered as f64 / m,
        f2_bound: b.f2_bound,
        f3_bound: b.f3_bound,
        assumption: b.assumption_easy_holds(),
    })
}

fn estimate_degree(config: &ExperimentConfig, n: usize, r: usize, k: usize) -> Result<usize> {
    match config.override_degree {
        Some(d) => Ok(d),
        None => choose_degree(n as f64, k, lambda2_abs(&config.weights(r)?)),
    }
}

fn estimate_table(config: &ExperimentConfig) -> Result<Table> {
    let g = &config.grid;
    let mut specs = Vec::new();
    for &n in &int_axis(&g.n, "n")? {
        for &r in &int_axis(&g.r, "r")? {
            for &k in &g.k {
                specs.push((n, r, k, estimate_degree(config, n, r, k)?));
            }
        }
    }
    let points = specs
        .par_iter()
        .map(|&(n, r, k, d)| estimate_point(config, n, r, k, d))
        .collect::<Result<Vec<_>>>()?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.r.to_string(),
                p.k.to_string(),
                p.degree.to_string(),
                (p.degree - 1).to_string(),
                config.samples.to_string(),
                num(p.coord_mse),
                num(p.vector_mse),
                num(p.recovery_rate),
                num(p.f2_bound),
                num(p.f3_bound),
                p.assumption.to_string(),
            ]
        })
        .collect();
    let notes = if config.override_degree.is_none() {
        vec!["asymptotic regime: D is the smallest odd integer >= k ln(n) / (1 - |lambda_2|)".to_string()]
    } else {
        Vec::new()
    };
    Ok(Table {
        columns: vec![
            "n",
            "r",
            "k",
            "D",
            "N",
            "samples",
            "coord_mse_empirical",
            "vector_mse_empirical",
            "exact_recovery_rate",
            "f2_bound",
            "f3_bound",
            "assumption_easy_holds",
        ],
        rows,
        notes,
    })
}

/// Exact `MMSE_{<=D}` when the basis fits the guards, `NaN` otherwise.
fn mmse_if_feasible(params: &ModelParams, degree: usize, pruned: bool) -> Result<f64> {
    let basis = match BasisIndexing::new(params, degree, pruned) {
        Ok(b) => b,
        Err(Error::Capacity { .. }) => return Ok(f64::NAN),
        Err(e) => return Err(e),
    };
    let corr = corr_exact(&MomentData::<Rational>::assemble(params, &basis)?)?;
    mmse_exact(corr)
}

fn sweep_table(config: &ExperimentConfig) -> Result<Table> {
    let g = &config.grid;
    let mut specs = Vec::new();
    for &n in &int_axis(&g.n, "n")? {
        for &r in &int_axis(&g.r, "r")? {
            for &k in &g.k {
                match config.override_degree {
                    Some(d) => specs.push((n, r, k, d)),
                    None => specs.extend(g.degree.iter().map(|&d| (n, r, k, d))),
                }
            }
        }
    }
    let rows = specs
        .par_iter()
        .map(|&(n, r, k, d)| -> Result<Vec<String>> {
            let est = estimate_point(config, n, r, k, d)?;
            let params = ModelParams::new(n, r, k, config.weights(r)?, 0)?;
            let mmse = mmse_if_feasible(&params, d, config.pruned)?;
            let lower = theorem_bound(n as f64, k, d, r as f64, params.lambda_min().to_f64()).mmse_lower_bound();
            Ok(vec![
                n.to_string(),
                r.to_string(),
                k.to_string(),
                d.to_string(),
                num(est.coord_mse),
                num(mmse),
                num(lower),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec!["n", "r", "k", "D", "coord_mse_empirical", "mmse_exact", "mmse_lower_bound"],
        rows,
        notes: Vec::new(),
    })
}

/// The verification suite, sized from the config grid.
pub fn verify_checks(config: &ExperimentConfig) -> Vec<CheckResult> {
    let g = &config.grid;
    let ns: Vec<usize> = g.n.iter().map(|&n| n as usize).collect();
    let rs: Vec<usize> = g.r.iter().map(|&r| r as usize).collect();
    let mut points: Vec<GridPoint> = Vec::new();
    for &k in &g.k {
        points.extend(grid(&ns, &rs, k, &g.degree).into_iter().filter(|p| p.degree <= p.r));
    }
    let max_n = ns.iter().copied().max().unwrap_or(3);
    let max_d = g.degree.iter().copied().max().unwrap_or(2);
    let small_ranks: Vec<usize> = rs.iter().copied().filter(|&r| r <= 4).collect();
    let mc_point = points.first().copied().unwrap_or(GridPoint { n: 2, r: 2, k: 3, degree: 1 });
    let samples = config.samples;
    vec![
        verify::check_left_inverse(&points),
        verify::check_sandwich(&points, 1e-9),
        verify::check_cancellation(max_n.min(3), 3, &small_ranks, 3),
        verify::check_v_laws(max_n, 3, &rs, (max_d + 1).min(4)),
        verify::check_theorem_sweep(&[1e2, 1e4, 1e6], &[3, 5], &(2..=10).collect::<Vec<_>>(), &[1.0, 0.5], 1e-12),
        verify::check_even_cover_count(5, 3, 2),
        verify::check_rank_one_estimator(12, config.seeds.len().max(10), 1),
        verify::check_mc_unbiased(12, 3, samples, 5, 4.0, 1),
        verify::check_p_matrix(&points, mc_point, 10, samples, 4.0),
        verify::check_mmse_monotone(&points),
        verify::check_expander(10, 3, 5, GENERATION_ATTEMPTS),
    ]
}

fn verify_report(config: &ExperimentConfig) -> Report {
    let checks = verify_checks(config);
    let rows = checks
        .iter()
        .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
        .collect();
    Report {
        table: Table {
            columns: vec!["check", "passed", "detail"],
            rows,
            notes: Vec::new(),
        },
        checks,
    }
}

/// Writes `#` header lines (tool version, mode, config) and then the table.
pub fn write_csv<W: Write>(mut out: W, mode: Mode, config: &ExperimentConfig, table: &Table) -> Result<()> {
    writeln!(out, "# ldtensor {VERSION} mode={}", mode.name())?;
    writeln!(out, "# config {}", config.to_json())?;
    for note in &table.notes {
        writeln!(out, "# {note}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
