use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use symile_core::fmt::fmt_f64;
use symile_core::hash::config_hash;
use symile_core::oracle::{build_synth_table, build_xor1d_table, modality_var_names, IMode, JointTable, Partition};
use symile_core::traineval::{
    bound_tightness_report, calibrated_conditional, disease_fixture, gradient_check, rank_with_prior,
    recover_optimal_scorer, RecoveryConfig,
};

use super::unit_interval;
use crate::error::{CliError, CliResult};
use crate::files::{write_csv, Provenance};
use crate::runconfig::resolve_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Contrastive bound with the optimal scorer against the total correlation.
    Bound,
    /// Recovery of the optimal scorer by stochastic ascent on the bound.
    Scorer,
    /// Analytic against central-difference gradients of every loss.
    Gradcheck,
    /// Prior-calibrated conditional on the two-disease fixture.
    Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    /// `c = a XOR b` with fair `a`, `b`.
    Xor,
    /// Three independent fair bits.
    Independent,
    /// The mixture table at `--p-hat` with `--dims` coordinates.
    Synth,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long, value_enum, default_value = "xor")]
    pub table: TableKind,
    #[arg(long, value_parser = unit_interval)]
    pub p_hat: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
    #[arg(long, default_value = "shared")]
    pub i_mode: IMode,
    /// Batch sizes for `bound`.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 8, 32, 128])]
    pub n_list: Vec<usize>,
    /// Monte-Carlo batches per bound estimate.
    #[arg(long, default_value_t = 100_000)]
    pub mc: usize,
    /// Ascent steps for `scorer`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Random configurations for `gradcheck`.
    #[arg(long, default_value_t = 20)]
    pub configs: usize,
    /// Finite-difference step for `gradcheck`.
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Pass threshold: max relative error for `gradcheck` (1e-4), offset
    /// deviation for `scorer` (0.05), posterior error for `calibration` (1e-9).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Header and rows of one diagnostic; `pass` is the overall verdict.
pub struct Diagnostic {
    pub header: &'static str,
    pub rows: Vec<String>,
    pub pass: bool,
}

fn table(a: &DiagnoseArgs) -> CliResult<(JointTable, usize)> {
    Ok(match a.table {
        TableKind::Xor => (build_xor1d_table(), 1),
        TableKind::Independent => (JointTable::independent_fair_bits(&["a", "b", "c"])?, 1),
        TableKind::Synth => {
            let p = a
                .p_hat
                .ok_or_else(|| CliError::Usage("--table synth requires --p-hat".into()))?;
            (build_synth_table(p, a.dims, a.i_mode)?, a.dims)
        }
    })
}

fn abc_partition(t: &JointTable, dims: usize) -> CliResult<Partition> {
    let groups = ["a", "b", "c"].map(|m| modality_var_names(m, dims));
    let refs: Vec<&[String]> = groups.iter().map(|g| g.as_slice()).collect();
    Ok(Partition::new(t, &refs)?)
}

pub fn run_check(a: &DiagnoseArgs, seed: u64) -> CliResult<Diagnostic> {
    match a.check {
        Check::Bound => {
            let (t, dims) = table(a)?;
            let part = abc_partition(&t, dims)?;
            let rows = bound_tightness_report(&part, &a.n_list, a.mc, seed)?;
            Ok(Diagnostic {
                header: "batch_size,estimate,std_error,total_correlation,pass",
                pass: rows.iter().all(|r| r.within_bound()),
                rows: rows
                    .iter()
                    .map(|r| {
                        format!(
                            "{},{},{},{},{}",
                            r.batch_size,
                            fmt_f64(r.estimate),
                            fmt_f64(r.std_error),
                            fmt_f64(r.total_correlation),
                            r.within_bound()
                        )
                    })
                    .collect(),
            })
        }
        Check::Scorer => {
            let (t, dims) = table(a)?;
            let part = abc_partition(&t, dims)?;
            let mut cfg = RecoveryConfig {
                seed,
                ..RecoveryConfig::default()
            };
            if let Some(s) = a.steps {
                cfg.steps = s;
            }
            let tol = a.tol.unwrap_or(0.05);
            let r = recover_optimal_scorer(&part, &cfg, None)?;
            let pass = r.converged && r.offset_std < tol;
            Ok(Diagnostic {
                header: "support_states,offset_mean,offset_std,bound_initial,bound_final,bound_se,converged,tolerance,pass",
                rows: vec![format!(
                    "{},{},{},{},{},{},{},{},{pass}",
                    r.offsets.len(),
                    fmt_f64(r.offset_mean),
                    fmt_f64(r.offset_std),
                    fmt_f64(r.bound_initial),
                    fmt_f64(r.bound_final),
                    fmt_f64(r.bound_se),
                    r.converged,
                    fmt_f64(tol)
                )],
                pass,
            })
        }
        Check::Gradcheck => {
            let tol = a.tol.unwrap_or(1e-4);
            let r = gradient_check(a.configs, seed, a.eps, tol)?;
            let mut rows: Vec<String> = r
                .per_param
                .iter()
                .map(|(name, err)| format!("{name},{},{},{}", fmt_f64(*err), fmt_f64(tol), *err < tol))
                .collect();
            rows.push(format!("all,{},{},{}", fmt_f64(r.max_rel_error), fmt_f64(tol), r.pass));
            Ok(Diagnostic {
                header: "block,max_rel_error,tolerance,pass",
                rows,
                pass: r.pass,
            })
        }
        Check::Calibration => {
            let tol = a.tol.unwrap_or(1e-9);
            let f = disease_fixture();
            let post = calibrated_conditional(&f.scores, &f.prior)?;
            let order = rank_with_prior(&f.scores, &f.prior)?;
            let raw_best = if f.scores[1] > f.scores[0] { 1 } else { 0 };
            let close = post.iter().zip(f.expected_posterior).all(|(p, e)| (p - e).abs() <= tol);
            let pass = close && order[0] != raw_best;
            let rows = (0..2)
                .map(|i| {
                    format!(
                        "{},{},{},{},{},{}",
                        f.labels[i],
                        fmt_f64(f.scores[i]),
                        fmt_f64(f.prior[i]),
                        fmt_f64(post[i]),
                        order.iter().position(|&k| k == i).expect("ranked"),
                        pass
                    )
                })
                .collect();
            Ok(Diagnostic {
                header: "label,score,prior,posterior,calibrated_rank,pass",
                rows,
                pass,
            })
        }
    }
}

#[derive(Serialize)]
struct DiagnoseParams<'a> {
    check: Check,
    table: TableKind,
    p_hat: Option<f64>,
    dims: usize,
    i_mode: IMode,
    n_list: &'a [usize],
    mc: usize,
    steps: Option<usize>,
    configs: usize,
    eps: f64,
    tol: Option<f64>,
}

pub fn run(a: DiagnoseArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    if a.dims == 0 {
        return Err(CliError::Usage("--dims must be positive".into()));
    }
    let d = run_check(&a, seed)?;
    let params = DiagnoseParams {
        check: a.check,
        table: a.table,
        p_hat: a.p_hat,
        dims: a.dims,
        i_mode: a.i_mode,
        n_list: &a.n_list,
        mc: a.mc,
        steps: a.steps,
        configs: a.configs,
        eps: a.eps,
        tol: a.tol,
    };
    let prov = Provenance::new("diagnose", Some(config_hash(&params)?), Some(seed)).with("check", a.check);
    write_csv(&a.out, &prov, d.header, &d.rows)?;
    let name = a.check.to_possible_value().expect("named").get_name().to_string();
    if d.pass {
        println!("{name}: pass");
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{name} check failed; see {}", a.out.display())))
    }
}
