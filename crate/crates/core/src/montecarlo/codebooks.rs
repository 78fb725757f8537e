use crate::error::Result;
use crate::quantizer::{lloyd_run, theta_mse_highrate, LLOYD_MAX_ITERS, LLOYD_TOL};

use super::{check_kind, stamp, ExperimentKind, ExperimentSpec, ResultTable};

/// Trains the rotation-angle codebook for every class `l < r` at each entry
/// of `bit_budgets`, read as bits per parameter.
pub fn run_train_codebook(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::TrainCodebook)?;
    let mut table = ResultTable::new("bits", spec.bit_budgets.iter().map(|&b| b as f64).collect());
    for l in 1..spec.r as u32 {
        let (mut mse, mut approx, mut iters, mut converged) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &bits in &spec.bit_budgets {
            let run = lloyd_run(l, bits, LLOYD_TOL, LLOYD_MAX_ITERS)?;
            mse.push(run.codebook.trained_mse.unwrap_or(0.0));
            approx.push(theta_mse_highrate(l, bits)?);
            iters.push(run.history.len().saturating_sub(1) as f64);
            converged.push(if run.codebook.converged { 1.0 } else { 0.0 });
        }
        table.add_column(format!("mse_l{l}"), mse);
        table.add_column(format!("highrate_l{l}"), approx);
        table.add_column(format!("iterations_l{l}"), iters);
        table.add_column(format!("converged_l{l}"), converged);
    }
    stamp(&mut table, spec);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_budget_and_four_columns_per_class() {
        let mut spec = ExperimentSpec::new(ExperimentKind::TrainCodebook, 3, 3);
        spec.bit_budgets = vec![1, 3];
        let t = run_train_codebook(&spec).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.columns.len(), 8);
        let mse = t.column("mse_l1").unwrap();
        assert!(mse[1] < mse[0]);
        assert!(t.column("converged_l2").unwrap().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn over_wide_codebook_is_rejected() {
        let mut spec = ExperimentSpec::new(ExperimentKind::TrainCodebook, 2, 2);
        spec.bit_budgets = vec![40];
        assert!(run_train_codebook(&spec).is_err());
    }
}
