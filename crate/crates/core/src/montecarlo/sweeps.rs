use std::sync::Arc;

use crate::error::Result;
use crate::quantizer::{mse_approx_highrate, mse_bound_theorem1, AllocationContext, BitAllocation, CodebookCache};
use crate::rates::{rate_bound_simple, rate_bound_tight, selective_inversion_rate, zf_rate, ErrorStats};
use crate::spectral::{capacity_full_csi, db_to_linear, waterfill_threshold, PowerPolicy};
use crate::stats::Estimate;

use super::{check_kind, snr_label, stamp, ExperimentKind, ExperimentSpec, ResultTable};

/// Allocation context whose pool is the experiment's post-coder draws.
pub(super) fn context(spec: &ExperimentSpec) -> Result<AllocationContext> {
    AllocationContext::new(
        spec.r,
        spec.trials,
        &spec.streams().derive_label("postcoder"),
        Arc::new(CodebookCache::new()),
    )
}

fn budgets(spec: &ExperimentSpec) -> Vec<f64> {
    spec.bit_budgets.iter().map(|&b| b as f64).collect()
}

/// Everything the rate tables report at one `(budget, snr)` point.
pub(super) struct RatePoint {
    pub alloc: BitAllocation,
    pub stats: ErrorStats,
    pub tight: Estimate,
    pub simple: Estimate,
}

pub(super) fn rate_point(ctx: &AllocationContext, policy: &PowerPolicy, capacity: f64, budget: u32) -> Result<RatePoint> {
    let r = policy.r;
    let j = vec![policy.p_rx; r];
    let (alloc, _) = ctx.best_full(budget, &j)?;
    let stats = ctx.error_stats(&alloc)?;
    let tight = Estimate {
        mean: rate_bound_tight(capacity, &j, &stats.q_diag)?,
        std_error: stats.tight_std_error(&j),
    };
    let simple = Estimate {
        mean: rate_bound_simple(capacity, r, policy.p_rx, stats.q_trace)?,
        std_error: stats.simple_std_error(policy.p_rx),
    };
    Ok(RatePoint { alloc, stats, tight, simple })
}

fn add_allocation_columns(table: &mut ResultTable, r: usize, allocs: &[BitAllocation], suffix: &str) {
    table.add_column(format!("phase_bits{suffix}"), allocs.iter().map(|a| a.phase_bits as f64).collect());
    for l in 1..r {
        table.add_column(format!("theta{l}_bits{suffix}"), allocs.iter().map(|a| a.theta_bits[l - 1] as f64).collect());
    }
}

/// Post-coder MSE against its bounds, one row per budget.
pub fn run_mse_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::MseSweep)?;
    let r = spec.r;
    let policy = waterfill_threshold(r, spec.t, db_to_linear(spec.snr_db[0]))?;
    let ctx = context(spec)?;
    let j = vec![policy.p_rx; r];
    let mut allocs = Vec::new();
    let (mut mse, mut bound, mut approx) = (Vec::new(), Vec::new(), Vec::new());
    for &budget in &spec.bit_budgets {
        let (alloc, _) = ctx.best_full(budget, &j)?;
        let stats = ctx.error_stats(&alloc)?;
        let books = ctx.cache().books(r, &alloc)?;
        let eps: Vec<f64> = books.theta_books.iter().map(|b| b.trained_mse.unwrap_or(0.0)).collect();
        mse.push(Estimate { mean: stats.q_trace, std_error: stats.trace_std_error });
        bound.push(Estimate::exact(mse_bound_theorem1(r, alloc.phase_bits, &eps)?));
        approx.push(Estimate::exact(mse_approx_highrate(r, &alloc)?));
        allocs.push(alloc);
    }
    let mut table = ResultTable::new("budget", budgets(spec));
    add_allocation_columns(&mut table, r, &allocs, "");
    table.add_column("cost", allocs.iter().map(|a| a.cost(r) as f64).collect());
    table.add_metric("mse", &mse);
    table.add_metric("bound", &bound);
    table.add_metric("approx_bound", &approx);
    stamp(&mut table, spec);
    table.push_meta("allocation_snr_db", spec.snr_db[0].to_string());
    Ok(table)
}

/// Rates that do not depend on the feedback budget.
struct Reference {
    policy: PowerPolicy,
    capacity: f64,
    zf: Option<Estimate>,
    si: Estimate,
}

fn reference(spec: &ExperimentSpec, snr_db: f64, with_zf: bool) -> Result<Reference> {
    let p_total = db_to_linear(snr_db);
    let policy = waterfill_threshold(spec.r, spec.t, p_total)?;
    let capacity = capacity_full_csi(&policy);
    let streams = spec.streams();
    let zf = if with_zf && spec.t > spec.r {
        Some(zf_rate(spec.r, spec.t, p_total, spec.trials, &streams.derive_label("zf"))?)
    } else {
        None
    };
    let si = selective_inversion_rate(spec.r, spec.t, p_total, None, spec.trials, &streams.derive_label("si"))?;
    Ok(Reference { policy, capacity, zf, si })
}

/// Tight and simple lower bounds with reference rates, one row per budget.
pub fn run_rate_sweep(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::RateSweep)?;
    let ctx = context(spec)?;
    let mut table = ResultTable::new("budget", budgets(spec));
    for &snr in &spec.snr_db {
        let reference = reference(spec, snr, true)?;
        let n = spec.bit_budgets.len();
        let points = spec
            .bit_budgets
            .iter()
            .map(|&b| rate_point(&ctx, &reference.policy, reference.capacity, b))
            .collect::<Result<Vec<_>>>()?;
        let s = format!("_{}", snr_label(snr));
        let allocs: Vec<BitAllocation> = points.iter().map(|p| p.alloc.clone()).collect();
        add_allocation_columns(&mut table, spec.r, &allocs, &s);
        table.add_metric(format!("tight{s}"), &points.iter().map(|p| p.tight).collect::<Vec<_>>());
        table.add_metric(format!("simple{s}"), &points.iter().map(|p| p.simple).collect::<Vec<_>>());
        table.add_metric(
            format!("mse{s}"),
            &points
                .iter()
                .map(|p| Estimate { mean: p.stats.q_trace, std_error: p.stats.trace_std_error })
                .collect::<Vec<_>>(),
        );
        table.add_metric(format!("capacity{s}"), &vec![Estimate::exact(reference.capacity); n]);
        if let Some(zf) = reference.zf {
            table.add_metric(format!("zf{s}"), &vec![zf; n]);
        }
        table.add_metric(format!("si{s}"), &vec![reference.si; n]);
        table.push_meta(format!("p_rx{s}"), reference.policy.p_rx.to_string());
        table.push_meta(format!("lambda{s}"), reference.policy.threshold.to_string());
    }
    stamp(&mut table, spec);
    Ok(table)
}

/// Tight bound as a percentage of capacity, one row per SNR and one series per budget.
pub fn run_rate_ratio(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::RateRatio)?;
    let ctx = context(spec)?;
    let mut series: Vec<Vec<Estimate>> = vec![Vec::new(); spec.bit_budgets.len()];
    for &snr in &spec.snr_db {
        let policy = waterfill_threshold(spec.r, spec.t, db_to_linear(snr))?;
        let capacity = capacity_full_csi(&policy);
        for (i, &b) in spec.bit_budgets.iter().enumerate() {
            let p = rate_point(&ctx, &policy, capacity, b)?;
            series[i].push(Estimate { mean: 100.0 * p.tight.mean / capacity, std_error: 100.0 * p.tight.std_error / capacity });
        }
    }
    let mut table = ResultTable::new("snr_db", spec.snr_db.clone());
    for (i, &b) in spec.bit_budgets.iter().enumerate() {
        table.add_metric(format!("pct_b{b}"), &series[i]);
    }
    stamp(&mut table, spec);
    Ok(table)
}

/// Dominant-vector feedback against full post-coder feedback, one row per budget.
pub fn run_single_vs_full(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::SingleVsFull)?;
    let ctx = context(spec)?;
    let mut table = ResultTable::new("budget", budgets(spec));
    let streams = spec.streams().derive_label("single");
    for &snr in &spec.snr_db {
        let p_total = db_to_linear(snr);
        let policy = waterfill_threshold(spec.r, spec.t, p_total)?;
        let capacity = capacity_full_csi(&policy);
        let s = format!("_{}", snr_label(snr));
        let (mut single, mut full, mut valloc) = (Vec::new(), Vec::new(), Vec::new());
        for &b in &spec.bit_budgets {
            let (va, _) = ctx.best_vector(b)?;
            let books = ctx.cache().books(spec.r, &va)?;
            single.push(selective_inversion_rate(spec.r, spec.t, p_total, Some(&books), spec.trials, &streams)?);
            full.push(rate_point(&ctx, &policy, capacity, b)?.tight);
            valloc.push(va);
        }
        let si = selective_inversion_rate(spec.r, spec.t, p_total, None, spec.trials, &streams)?;
        add_allocation_columns(&mut table, spec.r, &valloc, &format!("_vector{s}"));
        table.add_metric(format!("single{s}"), &single);
        table.add_metric(format!("full{s}"), &full);
        table.add_metric(format!("si{s}"), &vec![si; spec.bit_budgets.len()]);
        table.add_metric(format!("capacity{s}"), &vec![Estimate::exact(capacity); spec.bit_budgets.len()]);
    }
    stamp(&mut table, spec);
    Ok(table)
}

/// Water-filling threshold, received power and capacity per SNR.
/// Water level, received power and full-CSI capacity per SNR. Closed form, no trials.
pub fn run_capacity(spec: &ExperimentSpec) -> Result<ResultTable> {
    check_kind(spec, ExperimentKind::Capacity)?;
    let mut rows = Vec::new();
    for &snr in &spec.snr_db {
        let p = waterfill_threshold(spec.r, spec.t, db_to_linear(snr))?;
        rows.push((p.threshold, p.p_rx, capacity_full_csi(&p)));
    }
    let mut table = ResultTable::new("snr_db", spec.snr_db.clone());
    table.add_column("lambda", rows.iter().map(|x| x.0).collect());
    table.add_column("p_rx", rows.iter().map(|x| x.1).collect());
    table.add_column("capacity", rows.iter().map(|x| x.2).collect());
    stamp(&mut table, spec);
    Ok(table)
}
