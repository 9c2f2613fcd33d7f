//! Simulation runs over a grid of configurations.

use mobiqueue::analytics::{
    heavy_traffic_workload, Discretization, HeavyTrafficSpec, JointCurve, QuadratureSpec, SystemParams,
};
use mobiqueue::config::{ExperimentConfig, Mode};
use mobiqueue::estimators::{batch_means, empirical_cdf, replication_mean};
use mobiqueue::par::{map_indexed, Execution};
use mobiqueue::queueing::{run_interacting, run_single_queue, ArrivalProcess, ServicePolicy};
use serde::Serialize;

use crate::error::Result;
use crate::grid::{simulation_domain, GridPoint};

/// Rows kept from each workload trajectory.
const TRAJECTORY_ROWS: usize = 5000;
/// Rows in each latency CDF.
const CDF_ROWS: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub point: usize,
    pub mode: &'static str,
    pub model: &'static str,
    pub speed: f64,
    pub arrival_rate: f64,
    pub load: Option<f64>,
    pub replications: u64,
    pub mean_workload: f64,
    pub ci_halfwidth: f64,
    pub mean_service_rate: Option<f64>,
    pub delay_mean: Option<f64>,
    pub delay_p50: Option<f64>,
    pub delay_p90: Option<f64>,
    pub delay_p99: Option<f64>,
    pub censored: usize,
    pub approx_workload: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub slot: u64,
    pub time: f64,
    pub workload: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdfRow {
    pub delay: f64,
    pub cdf: f64,
}

/// One replication, reduced.
struct RepOutcome {
    series: Vec<f64>,
    service_rate: Option<f64>,
    delays: Vec<f64>,
    censored: usize,
    trajectory: Vec<TrajectoryRow>,
}

pub struct PointOutcome {
    pub summary: SummaryRow,
    /// One thinned trajectory per replication.
    pub trajectories: Vec<Vec<TrajectoryRow>>,
    pub delay_cdf: Vec<CdfRow>,
    pub notes: Vec<String>,
}

fn thin(workload: &[f64], slot: f64) -> Vec<TrajectoryRow> {
    let stride = workload.len().div_ceil(TRAJECTORY_ROWS).max(1);
    workload
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(n, &w)| TrajectoryRow {
            slot: n as u64,
            time: (n + 1) as f64 * slot,
            workload: w,
        })
        .collect()
}

fn run_replication(cfg: &ExperimentConfig, rep: u64) -> Result<RepOutcome> {
    let warm = cfg.warmup_slots();
    if cfg.mode == Mode::Interacting {
        let traj = run_interacting(cfg, rep)?;
        let mean = traj.mean_workload();
        let delays = traj
            .delays
            .iter()
            .flatten()
            .filter(|d| d.arrival_slot >= warm)
            .map(|d| d.delay as f64 * cfg.slot)
            .collect();
        return Ok(RepOutcome {
            trajectory: thin(&mean, cfg.slot),
            series: mean[warm as usize..].to_vec(),
            service_rate: None,
            delays,
            censored: 0,
        });
    }
    let traj = run_single_queue(cfg, rep)?;
    let served = traj.service.iter().sum::<f64>() / (traj.len() as f64 * cfg.slot);
    Ok(RepOutcome {
        trajectory: thin(&traj.workload, cfg.slot),
        series: traj.workload[warm as usize..].to_vec(),
        service_rate: Some(served),
        delays: traj
            .delays
            .iter()
            .filter(|d| d.arrival_slot >= warm)
            .map(|d| d.delay as f64 * cfg.slot)
            .collect(),
        censored: traj.censored,
    })
}

/// Heavy-traffic workload for indicator service and Bernoulli arrivals.
fn approximation(cfg: &ExperimentConfig) -> Result<Option<f64>> {
    if cfg.mode != Mode::SingleQueue
        || !matches!(cfg.policy, ServicePolicy::Indicator { .. })
        || !matches!(cfg.arrivals, ArrivalProcess::Bernoulli { .. })
    {
        return Ok(None);
    }
    let params = SystemParams::from_config(cfg)?.with_domain(simulation_domain(cfg));
    let q = QuadratureSpec::default();
    let curve = JointCurve::new(&params, cfg.mobility_model()?, 1024.0 * cfg.slot, &q)?;
    let p = cfg.arrivals.rate() * cfg.slot;
    if p >= cfg.slot * curve.prob() {
        return Ok(None);
    }
    let disc = Discretization::Ticks {
        per_slot: cfg.ticks_per_slot() as usize,
    };
    Ok(Some(
        heavy_traffic_workload(&curve, &HeavyTrafficSpec::new(p, cfg.slot, disc))?.workload,
    ))
}

/// Runs every (point, replication) job and reduces per point. Results do
/// not depend on the worker count.
pub fn run_grid(points: &[GridPoint], exec: Execution) -> Result<Vec<PointOutcome>> {
    let jobs: Vec<(usize, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| (0..p.cfg.replications).map(move |r| (i, r)))
        .collect();
    let results: Vec<Result<RepOutcome>> = map_indexed(jobs.len(), exec, |j| {
        let (i, r) = jobs[j];
        run_replication(&points[i].cfg, r)
    });
    let approx: Vec<Result<Option<f64>>> = map_indexed(points.len(), exec, |i| approximation(&points[i].cfg));

    let mut per_point: Vec<Vec<RepOutcome>> = points.iter().map(|_| Vec::new()).collect();
    for ((i, _), r) in jobs.iter().zip(results) {
        per_point[*i].push(r?);
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, ((point, reps), approx)) in points.iter().zip(per_point).zip(approx).enumerate() {
        out.push(reduce(i, point, reps, approx)?);
    }
    Ok(out)
}

fn reduce(index: usize, point: &GridPoint, reps: Vec<RepOutcome>, approx: Result<Option<f64>>) -> Result<PointOutcome> {
    let cfg = &point.cfg;
    let mut notes = Vec::new();
    let (mean, half) = if reps.len() >= 2 {
        let means: Vec<f64> = reps
            .iter()
            .map(|r| r.series.iter().sum::<f64>() / r.series.len() as f64)
            .collect();
        replication_mean(&means)?
    } else {
        let est = batch_means(&reps[0].series, cfg.batches)?;
        (est.mean, est.ci_halfwidth)
    };
    let service_rate = if reps.iter().all(|r| r.service_rate.is_some()) {
        Some(reps.iter().filter_map(|r| r.service_rate).sum::<f64>() / reps.len() as f64)
    } else {
        None
    };
    let delays: Vec<f64> = reps.iter().flat_map(|r| r.delays.iter().copied()).collect();
    let (delay_mean, quantiles, cdf) = if delays.is_empty() {
        notes.push(format!("point {index}: no packet departed after warm-up"));
        (None, [None; 3], Vec::new())
    } else {
        let ecdf = empirical_cdf(&delays)?;
        let q = [0.5, 0.9, 0.99].map(|p| Some(ecdf.quantile(p)));
        let rows = (1..=CDF_ROWS)
            .map(|k| {
                let p = k as f64 / CDF_ROWS as f64;
                let d = ecdf.quantile(p);
                CdfRow {
                    delay: d,
                    cdf: ecdf.eval(d),
                }
            })
            .collect::<Vec<_>>();
        let mut dedup: Vec<CdfRow> = Vec::with_capacity(rows.len());
        for r in rows {
            if dedup.last().is_none_or(|l| l.delay != r.delay) {
                dedup.push(r);
            }
        }
        (Some(delays.iter().sum::<f64>() / delays.len() as f64), q, dedup)
    };
    let approx_workload = match approx {
        Ok(a) => a,
        Err(e) => {
            notes.push(format!("point {index}: no heavy-traffic approximation ({e})"));
            None
        }
    };
    Ok(PointOutcome {
        summary: SummaryRow {
            point: index,
            mode: cfg.mode.name(),
            model: cfg.mobility.kind.name(),
            speed: cfg.mobility.speed,
            arrival_rate: cfg.arrivals.rate(),
            load: point.load,
            replications: cfg.replications,
            mean_workload: mean,
            ci_halfwidth: half,
            mean_service_rate: service_rate,
            delay_mean,
            delay_p50: quantiles[0],
            delay_p90: quantiles[1],
            delay_p99: quantiles[2],
            censored: reps.iter().map(|r| r.censored).sum(),
            approx_workload,
        },
        trajectories: reps.into_iter().map(|r| r.trajectory).collect(),
        delay_cdf: cdf,
        notes,
    })
}
