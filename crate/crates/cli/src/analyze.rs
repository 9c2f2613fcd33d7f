//! Analytic quantities for each grid point, one CSV row per quantity.

use mobiqueue::analytics::{
    conditional_gain, corr_coefficient, heavy_traffic_workload, joint_level_crossing, mean_service_rate_shannon,
    prob_level_crossing, prob_unstable_static, Discretization, Domain, HeavyTrafficSpec, JointCurve, QuadratureSpec,
    SystemParams,
};
use mobiqueue::channel::PathLoss;
use mobiqueue::config::ExperimentConfig;
use mobiqueue::mobility::MobilityKernel;
use mobiqueue::par::{map_indexed, Execution};
use mobiqueue::quadrature::Estimate;
use mobiqueue::queueing::{ArrivalProcess, ServicePolicy};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::grid::{simulation_domain, GridPoint};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AnalysisRow {
    pub point: usize,
    pub quantity: &'static str,
    pub model: &'static str,
    pub speed: f64,
    pub lag: Option<f64>,
    pub threshold: f64,
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DomainArg {
    /// The infinite plane.
    Plane,
    /// The simulation torus, with a fixed count for fixed placement.
    Torus,
}

pub fn parse_lags(text: &str) -> Result<Vec<f64>> {
    let lags = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| CliError::Config(format!("lags must be positive numbers, got `{text}`")))?;
    if lags.is_empty() {
        return Err(CliError::Config("no lag given".into()));
    }
    Ok(lags)
}

fn analyze_point(index: usize, cfg: &ExperimentConfig, lags: &[f64], domain: DomainArg) -> Result<Vec<AnalysisRow>> {
    let domain = match domain {
        DomainArg::Plane => Domain::Plane,
        DomainArg::Torus => simulation_domain(cfg),
    };
    let params = SystemParams::from_config(cfg)?.with_domain(domain);
    let q = QuadratureSpec::default();
    let model = cfg.mobility_model()?;
    let mut rows = Vec::new();
    let mut push = |quantity: &'static str, lag: Option<f64>, e: Estimate| {
        rows.push(AnalysisRow {
            point: index,
            quantity,
            model: model.name(),
            speed: cfg.mobility.speed,
            lag,
            threshold: params.threshold,
            value: e.value,
            abs_error: e.error,
        })
    };

    push("prob_level_crossing", None, prob_level_crossing(&params, &q)?);
    for &lag in lags {
        let kernel = MobilityKernel::new(model, lag)?.with_sampling(q.kernel_samples, q.kernel_seed);
        push(
            "joint_level_crossing",
            Some(lag),
            joint_level_crossing(&params, &kernel, &q)?,
        );
        push("conditional_gain", Some(lag), conditional_gain(&params, &kernel, &q)?);
        push(
            "corr_coefficient",
            Some(lag),
            corr_coefficient(&kernel, &cfg.path_loss, cfg.interferer_fading.second_moment(), &q)?,
        );
    }
    // T = e^{λ/δ} − 1 overflows for fine slots; the quantity is then 1
    let rate = cfg.arrivals.rate();
    if rate > 0.0 && rate / cfg.slot < 700.0 {
        push(
            "prob_unstable_static",
            None,
            prob_unstable_static(&params, rate, cfg.slot, &q)?,
        );
    }
    if let PathLoss::PowerLaw {
        exponent, min_radius, ..
    } = cfg.path_loss
    {
        if min_radius == 0.0 && cfg.noise == 0.0 && exponent > 2.0 {
            push(
                "mean_service_rate_shannon",
                None,
                mean_service_rate_shannon(cfg.intensity, cfg.link_distance, exponent, &q)?,
            );
        }
    }
    if matches!(cfg.policy, ServicePolicy::Indicator { .. }) && matches!(cfg.arrivals, ArrivalProcess::Bernoulli { .. })
    {
        let curve = JointCurve::new(&params, model, 1024.0 * cfg.slot, &q)?;
        let p = rate * cfg.slot;
        if p > 0.0 && p < cfg.slot * curve.prob() {
            let disc = Discretization::Ticks {
                per_slot: cfg.ticks_per_slot() as usize,
            };
            let ht = heavy_traffic_workload(&curve, &HeavyTrafficSpec::new(p, cfg.slot, disc))?;
            push("heavy_traffic_workload", None, Estimate::exact(ht.workload));
        }
    }
    Ok(rows)
}

pub fn analyze_grid(
    points: &[GridPoint],
    lags: &[f64],
    domain: DomainArg,
    exec: Execution,
) -> Result<Vec<AnalysisRow>> {
    let rows: Vec<Result<Vec<AnalysisRow>>> =
        map_indexed(points.len(), exec, |i| analyze_point(i, &points[i].cfg, lags, domain));
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}
