//! Sweep grids: the cartesian product of one or more axes applied to a base
//! config.

use mobiqueue::analytics::{mean_service_rate_empirical, prob_level_crossing, Domain, QuadratureSpec, SystemParams};
use mobiqueue::config::{ExperimentConfig, Placement, SweepAxis, SweepSpec};
use mobiqueue::par::Execution;
use mobiqueue::queueing::ServicePolicy;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub cfg: ExperimentConfig,
    /// Target load when the grid has a load axis.
    pub load: Option<f64>,
}

/// Snapshots used to estimate `E[s(0)]` for load sweeps under rate policies.
const SERVICE_SAMPLES: usize = 200_000;

pub fn parse_axes(axes: &[String], values: &[String]) -> Result<Vec<SweepSpec>> {
    if axes.len() != values.len() {
        return Err(CliError::Config(format!(
            "{} --axis flag(s) but {} --values flag(s)",
            axes.len(),
            values.len()
        )));
    }
    let specs = axes
        .iter()
        .zip(values)
        .map(|(a, v)| SweepSpec::parse(a, v))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.axis == s.axis) {
            return Err(CliError::Config(format!("axis `{}` given twice", s.axis.name())));
        }
    }
    if specs.iter().any(|s| s.axis == SweepAxis::Load) && specs.iter().any(|s| s.axis == SweepAxis::ArrivalRate) {
        return Err(CliError::Config("load and arrival_rate axes are exclusive".into()));
    }
    Ok(specs)
}

/// Points in row-major order: the last axis varies fastest. Load axes are
/// applied last since they depend on the service law.
pub fn expand(base: &ExperimentConfig, specs: &[SweepSpec], exec: Execution) -> Result<Vec<GridPoint>> {
    let mut points = vec![GridPoint {
        cfg: base.clone(),
        load: None,
    }];
    for spec in specs.iter().filter(|s| s.axis != SweepAxis::Load) {
        let mut next = Vec::with_capacity(points.len() * spec.values.len());
        for p in &points {
            for i in 0..spec.values.len() {
                next.push(GridPoint {
                    cfg: spec.apply(&p.cfg, i, None)?,
                    load: None,
                });
            }
        }
        points = next;
    }
    if let Some(spec) = specs.iter().find(|s| s.axis == SweepAxis::Load) {
        // E[V] per slot does not depend on mobility, so one value serves all
        let ev = mean_slot_service(base, exec)?;
        let mut next = Vec::with_capacity(points.len() * spec.values.len());
        for p in &points {
            for i in 0..spec.values.len() {
                let cfg = spec.apply(&p.cfg, i, Some(ev))?;
                cfg.validate()?;
                let load = Some(cfg.arrivals.rate() * cfg.slot / ev);
                next.push(GridPoint { cfg, load });
            }
        }
        points = next;
    }
    for p in &points {
        p.cfg.validate()?;
    }
    Ok(points)
}

/// The analytic domain matching the simulated arena.
pub fn simulation_domain(cfg: &ExperimentConfig) -> Domain {
    Domain::Torus {
        side: cfg.arena_side,
        count: match cfg.placement {
            Placement::Poisson => None,
            Placement::FixedCount => Some((cfg.intensity * cfg.arena_side * cfg.arena_side).round() as usize),
        },
    }
}

/// `E[V(1)]`: exact for indicator service, Monte Carlo otherwise.
pub fn mean_slot_service(cfg: &ExperimentConfig, exec: Execution) -> Result<f64> {
    let rate = match cfg.policy {
        ServicePolicy::Indicator { .. } => {
            let params = SystemParams::from_config(cfg)?.with_domain(simulation_domain(cfg));
            prob_level_crossing(&params, &QuadratureSpec::default())?.value
        }
        _ => mean_service_rate_empirical(cfg, SERVICE_SAMPLES, exec)?.mean,
    };
    if rate.is_nan() || rate <= 0.0 {
        return Err(CliError::Numerical(
            "mean service rate is zero; load is undefined".into(),
        ));
    }
    Ok(rate * cfg.slot)
}
