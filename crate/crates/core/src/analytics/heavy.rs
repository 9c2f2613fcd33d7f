use std::cell::Cell;

use super::joint::JointCurve;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// How slot service integrates the SINR indicator over a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// `V = ∫_slot 1{SINR(t) > T} dt`.
    Continuous,
    /// Left-endpoint sum over `per_slot` ticks with fades redrawn each tick,
    /// matching the simulator.
    Ticks { per_slot: usize },
}

/// Truncation of the covariance series in `c_S²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceSum {
    /// `Σ_{j=1}^{K} (1 − j/K) Cov(V(1), V(j))`.
    #[default]
    Cesaro,
    /// `Var V + 2 Σ_{k=1}^{K−1} (1 − k/K) Cov(V(1), V(1+k))`.
    TwoSided,
}

/// `Cov(V(1), V(j))` for `j >= 1` under Indicator service.
pub fn cov_service(curve: &JointCurve, slot: f64, j: usize, disc: Discretization) -> Result<f64> {
    if j == 0 {
        return Err(Error::param("covariance lag j starts at 1"));
    }
    if !(slot > 0.0 && slot.is_finite()) {
        return Err(Error::param("slot length must be positive"));
    }
    let p = curve.prob();
    match disc {
        Discretization::Ticks { per_slot } => {
            if per_slot == 0 {
                return Err(Error::param("a slot needs at least one tick"));
            }
            let m = per_slot as i64;
            let dt = slot / per_slot as f64;
            let base = (j as i64 - 1) * m;
            let mut sum = 0.0;
            for k in -(m - 1)..m {
                let lag = (base + k).unsigned_abs();
                let ex = if lag == 0 {
                    p - p * p
                } else {
                    curve.excess(lag as f64 * dt)?
                };
                sum += (m - k.abs()) as f64 * ex;
            }
            Ok(dt * dt * sum)
        }
        Discretization::Continuous => {
            let shift = j as f64 - 1.0;
            let err: Cell<Option<Error>> = Cell::new(None);
            let v = integrate(
                |w| {
                    let lag = (shift + w).abs() * slot;
                    match curve.excess(lag) {
                        Ok(e) => (1.0 - w.abs()) * e,
                        Err(e) => {
                            err.set(Some(e));
                            0.0
                        }
                    }
                },
                -1.0,
                1.0,
                &[0.0, -shift],
                Tolerance::new(1e-14, 1e-8),
            );
            if let Some(e) = err.take() {
                return Err(e);
            }
            Ok(slot * slot * v?.value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTrafficSpec {
    /// Bernoulli arrival probability per slot, `λδ`.
    pub arrival_prob: f64,
    pub slot: f64,
    pub discretization: Discretization,
    pub sum: CovarianceSum,
    /// Largest truncation point tried for the covariance series.
    pub k_max: usize,
    /// Relative change in `c_S²` between doublings of `K` that stops the series.
    pub tol: f64,
}

impl HeavyTrafficSpec {
    pub fn new(arrival_prob: f64, slot: f64, discretization: Discretization) -> Self {
        Self {
            arrival_prob,
            slot,
            discretization,
            sum: CovarianceSum::default(),
            k_max: 1 << 14,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTraffic {
    pub workload: f64,
    pub load: f64,
    pub mean_service: f64,
    pub ca2: f64,
    pub cs2: f64,
    /// Truncation point at which the series was accepted.
    pub terms: usize,
}

/// `E[W] ≈ E[A] ρ (c_A² + c_S²) / (2(1 − ρ))` with `ρ = E[A]/E[V]`,
/// `c_A² = (1 − p)/p` and `c_S²` from the covariance series, `K` doubled
/// until its relative change drops below `spec.tol`.
pub fn heavy_traffic_workload(curve: &JointCurve, spec: &HeavyTrafficSpec) -> Result<HeavyTraffic> {
    let p = spec.arrival_prob;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("Bernoulli arrival probability must lie in (0, 1]"));
    }
    let ev = spec.slot * curve.prob();
    let load = p / ev;
    if !(load < 1.0) {
        return Err(Error::param(format!("load {load} is not below 1")));
    }
    let ca2 = (1.0 - p) / p;
    let mut covs: Vec<f64> = Vec::new();
    let cov = |j: usize, covs: &mut Vec<f64>| -> Result<f64> {
        while covs.len() < j {
            covs.push(cov_service(curve, spec.slot, covs.len() + 1, spec.discretization)?);
        }
        Ok(covs[j - 1])
    };
    let series = |k: usize, covs: &mut Vec<f64>| -> Result<f64> {
        let kf = k as f64;
        let mut s = 0.0;
        match spec.sum {
            CovarianceSum::Cesaro => {
                for j in 1..=k {
                    s += (1.0 - j as f64 / kf) * cov(j, covs)?;
                }
            }
            CovarianceSum::TwoSided => {
                s = cov(1, covs)?;
                for lag in 1..k {
                    s += 2.0 * (1.0 - lag as f64 / kf) * cov(lag + 1, covs)?;
                }
            }
        }
        Ok(s / (ev * ev))
    };
    let mut k = 4;
    let mut prev = series(k, &mut covs)?;
    loop {
        let next_k = 2 * k;
        if next_k > spec.k_max {
            return Err(Error::numerical(
                format!("covariance series (partial c_S² = {prev:.6} at K = {k})"),
                f64::NAN,
            ));
        }
        let cur = series(next_k, &mut covs)?;
        k = next_k;
        let change = (cur - prev).abs() / cur.abs().max(f64::MIN_POSITIVE);
        prev = cur;
        if change < spec.tol {
            break;
        }
    }
    let cs2 = prev;
    Ok(HeavyTraffic {
        workload: p * load * (ca2 + cs2) / (2.0 * (1.0 - load)),
        load,
        mean_service: ev,
        ca2,
        cs2,
        terms: k,
    })
}
