use std::f64::consts::PI;

use super::{profile_integral, radial_breaks, Domain, QuadratureSpec, SystemParams};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate};

/// `ln P(L_t)` from `F = ∫ f` over the domain, with its derivative in `F`.
pub(crate) fn log_prob_from(params: &SystemParams, f_int: f64) -> Result<(f64, f64)> {
    let noise = -params.noise * params.s();
    match params.domain {
        Domain::Torus { side, count: Some(n) } => {
            let frac = f_int / (side * side);
            if frac >= 1.0 {
                return Err(Error::numerical(
                    "binomial level crossing (profile mass exceeds area)",
                    frac,
                ));
            }
            let n = n as f64;
            Ok((noise + n * (-frac).ln_1p(), n / (side * side * (1.0 - frac))))
        }
        _ => Ok((noise - params.intensity * f_int, params.intensity)),
    }
}

/// `P(SINR(t) > T)` with a Rayleigh signal fade.
///
/// Poisson interferers give `e^{−γs} exp(−Λ ∫ f)`; a fixed count `N` on a
/// torus gives `e^{−γs} (1 − ∫f / A)^N`.
pub fn prob_level_crossing(params: &SystemParams, q: &QuadratureSpec) -> Result<Estimate> {
    params.validate()?;
    if params.intensity == 0.0 || matches!(params.domain, Domain::Torus { count: Some(0), .. }) {
        return Ok(Estimate::exact(params.noise_factor()));
    }
    let f_int = profile_integral(params, q)?;
    let (lp, dlp) = log_prob_from(params, f_int.value)?;
    let p = lp.exp();
    Ok(Estimate {
        value: p,
        error: p * dlp * f_int.error,
    })
}

/// Probability that a frozen configuration cannot sustain arrival rate `λ`
/// per unit time in slots of length `δ`: `1 − P(L)` at threshold
/// `T = e^{λ/δ} − 1`.
pub fn prob_unstable_static(
    params: &SystemParams,
    arrival_rate: f64,
    slot: f64,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    if !(arrival_rate > 0.0 && arrival_rate.is_finite()) {
        return Err(Error::param("arrival rate must be positive"));
    }
    if !(slot > 0.0 && slot.is_finite()) {
        return Err(Error::param("slot length must be positive"));
    }
    let threshold = (arrival_rate / slot).exp_m1();
    if !threshold.is_finite() {
        return Err(Error::param("threshold e^{λ/δ} − 1 overflows"));
    }
    let p = prob_level_crossing(&params.clone().with_threshold(threshold), q)?;
    Ok(Estimate {
        value: 1.0 - p.value,
        error: p.error,
    })
}

/// `E[ln(1 + SIR)]` at the origin for Rayleigh fades, `γ = 0` and
/// `l(r) = r^-β`, in nats:
/// `∫₀^∞ exp(−2π²ΛR² v^{2/β} / (β sin(2π/β))) / (1 + v) dv`.
pub fn mean_service_rate_shannon(
    intensity: f64,
    link_distance: f64,
    exponent: f64,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    if !(exponent > 2.0 && exponent.is_finite()) {
        return Err(Error::param(format!("exponent must exceed 2, got {exponent}")));
    }
    if !(link_distance > 0.0 && link_distance.is_finite()) {
        return Err(Error::param("link distance must be positive"));
    }
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::param("intensity must be non-negative"));
    }
    if intensity == 0.0 {
        return Err(Error::Divergent(
            "mean Shannon rate without interference or noise is infinite".into(),
        ));
    }
    let c = 2.0 * PI * PI * intensity * link_distance * link_distance / (exponent * (2.0 * PI / exponent).sin());
    let a = 2.0 / exponent;
    // the tail beyond c v^a = 60 is below e^-60
    let hi = (60.0 / c).powf(1.0 / a);
    let breaks = radial_breaks(hi, &[(1.0 / c).powf(1.0 / a)]);
    integrate(|v| (-c * v.powf(a)).exp() / (1.0 + v), 0.0, hi, &breaks, q.tol)
}
