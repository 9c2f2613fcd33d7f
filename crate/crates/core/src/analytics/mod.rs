//! Closed and semi-closed form quantities: level-crossing probabilities,
//! their time correlations, the interference correlation coefficient and the
//! heavy-traffic workload approximation.
//!
//! Integrals over the plane are reduced to radial form. For a kernel whose
//! displacement has norm `ρ`, correlations only need the autocorrelation
//! `C(ρ) = ∫ f(x) f(x + ρe) dx` of a radial profile `f`.

mod heavy;
mod joint;
mod level;
mod montecarlo;

pub use heavy::{cov_service, heavy_traffic_workload, CovarianceSum, Discretization, HeavyTraffic, HeavyTrafficSpec};
pub use joint::{conditional_gain, corr_coefficient, joint_level_crossing, joint_level_crossing_direct, JointCurve};
pub use level::{mean_service_rate_shannon, prob_level_crossing, prob_unstable_static};
pub use montecarlo::{
    fresh_configuration, joint_crossing_frequency, level_crossing_mc, mean_service_rate_empirical, monte_carlo,
    snapshot_sinr, JointFrequency, McEstimate,
};

use std::f64::consts::PI;

use crate::channel::{Fading, PathLoss};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate, Tolerance};

/// Region the interferers occupy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Plane,
    /// The simulation torus seen from the origin (a square of this side
    /// centred on it). `count` switches from Poisson to exactly `count`
    /// uniform points.
    Torus {
        side: f64,
        count: Option<usize>,
    },
}

impl Domain {
    /// Arc length of the circle of radius `u` inside the domain.
    pub fn angular_measure(&self, u: f64) -> f64 {
        match *self {
            Domain::Plane => 2.0 * PI * u,
            Domain::Torus { side, .. } => {
                let h = 0.5 * side;
                if u <= h {
                    2.0 * PI * u
                } else if u < h * std::f64::consts::SQRT_2 {
                    (2.0 * PI - 8.0 * (h / u).acos()) * u
                } else {
                    0.0
                }
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Plane => f64::INFINITY,
            Domain::Torus { side, .. } => side * side,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub tol: Tolerance,
    /// Radial cutoff; `None` derives one from the path-loss tail.
    pub cutoff: Option<f64>,
    /// Monte Carlo sample count for random-waypoint kernels.
    pub kernel_samples: usize,
    pub kernel_seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tol: Tolerance::new(1e-11, 1e-9),
            cutoff: None,
            kernel_samples: 4096,
            kernel_seed: 0x5eed,
        }
    }
}

/// Parameters entering the analytic formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub intensity: f64,
    pub link_distance: f64,
    pub noise: f64,
    /// Rate `μ` of the Rayleigh signal fade.
    pub signal_rate: f64,
    pub interferer_fading: Fading,
    pub path_loss: PathLoss,
    pub threshold: f64,
    pub domain: Domain,
}

impl SystemParams {
    /// The paper's parameter block: `Λ = 0.1`, `R = 0.3`, `γ = 0`, `T = 8`,
    /// `l(r) = (1 + r)^-4`, unit Rayleigh fades.
    pub fn reference() -> Self {
        Self {
            intensity: 0.1,
            link_distance: 0.3,
            noise: 0.0,
            signal_rate: 1.0,
            interferer_fading: Fading::unit_rayleigh(),
            path_loss: PathLoss::Bounded { exponent: 4.0 },
            threshold: 8.0,
            domain: Domain::Plane,
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let Fading::Rayleigh { rate } = cfg.signal_fading else {
            return Err(Error::param("analytic formulas need a Rayleigh signal fade"));
        };
        let threshold = cfg
            .policy
            .threshold()
            .ok_or_else(|| Error::param("analytic level crossings need a thresholded policy"))?;
        Ok(Self {
            intensity: cfg.intensity,
            link_distance: cfg.link_distance,
            noise: cfg.noise,
            signal_rate: rate,
            interferer_fading: cfg.interferer_fading,
            path_loss: cfg.path_loss.clone(),
            threshold,
            domain: Domain::Plane,
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::param("intensity must be non-negative"));
        }
        if !(self.link_distance > 0.0) {
            return Err(Error::param("link distance must be positive"));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::param("noise must be non-negative"));
        }
        if !(self.signal_rate > 0.0) {
            return Err(Error::param("signal fade rate must be positive"));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::param("threshold must be positive"));
        }
        if let Domain::Torus { side, .. } = self.domain {
            if !(side > 0.0) {
                return Err(Error::param("torus side must be positive"));
            }
        }
        Ok(())
    }

    /// `s = μT / l(R)`.
    pub fn s(&self) -> f64 {
        self.signal_rate * self.threshold / self.path_loss.gain(self.link_distance)
    }

    /// Noise factor `exp(−γ s)` of one level crossing.
    pub fn noise_factor(&self) -> f64 {
        (-self.noise * self.s()).exp()
    }

    /// `f(u) = 1 − L_h(s l(u))`, the probability-like profile whose integral
    /// gives `−log P(L)/Λ`.
    #[inline]
    pub fn profile(&self, u: f64) -> f64 {
        let x = self.s() * self.path_loss.gain(u);
        laplace_complement(&self.interferer_fading, x)
    }

    /// A radial profile closure with `s` precomputed.
    pub(crate) fn profile_fn(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        let s = self.s();
        move |u| laplace_complement(&self.interferer_fading, s * self.path_loss.gain(u))
    }

    /// Radius beyond which `2π ∫ u · E[h] s l(u) du` (a bound on the tail
    /// of any profile integral) falls below `eps`.
    pub(crate) fn tail_cutoff(&self, scale: f64, eps: f64) -> f64 {
        radial_tail_cutoff(&self.path_loss, scale, eps)
    }
}

/// `1 − L_h(x)` without cancellation.
#[inline]
pub(crate) fn laplace_complement(h: &Fading, x: f64) -> f64 {
    match *h {
        Fading::Rayleigh { .. } if x.is_infinite() => 1.0,
        Fading::Rayleigh { rate } => x / (rate + x),
        Fading::DeterministicUnit => -(-x).exp_m1(),
    }
}

/// Radius `U` with `2π c ∫_U^∞ u l(u) du <= eps`.
pub(crate) fn radial_tail_cutoff(l: &PathLoss, c: f64, eps: f64) -> f64 {
    match *l {
        PathLoss::Bounded { exponent: b } => {
            // ∫_U^∞ u (1+u)^-b du <= (1+U)^{2-b} / (b-2)
            let target = eps * (b - 2.0) / (2.0 * PI * c);
            (target.powf(1.0 / (2.0 - b)) - 1.0).max(1.0)
        }
        PathLoss::PowerLaw {
            scale,
            exponent: b,
            min_radius,
        } => {
            let target = eps * (b - 2.0) * scale.powf(b) / (2.0 * PI * c);
            target.powf(1.0 / (2.0 - b)).max(10.0 * min_radius).max(1.0)
        }
        PathLoss::Table(ref t) => *t.radii().last().unwrap(),
    }
}

/// Radii where `l` is not smooth.
pub(crate) fn kinks(l: &PathLoss) -> Vec<f64> {
    match l {
        PathLoss::PowerLaw { min_radius, .. } if *min_radius > 0.0 => vec![*min_radius],
        PathLoss::Table(t) => t.radii().to_vec(),
        _ => vec![],
    }
}

/// Geometric breakpoints on `[0, hi]` for radial integrands with a smooth
/// core near the origin and a power-law tail.
pub(crate) fn radial_breaks(hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![0.1, 0.3, 1.0];
    let mut x = 3.0;
    while x < hi {
        b.push(x);
        x *= 3.0;
    }
    b.extend_from_slice(extra);
    b.retain(|&v| v > 0.0 && v < hi);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫_domain g(|x|) dx` for radial `g` bounded by a multiple `c` of `l`.
pub(crate) fn radial_integral<G: Fn(f64) -> f64>(
    params: &SystemParams,
    g: G,
    c: f64,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    let hi = match params.domain {
        Domain::Plane => q.cutoff.unwrap_or_else(|| params.tail_cutoff(c, 0.1 * q.tol.abs)),
        Domain::Torus { side, .. } => 0.5 * side * std::f64::consts::SQRT_2,
    };
    let mut extra = kinks(&params.path_loss);
    if let Domain::Torus { side, .. } = params.domain {
        extra.push(0.5 * side);
    }
    let breaks = radial_breaks(hi, &extra);
    let domain = params.domain;
    integrate(|u| g(u) * domain.angular_measure(u), 0.0, hi, &breaks, q.tol)
}

/// `∫ f` over the domain.
pub(crate) fn profile_integral(params: &SystemParams, q: &QuadratureSpec) -> Result<Estimate> {
    let f = params.profile_fn();
    let c = params.s() * params.interferer_fading.mean();
    radial_integral(params, f, c, q)
}
