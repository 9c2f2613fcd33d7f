//! Interferer mobility: state-advancing dynamics for simulation, and the
//! displacement kernel `p(x, dy)` over a horizon for analytic evaluation.
//!
//! Every model moves points independently of each other and of their
//! positions, so a Poisson configuration stays Poisson.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{Arena, Point, PointConfiguration};
use crate::quadrature::{self, Estimate, Tolerance};
use crate::rng::{Purpose, Streams};

/// Default random-waypoint leg duration.
pub const DEFAULT_LEG_DURATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MobilityModel {
    Static,
    /// Constant speed along a heading drawn once.
    RandomDirection {
        speed: f64,
    },
    /// Constant speed along a heading redrawn every `leg_duration`.
    RandomWaypoint {
        speed: f64,
        leg_duration: f64,
    },
    /// Independent 2-D Wiener process; per-axis variance `diffusion² · t`.
    Brownian {
        diffusion: f64,
    },
}

impl MobilityModel {
    pub fn random_direction(speed: f64) -> Result<Self> {
        check_speed(speed)?;
        Ok(Self::RandomDirection { speed })
    }

    pub fn random_waypoint(speed: f64, leg_duration: f64) -> Result<Self> {
        check_speed(speed)?;
        if !(leg_duration > 0.0 && leg_duration.is_finite()) {
            return Err(Error::param("random-waypoint leg duration must be positive"));
        }
        Ok(Self::RandomWaypoint { speed, leg_duration })
    }

    pub fn brownian(diffusion: f64) -> Result<Self> {
        if !(diffusion >= 0.0 && diffusion.is_finite()) {
            return Err(Error::param("Brownian diffusion scale must be non-negative"));
        }
        Ok(Self::Brownian { diffusion })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MobilityModel::Static => "static",
            MobilityModel::RandomDirection { .. } => "rd",
            MobilityModel::RandomWaypoint { .. } => "rwp",
            MobilityModel::Brownian { .. } => "bm",
        }
    }

    pub fn is_static(&self) -> bool {
        match *self {
            MobilityModel::Static => true,
            MobilityModel::RandomDirection { speed } | MobilityModel::RandomWaypoint { speed, .. } => speed == 0.0,
            MobilityModel::Brownian { diffusion } => diffusion == 0.0,
        }
    }
}

fn check_speed(speed: f64) -> Result<()> {
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(Error::param(format!("speed must be non-negative, got {speed}")));
    }
    Ok(())
}

/// Brownian scale matched to a nominal speed on a simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianScale {
    /// Per-axis standard deviation of one step.
    pub per_step: f64,
    /// Per-axis standard deviation per √time.
    pub per_unit_time: f64,
}

/// Pick the Wiener scale so that the mean displacement norm over one step
/// `dt` equals `speed · dt`. The norm is Rayleigh with mean `σ √(π/2)`.
pub fn calibrate_brownian(speed: f64, dt: f64) -> Result<BrownianScale> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("calibration step must be positive, got {dt}")));
    }
    check_speed(speed)?;
    let per_step = speed * dt * (2.0 / PI).sqrt();
    Ok(BrownianScale {
        per_step,
        per_unit_time: per_step / dt.sqrt(),
    })
}

/// Per-point motion state. Empty for static and Brownian models.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionState {
    headings: Vec<f64>,
    directions: Vec<Point>,
    timers: Vec<f64>,
}

impl MotionState {
    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    /// Time left on the current leg (random waypoint only).
    pub fn timers(&self) -> &[f64] {
        &self.timers
    }

    pub fn with_headings(headings: Vec<f64>, timers: Vec<f64>) -> Self {
        let directions = headings.iter().map(|&t| Point::from_polar(1.0, t)).collect();
        Self {
            headings,
            directions,
            timers,
        }
    }

    fn set_heading(&mut self, i: usize, theta: f64) {
        self.headings[i] = theta;
        self.directions[i] = Point::from_polar(1.0, theta);
    }
}

pub fn init_motion<R: Rng + ?Sized>(config: &PointConfiguration, model: &MobilityModel, rng: &mut R) -> MotionState {
    let n = config.len();
    match *model {
        MobilityModel::Static | MobilityModel::Brownian { .. } => MotionState::default(),
        MobilityModel::RandomDirection { .. } => {
            let headings = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            MotionState::with_headings(headings, Vec::new())
        }
        MobilityModel::RandomWaypoint { leg_duration, .. } => {
            let headings = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
            MotionState::with_headings(headings, vec![leg_duration; n])
        }
    }
}

#[inline]
fn wrap_small(c: f64, side: f64, arena: &Arena) -> f64 {
    if c >= side {
        if c < 2.0 * side {
            c - side
        } else {
            arena.wrap_coord(c)
        }
    } else if c < 0.0 {
        if c >= -side {
            let w = c + side;
            if w >= side {
                0.0
            } else {
                w
            }
        } else {
            arena.wrap_coord(c)
        }
    } else {
        c
    }
}

/// Move every point forward by `dt`. Random-waypoint legs that expire inside
/// the step are handled by subdividing it; headings are redrawn in point
/// order from `rng`.
pub fn advance<R: Rng + ?Sized>(
    config: &mut PointConfiguration,
    state: &mut MotionState,
    model: &MobilityModel,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("time step must be positive, got {dt}")));
    }
    let arena = *config.arena();
    let side = arena.side();
    match *model {
        MobilityModel::Static => {}
        MobilityModel::RandomDirection { speed } => {
            if speed == 0.0 {
                return Ok(());
            }
            let step = speed * dt;
            for (p, d) in config.points_mut().iter_mut().zip(&state.directions) {
                p.x = wrap_small(p.x + step * d.x, side, &arena);
                p.y = wrap_small(p.y + step * d.y, side, &arena);
            }
        }
        MobilityModel::RandomWaypoint { speed, leg_duration } => {
            let eps = 1e-12 * leg_duration;
            let points = config.points_mut();
            for (i, p) in points.iter_mut().enumerate() {
                let mut remaining = dt;
                while remaining > 0.0 {
                    let h = remaining.min(state.timers[i]);
                    let d = state.directions[i];
                    p.x = wrap_small(p.x + speed * h * d.x, side, &arena);
                    p.y = wrap_small(p.y + speed * h * d.y, side, &arena);
                    state.timers[i] -= h;
                    remaining -= h;
                    if state.timers[i] <= eps {
                        state.set_heading(i, rng.random::<f64>() * TAU);
                        state.timers[i] = leg_duration;
                    }
                    if remaining <= eps {
                        break;
                    }
                }
            }
        }
        MobilityModel::Brownian { diffusion } => {
            if diffusion == 0.0 {
                return Ok(());
            }
            let sd = diffusion * dt.sqrt();
            for p in config.points_mut() {
                let zx: f64 = StandardNormal.sample(rng);
                let zy: f64 = StandardNormal.sample(rng);
                p.x = wrap_small(p.x + sd * zx, side, &arena);
                p.y = wrap_small(p.y + sd * zy, side, &arena);
            }
        }
    }
    Ok(())
}

/// Law of the displacement of one point over a horizon. All laws are
/// isotropic, so analytic code mostly needs the law of its norm.
#[derive(Debug, Clone, PartialEq)]
pub enum DisplacementLaw {
    Dirac,
    /// Uniform on the circle of this radius.
    Ring(f64),
    /// Isotropic Gaussian with this per-axis standard deviation.
    Gaussian(f64),
    /// Equally weighted sample of displacement vectors.
    Sample(Vec<Point>),
}

/// `p(x, dy)` for a mobility model over a horizon `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityKernel {
    model: MobilityModel,
    horizon: f64,
    samples: usize,
    seed: u64,
}

impl MobilityKernel {
    /// Monte Carlo sample size for random-waypoint kernels.
    pub const DEFAULT_SAMPLES: usize = 4096;

    pub fn new(model: MobilityModel, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::param("kernel horizon must be non-negative"));
        }
        Ok(Self {
            model,
            horizon,
            samples: Self::DEFAULT_SAMPLES,
            seed: 0x5eed,
        })
    }

    /// Sample size and seed for the Monte Carlo random-waypoint kernel.
    pub fn with_sampling(mut self, samples: usize, seed: u64) -> Self {
        self.samples = samples.max(2);
        self.seed = seed;
        self
    }

    pub fn model(&self) -> &MobilityModel {
        &self.model
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same model and sampling, different horizon.
    pub fn at_horizon(&self, horizon: f64) -> Result<Self> {
        let mut k = Self::new(self.model, horizon)?;
        k.samples = self.samples;
        k.seed = self.seed;
        Ok(k)
    }

    pub fn displacement_law(&self) -> DisplacementLaw {
        let tau = self.horizon;
        match self.model {
            _ if tau == 0.0 || self.model.is_static() => DisplacementLaw::Dirac,
            MobilityModel::Static => DisplacementLaw::Dirac,
            MobilityModel::RandomDirection { speed } => DisplacementLaw::Ring(speed * tau),
            MobilityModel::Brownian { diffusion } => DisplacementLaw::Gaussian(diffusion * tau.sqrt()),
            MobilityModel::RandomWaypoint { speed, leg_duration } => {
                // the window starts at a uniform phase of the leg schedule
                let mut rng = Streams::new(self.seed).stream(0, Purpose::KernelSamples);
                let sample = (0..self.samples)
                    .map(|_| {
                        let phase = rng.random::<f64>() * leg_duration;
                        leg_durations_from(tau, leg_duration, phase)
                            .into_iter()
                            .fold(Point::ORIGIN, |acc, d| {
                                acc + Point::from_polar(speed * d, rng.random::<f64>() * TAU)
                            })
                    })
                    .collect();
                DisplacementLaw::Sample(sample)
            }
        }
    }
}

/// Leg durations covering `[0, tau]` for legs that start at time 0.
pub fn leg_durations(tau: f64, leg: f64) -> Vec<f64> {
    leg_durations_from(tau, leg, 0.0)
}

/// Leg durations covering `[0, tau]` when the window opens `phase` into a leg.
pub fn leg_durations_from(tau: f64, leg: f64, phase: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut left = tau;
    let mut next = (leg - phase).min(left);
    while left > 1e-12 * leg {
        out.push(next);
        left -= next;
        next = leg.min(left);
    }
    out
}

/// `∫ f(y) p(x, dy)` with an error estimate.
///
/// Random direction and static kernels are integrated deterministically,
/// Brownian kernels by tensor Gauss–Hermite with node doubling, random
/// waypoint by Monte Carlo (the error is then a standard error).
pub fn kernel_average<F: Fn(Point) -> f64>(
    kernel: &MobilityKernel,
    x: Point,
    f: F,
    tol: Tolerance,
) -> Result<Estimate> {
    match kernel.displacement_law() {
        DisplacementLaw::Dirac => Ok(Estimate::exact(f(x))),
        DisplacementLaw::Ring(r) => quadrature_ring(x, r, &f, tol),
        DisplacementLaw::Gaussian(sd) => {
            let mut prev: Option<f64> = None;
            let mut last_diff = f64::INFINITY;
            for n in [8, 16, 32, 64, 128] {
                let (t, w) = quadrature::gauss_hermite(n);
                let scale = std::f64::consts::SQRT_2 * sd;
                let mut sum = 0.0;
                for (ti, wi) in t.iter().zip(&w) {
                    for (tj, wj) in t.iter().zip(&w) {
                        sum += wi * wj * f(Point::new(x.x + scale * ti, x.y + scale * tj));
                    }
                }
                let v = sum / PI;
                if let Some(p) = prev {
                    last_diff = (v - p).abs();
                    if last_diff <= tol.abs.max(tol.rel * v.abs()) {
                        return Ok(Estimate {
                            value: v,
                            error: last_diff,
                        });
                    }
                }
                prev = Some(v);
            }
            Err(Error::numerical("Gauss-Hermite kernel average", last_diff))
        }
        DisplacementLaw::Sample(d) => {
            let vals: Vec<f64> = d.iter().map(|&dy| f(x + dy)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(Estimate {
                value: mean,
                error: (var / n).sqrt(),
            })
        }
    }
}

fn quadrature_ring<F: Fn(Point) -> f64>(x: Point, r: f64, f: &F, tol: Tolerance) -> Result<Estimate> {
    // full-circle trapezoid with doubling; f need not be even in θ
    let mut n = 16usize;
    let eval = |n: usize, offset: f64| -> f64 {
        (0..n)
            .map(|k| {
                let t = TAU * (k as f64 + offset) / n as f64;
                f(x + Point::from_polar(r, t))
            })
            .sum::<f64>()
    };
    let mut sum = eval(n, 0.0);
    let mut prev = sum / n as f64;
    while n < 1 << 20 {
        sum += eval(n, 0.5);
        n *= 2;
        let cur = sum / n as f64;
        let diff = (cur - prev).abs();
        if diff <= tol.abs.max(tol.rel * cur.abs()) {
            return Ok(Estimate {
                value: cur,
                error: diff,
            });
        }
        prev = cur;
    }
    Err(Error::numerical("ring kernel average", f64::NAN))
}
