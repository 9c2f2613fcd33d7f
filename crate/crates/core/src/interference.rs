//! Shot noise and SINR at a receiver.

use crate::channel::PathLoss;
use crate::config::ExperimentConfig;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::geometry::{torus_distance_sq, Point, PointConfiguration};

/// Everything needed to evaluate the SINR at the origin at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub config: &'a PointConfiguration,
    pub fades: &'a [f64],
    pub signal_fade: f64,
    /// `None` means every interferer transmits.
    pub activity: Option<&'a [bool]>,
}

impl<'a> Snapshot<'a> {
    pub fn new(config: &'a PointConfiguration, fades: &'a [f64], signal_fade: f64) -> Result<Self> {
        if fades.len() != config.len() {
            return Err(Error::param(format!(
                "{} fades for {} interferers",
                fades.len(),
                config.len()
            )));
        }
        Ok(Self {
            config,
            fades,
            signal_fade,
            activity: None,
        })
    }

    pub fn with_activity(mut self, activity: &'a [bool]) -> Result<Self> {
        if activity.len() != self.config.len() {
            return Err(Error::param("activity mask length differs from interferer count"));
        }
        self.activity = Some(activity);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub distance: f64,
    pub noise: f64,
    pub path_loss: PathLoss,
}

impl LinkParams {
    pub fn new(distance: f64, noise: f64, path_loss: PathLoss) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::param("link distance R must be positive"));
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::param("noise power must be non-negative"));
        }
        Ok(Self {
            distance,
            noise,
            path_loss,
        })
    }

    /// Mean-free received signal power `l(R)`.
    pub fn signal_gain(&self) -> f64 {
        self.path_loss.gain(self.distance)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Interference at `receiver` from every active point, in index order.
pub fn shot_noise_at(snap: &Snapshot<'_>, lp: &LinkParams, receiver: Point) -> f64 {
    let arena = snap.config.arena();
    let mut acc = CompensatedSum::default();
    for (j, (&x, &f)) in snap.config.points().iter().zip(snap.fades).enumerate() {
        if let Some(mask) = snap.activity {
            if !mask[j] {
                continue;
            }
        }
        acc.add(lp.path_loss.gain_sq(torus_distance_sq(x, receiver, arena)) * f);
    }
    acc.value()
}

/// `I₀`: interference at the origin.
pub fn shot_noise(snap: &Snapshot<'_>, lp: &LinkParams) -> f64 {
    shot_noise_at(snap, lp, Point::ORIGIN)
}

/// SINR from a signal power and an interference level. Zero denominator with
/// positive signal gives `+∞`.
pub fn sinr_from(signal: f64, interference: f64, noise: f64) -> Result<f64> {
    let denom = interference + noise;
    if denom > 0.0 {
        Ok(signal / denom)
    } else if signal > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::UndefinedSinr)
    }
}

pub fn sinr(snap: &Snapshot<'_>, lp: &LinkParams) -> Result<f64> {
    sinr_from(lp.signal_gain() * snap.signal_fade, shot_noise(snap, lp), lp.noise)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceSeries {
    pub dt: f64,
    pub interference: Vec<f64>,
    pub sinr: Vec<f64>,
}

impl InterferenceSeries {
    pub fn time(&self, tick: usize) -> f64 {
        tick as f64 * self.dt
    }
}

/// `I₀(t)` and `SINR₀(t)` at every tick of one replication.
pub fn interference_series(cfg: &ExperimentConfig, replication: u64, ticks: usize) -> Result<InterferenceSeries> {
    let mut env = Environment::new(cfg, replication)?;
    let mut interference = Vec::with_capacity(ticks);
    let mut sinr = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        let i0 = env.interference();
        interference.push(i0);
        sinr.push(sinr_from(env.signal_power(), i0, env.link().noise)?);
        env.advance()?;
    }
    Ok(InterferenceSeries {
        dt: cfg.tick,
        interference,
        sinr,
    })
}
