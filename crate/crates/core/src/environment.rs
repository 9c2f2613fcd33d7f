//! The evolving radio environment seen by the receiver at the origin:
//! moving interferers, block-faded interferer links and signal fade.

use crate::channel::Fading;
use crate::config::{ExperimentConfig, Placement};
use crate::error::{Error, Result};
use crate::geometry::{sample_ppp, sample_uniform, PointConfiguration};
use crate::interference::{shot_noise, sinr_from, LinkParams, Snapshot};
use crate::mobility::{advance, init_motion, MobilityModel, MotionState};
use crate::rng::{Purpose, SimRng, Streams};

/// Initial interferer configuration for one replication.
pub fn initial_configuration(cfg: &ExperimentConfig, replication: u64) -> Result<PointConfiguration> {
    let mut rng = Streams::new(cfg.seed).stream(replication, Purpose::Placement);
    match cfg.placement {
        Placement::Poisson => sample_ppp(cfg.intensity, cfg.arena(), &mut rng),
        Placement::FixedCount => {
            let n = (cfg.intensity * cfg.arena().area()).round() as usize;
            Ok(sample_uniform(n, cfg.arena(), &mut rng))
        }
    }
}

pub fn link_params(cfg: &ExperimentConfig) -> Result<LinkParams> {
    LinkParams::new(cfg.link_distance, cfg.noise, cfg.path_loss.clone())
}

#[derive(Debug, Clone)]
pub struct Environment {
    link: LinkParams,
    points: PointConfiguration,
    motion: MotionState,
    model: MobilityModel,
    fades: Vec<f64>,
    signal_fade: f64,
    interferer_fading: Fading,
    signal_fading: Fading,
    coherence_ticks: u64,
    tick: f64,
    tick_index: u64,
    motion_rng: SimRng,
    fade_rng: SimRng,
    signal_rng: SimRng,
}

impl Environment {
    pub fn new(cfg: &ExperimentConfig, replication: u64) -> Result<Self> {
        let points = initial_configuration(cfg, replication)?;
        Self::with_points(cfg, replication, points)
    }

    /// Start from a given configuration instead of a fresh sample.
    pub fn with_points(cfg: &ExperimentConfig, replication: u64, points: PointConfiguration) -> Result<Self> {
        cfg.validate().map_err(|e| Error::param(e.to_string()))?;
        if points.arena().side() != cfg.arena_side {
            return Err(Error::param("initial configuration lives on a different arena"));
        }
        let streams = Streams::new(cfg.seed);
        let model = cfg.mobility_model()?;
        let motion = init_motion(&points, &model, &mut streams.stream(replication, Purpose::Headings));
        let mut fade_rng = streams.stream(replication, Purpose::InterfererFades);
        let mut signal_rng = streams.stream(replication, Purpose::SignalFades);
        let fades = (0..points.len())
            .map(|_| cfg.interferer_fading.sample(&mut fade_rng))
            .collect();
        let signal_fade = cfg.signal_fading.sample(&mut signal_rng);
        Ok(Self {
            link: link_params(cfg)?,
            points,
            motion,
            model,
            fades,
            signal_fade,
            interferer_fading: cfg.interferer_fading,
            signal_fading: cfg.signal_fading,
            coherence_ticks: cfg.coherence_ticks(),
            tick: cfg.tick,
            tick_index: 0,
            motion_rng: streams.stream(replication, Purpose::Motion),
            fade_rng,
            signal_rng,
        })
    }

    pub fn link(&self) -> &LinkParams {
        &self.link
    }

    pub fn points(&self) -> &PointConfiguration {
        &self.points
    }

    pub fn motion(&self) -> &MotionState {
        &self.motion
    }

    pub fn fades(&self) -> &[f64] {
        &self.fades
    }

    pub fn time(&self) -> f64 {
        self.tick_index as f64 * self.tick
    }

    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }

    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            config: &self.points,
            fades: &self.fades,
            signal_fade: self.signal_fade,
            activity: None,
        }
    }

    /// `I₀` at the current tick.
    pub fn interference(&self) -> f64 {
        shot_noise(&self.snapshot(), &self.link)
    }

    /// `l(R) F₀`.
    pub fn signal_power(&self) -> f64 {
        self.link.signal_gain() * self.signal_fade
    }

    pub fn sinr(&self) -> Result<f64> {
        sinr_from(self.signal_power(), self.interference(), self.link.noise)
    }

    /// Move to the next tick: interferers move by one tick and all fades are
    /// redrawn at coherence boundaries.
    pub fn advance(&mut self) -> Result<()> {
        advance(
            &mut self.points,
            &mut self.motion,
            &self.model,
            self.tick,
            &mut self.motion_rng,
        )?;
        self.tick_index += 1;
        if self.tick_index.is_multiple_of(self.coherence_ticks) {
            if self.interferer_fading.is_random() {
                for f in &mut self.fades {
                    *f = self.interferer_fading.sample(&mut self.fade_rng);
                }
            }
            self.signal_fade = self.signal_fading.sample(&mut self.signal_rng);
        }
        Ok(())
    }
}
