//! Arrivals, SINR-driven service, the Lindley workload recursion and packet
//! delays, for a single queue and for a network of interacting queues.

use std::collections::VecDeque;

use rand::Rng;

use crate::config::{ExperimentConfig, Mode};
use crate::environment::{initial_configuration, Environment};
use crate::error::{Error, Result};
use crate::geometry::{torus_distance_sq, Point, PointConfiguration};
use crate::interference::{sinr_from, CompensatedSum};
use crate::mobility::{advance, init_motion};
use crate::rng::{Purpose, Streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServicePolicy {
    /// `log₂(1 + SINR)`.
    Shannon,
    /// `log₂(1 + SINR)` when `SINR > T`, else 0.
    TruncatedShannon { threshold: f64 },
    /// 1 when `SINR > T`, else 0.
    Indicator { threshold: f64 },
}

impl ServicePolicy {
    pub fn threshold(&self) -> Option<f64> {
        match *self {
            ServicePolicy::Shannon => None,
            ServicePolicy::TruncatedShannon { threshold } | ServicePolicy::Indicator { threshold } => Some(threshold),
        }
    }

    #[inline]
    pub fn rate(&self, sinr: f64) -> f64 {
        match *self {
            ServicePolicy::Shannon => sinr.ln_1p() / std::f64::consts::LN_2,
            ServicePolicy::TruncatedShannon { threshold } => {
                if sinr > threshold {
                    sinr.ln_1p() / std::f64::consts::LN_2
                } else {
                    0.0
                }
            }
            ServicePolicy::Indicator { threshold } => {
                if sinr > threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn service_rate(policy: &ServicePolicy, sinr: f64) -> f64 {
    policy.rate(sinr)
}

/// Unit-size packets arriving at slot starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalProcess {
    /// One packet per slot with probability `rate · δ`.
    Bernoulli { rate: f64 },
    /// `rate · δ` work every slot.
    Deterministic { rate: f64 },
}

impl ArrivalProcess {
    pub fn rate(&self) -> f64 {
        match *self {
            ArrivalProcess::Bernoulli { rate } | ArrivalProcess::Deterministic { rate } => rate,
        }
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        match self {
            ArrivalProcess::Bernoulli { .. } => ArrivalProcess::Bernoulli { rate },
            ArrivalProcess::Deterministic { .. } => ArrivalProcess::Deterministic { rate },
        }
    }

    pub fn check(&self, slot: f64) -> Result<()> {
        let rate = self.rate();
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param(format!("arrival rate must be non-negative, got {rate}")));
        }
        if let ArrivalProcess::Bernoulli { rate } = self {
            let p = rate * slot;
            if p > 1.0 {
                return Err(Error::param(format!(
                    "Bernoulli probability out of range: λδ = {p} > 1"
                )));
            }
        }
        Ok(())
    }

    /// Work arriving in one slot.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, slot: f64, rng: &mut R) -> f64 {
        match *self {
            ArrivalProcess::Bernoulli { rate } => {
                if rng.random::<f64>() < rate * slot {
                    1.0
                } else {
                    0.0
                }
            }
            ArrivalProcess::Deterministic { rate } => rate * slot,
        }
    }

    /// `(E[A(1)], Var[A(1)])` per slot.
    pub fn slot_moments(&self, slot: f64) -> (f64, f64) {
        match *self {
            ArrivalProcess::Bernoulli { rate } => {
                let p = rate * slot;
                (p, p * (1.0 - p))
            }
            ArrivalProcess::Deterministic { rate } => (rate * slot, 0.0),
        }
    }
}

/// Left-endpoint Riemann sum of tick rates over one slot.
pub fn slot_service(tick_rates: &[f64], dt: f64) -> f64 {
    tick_rates.iter().sum::<f64>() * dt
}

#[inline]
pub fn lindley_step(w: f64, a: f64, v: f64) -> f64 {
    (w + a - v).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketDelay {
    pub packet_id: u64,
    pub arrival_slot: u64,
    /// Packets served during slot `n` leave at the end of it, `n + 1`.
    pub departure_slot: u64,
    pub delay: u64,
}

const WORK_EPS: f64 = 1e-9;

/// FIFO bookkeeping that turns cumulative arrived and departed work into
/// per-packet delays. Packet `k` (from 1) arrives in the slot where
/// cumulative arrivals first reach `k` and departs in the slot where
/// cumulative departures first reach `k`.
#[derive(Debug, Clone, Default)]
pub struct DelayTracker {
    arrived: f64,
    departed: f64,
    next_id: u64,
    pending: VecDeque<(u64, u64)>,
    delays: Vec<PacketDelay>,
}

impl DelayTracker {
    pub fn record(&mut self, slot: u64, arrived: f64, departed: f64) {
        self.arrived += arrived;
        while (self.next_id + 1) as f64 <= self.arrived + WORK_EPS {
            self.next_id += 1;
            self.pending.push_back((self.next_id, slot));
        }
        self.departed += departed;
        while let Some(&(id, arrival_slot)) = self.pending.front() {
            if id as f64 > self.departed + WORK_EPS {
                break;
            }
            self.pending.pop_front();
            self.delays.push(PacketDelay {
                packet_id: id,
                arrival_slot,
                departure_slot: slot + 1,
                delay: slot + 1 - arrival_slot,
            });
        }
    }

    pub fn delays(&self) -> &[PacketDelay] {
        &self.delays
    }

    /// Packets still waiting.
    pub fn censored(&self) -> usize {
        self.pending.len()
    }

    pub fn into_parts(self) -> (Vec<PacketDelay>, usize) {
        let c = self.pending.len();
        (self.delays, c)
    }
}

/// Delays from per-slot arrived and departed work.
pub fn packet_delays(arrivals: &[f64], departures: &[f64]) -> Result<(Vec<PacketDelay>, usize)> {
    if arrivals.len() != departures.len() {
        return Err(Error::param("arrival and departure histories differ in length"));
    }
    let mut t = DelayTracker::default();
    for (n, (&a, &d)) in arrivals.iter().zip(departures).enumerate() {
        t.record(n as u64, a, d);
    }
    Ok(t.into_parts())
}

/// Workload plus the cumulative flows it is the difference of.
#[derive(Debug, Clone, Default)]
pub struct QueueState {
    pub workload: f64,
    pub cumulative_arrived: f64,
    pub cumulative_departed: f64,
    tracker: DelayTracker,
    slot: u64,
}

impl QueueState {
    pub fn new() -> Self {
        Self::default()
    }

    /// One Lindley step; returns the new workload.
    pub fn step(&mut self, arrived: f64, service: f64) -> f64 {
        let before = self.workload + arrived;
        let next = lindley_step(self.workload, arrived, service);
        let departed = before - next;
        self.workload = next;
        self.cumulative_arrived += arrived;
        self.cumulative_departed += departed;
        self.tracker.record(self.slot, arrived, departed);
        self.slot += 1;
        next
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn tracker(&self) -> &DelayTracker {
        &self.tracker
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrajectory {
    pub slot_length: f64,
    /// Workload at the end of each slot.
    pub workload: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub service: Vec<f64>,
    pub delays: Vec<PacketDelay>,
    pub censored: usize,
}

impl QueueTrajectory {
    pub fn len(&self) -> usize {
        self.workload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workload.is_empty()
    }
}

/// One replication of the single queue at the origin. Static mode freezes
/// the interferers.
pub fn run_single_queue(cfg: &ExperimentConfig, replication: u64) -> Result<QueueTrajectory> {
    let env = Environment::new(cfg, replication)?;
    run_with_environment(cfg, replication, env)
}

/// Same as [`run_single_queue`] from a given initial configuration.
pub fn run_single_queue_from(
    cfg: &ExperimentConfig,
    replication: u64,
    initial: PointConfiguration,
) -> Result<QueueTrajectory> {
    let env = Environment::with_points(cfg, replication, initial)?;
    run_with_environment(cfg, replication, env)
}

fn run_with_environment(cfg: &ExperimentConfig, replication: u64, mut env: Environment) -> Result<QueueTrajectory> {
    if cfg.mode == Mode::Interacting {
        return Err(Error::param("interacting configs run through run_interacting"));
    }
    let horizon = cfg.horizon as usize;
    let ticks = cfg.ticks_per_slot();
    let mut arrivals_rng = Streams::new(cfg.seed).stream(replication, Purpose::Arrivals);
    let mut q = QueueState::new();
    let mut workload = Vec::with_capacity(horizon);
    let mut arrivals = Vec::with_capacity(horizon);
    let mut service = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let a = cfg.arrivals.sample(cfg.slot, &mut arrivals_rng);
        let mut rates = 0.0;
        for _ in 0..ticks {
            rates += cfg.policy.rate(env.sinr()?);
            env.advance()?;
        }
        let v = rates * cfg.tick;
        workload.push(q.step(a, v));
        arrivals.push(a);
        service.push(v);
    }
    let (delays, censored) = q.tracker.into_parts();
    Ok(QueueTrajectory {
        slot_length: cfg.slot,
        workload,
        arrivals,
        service,
        delays,
        censored,
    })
}

/// `E[s | Φ]`: mean service rate over fades for a frozen configuration.
pub fn conditional_service_rate<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    points: &PointConfiguration,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let link = crate::environment::link_params(cfg)?;
    let mut fades = vec![0.0; points.len()];
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..samples {
        for f in fades.iter_mut() {
            *f = cfg.interferer_fading.sample(rng);
        }
        let f0 = cfg.signal_fading.sample(rng);
        let snap = crate::interference::Snapshot::new(points, &fades, f0)?;
        let r = cfg.policy.rate(crate::interference::sinr(&snap, &link)?);
        sum += r;
        sq += r * r;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractingTrajectory {
    pub slot_length: f64,
    /// `workload[q][n]`: workload of queue `q` at the end of slot `n`;
    /// queue 0 is the one at the origin.
    pub workload: Vec<Vec<f64>>,
    pub delays: Vec<Vec<PacketDelay>>,
}

impl InteractingTrajectory {
    pub fn queues(&self) -> usize {
        self.workload.len()
    }

    /// Mean workload over all queues, per slot.
    pub fn mean_workload(&self) -> Vec<f64> {
        let n = self.workload.first().map_or(0, Vec::len);
        let q = self.workload.len() as f64;
        (0..n)
            .map(|t| self.workload.iter().map(|w| w[t]).sum::<f64>() / q)
            .collect()
    }
}

/// Every interferer carries a queue and a receiver at distance `R` that
/// moves rigidly with it; an interferer transmits only while its queue holds
/// work. The origin pair is fixed. Link fades are redrawn every tick.
pub fn run_interacting(cfg: &ExperimentConfig, replication: u64) -> Result<InteractingTrajectory> {
    let points = initial_configuration(cfg, replication)?;
    let p = cfg.arrivals.rate() * cfg.slot;
    let probs = vec![p; points.len() + 1];
    run_interacting_from(cfg, replication, points, &probs)
}

/// Interacting run from a given configuration with per-queue arrival
/// probabilities (queue 0 first).
pub fn run_interacting_from(
    cfg: &ExperimentConfig,
    replication: u64,
    mut points: PointConfiguration,
    arrival_probs: &[f64],
) -> Result<InteractingTrajectory> {
    cfg.validate().map_err(|e| Error::param(e.to_string()))?;
    let n = points.len();
    if arrival_probs.len() != n + 1 {
        return Err(Error::param("need one arrival probability per queue"));
    }
    if !matches!(cfg.arrivals, crate::queueing::ArrivalProcess::Bernoulli { .. }) {
        return Err(Error::param("interacting mode uses Bernoulli arrivals"));
    }
    let arena = *points.arena();
    let streams = Streams::new(cfg.seed);
    let model = cfg.mobility_model()?;
    let mut motion = init_motion(&points, &model, &mut streams.stream(replication, Purpose::Headings));
    let mut motion_rng = streams.stream(replication, Purpose::Motion);
    let mut fade_rng = streams.stream(replication, Purpose::InterfererFades);
    let mut signal_rng = streams.stream(replication, Purpose::SignalFades);
    let mut arrivals_rng = streams.stream(replication, Purpose::Arrivals);
    let mut recv_rng = streams.stream(replication, Purpose::Receivers);

    let r = cfg.link_distance;
    let origin_tx = arena.wrap(Point::from_polar(r, recv_rng.random::<f64>() * std::f64::consts::TAU));
    let offsets: Vec<Point> = (0..n)
        .map(|_| Point::from_polar(r, recv_rng.random::<f64>() * std::f64::consts::TAU))
        .collect();
    let gain_r = cfg.path_loss.gain(r);
    let threshold = cfg.policy.threshold();

    let queues = n + 1;
    let ticks = cfg.ticks_per_slot();
    let horizon = cfg.horizon as usize;
    let mut remaining = vec![0.0f64; queues];
    let mut trackers = vec![DelayTracker::default(); queues];
    let mut workload = vec![Vec::with_capacity(horizon); queues];
    let mut active = vec![false; queues];
    let mut tx = vec![Point::ORIGIN; queues];
    let mut rx = vec![Point::ORIGIN; queues];
    let mut arrived = vec![0.0; queues];
    let mut served = vec![0.0; queues];

    for slot in 0..horizon {
        for q in 0..queues {
            let a = if arrivals_rng.random::<f64>() < arrival_probs[q] {
                1.0
            } else {
                0.0
            };
            arrived[q] = a;
            served[q] = 0.0;
            remaining[q] += a;
        }
        for _ in 0..ticks {
            tx[0] = origin_tx;
            rx[0] = Point::ORIGIN;
            for (j, x) in points.points().iter().enumerate() {
                tx[j + 1] = *x;
                rx[j + 1] = arena.wrap(*x + offsets[j]);
            }
            for q in 0..queues {
                active[q] = remaining[q] > WORK_EPS;
            }
            for i in 0..queues {
                if !active[i] {
                    continue;
                }
                let signal = gain_r * cfg.signal_fading.sample(&mut signal_rng);
                // SINR > T needs I < S/T − γ; stop summing once that fails
                let cap = threshold.map(|t| signal / t - cfg.noise);
                if matches!(cap, Some(c) if c <= 0.0) {
                    continue;
                }
                let mut acc = CompensatedSum::default();
                let mut blocked = false;
                for j in 0..queues {
                    if j == i || !active[j] {
                        continue;
                    }
                    let g = cfg.path_loss.gain_sq(torus_distance_sq(tx[j], rx[i], &arena));
                    acc.add(g * cfg.interferer_fading.sample(&mut fade_rng));
                    if let Some(c) = cap {
                        if acc.value() >= c {
                            blocked = true;
                            break;
                        }
                    }
                }
                if blocked {
                    continue;
                }
                let rate = cfg.policy.rate(sinr_from(signal, acc.value(), cfg.noise)?);
                let work = (rate * cfg.tick).min(remaining[i]);
                remaining[i] -= work;
                served[i] += work;
            }
            advance(&mut points, &mut motion, &model, cfg.tick, &mut motion_rng)?;
        }
        for q in 0..queues {
            if remaining[q] < WORK_EPS {
                remaining[q] = 0.0;
            }
            workload[q].push(remaining[q]);
            trackers[q].record(slot as u64, arrived[q], served[q]);
        }
    }
    Ok(InteractingTrajectory {
        slot_length: cfg.slot,
        workload,
        delays: trackers.into_iter().map(|t| t.into_parts().0).collect(),
    })
}
