use crate::config::{ExperimentConfig, Placement};
use crate::environment::{link_params, Environment};
use crate::error::{Error, Result};
use crate::geometry::{sample_ppp, sample_uniform, PointConfiguration};
use crate::interference::{sinr, LinkParams, Snapshot};
use crate::par::{map_indexed, Execution};
use crate::rng::{Purpose, SimRng, Streams};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - sum * mean) / (nf - 1.0)).max(0.0)
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            std_error: (var / nf).sqrt(),
            samples: n,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// `|value − mean| <= k·σ`, with `σ` combining the standard error and an
    /// optional error on `value` itself.
    pub fn agrees(&self, value: f64, value_error: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_error.hypot(value_error)
    }

    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.mean) / self.std_error
    }
}

const BLOCK: usize = 1024;

/// Average of `f` over `samples` draws. Draws come in blocks of 1024, each
/// with its own stream, so the result does not depend on the worker count.
pub fn monte_carlo<F>(samples: usize, seed: u64, exec: Execution, f: F) -> Result<McEstimate>
where
    F: Fn(&mut SimRng) -> Result<f64> + Sync + Send,
{
    if samples < 2 {
        return Err(Error::param("Monte Carlo needs at least two samples"));
    }
    let streams = Streams::new(seed);
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<Result<(f64, f64)>> = map_indexed(blocks, exec, |b| {
        let mut rng = streams.stream(b as u64, Purpose::Oracle);
        let n = BLOCK.min(samples - b * BLOCK);
        let (mut s, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = f(&mut rng)?;
            s += x;
            sq += x * x;
        }
        Ok((s, sq))
    });
    let (mut s, mut sq) = (0.0, 0.0);
    for p in partial {
        let (a, b) = p?;
        s += a;
        sq += b;
    }
    Ok(McEstimate::from_sums(s, sq, samples))
}

/// A fresh interferer configuration as the config places it.
pub fn fresh_configuration(cfg: &ExperimentConfig, rng: &mut SimRng) -> Result<PointConfiguration> {
    match cfg.placement {
        Placement::Poisson => sample_ppp(cfg.intensity, cfg.arena(), rng),
        Placement::FixedCount => {
            let n = (cfg.intensity * cfg.arena().area()).round() as usize;
            Ok(sample_uniform(n, cfg.arena(), rng))
        }
    }
}

/// SINR at the origin for an independent snapshot: fresh points and fades.
pub fn snapshot_sinr(cfg: &ExperimentConfig, link: &LinkParams, rng: &mut SimRng) -> Result<f64> {
    let points = fresh_configuration(cfg, rng)?;
    let fades: Vec<f64> = (0..points.len()).map(|_| cfg.interferer_fading.sample(rng)).collect();
    let f0 = cfg.signal_fading.sample(rng);
    sinr(&Snapshot::new(&points, &fades, f0)?, link)
}

/// `E[s(0)]` for the configured policy over independent snapshots.
pub fn mean_service_rate_empirical(cfg: &ExperimentConfig, samples: usize, exec: Execution) -> Result<McEstimate> {
    let link = link_params(cfg)?;
    monte_carlo(samples, cfg.seed, exec, |rng| {
        Ok(cfg.policy.rate(snapshot_sinr(cfg, &link, rng)?))
    })
}

/// Frequency of `SINR > T` over independent snapshots.
pub fn level_crossing_mc(
    cfg: &ExperimentConfig,
    threshold: f64,
    samples: usize,
    exec: Execution,
) -> Result<McEstimate> {
    let link = link_params(cfg)?;
    monte_carlo(samples, cfg.seed, exec, |rng| {
        Ok(if snapshot_sinr(cfg, &link, rng)? > threshold {
            1.0
        } else {
            0.0
        })
    })
}

/// Empirical `P(L_t)` and `P(L_t, L_{t+lag})` from simulated trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointFrequency {
    pub marginal: McEstimate,
    pub joint: McEstimate,
}

/// Crossing frequencies over `replications` independent runs of `ticks`
/// ticks each, pairs `lag_ticks` apart. Standard errors come from the
/// spread between replications.
pub fn joint_crossing_frequency(
    cfg: &ExperimentConfig,
    threshold: f64,
    lag_ticks: usize,
    ticks: usize,
    replications: usize,
    exec: Execution,
) -> Result<JointFrequency> {
    if ticks <= lag_ticks {
        return Err(Error::param("runs must be longer than the lag"));
    }
    if replications < 2 {
        return Err(Error::param("need at least two replications"));
    }
    let per_rep: Vec<Result<(f64, f64)>> = map_indexed(replications, exec, |r| {
        let mut env = Environment::new(cfg, r as u64)?;
        let mut hits = Vec::with_capacity(ticks);
        for _ in 0..ticks {
            hits.push(env.sinr()? > threshold);
            env.advance()?;
        }
        let marginal = hits.iter().filter(|&&h| h).count() as f64 / ticks as f64;
        let pairs = ticks - lag_ticks;
        let joint = (0..pairs).filter(|&t| hits[t] && hits[t + lag_ticks]).count() as f64 / pairs as f64;
        Ok((marginal, joint))
    });
    let mut m = Vec::with_capacity(replications);
    let mut j = Vec::with_capacity(replications);
    for p in per_rep {
        let (a, b) = p?;
        m.push(a);
        j.push(b);
    }
    Ok(JointFrequency {
        marginal: McEstimate::from_values(&m),
        joint: McEstimate::from_values(&j),
    })
}
