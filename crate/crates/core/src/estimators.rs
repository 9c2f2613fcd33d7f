//! Steady-state estimates, empirical distributions, autocorrelation and the
//! stop-loss comparison used to test increasing convex ordering.

use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeanEstimate {
    pub mean: f64,
    /// Half-width of the 95% confidence interval.
    pub ci_halfwidth: f64,
    pub n_batches: usize,
    pub batch_size: usize,
}

impl BatchMeanEstimate {
    pub fn lo(&self) -> f64 {
        self.mean - self.ci_halfwidth
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.ci_halfwidth
    }

    pub fn overlaps(&self, other: &BatchMeanEstimate) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

/// 97.5% Student-t quantile.
pub fn t_quantile(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

/// Batch means over `n_batches` equal contiguous batches. Leading samples
/// that do not fill a batch are dropped.
pub fn batch_means(series: &[f64], n_batches: usize) -> Result<BatchMeanEstimate> {
    if n_batches < 2 {
        return Err(Error::param("batch means needs at least 2 batches"));
    }
    if series.len() < 2 * n_batches {
        return Err(Error::param(format!(
            "series of length {} is too short for {n_batches} batches",
            series.len()
        )));
    }
    let batch_size = series.len() / n_batches;
    let used = &series[series.len() - batch_size * n_batches..];
    let means: Vec<f64> = used
        .chunks_exact(batch_size)
        .map(|b| b.iter().sum::<f64>() / batch_size as f64)
        .collect();
    let mean = used.iter().sum::<f64>() / used.len() as f64;
    let k = n_batches as f64;
    let bm = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(BatchMeanEstimate {
        mean,
        ci_halfwidth: t_quantile(n_batches - 1) * (var / k).sqrt(),
        n_batches,
        batch_size,
    })
}

/// Mean and 95% half-width from independent replications.
pub fn replication_mean(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::param("need at least two replications"));
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((m, t_quantile(values.len() - 1) * (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("empirical CDF of an empty sample"));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::param("NaN in sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Right-continuous `F(x) = #{X ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `x` with `F(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples)
}

/// Biased sample autocorrelation for lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(Error::param("series shorter than the requested lag range"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0 = centred.iter().map(|x| x * x).sum::<f64>();
    if !(c0 > 0.0) || c0 <= 1e-300 * n as f64 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    Ok((0..=max_lag)
        .map(|k| {
            centred[..n - k]
                .iter()
                .zip(&centred[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect())
}

/// Least-squares slope of `series` against its index.
pub fn linear_slope(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 2 {
        return Err(Error::param("slope needs two points"));
    }
    let xm = (n as f64 - 1.0) / 2.0;
    let ym = series.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, y) in series.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopLossCurve {
    pub thresholds: Vec<f64>,
    /// `mean (X − a)⁺` per threshold.
    pub values: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
}

impl StopLossCurve {
    pub fn lo(&self, i: usize) -> f64 {
        self.values[i] - self.ci_halfwidth[i]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.values[i] + self.ci_halfwidth[i]
    }
}

pub fn stop_loss_curve(series: &[f64], thresholds: &[f64], n_batches: usize) -> Result<StopLossCurve> {
    let mut values = Vec::with_capacity(thresholds.len());
    let mut ci = Vec::with_capacity(thresholds.len());
    let mut buf = vec![0.0; series.len()];
    for &a in thresholds {
        for (b, x) in buf.iter_mut().zip(series) {
            *b = (x - a).max(0.0);
        }
        let est = batch_means(&buf, n_batches)?;
        values.push(est.mean);
        ci.push(est.ci_halfwidth);
    }
    Ok(StopLossCurve {
        thresholds: thresholds.to_vec(),
        values,
        ci_halfwidth: ci,
    })
}

/// `points` thresholds from 0 to the 99.5th percentile of `series`.
pub fn default_threshold_grid(series: &[f64], points: usize) -> Result<Vec<f64>> {
    let top = EmpiricalCdf::new(series)?.quantile(0.995);
    let n = points.max(2);
    Ok((0..n).map(|i| top * i as f64 / (n - 1) as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The fast curve lies strictly below the slow one, CIs separated, at
    /// every threshold.
    Dominated,
    /// Somewhere the fast curve lies strictly above, CIs separated.
    NotDominated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub verdict: Verdict,
    pub fast: StopLossCurve,
    pub slow: StopLossCurve,
    /// `slow − fast` per threshold. For series of equal length the batches
    /// are paired, which is what the verdict is read from.
    pub difference: StopLossCurve,
}

/// Compare `E[(X − a)⁺]` of two stationary series over a threshold grid
/// (default: 50 points up to the slow series' 99.5th percentile).
///
/// Equal-length series are treated as paired (runs driven by common random
/// numbers): the CI is that of the batch-wise difference. Otherwise the
/// two curves' CIs must be separated.
pub fn stop_loss_dominance(
    fast: &[f64],
    slow: &[f64],
    thresholds: Option<&[f64]>,
    n_batches: usize,
) -> Result<DominanceReport> {
    let grid = match thresholds {
        Some(g) => g.to_vec(),
        None => default_threshold_grid(slow, 50)?,
    };
    let f = stop_loss_curve(fast, &grid, n_batches)?;
    let s = stop_loss_curve(slow, &grid, n_batches)?;
    let n = grid.len();
    let difference = if fast.len() == slow.len() {
        let mut values = Vec::with_capacity(n);
        let mut ci = Vec::with_capacity(n);
        let mut buf = vec![0.0; fast.len()];
        for &a in &grid {
            for ((b, x), y) in buf.iter_mut().zip(slow).zip(fast) {
                *b = (x - a).max(0.0) - (y - a).max(0.0);
            }
            let est = batch_means(&buf, n_batches)?;
            values.push(est.mean);
            ci.push(est.ci_halfwidth);
        }
        StopLossCurve {
            thresholds: grid.clone(),
            values,
            ci_halfwidth: ci,
        }
    } else {
        StopLossCurve {
            thresholds: grid.clone(),
            values: (0..n).map(|i| s.values[i] - f.values[i]).collect(),
            ci_halfwidth: (0..n).map(|i| s.ci_halfwidth[i] + f.ci_halfwidth[i]).collect(),
        }
    };
    let verdict = if (0..n).any(|i| difference.hi(i) < 0.0) {
        Verdict::NotDominated
    } else if (0..n).all(|i| difference.lo(i) > 0.0) {
        Verdict::Dominated
    } else {
        Verdict::Inconclusive
    };
    Ok(DominanceReport {
        verdict,
        fast: f,
        slow: s,
        difference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of integer counts against Poisson(`mean`).
/// Cells are pooled from the tails until every expected count is at least 5.
pub fn poisson_chi_square(counts: &[u64], mean: f64) -> Result<ChiSquareTest> {
    if counts.is_empty() {
        return Err(Error::param("no counts"));
    }
    let pois = Poisson::new(mean).map_err(|e| Error::param(e.to_string()))?;
    let n = counts.len() as f64;
    let max = *counts.iter().max().unwrap();
    let top = (mean + 10.0 * mean.sqrt() + 10.0).max(max as f64) as u64;
    let mut observed = vec![0.0; top as usize + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let expected: Vec<f64> = (0..=top).map(|k| n * pois.pmf(k)).collect();
    // pool into cells with expected >= 5
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=top as usize {
        o += observed[k];
        e += expected[k];
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    // remaining upper tail, including mass beyond `top`
    let tail = n - expected.iter().sum::<f64>();
    e += tail.max(0.0);
    if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    } else {
        cells.push((o, e));
    }
    if cells.len() < 2 {
        return Err(Error::param("too few cells for a chi-square test"));
    }
    let statistic = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum::<f64>();
    let dof = cells.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::param(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - chi.cdf(statistic),
    })
}
