//! Path loss and fading.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Isotropic path-loss function `l(r)`.
///
/// All variants are nonincreasing, vanish at infinity and satisfy
/// `∫ r l(r) dr < ∞`; constructors reject parameters that break this.
#[derive(Debug, Clone, PartialEq)]
pub enum PathLoss {
    /// `(A r)^-β`, held at `l(min_radius)` below `min_radius`.
    PowerLaw { scale: f64, exponent: f64, min_radius: f64 },
    /// `(1 + r)^-β`.
    Bounded { exponent: f64 },
    /// Piecewise-linear interpolation of a nonincreasing table, zero beyond
    /// the last radius.
    Table(GainTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    radii: Vec<f64>,
    gains: Vec<f64>,
}

impl GainTable {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

impl PathLoss {
    pub fn power_law(scale: f64, exponent: f64, min_radius: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("power-law scale must be positive"));
        }
        if !(min_radius > 0.0 && min_radius.is_finite()) {
            return Err(Error::param("power-law cap radius must be positive"));
        }
        check_exponent(exponent)?;
        Ok(PathLoss::PowerLaw {
            scale,
            exponent,
            min_radius,
        })
    }

    pub fn bounded(exponent: f64) -> Result<Self> {
        check_exponent(exponent)?;
        Ok(PathLoss::Bounded { exponent })
    }

    pub fn table(radii: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != gains.len() {
            return Err(Error::param("gain table needs equal, non-empty radius and gain lists"));
        }
        if radii[0] != 0.0 {
            return Err(Error::param("gain table must start at r = 0"));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::param("gain table radii must be finite and strictly increasing"));
        }
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::param("gain table values must be finite and non-negative"));
        }
        if gains.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("gain table must be nonincreasing"));
        }
        Ok(PathLoss::Table(GainTable { radii, gains }))
    }

    /// `l(r)`.
    #[inline]
    pub fn gain(&self, r: f64) -> f64 {
        match self {
            PathLoss::Bounded { exponent } => {
                if *exponent == 4.0 {
                    let q = 1.0 + r;
                    let q2 = q * q;
                    1.0 / (q2 * q2)
                } else {
                    (1.0 + r).powf(-exponent)
                }
            }
            PathLoss::PowerLaw {
                scale,
                exponent,
                min_radius,
            } => (scale * r.max(*min_radius)).powf(-exponent),
            PathLoss::Table(t) => {
                let last = t.radii.len() - 1;
                if r >= t.radii[last] {
                    return if r == t.radii[last] { t.gains[last] } else { 0.0 };
                }
                let i = t.radii.partition_point(|&x| x <= r) - 1;
                let w = (r - t.radii[i]) / (t.radii[i + 1] - t.radii[i]);
                t.gains[i] + w * (t.gains[i + 1] - t.gains[i])
            }
        }
    }

    /// `l` evaluated from a squared distance; avoids a `sqrt` for integer
    /// exponents of the power law.
    #[inline]
    pub fn gain_sq(&self, r2: f64) -> f64 {
        match self {
            PathLoss::PowerLaw {
                scale,
                exponent,
                min_radius,
            } if *exponent == 4.0 => {
                let q = scale * scale * r2.max(min_radius * min_radius);
                1.0 / (q * q)
            }
            _ => self.gain(r2.sqrt()),
        }
    }

    /// Radius beyond which `l(r) <= level`, or `None` when `l` never drops
    /// that low. Used to pick quadrature cutoffs.
    pub fn radius_below(&self, level: f64) -> Option<f64> {
        if level <= 0.0 {
            return None;
        }
        match self {
            PathLoss::Bounded { exponent } => Some((level.powf(-1.0 / exponent) - 1.0).max(0.0)),
            PathLoss::PowerLaw {
                scale,
                exponent,
                min_radius,
            } => Some((level.powf(-1.0 / exponent) / scale).max(*min_radius)),
            PathLoss::Table(t) => Some(*t.radii.last().unwrap()),
        }
    }

    /// Envelope exponent `β` with `l(r) = O(r^-β)`; `None` for compact support.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            PathLoss::Bounded { exponent } | PathLoss::PowerLaw { exponent, .. } => Some(*exponent),
            PathLoss::Table(_) => None,
        }
    }
}

fn check_exponent(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 2.0) {
        return Err(Error::param(format!(
            "path-loss exponent must exceed 2 for finite shot noise, got {beta}"
        )));
    }
    Ok(())
}

/// Marginal law of a fading power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Exponential power with mean `1 / rate`.
    Rayleigh {
        rate: f64,
    },
    DeterministicUnit,
}

impl Fading {
    pub fn rayleigh(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param(format!("Rayleigh rate must be positive, got {rate}")));
        }
        Ok(Fading::Rayleigh { rate })
    }

    pub fn unit_rayleigh() -> Self {
        Fading::Rayleigh { rate: 1.0 }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Fading::Rayleigh { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Fading::DeterministicUnit => 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Fading::Rayleigh { rate } => 1.0 / rate,
            Fading::DeterministicUnit => 1.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Fading::Rayleigh { rate } => 2.0 / (rate * rate),
            Fading::DeterministicUnit => 1.0,
        }
    }

    /// `E[exp(-s h)]`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::param(format!("Laplace argument must be >= 0, got {s}")));
        }
        Ok(self.laplace_unchecked(s))
    }

    #[inline]
    pub(crate) fn laplace_unchecked(&self, s: f64) -> f64 {
        match self {
            Fading::Rayleigh { rate } => rate / (rate + s),
            Fading::DeterministicUnit => (-s).exp(),
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, Fading::DeterministicUnit)
    }
}

/// Fading in time: a marginal law held fixed for `coherence` time units and
/// redrawn independently afterwards (block fading).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel {
    pub law: Fading,
    pub coherence: f64,
}

impl FadingModel {
    pub fn new(law: Fading, coherence: f64) -> Result<Self> {
        if !(coherence > 0.0 && coherence.is_finite()) {
            return Err(Error::param("fading coherence time must be positive"));
        }
        Ok(Self { law, coherence })
    }
}

pub fn path_gain(l: &PathLoss, r: f64) -> f64 {
    l.gain(r)
}

pub fn sample_fade<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> f64 {
    model.law.sample(rng)
}

pub fn fade_laplace(model: &FadingModel, s: f64) -> Result<f64> {
    model.law.laplace(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, Streams};

    #[test]
    fn bounded_examples() {
        let l = PathLoss::bounded(4.0).unwrap();
        assert!((l.gain(0.3) - 1.3f64.powi(-4)).abs() < 1e-15);
        assert!((l.gain(0.3) - 0.350128).abs() < 1e-6);
        assert_eq!(l.gain(1.0), 0.0625);
        assert!(l.gain(1e9) < 1e-30);
        let l3 = PathLoss::bounded(3.5).unwrap();
        assert!((l3.gain(1.0) - 2f64.powf(-3.5)).abs() < 1e-15);
    }

    #[test]
    fn power_law_is_capped_at_origin() {
        let l = PathLoss::power_law(1.0, 4.0, 0.3e-6).unwrap();
        assert!(l.gain(0.0).is_finite());
        assert_eq!(l.gain(0.0), l.gain(0.3e-6));
        assert!((l.gain(2.0) - 1.0 / 16.0).abs() < 1e-15);
        assert!((l.gain_sq(4.0) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_at_most_two_is_rejected() {
        assert!(PathLoss::bounded(2.0).is_err());
        assert!(PathLoss::power_law(1.0, 1.5, 1e-6).is_err());
    }

    #[test]
    fn table_interpolates_and_validates() {
        let l = PathLoss::table(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.1]).unwrap();
        assert_eq!(l.gain(0.5), 0.75);
        assert_eq!(l.gain(2.0), 0.1);
        assert_eq!(l.gain(2.5), 0.0);
        assert!(PathLoss::table(vec![0.0, 1.0], vec![0.5, 0.7]).is_err());
        assert!(PathLoss::table(vec![0.0, 0.0], vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn path_loss_is_nonincreasing() {
        let variants = [
            PathLoss::bounded(4.0).unwrap(),
            PathLoss::power_law(2.0, 3.0, 1e-3).unwrap(),
            PathLoss::table(vec![0.0, 1.0, 5.0], vec![1.0, 0.2, 0.0]).unwrap(),
        ];
        for l in &variants {
            let mut prev = f64::INFINITY;
            for i in 0..2000 {
                let g = l.gain(i as f64 * 0.01);
                assert!(g <= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn laplace_examples() {
        let r = Fading::unit_rayleigh();
        assert_eq!(r.laplace(0.0).unwrap(), 1.0);
        assert_eq!(r.laplace(1.0).unwrap(), 0.5);
        assert!((Fading::DeterministicUnit.laplace(1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(r.laplace(-1.0).is_err());
        // mean-1/μ convention
        let r2 = Fading::rayleigh(2.0).unwrap();
        assert!((r2.laplace(1.0).unwrap() - 1.0 / (1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn laplace_is_completely_monotone_on_grid() {
        for f in [
            Fading::unit_rayleigh(),
            Fading::rayleigh(3.0).unwrap(),
            Fading::DeterministicUnit,
        ] {
            let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
            let v: Vec<f64> = grid.iter().map(|&s| f.laplace(s).unwrap()).collect();
            for w in v.windows(3) {
                assert!(w[1] <= w[0]);
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-15);
            }
        }
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = Streams::new(3).stream(0, Purpose::Oracle);
        let f = Fading::unit_rayleigh();
        let n = 1_000_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let h = f.sample(&mut rng);
            m1 += h;
            m2 += h * h;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!((m1 - 1.0).abs() < 4e-3, "mean {m1}");
        assert!((m2 - 2.0).abs() < 2e-2, "second moment {m2}");
        assert_eq!(Fading::DeterministicUnit.sample(&mut rng), 1.0);
    }

    #[test]
    fn empirical_laplace_matches_within_three_standard_errors() {
        let mut rng = Streams::new(5).stream(0, Purpose::Oracle);
        let f = Fading::rayleigh(1.5).unwrap();
        let draws: Vec<f64> = (0..200_000).map(|_| f.sample(&mut rng)).collect();
        for s in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let vals: Vec<f64> = draws.iter().map(|h| (-s * h).exp()).collect();
            let n = vals.len() as f64;
            let m = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((m - f.laplace(s).unwrap()).abs() < 3.0 * se, "s={s}");
        }
    }
}
