use std::cell::Cell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::sync::Mutex;

use super::level::log_prob_from;
use super::{
    kinks, profile_integral, radial_breaks, radial_integral, radial_tail_cutoff, Domain, QuadratureSpec, SystemParams,
};
use crate::channel::PathLoss;
use crate::error::{Error, Result};
use crate::mobility::{DisplacementLaw, MobilityKernel, MobilityModel};
use crate::par::{map_indexed, Execution};
use crate::quadrature::{bessel_i0e, integrate, Estimate, Tolerance};

/// Autocorrelation `C(ρ) = ∫ g(|x|) g(|x + ρe|) dx` of a radial profile
/// over the plane.
///
/// By symmetry `C` is twice the integral over the half-plane of points
/// closer to the origin than to `−ρe`. There the shifted profile is read at
/// distances `>= |x|`, so the angular integrand stays smooth even when `ρ`
/// is far larger than the profile's core.
pub(crate) struct Autocorrelation<'a> {
    profile: &'a (dyn Fn(f64) -> f64 + Sync),
    cutoff: f64,
    kinks: Vec<f64>,
    tol: Tolerance,
}

impl<'a> Autocorrelation<'a> {
    pub(crate) fn new(profile: &'a (dyn Fn(f64) -> f64 + Sync), cutoff: f64, kinks: Vec<f64>, tol: Tolerance) -> Self {
        Self {
            profile,
            cutoff,
            kinks,
            tol,
        }
    }

    pub(crate) fn at(&self, rho: f64) -> Result<Estimate> {
        let g = self.profile;
        let hi = self.cutoff.max(2.0 * rho);
        if rho == 0.0 {
            let breaks = radial_breaks(hi, &self.kinks);
            return integrate(|u| 2.0 * PI * u * g(u) * g(u), 0.0, hi, &breaks, self.tol);
        }
        let mut extra = self.kinks.clone();
        extra.extend([0.5 * rho, rho]);
        let breaks = radial_breaks(hi, &extra);
        let inner_tol = Tolerance::new(1e-16, 0.1 * self.tol.rel);
        let failure: Cell<Option<Error>> = Cell::new(None);
        let outer = integrate(
            |u| {
                let gu = g(u);
                if gu == 0.0 {
                    return 0.0;
                }
                let t0 = if u <= 0.5 * rho { 0.0 } else { (0.5 * rho / u).acos() };
                let d = (u - rho) * (u - rho);
                let c = 4.0 * u * rho;
                // distance to the shifted centre: (u − ρ)² + 4uρ sin²(θ/2)
                match integrate(
                    |t| {
                        let h = (0.5 * t).sin();
                        g((d + c * h * h).sqrt())
                    },
                    t0,
                    PI,
                    &[],
                    inner_tol,
                ) {
                    Ok(e) => 4.0 * u * gu * e.value,
                    Err(e) => {
                        failure.set(Some(e));
                        0.0
                    }
                }
            },
            0.0,
            hi,
            &breaks,
            self.tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        outer
    }
}

/// `(1/2π) ∫ g(|x + r e_θ|) dθ` for `|x| = u`. The integrand peaks where
/// the ring passes closest to the origin; breakpoints cluster there.
fn ring_average<G: Fn(f64) -> f64>(g: &G, u: f64, r: f64, tol: Tolerance) -> Result<Estimate> {
    let d = (u - r) * (u - r);
    let c = 4.0 * u * r;
    let mut breaks = Vec::new();
    let mut t = 1.0 / c.sqrt().max(1.0);
    while t < PI {
        breaks.push(t);
        t *= 2.0;
    }
    let e = integrate(
        |t| {
            let h = (0.5 * t).sin();
            g((d + c * h * h).sqrt())
        },
        0.0,
        PI,
        &breaks,
        tol,
    )?;
    Ok(Estimate {
        value: e.value / PI,
        error: e.error / PI,
    })
}

/// `C` on a grid uniform in `ln(1 + ρ)`, interpolated linearly in `ln C`.
pub(crate) struct AutocorrTable {
    step: f64,
    values: Vec<f64>,
}

impl AutocorrTable {
    pub(crate) fn build(ac: &Autocorrelation<'_>, rho_max: f64, points: usize) -> Result<Self> {
        if rho_max <= 0.0 {
            return Ok(Self {
                step: 0.0,
                values: vec![ac.at(0.0)?.value],
            });
        }
        let n = points.max(3) | 1;
        let step = rho_max.ln_1p() / (n - 1) as f64;
        let values: Result<Vec<f64>> = map_indexed(n, Execution::available(), |k| {
            ac.at((k as f64 * step).exp_m1()).map(|e| e.value)
        })
        .into_iter()
        .collect();
        Ok(Self { step, values: values? })
    }

    fn interp(&self, rho: f64, stride: usize) -> f64 {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let h = self.step * stride as f64;
        let last = (self.values.len() - 1) / stride;
        let x = rho.ln_1p() / h;
        let at = |k: usize| self.values[k * stride];
        let (k, w) = if x >= last as f64 {
            // extrapolate the last segment's power-law slope
            (last - 1, x - (last - 1) as f64)
        } else {
            let k = x.floor() as usize;
            (k, x - k as f64)
        };
        let (a, b) = (at(k), at(k + 1));
        if a > 0.0 && b > 0.0 {
            (a.ln() + w * (b.ln() - a.ln())).exp()
        } else if x >= last as f64 {
            0.0
        } else {
            a + w * (b - a)
        }
    }

    /// `C(ρ)` with an interpolation error estimate from the half-resolution grid.
    pub(crate) fn eval(&self, rho: f64) -> Estimate {
        let fine = self.interp(rho, 1);
        if self.values.len() < 5 {
            return Estimate {
                value: fine,
                error: 0.0,
            };
        }
        let coarse = self.interp(rho, 2);
        Estimate {
            value: fine,
            error: (fine - coarse).abs() / 3.0,
        }
    }
}

/// `E_ρ[C(ρ)]` with separate quadrature and sampling errors.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelMean {
    pub value: f64,
    pub quad_err: f64,
    pub mc_err: f64,
}

const TABLE_POINTS: usize = 513;

fn rayleigh_breaks(sd: f64) -> Vec<f64> {
    [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|k| k * sd)
        .collect()
}

fn kernel_mean_with<C: Fn(f64) -> Result<Estimate>>(law: &DisplacementLaw, c: C, tol: Tolerance) -> Result<KernelMean> {
    match law {
        DisplacementLaw::Dirac => {
            let e = c(0.0)?;
            Ok(KernelMean {
                value: e.value,
                quad_err: e.error,
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Ring(r) => {
            let e = c(*r)?;
            Ok(KernelMean {
                value: e.value,
                quad_err: e.error,
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Gaussian(sd) => {
            let sd = *sd;
            let failure: Cell<Option<Error>> = Cell::new(None);
            let inner_err = Cell::new(0.0f64);
            let e = integrate(
                |r| {
                    let w = r / (sd * sd) * (-0.5 * r * r / (sd * sd)).exp();
                    if w == 0.0 {
                        return 0.0;
                    }
                    match c(r) {
                        Ok(e) => {
                            inner_err.set(inner_err.get().max(e.error));
                            w * e.value
                        }
                        Err(err) => {
                            failure.set(Some(err));
                            0.0
                        }
                    }
                },
                0.0,
                12.0 * sd,
                &rayleigh_breaks(sd),
                tol,
            );
            if let Some(err) = failure.take() {
                return Err(err);
            }
            let e = e?;
            Ok(KernelMean {
                value: e.value,
                quad_err: e.error + inner_err.get(),
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Sample(d) => {
            let vals: Result<Vec<Estimate>> = d.iter().map(|p| c(p.norm())).collect();
            let vals = vals?;
            let n = vals.len() as f64;
            let mean = vals.iter().map(|e| e.value).sum::<f64>() / n;
            let var = vals.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let quad = vals.iter().map(|e| e.error).sum::<f64>() / n;
            Ok(KernelMean {
                value: mean,
                quad_err: quad,
                mc_err: (var / n).sqrt(),
            })
        }
    }
}

/// Lattice images per axis in the periodized autocorrelation.
const IMAGES: i32 = 2;
/// Rings wider than this many torus sides count as fully mixed.
const MIXED_RINGS: f64 = 8.0;
/// Radial and angular nodes of the polar grid for Gaussian laws on a torus.
const GRID_NODES: usize = 64;

/// The torus on which `C` is periodized. `uniform` is the fully mixed value
/// `F²/A`, the mean of the periodized `C` over the torus.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Periodic {
    side: f64,
    uniform: f64,
}

impl Periodic {
    pub(crate) fn of(domain: &Domain, f_int: f64) -> Option<Self> {
        match *domain {
            Domain::Torus { side, .. } => Some(Self {
                side,
                uniform: f_int * f_int / (side * side),
            }),
            Domain::Plane => None,
        }
    }

    /// Largest plane separation read by the image sums.
    fn reach(&self) -> f64 {
        (MIXED_RINGS + IMAGES as f64 + 1.0) * self.side * SQRT_2
    }

    fn mixed(&self) -> KernelMean {
        KernelMean {
            value: self.uniform,
            quad_err: 0.0,
            mc_err: 0.0,
        }
    }

    /// `Σ_k C(|d + k·side|)` over the nearest images of the wrapped `d`.
    fn at<C: Fn(f64) -> Result<Estimate>>(&self, c: &C, dx: f64, dy: f64) -> Result<Estimate> {
        let l = self.side;
        let (dx, dy) = (dx - l * (dx / l).round(), dy - l * (dy / l).round());
        let mut acc = Estimate { value: 0.0, error: 0.0 };
        for i in -IMAGES..=IMAGES {
            for j in -IMAGES..=IMAGES {
                let e = c((dx + i as f64 * l).hypot(dy + j as f64 * l))?;
                acc.value += e.value;
                acc.error += e.error;
            }
        }
        Ok(acc)
    }
}

/// `E[C_T(D)]` for the periodized `C_T`. The lattice is symmetric under the
/// dihedral group of the square, so angles are read on `[0, π/4]` only.
fn torus_kernel_mean<C: Fn(f64) -> Result<Estimate>>(
    law: &DisplacementLaw,
    c: C,
    tol: Tolerance,
    per: Periodic,
) -> Result<KernelMean> {
    let l = per.side;
    match law {
        DisplacementLaw::Dirac => {
            let e = per.at(&c, 0.0, 0.0)?;
            Ok(KernelMean {
                value: e.value,
                quad_err: e.error,
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Ring(r) => {
            let r = *r;
            if r > MIXED_RINGS * l {
                return Ok(per.mixed());
            }
            // the ring passes close to lattice points at these angles
            let reach = (r / l).ceil() as i32 + 1;
            let mut breaks = Vec::new();
            for i in 1..=reach {
                for j in 0..=i {
                    let dist = (i as f64).hypot(j as f64) * l;
                    if (dist - r).abs() < l {
                        breaks.push((j as f64).atan2(i as f64));
                    }
                }
            }
            let failure: Cell<Option<Error>> = Cell::new(None);
            let inner_err = Cell::new(0.0f64);
            let e = integrate(
                |t| match per.at(&c, r * t.cos(), r * t.sin()) {
                    Ok(e) => {
                        inner_err.set(inner_err.get().max(e.error));
                        e.value
                    }
                    Err(err) => {
                        failure.set(Some(err));
                        0.0
                    }
                },
                0.0,
                FRAC_PI_4,
                &breaks,
                tol,
            );
            if let Some(err) = failure.take() {
                return Err(err);
            }
            let e = e?;
            Ok(KernelMean {
                value: e.value / FRAC_PI_4,
                quad_err: e.error / FRAC_PI_4 + inner_err.get(),
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Gaussian(sd) => {
            let sd = *sd;
            if 12.0 * sd < 0.5 * l {
                // images sit at least half a side away from the bulk
                return kernel_mean_with(law, |r| per.at(&|x: f64| c(x), r, 0.0), tol);
            }
            if sd > l {
                return Ok(per.mixed());
            }
            // midpoint grid in the Rayleigh quantile and the angle
            let grid = |n: usize| -> Result<Estimate> {
                let mut acc = Estimate { value: 0.0, error: 0.0 };
                for i in 0..n {
                    let u = (i as f64 + 0.5) / n as f64;
                    let rho = sd * (-2.0 * (-u).ln_1p()).sqrt();
                    for j in 0..n {
                        let t = (j as f64 + 0.5) / n as f64 * FRAC_PI_4;
                        let e = per.at(&c, rho * t.cos(), rho * t.sin())?;
                        acc.value += e.value;
                        acc.error = acc.error.max(e.error);
                    }
                }
                acc.value /= (n * n) as f64;
                Ok(acc)
            };
            let fine = grid(GRID_NODES)?;
            let coarse = grid(GRID_NODES / 2)?;
            Ok(KernelMean {
                value: fine.value,
                quad_err: (fine.value - coarse.value).abs() + fine.error,
                mc_err: 0.0,
            })
        }
        DisplacementLaw::Sample(d) => {
            let vals: Result<Vec<Estimate>> = d.iter().map(|p| per.at(&c, p.x, p.y)).collect();
            let vals = vals?;
            let n = vals.len() as f64;
            let mean = vals.iter().map(|e| e.value).sum::<f64>() / n;
            let var = vals.iter().map(|e| (e.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let quad = vals.iter().map(|e| e.error).sum::<f64>() / n;
            Ok(KernelMean {
                value: mean,
                quad_err: quad,
                mc_err: (var / n).sqrt(),
            })
        }
    }
}

fn max_displacement(law: &DisplacementLaw) -> f64 {
    match law {
        DisplacementLaw::Dirac => 0.0,
        DisplacementLaw::Ring(r) => *r,
        DisplacementLaw::Gaussian(sd) => 12.0 * sd,
        DisplacementLaw::Sample(d) => d.iter().map(|p| p.norm()).fold(0.0, f64::max),
    }
}

/// Plane cutoff for an autocorrelation of the level-crossing profile.
fn profile_cutoff(params: &SystemParams, q: &QuadratureSpec) -> f64 {
    let c = params.s() * params.interferer_fading.mean();
    q.cutoff.unwrap_or_else(|| params.tail_cutoff(c, 0.1 * q.tol.abs))
}

/// `E_ρ[C(ρ)]` for the level-crossing profile. Ring and Dirac laws are
/// exact; Gaussian laws integrate `C` against the Rayleigh density of `|D|`;
/// sampled laws go through an interpolation table.
/// On a torus `C` is periodized over the lattice and read from a table.
pub(crate) fn profile_kernel_mean(
    params: &SystemParams,
    law: &DisplacementLaw,
    f_int: f64,
    q: &QuadratureSpec,
) -> Result<KernelMean> {
    let f = params.profile_fn();
    let ac = Autocorrelation::new(&f, profile_cutoff(params, q), kinks(&params.path_loss), q.tol);
    autocorr_kernel_mean(&ac, law, q.tol, Periodic::of(&params.domain, f_int))
}

fn autocorr_kernel_mean(
    ac: &Autocorrelation<'_>,
    law: &DisplacementLaw,
    tol: Tolerance,
    per: Option<Periodic>,
) -> Result<KernelMean> {
    if let Some(per) = per {
        let table = AutocorrTable::build(ac, max_displacement(law).max(per.reach()), TABLE_POINTS)?;
        return torus_kernel_mean(law, |r| Ok(table.eval(r)), tol, per);
    }
    match law {
        DisplacementLaw::Sample(_) => {
            let table = AutocorrTable::build(ac, max_displacement(law), TABLE_POINTS)?;
            kernel_mean_with(law, |r| Ok(table.eval(r)), tol)
        }
        DisplacementLaw::Gaussian(_) => {
            let outer = Tolerance::new(tol.abs, tol.rel.max(1e-8));
            kernel_mean_with(law, |r| ac.at(r), outer)
        }
        _ => kernel_mean_with(law, |r| ac.at(r), tol),
    }
}

/// `ln(P(L_t, L_{t+τ}) / P(L_t)²)` from `F` and `E C`, with its
/// derivative in `E C`.
pub(crate) fn log_gain_from(params: &SystemParams, f_int: f64, ec: f64) -> (f64, f64) {
    match params.domain {
        Domain::Torus { side, count: Some(n) } => {
            let a = side * side;
            let frac = f_int / a;
            let den = (1.0 - frac) * (1.0 - frac);
            let x = (ec / a - frac * frac) / den;
            let n = n as f64;
            (n * x.ln_1p(), n / (a * den * (1.0 + x)))
        }
        _ => (params.intensity * ec, params.intensity),
    }
}

fn prepared(params: &SystemParams, kernel: &MobilityKernel, q: &QuadratureSpec) -> Result<(Estimate, KernelMean)> {
    params.validate()?;
    let kernel = kernel.clone().with_sampling(q.kernel_samples, q.kernel_seed);
    let f_int = profile_integral(params, q)?;
    let ec = profile_kernel_mean(params, &kernel.displacement_law(), f_int.value, q)?;
    Ok((f_int, ec))
}

fn gain_estimate(params: &SystemParams, f_int: &Estimate, ec: &KernelMean) -> Estimate {
    let (lg, dlg) = log_gain_from(params, f_int.value, ec.value);
    let g = lg.exp();
    let err = dlg * ec.quad_err.hypot(ec.mc_err);
    Estimate {
        value: g,
        error: g * err,
    }
}

/// `P(L_t, L_{t+τ})` for a kernel over lag `τ`: `P(L_t)² · exp(Λ E_ρ[C(ρ)])`
/// with `C` the autocorrelation of `f = 1 − L_h(s l(·))`.
pub fn joint_level_crossing(params: &SystemParams, kernel: &MobilityKernel, q: &QuadratureSpec) -> Result<Estimate> {
    if params.intensity == 0.0 || matches!(params.domain, Domain::Torus { count: Some(0), .. }) {
        params.validate()?;
        return Ok(Estimate::exact(params.noise_factor().powi(2)));
    }
    let (f_int, ec) = prepared(params, kernel, q)?;
    let (lp, dlp) = log_prob_from(params, f_int.value)?;
    let g = gain_estimate(params, &f_int, &ec);
    let j = (2.0 * lp).exp() * g.value;
    Ok(Estimate {
        value: j,
        error: j * (2.0 * dlp * f_int.error) + (2.0 * lp).exp() * g.error,
    })
}

/// `P(L_t, L_{t+τ}) = e^{−2γs} exp(−Λ ∫ (1 − a(x) ∫ a(y) p(x, dy)) dx)`,
/// `a = L_h(s l(·))`, evaluated pointwise. Poisson interferers in the plane only.
pub fn joint_level_crossing_direct(
    params: &SystemParams,
    kernel: &MobilityKernel,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    params.validate()?;
    if params.domain != Domain::Plane {
        return Err(Error::param(
            "the pointwise joint formula is implemented for the plane only",
        ));
    }
    let noise2 = params.noise_factor().powi(2);
    if params.intensity == 0.0 {
        return Ok(Estimate::exact(noise2));
    }
    let kernel = kernel.clone().with_sampling(q.kernel_samples, q.kernel_seed);
    let law = kernel.displacement_law();
    let f = params.profile_fn();
    let kinks = kinks(&params.path_loss);
    let inner_tol = Tolerance::new(1e-15, 0.1 * q.tol.rel);
    let sample_tol = Tolerance::new(1e-13, 1e-8);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let fail = |e: Error| {
        failure.set(Some(e));
        0.0
    };
    // b(u) = ∫ f(|y|) p(x, dy) for |x| = u
    let b = |u: f64| -> f64 {
        match &law {
            DisplacementLaw::Dirac => f(u),
            DisplacementLaw::Ring(r) => ring_average(&f, u, *r, inner_tol).map(|e| e.value).unwrap_or_else(fail),
            DisplacementLaw::Gaussian(sd) => {
                // Rice density of |x + D|
                let s2 = sd * sd;
                let lo = (u - 12.0 * sd).max(0.0);
                let hi = u + 12.0 * sd;
                let mut br = vec![u];
                br.extend(kinks.iter().copied());
                br.extend(rayleigh_breaks(*sd).iter().map(|k| u + k));
                br.extend(rayleigh_breaks(*sd).iter().map(|k| u - k));
                integrate(
                    |r| {
                        let z = r - u;
                        f(r) * r / s2 * (-0.5 * z * z / s2).exp() * bessel_i0e(r * u / s2)
                    },
                    lo,
                    hi,
                    &br,
                    inner_tol,
                )
                .map(|e| e.value)
                .unwrap_or_else(fail)
            }
            // the sampled norms with uniform directions: isotropic by construction
            DisplacementLaw::Sample(d) => {
                let mut acc = 0.0;
                for dy in d {
                    match ring_average(&f, u, dy.norm(), sample_tol) {
                        Ok(e) => acc += e.value,
                        Err(e) => return fail(e),
                    }
                }
                acc / d.len() as f64
            }
        }
    };
    let c = params.s() * params.interferer_fading.mean();
    let spread = max_displacement(&law);
    let mut qq = *q;
    qq.cutoff = Some(profile_cutoff(params, q) + spread);
    let integral = radial_integral(
        params,
        |u| {
            let fu = f(u);
            let bu = b(u);
            fu + bu - fu * bu
        },
        c,
        &qq,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let integral = integral?;
    let j = noise2 * (-params.intensity * integral.value).exp();
    Ok(Estimate {
        value: j,
        error: j * params.intensity * integral.error,
    })
}

/// `P(L_{t+τ} | L_t) / P(L_t)`, i.e. `exp(Λ ∫ f(x) ∫ f(y) p(x, dy) dx)`.
///
/// For Poisson interferers in the plane the value is cross-checked against
/// `joint / P²` from the pointwise formula; disagreement beyond the combined
/// quadrature error is reported as a numerical error.
pub fn conditional_gain(params: &SystemParams, kernel: &MobilityKernel, q: &QuadratureSpec) -> Result<Estimate> {
    params.validate()?;
    if params.intensity == 0.0 || matches!(params.domain, Domain::Torus { count: Some(0), .. }) {
        return Ok(Estimate::exact(1.0));
    }
    let (f_int, ec) = prepared(params, kernel, q)?;
    let g = gain_estimate(params, &f_int, &ec);
    if params.domain == Domain::Plane {
        let direct = joint_level_crossing_direct(params, kernel, q)?;
        let (lp, dlp) = log_prob_from(params, f_int.value)?;
        let lg_direct = direct.value.ln() - 2.0 * lp;
        let lg = g.value.ln();
        let allowed = 10.0 * (params.intensity * ec.quad_err + direct.error / direct.value + 2.0 * dlp * f_int.error)
            + 1e-9 * lg.abs().max(1.0);
        let diff = (lg - lg_direct).abs();
        if diff > allowed {
            return Err(Error::numerical("conditional gain consistency check", diff));
        }
    }
    Ok(g)
}

/// Correlation coefficient of the shot noise between `t` and `t + τ`:
/// `∫ l(x) ∫ l(y) p(x, dy) dx / (E[h²] ∫ l²)`.
pub fn corr_coefficient(
    kernel: &MobilityKernel,
    path_loss: &PathLoss,
    second_moment: f64,
    q: &QuadratureSpec,
) -> Result<Estimate> {
    if !(second_moment > 0.0 && second_moment.is_finite()) {
        return Err(Error::param("fade second moment must be positive"));
    }
    let sup = path_loss.gain(0.0);
    if !sup.is_finite() {
        return Err(Error::Divergent("∫ l² is infinite for an unbounded path loss".into()));
    }
    let l = |u: f64| path_loss.gain(u);
    let cutoff = q
        .cutoff
        .unwrap_or_else(|| radial_tail_cutoff(path_loss, sup.max(1e-300), 0.1 * q.tol.abs));
    let ac = Autocorrelation::new(&l, cutoff, kinks(path_loss), q.tol);
    let c0 = ac.at(0.0)?;
    let kernel = kernel.clone().with_sampling(q.kernel_samples, q.kernel_seed);
    let law = kernel.displacement_law();
    if law == DisplacementLaw::Dirac {
        return Ok(Estimate::exact(1.0 / second_moment));
    }
    let num = autocorr_kernel_mean(&ac, &law, q.tol, None)?;
    let r = num.value / c0.value;
    Ok(Estimate {
        value: r / second_moment,
        error: (num.quad_err.hypot(num.mc_err) / c0.value + r * c0.error / c0.value) / second_moment,
    })
}

/// `P(L_t, L_{t+τ})` as a function of the lag for one mobility model,
/// backed by a table of `C`. Built once per parameter set and queried at
/// many lags by the covariance series.
pub struct JointCurve {
    params: SystemParams,
    model: MobilityModel,
    f_int: Estimate,
    log_p: f64,
    table: AutocorrTable,
    samples: usize,
    seed: u64,
    tol: Tolerance,
    /// Log gains by lag; the covariance series revisits lags.
    cache: Mutex<HashMap<u64, f64>>,
}

impl JointCurve {
    /// `max_lag` sizes the table; longer lags extrapolate its power-law tail.
    pub fn new(params: &SystemParams, model: MobilityModel, max_lag: f64, q: &QuadratureSpec) -> Result<Self> {
        params.validate()?;
        let f_int = profile_integral(params, q)?;
        let (log_p, _) = log_prob_from(params, f_int.value)?;
        let kernel = MobilityKernel::new(model, max_lag)?.with_sampling(q.kernel_samples, q.kernel_seed);
        let reach = match model {
            MobilityModel::RandomWaypoint { speed, .. } => speed * max_lag,
            _ => max_displacement(&kernel.displacement_law()),
        };
        let reach = match Periodic::of(&params.domain, f_int.value) {
            Some(per) => reach.max(per.reach()),
            None => reach,
        };
        let f = params.profile_fn();
        let ac = Autocorrelation::new(&f, profile_cutoff(params, q), kinks(&params.path_loss), q.tol);
        let table = AutocorrTable::build(&ac, reach, TABLE_POINTS)?;
        Ok(Self {
            params: params.clone(),
            model,
            f_int,
            log_p,
            table,
            samples: q.kernel_samples,
            seed: q.kernel_seed,
            tol: q.tol,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn model(&self) -> &MobilityModel {
        &self.model
    }

    /// `P(L_t)`.
    pub fn prob(&self) -> f64 {
        self.log_p.exp()
    }

    pub fn log_gain(&self, lag: f64) -> Result<f64> {
        if self.params.intensity == 0.0 {
            return Ok(0.0);
        }
        let law = MobilityKernel::new(self.model, lag)?
            .with_sampling(self.samples, self.seed)
            .displacement_law();
        let key = lag.to_bits();
        if let Some(&g) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(g);
        }
        let tol = Tolerance::new(self.tol.abs, 1e-8);
        let ec = match Periodic::of(&self.params.domain, self.f_int.value) {
            // only the value is used here, so skip the coarse-grid error
            Some(per) => {
                let tol = Tolerance::new(self.tol.abs, 1e-6);
                torus_kernel_mean(&law, |r| Ok(Estimate::exact(self.table.interp(r, 1))), tol, per)?
            }
            None => kernel_mean_with(&law, |r| Ok(self.table.eval(r)), tol)?,
        };
        let g = log_gain_from(&self.params, self.f_int.value, ec.value).0;
        self.cache.lock().expect("cache lock").insert(key, g);
        Ok(g)
    }

    /// `P(L_t, L_{t+τ}) − P(L_t)²`, without cancellation.
    pub fn excess(&self, lag: f64) -> Result<f64> {
        let p = self.prob();
        Ok(p * p * self.log_gain(lag)?.exp_m1())
    }

    pub fn joint(&self, lag: f64) -> Result<f64> {
        let p = self.prob();
        Ok(p * p * self.log_gain(lag)?.exp())
    }
}

/// Total squared profile mass, `∫ f²`, exposed for tests of the static limit.
#[cfg(test)]
fn static_profile_square(params: &SystemParams, q: &QuadratureSpec) -> f64 {
    let f = params.profile_fn();
    let c = params.s() * params.interferer_fading.mean();
    radial_integral(params, |u| f(u) * f(u), c, q).unwrap().value
}
