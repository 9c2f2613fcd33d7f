//! Planar point configurations on a wrapped square arena.
//!
//! The arena is `[0, side)²` with opposite edges identified. The receiver of
//! interest sits at the origin of this frame; with the minimal-image metric
//! the origin behaves like the centre of a `side × side` window of ℝ².
//!
//! Wrap effects are negligible when `l(side / 2)` is far below `l(R) / T`
//! for the path loss `l`, link distance `R` and SINR threshold `T` in use.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    side: f64,
}

impl Arena {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::param(format!("arena side must be positive, got {side}")));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    /// Simulation arenas always wrap.
    pub fn wraps(&self) -> bool {
        true
    }

    #[inline]
    pub fn wrap_coord(&self, c: f64) -> f64 {
        let w = c.rem_euclid(self.side);
        // rem_euclid can round up to exactly `side` for tiny negative inputs
        if w >= self.side {
            0.0
        } else {
            w
        }
    }

    #[inline]
    pub fn wrap(&self, p: Point) -> Point {
        Point::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..self.side).contains(&p.x) && (0.0..self.side).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(r * c, r * s)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Minimal-image distance on the torus.
#[inline]
pub fn torus_distance(p: Point, q: Point, arena: &Arena) -> f64 {
    torus_distance_sq(p, q, arena).sqrt()
}

#[inline]
pub fn torus_distance_sq(p: Point, q: Point, arena: &Arena) -> f64 {
    let side = arena.side;
    let mut dx = (p.x - q.x).abs();
    let mut dy = (p.y - q.y).abs();
    // inputs inside the arena give dx < side, so one fold is enough
    if dx > 0.5 * side {
        dx = side - dx;
    }
    if dy > 0.5 * side {
        dy = side - dy;
    }
    dx * dx + dy * dy
}

/// Positions of the interferers at one instant. Indices are stable identities
/// for the lifetime of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    points: Vec<Point>,
    arena: Arena,
}

impl PointConfiguration {
    pub fn new(points: Vec<Point>, arena: Arena) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !arena.contains(**p)) {
            return Err(Error::param(format!(
                "point ({}, {}) lies outside the arena [0, {})²",
                p.x, p.y, arena.side
            )));
        }
        Ok(Self { points, arena })
    }

    /// Wraps every point into the arena first.
    pub fn wrapped(points: impl IntoIterator<Item = Point>, arena: Arena) -> Self {
        let points = points.into_iter().map(|p| arena.wrap(p)).collect();
        Self { points, arena }
    }

    pub fn empty(arena: Arena) -> Self {
        Self {
            points: Vec::new(),
            arena,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points per unit area.
    pub fn empirical_intensity(&self) -> f64 {
        self.points.len() as f64 / self.arena.area()
    }

    /// Counts on a `k × k` grid of equal boxes; `counts[row][col]` with rows
    /// along y.
    pub fn box_counts(&self, k: usize) -> Result<Vec<Vec<u64>>> {
        if k == 0 {
            return Err(Error::param("box grid needs k >= 1"));
        }
        let mut counts = vec![vec![0u64; k]; k];
        let cell = self.arena.side / k as f64;
        for p in &self.points {
            let col = ((p.x / cell) as usize).min(k - 1);
            let row = ((p.y / cell) as usize).min(k - 1);
            counts[row][col] += 1;
        }
        Ok(counts)
    }
}

/// Homogeneous Poisson point process of the given intensity on the arena.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, arena: Arena, rng: &mut R) -> Result<PointConfiguration> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::param(format!("intensity must be non-negative, got {intensity}")));
    }
    let mean = intensity * arena.area();
    let n = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::param(e.to_string()))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    Ok(sample_uniform(n, arena, rng))
}

/// `n` i.i.d. uniform points: a Poisson process conditioned on its count.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, arena: Arena, rng: &mut R) -> PointConfiguration {
    let side = arena.side;
    let points = (0..n)
        .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
        .map(|p| arena.wrap(p))
        .collect();
    PointConfiguration { points, arena }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, Streams};
    use proptest::prelude::*;

    fn arena100() -> Arena {
        Arena::new(100.0).unwrap()
    }

    #[test]
    fn torus_distance_examples() {
        let a = arena100();
        assert_eq!(torus_distance(Point::new(0.0, 0.0), Point::new(99.0, 0.0), &a), 1.0);
        assert_eq!(torus_distance(Point::new(3.0, 4.0), Point::new(3.0, 4.0), &a), 0.0);
        let d = torus_distance(Point::new(0.0, 0.0), Point::new(50.0, 50.0), &a);
        assert!((d - 50.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_intensity_gives_empty_configuration() {
        let mut rng = Streams::new(1).stream(0, Purpose::Placement);
        let c = sample_ppp(0.0, arena100(), &mut rng).unwrap();
        assert!(c.is_empty());
        assert!(sample_ppp(-0.1, arena100(), &mut rng).is_err());
    }

    #[test]
    fn box_counts_trivial_cases() {
        let a = arena100();
        let empty = PointConfiguration::empty(a);
        assert!(empty.box_counts(4).unwrap().iter().flatten().all(|&c| c == 0));
        let one = PointConfiguration::new(vec![Point::new(10.0, 20.0)], a).unwrap();
        assert_eq!(one.box_counts(1).unwrap(), vec![vec![1]]);
        assert!(one.box_counts(0).is_err());
    }

    #[test]
    fn rejects_points_outside_arena() {
        assert!(PointConfiguration::new(vec![Point::new(100.0, 1.0)], arena100()).is_err());
    }

    #[test]
    fn wrap_handles_negative_and_large_coordinates() {
        let a = arena100();
        let p = a.wrap(Point::new(-1e-18, 250.5));
        assert!(a.contains(p));
        assert!((p.y - 50.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_intensity_is_within_poisson_band() {
        // |est - Λ| ≤ 4 sqrt(Λ / area)
        let a = arena100();
        let s = Streams::new(11);
        for rep in 0..200 {
            let c = sample_ppp(0.1, a, &mut s.stream(rep, Purpose::Placement)).unwrap();
            let band = 4.0 * (0.1 / a.area()).sqrt();
            assert!((c.empirical_intensity() - 0.1).abs() <= band, "rep {rep}");
        }
    }

    proptest! {
        #[test]
        fn torus_metric_properties(
            ax in 0.0..100.0f64, ay in 0.0..100.0f64,
            bx in 0.0..100.0f64, by in 0.0..100.0f64,
            cx in 0.0..100.0f64, cy in 0.0..100.0f64,
        ) {
            let ar = arena100();
            let (p, q, r) = (Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy));
            let pq = torus_distance(p, q, &ar);
            prop_assert_eq!(pq, torus_distance(q, p, &ar));
            prop_assert!(pq <= (p - q).norm() + 1e-12);
            prop_assert!(pq <= torus_distance(p, r, &ar) + torus_distance(r, q, &ar) + 1e-9);
            // minimum over the nine periodic images
            let mut best = f64::INFINITY;
            for i in -1..=1 {
                for j in -1..=1 {
                    let img = Point::new(q.x + 100.0 * i as f64, q.y + 100.0 * j as f64);
                    best = best.min((p - img).norm());
                }
            }
            prop_assert!((pq - best).abs() < 1e-9);
        }

        #[test]
        fn box_counts_are_additive(seed in 0u64..1000, k in 1usize..12) {
            let mut rng = Streams::new(seed).stream(0, Purpose::Placement);
            let c = sample_ppp(0.05, arena100(), &mut rng).unwrap();
            let total: u64 = c.box_counts(k).unwrap().iter().flatten().sum();
            prop_assert_eq!(total as usize, c.len());
        }
    }
}
