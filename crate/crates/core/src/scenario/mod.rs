//! Synthetic propagation scenes.
//!
//! A [`Scene`] is a transmitter, a set of box-shaped scatterers standing on
//! flat ground, and an ordered receiver route. [`ground_truth_path_loss`]
//! plays the role of a ray tracer and [`extract_features`] derives the ten
//! candidate environment features for every route point.

mod features;
mod geometry;
mod propagation;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use features::{
    blockers, extract_features, extract_features_with, Category, FeatureCatalog, FeatureEntry,
    FeatureParams, FeatureVector, N_FEATURES,
};
pub use geometry::{point_segment_distance, segment_box_interval, Point2, Point3, Rect};
pub use propagation::{
    fresnel_parameter, fspl_db, ground_truth_path_loss, knife_edge_loss_db, Blocker,
    EDGE_LOSS_CAP_DB, SPEED_OF_LIGHT,
};

/// Box-shaped scatterer standing on the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub center: Point2,
    /// Extent along x, meters.
    pub width: f64,
    /// Extent along y, meters.
    pub depth: f64,
    pub height: f64,
}

impl Scatterer {
    pub fn volume(&self) -> f64 {
        self.width * self.depth * self.height
    }

    pub fn footprint(&self) -> Rect {
        Rect {
            min: Point2::new(
                self.center.x - self.width / 2.0,
                self.center.y - self.depth / 2.0,
            ),
            max: Point2::new(
                self.center.x + self.width / 2.0,
                self.center.y + self.depth / 2.0,
            ),
        }
    }

    /// 3D corners `(lo, hi)` of the box.
    pub fn corners(&self) -> (Point3, Point3) {
        let fp = self.footprint();
        (fp.min.with_height(0.0), fp.max.with_height(self.height))
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.z >= 0.0 && p.z <= self.height && self.footprint().contains(p.ground())
    }

    /// Parameter interval of the segment `a`–`b` inside this box.
    pub fn segment_interval(&self, a: Point3, b: Point3) -> Option<(f64, f64)> {
        let (lo, hi) = self.corners();
        segment_box_interval(a, b, lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub tx_position: Point3,
    pub scatterers: Vec<Scatterer>,
    /// Route order defines the path-loss sequence.
    pub rx_route: Vec<Point3>,
    /// Hz.
    pub carrier_frequency: f64,
    pub area_bounds: Rect,
    pub seed: u64,
    /// Standard deviation of the log-normal shadowing term, dB.
    pub shadowing_sigma_db: f64,
}

impl Scene {
    pub fn route_len(&self) -> usize {
        self.rx_route.len()
    }

    pub fn rx(&self, index: usize) -> Result<Point3> {
        self.rx_route.get(index).copied().ok_or(Error::RouteIndex {
            index,
            len: self.rx_route.len(),
        })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Checks the structural invariants of a scene.
    pub fn validate(&self) -> Result<()> {
        if self.rx_route.len() < 2 {
            return Err(Error::SceneConfig("route needs at least 2 points".into()));
        }
        if self.rx_route.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::SceneConfig("consecutive route points coincide".into()));
        }
        if self.tx_position.z <= 0.0 {
            return Err(Error::SceneConfig("tx height must be positive".into()));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::SceneConfig("carrier frequency must be positive".into()));
        }
        for (i, s) in self.scatterers.iter().enumerate() {
            if !(s.width > 0.0 && s.depth > 0.0 && s.height > 0.0) {
                return Err(Error::SceneConfig(format!(
                    "scatterer {i} has non-positive dimensions"
                )));
            }
            if !self.area_bounds.contains_rect(&s.footprint()) {
                return Err(Error::SceneConfig(format!(
                    "scatterer {i} lies outside the area bounds"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(s)?;
        scene.validate()?;
        Ok(scene)
    }
}

/// Placement pattern for scatterers, transmitter and receiver route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Scatterers anywhere in the area; random straight route.
    Random,
    /// Two orthogonal scatterer-free corridors through dense blocks. The
    /// route runs down one corridor and turns into the other.
    Intersection,
    /// Open central square ringed by scatterers; the route crosses it.
    Square,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub layout: Layout,
    /// Area (width, depth) in meters, centered on the origin.
    pub area_size: (f64, f64),
    /// Inclusive range for the number of scatterers.
    pub scatterer_count: (usize, usize),
    pub height_range: (f64, f64),
    /// Range for each footprint side, meters.
    pub footprint_range: (f64, f64),
    pub route_points: usize,
    pub carrier_frequency: f64,
    pub tx_height: f64,
    pub rx_height: f64,
    pub shadowing_sigma_db: f64,
    /// Minimum ground distance between a scatterer footprint and the Tx or any route point.
    pub clearance: f64,
    pub max_retries: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            layout: Layout::Random,
            area_size: (500.0, 500.0),
            scatterer_count: (20, 30),
            height_range: (8.0, 35.0),
            footprint_range: (12.0, 35.0),
            route_points: 200,
            carrier_frequency: 3.5e9,
            tx_height: 25.0,
            rx_height: 1.5,
            shadowing_sigma_db: 3.0,
            clearance: 2.0,
            max_retries: 2000,
        }
    }
}

impl SceneConfig {
    /// Dense blocks with two crossing streets.
    pub fn intersection() -> Self {
        SceneConfig {
            layout: Layout::Intersection,
            scatterer_count: (45, 60),
            height_range: (10.0, 40.0),
            footprint_range: (15.0, 35.0),
            tx_height: 25.0,
            ..Default::default()
        }
    }

    /// Open square with perimeter buildings.
    pub fn square() -> Self {
        SceneConfig {
            layout: Layout::Square,
            scatterer_count: (30, 45),
            height_range: (8.0, 30.0),
            footprint_range: (15.0, 35.0),
            tx_height: 20.0,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SceneConfig(m.to_string()));
        if !(self.area_size.0 > 0.0 && self.area_size.1 > 0.0) {
            return bad("area size must be positive");
        }
        if self.scatterer_count.0 > self.scatterer_count.1 {
            return bad("scatterer count range is inverted");
        }
        if !(self.height_range.0 > 0.0 && self.height_range.0 <= self.height_range.1) {
            return bad("height range must be positive and ordered");
        }
        if !(self.footprint_range.0 > 0.0 && self.footprint_range.0 <= self.footprint_range.1) {
            return bad("footprint range must be positive and ordered");
        }
        if self.footprint_range.1 >= self.area_size.0.min(self.area_size.1) {
            return bad("footprint range exceeds the area");
        }
        if self.route_points < 2 {
            return bad("route needs at least 2 points");
        }
        if self.carrier_frequency.is_nan() || self.carrier_frequency <= 0.0 {
            return bad("carrier frequency must be positive");
        }
        if self.tx_height.is_nan() || self.tx_height <= 0.0 {
            return bad("tx height must be positive");
        }
        if self.rx_height.is_nan() || self.rx_height < 0.0 || self.rx_height == self.tx_height {
            return bad("rx height must be non-negative and differ from tx height");
        }
        if self.shadowing_sigma_db.is_nan() || self.shadowing_sigma_db < 0.0 {
            return bad("shadowing sigma must be non-negative");
        }
        Ok(())
    }

    fn bounds(&self) -> Rect {
        Rect::centered(self.area_size.0, self.area_size.1)
    }

    /// Half-width of the street corridors in the intersection layout.
    fn corridor_half_width(&self) -> f64 {
        0.06 * self.area_size.0.min(self.area_size.1)
    }

    /// Radius of the open plaza in the square layout.
    fn plaza_radius(&self) -> f64 {
        0.28 * self.area_size.0.min(self.area_size.1)
    }

    fn place_tx_and_route(&self, rng: &mut impl Rng) -> Result<(Point3, Vec<Point3>)> {
        let (w, d) = self.area_size;
        let (tx, waypoints) = match self.layout {
            Layout::Intersection => (
                Point2::new(-0.36 * w, 0.016 * d),
                vec![
                    Point2::new(-0.24 * w, -0.01 * d),
                    Point2::new(0.01 * w, -0.01 * d),
                    Point2::new(0.01 * w, 0.40 * d),
                ],
            ),
            Layout::Square => (
                Point2::new(-0.08 * w, 0.12 * d),
                vec![Point2::new(-0.46 * w, -0.05 * d), Point2::new(0.46 * w, -0.05 * d)],
            ),
            Layout::Random => {
                let inner = Rect::centered(0.9 * w, 0.9 * d);
                fn draw(rng: &mut impl Rng, r: &Rect) -> Point2 {
                    Point2::new(
                        rng.random_range(r.min.x..=r.max.x),
                        rng.random_range(r.min.y..=r.max.y),
                    )
                }
                let tx = draw(rng, &inner);
                let min_len = 0.3 * w.min(d);
                let mut attempt = 0;
                let (a, b) = loop {
                    let (a, b) = (draw(rng, &inner), draw(rng, &inner));
                    if a.distance(b) >= min_len {
                        break (a, b);
                    }
                    attempt += 1;
                    if attempt >= self.max_retries {
                        return Err(Error::Placement {
                            constraint: "route length".into(),
                            placed: 0,
                            wanted: 0,
                            retries: attempt,
                        });
                    }
                };
                (tx, vec![a, b])
            }
        };
        let route = resample_polyline(&waypoints, self.route_points)
            .into_iter()
            .map(|p| p.with_height(self.rx_height))
            .collect();
        Ok((tx.with_height(self.tx_height), route))
    }

    /// Layout-specific exclusion zone for scatterer footprints.
    fn excluded(&self, fp: &Rect) -> bool {
        match self.layout {
            Layout::Random => false,
            Layout::Intersection => {
                let h = self.corridor_half_width();
                let street_x = Rect {
                    min: Point2::new(f64::NEG_INFINITY, -h),
                    max: Point2::new(f64::INFINITY, h),
                };
                let street_y = Rect {
                    min: Point2::new(-h, f64::NEG_INFINITY),
                    max: Point2::new(h, f64::INFINITY),
                };
                fp.intersects(&street_x) || fp.intersects(&street_y)
            }
            Layout::Square => {
                let r = self.plaza_radius();
                // closest footprint point to the plaza center
                let cx = 0f64.clamp(fp.min.x, fp.max.x);
                let cy = 0f64.clamp(fp.min.y, fp.max.y);
                cx.hypot(cy) < r
            }
        }
    }
}

/// `n` points equally spaced by arc length along a polyline.
fn resample_polyline(waypoints: &[Point2], n: usize) -> Vec<Point2> {
    let lengths: Vec<f64> = waypoints.windows(2).map(|w| w[0].distance(w[1])).collect();
    let total: f64 = lengths.iter().sum();
    (0..n)
        .map(|i| {
            let mut s = total * i as f64 / (n - 1) as f64;
            for (k, len) in lengths.iter().enumerate() {
                if s <= *len || k == lengths.len() - 1 {
                    let t = if *len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                    return waypoints[k].lerp(waypoints[k + 1], t);
                }
                s -= len;
            }
            unreachable!("polyline has at least one segment")
        })
        .collect()
}

/// Generates a scene deterministically from `(config, seed)`.
///
/// Scatterers are rejection-sampled: a proposal must lie inside the area,
/// keep `clearance` from the Tx and every route point, avoid the layout's
/// open space and not overlap earlier scatterers.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = seed::rng(seed, &[seed::label("scene")]);
    let bounds = config.bounds();
    let (tx, route) = config.place_tx_and_route(&mut rng)?;

    let (lo, hi) = config.scatterer_count;
    let wanted = rng.random_range(lo..=hi);
    let mut scatterers: Vec<Scatterer> = Vec::with_capacity(wanted);
    let mut failures: BTreeMap<&'static str, usize> = BTreeMap::new();
    let (fmin, fmax) = config.footprint_range;
    let (hmin, hmax) = config.height_range;

    while scatterers.len() < wanted {
        let mut placed = false;
        for _ in 0..config.max_retries {
            let width = rng.random_range(fmin..=fmax);
            let depth = rng.random_range(fmin..=fmax);
            let height = rng.random_range(hmin..=hmax);
            let center = Point2::new(
                rng.random_range(bounds.min.x + width / 2.0..=bounds.max.x - width / 2.0),
                rng.random_range(bounds.min.y + depth / 2.0..=bounds.max.y - depth / 2.0),
            );
            let s = Scatterer {
                center,
                width,
                depth,
                height,
            };
            let fp = s.footprint();
            let guarded = fp.inflate(config.clearance);
            let reason = if !bounds.contains_rect(&fp) {
                Some("inside area bounds")
            } else if config.excluded(&fp) {
                Some("layout open space")
            } else if guarded.contains(tx.ground()) {
                Some("clear of tx position")
            } else if route.iter().any(|p| guarded.contains(p.ground())) {
                Some("clear of rx route")
            } else if scatterers.iter().any(|o| o.footprint().intersects(&fp)) {
                Some("non-overlapping scatterers")
            } else {
                None
            };
            match reason {
                Some(r) => *failures.entry(r).or_default() += 1,
                None => {
                    scatterers.push(s);
                    placed = true;
                    break;
                }
            }
        }
        if !placed {
            let constraint = failures
                .iter()
                .max_by_key(|(_, n)| **n)
                .map(|(r, _)| r.to_string())
                .unwrap_or_else(|| "unknown".into());
            return Err(Error::Placement {
                constraint,
                placed: scatterers.len(),
                wanted,
                retries: config.max_retries,
            });
        }
    }

    let scene = Scene {
        tx_position: tx,
        scatterers,
        rx_route: route,
        carrier_frequency: config.carrier_frequency,
        area_bounds: bounds,
        seed,
        shadowing_sigma_db: config.shadowing_sigma_db,
    };
    scene.validate()?;
    Ok(scene)
}
