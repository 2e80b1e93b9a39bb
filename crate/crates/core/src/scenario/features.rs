use serde::{Deserialize, Serialize};

use super::propagation::{fresnel_parameter, Blocker};
use super::{point_segment_distance, Point3, Scene};
use crate::error::Result;

pub const N_FEATURES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Geometry,
    Structure,
    Knowledge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeatureEntry {
    /// 1-based.
    pub index: usize,
    pub symbol: &'static str,
    pub category: Category,
    pub meaning: &'static str,
}

/// The ten candidate environment features, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeatureCatalog {
    pub entries: Vec<FeatureEntry>,
}

const CATALOG: [(&str, Category, &str); N_FEATURES] = [
    ("D_txrx", Category::Geometry, "Tx-Rx distance"),
    ("H_txrx", Category::Geometry, "Tx-Rx height difference"),
    ("H_ts_avg", Category::Geometry, "Tx-scatterer height difference"),
    ("D_ts_avg", Category::Geometry, "Tx-scatterer distance"),
    ("D_rs_mean", Category::Geometry, "Rx-scatterer distance"),
    ("V_eff_mean", Category::Structure, "Mean scatterer volume"),
    ("Min_D_dev_eff", Category::Structure, "Minimum offset to Tx-Rx line"),
    ("Blockage_eff", Category::Structure, "Blockage feature"),
    ("Ref_WEK", Category::Knowledge, "Reflection contribution"),
    ("Dif_WEK", Category::Knowledge, "Diffraction contribution"),
];

impl FeatureCatalog {
    pub fn standard() -> Self {
        FeatureCatalog {
            entries: CATALOG
                .iter()
                .enumerate()
                .map(|(i, &(symbol, category, meaning))| FeatureEntry {
                    index: i + 1,
                    symbol,
                    category,
                    meaning,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 0-based positions of the features in `category`.
    pub fn positions(&self, category: Category) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.category == category)
            .map(|(i, _)| i)
            .collect()
    }
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    /// Scatterers whose center lies within this ground distance of the
    /// Tx–Rx segment are "effective".
    pub corridor_radius: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            corridor_radius: 50.0,
        }
    }
}

/// Scatterers cutting the direct segment from the Tx to `rx`, each reduced
/// to the roof edge with the largest clearance above the ray.
pub fn blockers(scene: &Scene, rx: Point3) -> Vec<Blocker> {
    let tx = scene.tx_position;
    let length = tx.distance(rx);
    let wavelength = scene.wavelength();
    scene
        .scatterers
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (t0, t1) = s.segment_interval(tx, rx)?;
            let ray = |t: f64| tx.z + t * (rx.z - tx.z);
            let t = if ray(t0) <= ray(t1) { t0 } else { t1 };
            let t = t.clamp(1e-9, 1.0 - 1e-9);
            let clearance = s.height - ray(t);
            let nu = fresnel_parameter(clearance, t * length, (1.0 - t) * length, wavelength);
            Some(Blocker {
                scatterer: i,
                t,
                edge_height: s.height,
                clearance,
                nu,
            })
        })
        .collect()
}

pub fn extract_features(scene: &Scene, rx_index: usize) -> Result<FeatureVector> {
    extract_features_with(scene, rx_index, &FeatureParams::default())
}

/// Computes the ten catalog features for route point `rx_index`.
///
/// Empty effective-scatterer sets yield 0 for the aggregate features.
pub fn extract_features_with(
    scene: &Scene,
    rx_index: usize,
    params: &FeatureParams,
) -> Result<FeatureVector> {
    let rx = scene.rx(rx_index)?;
    let tx = scene.tx_position;
    let (tx2, rx2) = (tx.ground(), rx.ground());
    let d_txrx = tx.distance(rx);
    let d_ground = tx2.distance(rx2);

    let mut f = [0.0; N_FEATURES];
    f[0] = d_txrx;
    f[1] = tx.z - rx.z;

    let mut n_eff = 0usize;
    let mut min_offset = f64::INFINITY;
    let mut reflection = 0.0;
    for s in &scene.scatterers {
        let offset = point_segment_distance(s.center, tx2, rx2);
        if offset > params.corridor_radius {
            continue;
        }
        n_eff += 1;
        let d_ts = tx2.distance(s.center);
        let d_rs = rx2.distance(s.center);
        f[2] += tx.z - s.height;
        f[3] += d_ts;
        f[4] += d_rs;
        f[5] += s.volume();
        min_offset = min_offset.min(offset);
        let detour = d_ts + d_rs - d_ground;
        reflection += (-detour / d_txrx).exp();
    }
    if n_eff > 0 {
        let n = n_eff as f64;
        for v in &mut f[2..6] {
            *v /= n;
        }
        f[6] = min_offset;
        f[8] = reflection;
    }

    let blocking = blockers(scene, rx);
    f[7] = blocking.len() as f64;
    f[9] = blocking.iter().map(|b| b.nu).fold(0.0, f64::max);

    Ok(FeatureVector(f))
}
