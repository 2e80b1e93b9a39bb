//! Synthetic propagation oracle: free-space loss, cascaded knife-edge
//! diffraction over blocking scatterers and log-normal shadowing.

use rand_distr::{Distribution, StandardNormal};

use super::{Point3, Scene};
use crate::error::{Error, Result};
use crate::seed;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Per-edge diffraction loss cap, dB.
pub const EDGE_LOSS_CAP_DB: f64 = 40.0;

/// Free-space path loss with `d` in meters and `f` in Hz.
pub fn fspl_db(distance: f64, frequency: f64) -> f64 {
    20.0 * distance.log10() + 20.0 * frequency.log10() - 147.55
}

/// Fresnel–Kirchhoff diffraction parameter for an edge `h` meters above the
/// ray, `d1`/`d2` meters from either end.
pub fn fresnel_parameter(h: f64, d1: f64, d2: f64, wavelength: f64) -> f64 {
    h * (2.0 * (d1 + d2) / (wavelength * d1 * d2)).sqrt()
}

/// Single knife-edge loss J(ν), dB, using the ITU-R P.526 approximation.
/// Zero for ν ≤ -0.78, capped at [`EDGE_LOSS_CAP_DB`].
pub fn knife_edge_loss_db(nu: f64) -> f64 {
    if nu <= -0.78 {
        return 0.0;
    }
    let v = nu - 0.1;
    let loss = 6.9 + 20.0 * ((v * v + 1.0).sqrt() + v).log10();
    loss.clamp(0.0, EDGE_LOSS_CAP_DB)
}

/// A scatterer that cuts the direct Tx–Rx segment, reduced to its
/// diffracting roof edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blocker {
    pub scatterer: usize,
    /// Position of the edge along the segment, in (0, 1).
    pub t: f64,
    /// Roof height of the edge, meters.
    pub edge_height: f64,
    /// Height of the edge above the direct ray, meters.
    pub clearance: f64,
    /// Fresnel parameter relative to the direct ray.
    pub nu: f64,
}

/// Epstein–Peterson cascade: each edge is diffracted along the line between
/// its neighbours (Tx, preceding edges, Rx), losses summed.
pub(crate) fn cascade_loss_db(tx: Point3, rx: Point3, blockers: &[Blocker], wavelength: f64) -> f64 {
    let length = tx.distance(rx);
    let mut sorted: Vec<&Blocker> = blockers.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    // (position along the segment, height)
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(sorted.len() + 2);
    nodes.push((0.0, tx.z));
    nodes.extend(sorted.iter().map(|b| (b.t, b.edge_height)));
    nodes.push((1.0, rx.z));

    nodes
        .windows(3)
        .map(|w| {
            let (t0, z0) = w[0];
            let (t, z) = w[1];
            let (t2, z2) = w[2];
            let d1 = (t - t0) * length;
            let d2 = (t2 - t) * length;
            if d1 <= 0.0 || d2 <= 0.0 {
                // coincident edges: treat as one obstruction already counted
                return 0.0;
            }
            let ray = z0 + (z2 - z0) * (t - t0) / (t2 - t0);
            knife_edge_loss_db(fresnel_parameter(z - ray, d1, d2, wavelength))
        })
        .sum()
}

/// Ground-truth path loss at route point `rx_index`, dB.
///
/// FSPL over the 3D distance, plus cascaded knife-edge loss over every
/// scatterer intersecting the direct segment, plus zero-mean Gaussian
/// shadowing drawn from a stream keyed by `(scene.seed, rx_index)`.
pub fn ground_truth_path_loss(scene: &Scene, rx_index: usize) -> Result<f64> {
    let rx = scene.rx(rx_index)?;
    let tx = scene.tx_position;
    let d = tx.distance(rx);
    if d <= 0.0 {
        return Err(Error::Domain(format!(
            "rx {rx_index} coincides with the transmitter"
        )));
    }
    let blockers = super::blockers(scene, rx);
    let diffraction = cascade_loss_db(tx, rx, &blockers, scene.wavelength());
    let shadow = if scene.shadowing_sigma_db > 0.0 {
        let mut rng = seed::rng(scene.seed, &[seed::label("shadowing"), rx_index as u64]);
        let z: f64 = StandardNormal.sample(&mut rng);
        scene.shadowing_sigma_db * z
    } else {
        0.0
    };
    Ok(fspl_db(d, scene.carrier_frequency) + diffraction + shadow)
}
