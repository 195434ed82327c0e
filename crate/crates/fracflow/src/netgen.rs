//! Stochastic fracture network generation and the line-oriented network
//! file format.
//!
//! File format: one fracture per line, `x1 y1 x2 y2 aperture_m perm_darcy`
//! with an optional `z1 z2` vertical extent for 3D networks. Blank lines
//! and `#` comments are ignored. Coordinates are meters.

use std::io::Write;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edfm::{geometry, Fracture, FractureNetwork};
use crate::error::{FracflowError, Result};
use crate::units::DARCY;

#[derive(Debug, Clone)]
pub enum OrientationModel {
    /// Angles uniform in [0, π).
    Uniform,
    /// Fracture sets: (mean angle, half-spread), degrees. Each fracture
    /// picks a set uniformly, then jitters within the spread.
    Sets(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub count: usize,
    pub length_min: f64,
    pub length_max: f64,
    pub orientation: OrientationModel,
    pub aperture: f64,
    pub permeability: f64,
    pub porosity: f64,
}

/// Generate a reproducible network: fracture centers uniform in the
/// domain, traces clipped to it. The same seed yields the same network.
pub fn generate_fracture_network(config: &GeneratorConfig, domain: [f64; 2]) -> FractureNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rect = geometry::Rect { origin: [0.0, 0.0], size: domain };
    let mut fractures = Vec::with_capacity(config.count);
    for _ in 0..config.count {
        let cx: f64 = rng.random_range(0.0..domain[0]);
        let cy: f64 = rng.random_range(0.0..domain[1]);
        let length: f64 = rng.random_range(config.length_min..=config.length_max);
        let angle = match &config.orientation {
            OrientationModel::Uniform => rng.random_range(0.0..std::f64::consts::PI),
            OrientationModel::Sets(sets) => {
                let pick = rng.random_range(0..sets.len());
                let (mean, spread) = sets[pick];
                (mean + rng.random_range(-spread..=spread)).to_radians()
            }
        };
        let (dx, dy) = (0.5 * length * angle.cos(), 0.5 * length * angle.sin());
        let p0 = [cx - dx, cy - dy];
        let p1 = [cx + dx, cy + dy];
        // the center lies inside, so the clipped piece is never empty
        let (t0, t1) = geometry::clip_segment(p0, p1, &rect).expect("center inside domain");
        fractures.push(Fracture {
            p0: geometry::point_on_segment(p0, p1, t0),
            p1: geometry::point_on_segment(p0, p1, t1),
            z_range: None,
            aperture: config.aperture,
            permeability: config.permeability,
            porosity: config.porosity,
        });
    }
    FractureNetwork { fractures }
}

/// Render a network in the file format; fixed formatting keeps repeated
/// writes byte-identical.
pub fn network_file_string(network: &FractureNetwork) -> String {
    let mut out = String::from("# fracture network: x1 y1 x2 y2 aperture_m perm_darcy [z1 z2]\n");
    for f in &network.fractures {
        out.push_str(&format!(
            "{:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
            f.p0[0],
            f.p0[1],
            f.p1[0],
            f.p1[1],
            f.aperture,
            f.permeability / DARCY
        ));
        if let Some(z) = f.z_range {
            out.push_str(&format!(" {:.6} {:.6}", z[0], z[1]));
        }
        out.push('\n');
    }
    out
}

pub fn write_network_file(network: &FractureNetwork, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| FracflowError::io(path, e))?;
    file.write_all(network_file_string(network).as_bytes())
        .map_err(|e| FracflowError::io(path, e))?;
    Ok(())
}

/// Load a network file. `porosity` applies to every fracture (the format
/// does not carry it).
pub fn load_network_file(path: &Path, porosity: f64) -> Result<FractureNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| FracflowError::io(path, e))?;
    let mut fractures = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    FracflowError::config(
                        format!("{}:{}", path.display(), lineno + 1),
                        format!("`{tok}` is not a number"),
                    )
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 6 && fields.len() != 8 {
            return Err(FracflowError::config(
                format!("{}:{}", path.display(), lineno + 1),
                format!("expected 6 or 8 fields, found {}", fields.len()),
            ));
        }
        let z_range = (fields.len() == 8).then(|| [fields[6], fields[7]]);
        fractures.push(Fracture {
            p0: [fields[0], fields[1]],
            p1: [fields[2], fields[3]],
            z_range,
            aperture: fields[4],
            permeability: fields[5] * DARCY,
            porosity,
        });
    }
    let network = FractureNetwork { fractures };
    network.validate()?;
    Ok(network)
}
