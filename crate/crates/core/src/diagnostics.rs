//! Structural measures of a relaxed particle set.

use crate::error::{invalid, Error, Result};
use crate::geometry::{LevelSet, Vec2};
use crate::particles::{NeighborGrid, ParticleSet, Topology};

/// Mean bond-orientational order `|sum_k exp(i m theta_k)| / m` over the
/// `m` nearest neighbours of each selected particle. Ties in distance are
/// broken by bond angle. Particles with fewer than `m` neighbours inside
/// `search_radius` are skipped.
pub fn bond_order(
    particles: &ParticleSet,
    topology: Topology,
    mask: Option<&[bool]>,
    fold: usize,
    search_radius: f64,
) -> Result<f64> {
    if fold == 0 {
        return Err(invalid("bond order fold must be positive"));
    }
    if let Some(m) = mask {
        if m.len() != particles.len() {
            return Err(invalid("mask length differs from particle count"));
        }
    }
    let grid = NeighborGrid::build(search_radius, topology, particles.positions())?;
    let m = fold as f64;
    let mut sum = 0.0;
    let mut counted = 0usize;
    let mut bonds: Vec<(i64, f64, Vec2)> = Vec::new();
    for i in 0..particles.len() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        bonds.clear();
        grid.for_each_neighbor(particles.positions(), i, |_, d, r| {
            if r > 0.0 {
                let key = (r / search_radius * 1e8).round() as i64;
                bonds.push((key, d.y.atan2(d.x), d));
            }
        });
        if bonds.len() < fold {
            continue;
        }
        bonds.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (re, im) = bonds[..fold].iter().fold((0.0, 0.0), |(re, im), b| {
            let t = m * b.1;
            (re + t.cos(), im + t.sin())
        });
        sum += (re * re + im * im).sqrt() / m;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::NotApplicable("no particle has enough neighbours for a bond order"));
    }
    Ok(sum / counted as f64)
}

/// Six-fold order over the six nearest neighbours; 1 for a perfect hexagonal lattice.
pub fn hexatic_order(particles: &ParticleSet, topology: Topology, mask: Option<&[bool]>) -> Result<f64> {
    bond_order(particles, topology, mask, 6, 2.0 * particles.effective_spacing())
}

/// Four-fold analogue for square patterns.
pub fn tetratic_order(particles: &ParticleSet, topology: Topology, mask: Option<&[bool]>) -> Result<f64> {
    bond_order(particles, topology, mask, 4, 2.0 * particles.effective_spacing())
}

/// Mean `-phi` over particles in the outermost layer, `phi > -spacing`.
pub fn first_layer_distance(particles: &ParticleSet, level_set: &dyn LevelSet, spacing: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for x in particles.positions() {
        let phi = level_set.phi(x)?;
        if phi > -spacing {
            sum += -phi;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NotApplicable("no particle within one spacing of the boundary"));
    }
    Ok(sum / n as f64)
}
