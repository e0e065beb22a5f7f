//! Particle storage, jittered initialization, cell-list neighbor search and
//! per-particle volume evaluation.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indices, Execution};
use crate::geometry::{LevelSet, Vec2};
use crate::kernel::KernelSpec;

/// `N` particle positions sharing a domain of volume `V`; the reference
/// volume is `v0 = V / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    positions: Vec<Vec2>,
    domain_volume: f64,
}

impl ParticleSet {
    pub fn new(positions: Vec<Vec2>, domain_volume: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("a particle set needs at least one particle"));
        }
        if !(domain_volume.is_finite() && domain_volume > 0.0) {
            return Err(invalid(format!("domain volume must be positive, got {domain_volume}")));
        }
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(invalid("particle positions must be finite"));
        }
        Ok(Self { positions, domain_volume })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [Vec2] {
        &mut self.positions
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    pub fn reference_volume(&self) -> f64 {
        self.domain_volume / self.positions.len() as f64
    }

    /// `dp = sqrt(v0)`.
    pub fn effective_spacing(&self) -> f64 {
        self.reference_volume().sqrt()
    }

    pub fn with_domain_volume(self, domain_volume: f64) -> Result<Self> {
        Self::new(self.positions, domain_volume)
    }
}

/// Boundary topology of the particle container.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Topology {
    Open,
    /// Axis-aligned box `[min, min + size)`; axes with `wrap` set are periodic.
    Periodic { min: Vec2, size: Vec2, wrap: [bool; 2] },
}

impl Topology {
    pub fn periodic_box(min: Vec2, size: Vec2) -> Self {
        Topology::Periodic { min, size, wrap: [true, true] }
    }

    /// `to - from` under the minimum-image convention on wrapped axes.
    #[inline]
    pub fn delta(&self, from: &Vec2, to: &Vec2) -> Vec2 {
        let mut d = to - from;
        if let Topology::Periodic { size, wrap, .. } = self {
            for a in 0..2 {
                if wrap[a] && d[a].abs() > 0.5 * size[a] {
                    d[a] -= size[a] * (d[a] / size[a]).round();
                }
            }
        }
        d
    }

    /// Map a position back into the primary box on wrapped axes.
    #[inline]
    pub fn wrap(&self, x: Vec2) -> Vec2 {
        let mut x = x;
        if let Topology::Periodic { min, size, wrap } = self {
            for a in 0..2 {
                if wrap[a] {
                    let mut t = (x[a] - min[a]).rem_euclid(size[a]);
                    // rem_euclid can round up to exactly `size`
                    if t >= size[a] {
                        t = 0.0;
                    }
                    x[a] = min[a] + t;
                }
            }
        }
        x
    }

    pub fn is_wrapped(&self, axis: usize) -> bool {
        matches!(self, Topology::Periodic { wrap, .. } if wrap[axis])
    }
}

/// Uniform cell list with cells at least as large as the cut-off.
#[derive(Clone, Debug)]
pub struct NeighborGrid {
    cutoff: f64,
    topology: Topology,
    origin: Vec2,
    cell_size: [f64; 2],
    ncell: [usize; 2],
    cell_start: Vec<usize>,
    entries: Vec<usize>,
    n_particles: usize,
}

impl NeighborGrid {
    pub fn new(cutoff: f64, topology: Topology) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(invalid(format!("neighbor cut-off must be positive, got {cutoff}")));
        }
        if let Topology::Periodic { size, wrap, .. } = topology {
            for a in 0..2 {
                if !(size[a].is_finite() && size[a] > 0.0) {
                    return Err(invalid("periodic box size must be positive"));
                }
                if wrap[a] && size[a] < 2.0 * cutoff {
                    return Err(invalid(format!(
                        "periodic length {} is shorter than twice the cut-off {cutoff}",
                        size[a]
                    )));
                }
            }
        }
        Ok(Self {
            cutoff,
            topology,
            origin: Vec2::zeros(),
            cell_size: [cutoff; 2],
            ncell: [1, 1],
            cell_start: vec![0, 0],
            entries: Vec::new(),
            n_particles: 0,
        })
    }

    pub fn build(cutoff: f64, topology: Topology, positions: &[Vec2]) -> Result<Self> {
        let mut grid = Self::new(cutoff, topology)?;
        grid.rebuild(positions);
        Ok(grid)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Re-bin all particles (counting sort into cells).
    pub fn rebuild(&mut self, positions: &[Vec2]) {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        for a in 0..2 {
            let (origin, extent) = match self.topology {
                Topology::Periodic { min, size, wrap } if wrap[a] => (min[a], size[a]),
                _ if positions.is_empty() => (0.0, self.cutoff),
                _ => (lo[a], hi[a] - lo[a]),
            };
            let n = ((extent / self.cutoff).floor() as usize).max(1);
            self.origin[a] = origin;
            self.ncell[a] = n;
            self.cell_size[a] = (extent / n as f64).max(self.cutoff);
        }

        let total = self.ncell[0] * self.ncell[1];
        self.cell_start.clear();
        self.cell_start.resize(total + 1, 0);
        let cells: Vec<usize> = positions.iter().map(|p| self.linear_cell(p)).collect();
        for &c in &cells {
            self.cell_start[c + 1] += 1;
        }
        for c in 0..total {
            self.cell_start[c + 1] += self.cell_start[c];
        }
        let mut fill = self.cell_start.clone();
        self.entries.clear();
        self.entries.resize(positions.len(), 0);
        for (i, &c) in cells.iter().enumerate() {
            self.entries[fill[c]] = i;
            fill[c] += 1;
        }
        self.n_particles = positions.len();
    }

    fn axis_cell(&self, a: usize, x: f64) -> usize {
        let t = ((x - self.origin[a]) / self.cell_size[a]).floor();
        let n = self.ncell[a] as isize;
        let c = t as isize;
        if self.topology.is_wrapped(a) {
            c.rem_euclid(n) as usize
        } else {
            c.clamp(0, n - 1) as usize
        }
    }

    fn linear_cell(&self, x: &Vec2) -> usize {
        self.axis_cell(1, x.y) * self.ncell[0] + self.axis_cell(0, x.x)
    }

    /// Distinct cells adjacent to `c` along axis `a` (including `c`).
    fn adjacent(&self, a: usize, c: usize) -> ([usize; 3], usize) {
        let n = self.ncell[a];
        let mut out = [0usize; 3];
        let mut len = 0;
        for off in [-1isize, 0, 1] {
            let raw = c as isize + off;
            let cell = if self.topology.is_wrapped(a) {
                raw.rem_euclid(n as isize) as usize
            } else if raw < 0 || raw >= n as isize {
                continue;
            } else {
                raw as usize
            };
            if !out[..len].contains(&cell) {
                out[len] = cell;
                len += 1;
            }
        }
        (out, len)
    }

    fn visit_cells<F: FnMut(usize)>(&self, x: &Vec2, mut f: F) {
        let (xs, nx) = self.adjacent(0, self.axis_cell(0, x.x));
        let (ys, ny) = self.adjacent(1, self.axis_cell(1, x.y));
        for &cy in &ys[..ny] {
            for &cx in &xs[..nx] {
                let c = cy * self.ncell[0] + cx;
                for &j in &self.entries[self.cell_start[c]..self.cell_start[c + 1]] {
                    f(j);
                }
            }
        }
    }

    /// Visit every `j != i` with `|x_j - x_i| < cutoff`, passing
    /// `(j, x_j - x_i, distance)`.
    #[inline]
    pub fn for_each_neighbor<F: FnMut(usize, Vec2, f64)>(&self, positions: &[Vec2], i: usize, mut f: F) {
        debug_assert_eq!(positions.len(), self.n_particles, "neighbor grid is stale");
        let xi = positions[i];
        let cut2 = self.cutoff * self.cutoff;
        self.visit_cells(&xi, |j| {
            if j == i {
                return;
            }
            let d = self.topology.delta(&xi, &positions[j]);
            let r2 = d.norm_squared();
            if r2 < cut2 {
                f(j, d, r2.sqrt());
            }
        });
    }

    /// Visit every particle within the cut-off of an arbitrary point.
    pub fn for_each_near<F: FnMut(usize, Vec2, f64)>(&self, positions: &[Vec2], x: &Vec2, mut f: F) {
        let x = self.topology.wrap(*x);
        let cut2 = self.cutoff * self.cutoff;
        self.visit_cells(&x, |j| {
            let d = self.topology.delta(&x, &positions[j]);
            let r2 = d.norm_squared();
            if r2 < cut2 {
                f(j, d, r2.sqrt());
            }
        });
    }

    /// All unordered pairs `(i, j)`, `i < j`, closer than the cut-off, sorted.
    pub fn pairs(&self, positions: &[Vec2]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..positions.len() {
            self.for_each_neighbor(positions, i, |j, _, _| {
                if i < j {
                    out.push((i, j));
                }
            });
        }
        out.sort_unstable();
        out
    }
}

/// Background cells used to seed particles: `nx * ny` cells of size `spacing`
/// whose lower-left corner is `origin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellLayout {
    pub origin: Vec2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CellLayout {
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new((i as f64 + 0.5) * self.spacing, (j as f64 + 0.5) * self.spacing)
    }

    pub fn size(&self) -> Vec2 {
        Vec2::new(self.nx as f64 * self.spacing, self.ny as f64 * self.spacing)
    }

    /// Fully periodic box covering the layout.
    pub fn periodic_topology(&self) -> Topology {
        Topology::periodic_box(self.origin, self.size())
    }
}

/// One particle per background cell, displaced uniformly by up to
/// `jitter * spacing` along each axis.
///
/// With a level set only cells whose center satisfies `phi <= 0` are seeded
/// and a jittered position that leaves the domain falls back to the cell
/// center; the domain volume defaults to `N * spacing^2`. Without one the
/// layout is treated as a periodic box and positions are wrapped into it.
pub fn initialize_jittered(
    cells: &CellLayout,
    level_set: Option<&dyn LevelSet>,
    jitter: f64,
    seed: u64,
) -> Result<ParticleSet> {
    if !(0.0..=0.5).contains(&jitter) {
        return Err(invalid(format!("jitter fraction must lie in [0, 0.5], got {jitter}")));
    }
    if cells.nx == 0 || cells.ny == 0 || !(cells.spacing > 0.0) {
        return Err(invalid("cell layout must be non-empty with positive spacing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = jitter * cells.spacing;
    let mut positions = Vec::new();
    for j in 0..cells.ny {
        for i in 0..cells.nx {
            let c = cells.center(i, j);
            if let Some(ls) = level_set {
                if ls.phi(&c)? > 0.0 {
                    continue;
                }
            }
            let shift = if amp > 0.0 {
                Vec2::new(rng.random_range(-amp..=amp), rng.random_range(-amp..=amp))
            } else {
                Vec2::zeros()
            };
            let mut p = c + shift;
            match level_set {
                Some(ls) => {
                    if ls.phi(&p)? > 0.0 {
                        p = c;
                    }
                }
                None => p = cells.periodic_topology().wrap(p),
            }
            positions.push(p);
        }
    }
    if positions.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let volume = match level_set {
        Some(_) => positions.len() as f64 * cells.spacing * cells.spacing,
        None => cells.size().x * cells.size().y,
    };
    ParticleSet::new(positions, volume)
}

/// `v_i = 1 / sum_j W(|x_i - x_j|)`, self term included.
pub fn particle_volume(i: usize, particles: &ParticleSet, grid: &NeighborGrid, kernel: &KernelSpec) -> f64 {
    let mut sum = kernel.value(0.0);
    grid.for_each_neighbor(particles.positions(), i, |_, _, r| sum += kernel.value(r));
    1.0 / sum
}

pub fn particle_volumes(particles: &ParticleSet, grid: &NeighborGrid, kernel: &KernelSpec, exec: Execution) -> Vec<f64> {
    map_indices(particles.len(), exec, |i| particle_volume(i, particles, grid, kernel))
}

/// `alpha(x) = v0 * sum_j W(|x - x_j|)`.
pub fn particle_based_fraction(x: &Vec2, particles: &ParticleSet, grid: &NeighborGrid, kernel: &KernelSpec) -> f64 {
    let mut sum = 0.0;
    grid.for_each_near(particles.positions(), x, |_, _, r| sum += kernel.value(r));
    sum * particles.reference_volume()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeStats {
    pub mean: f64,
    pub harmonic: f64,
    /// Largest individual volume; stands in for the configuration supremum.
    pub max: f64,
    /// Largest neighbor count (self included) observed in the configuration.
    pub max_neighbors: usize,
}

/// Arithmetic mean, harmonic mean and maximum of a set of volumes.
pub fn mean_volumes(volumes: &[f64]) -> (f64, f64, f64) {
    let n = volumes.len() as f64;
    let mean = volumes.iter().sum::<f64>() / n;
    let harmonic = n / volumes.iter().map(|v| 1.0 / v).sum::<f64>();
    let max = volumes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, harmonic, max)
}

pub fn volume_stats(particles: &ParticleSet, grid: &NeighborGrid, kernel: &KernelSpec, exec: Execution) -> VolumeStats {
    let volumes = particle_volumes(particles, grid, kernel, exec);
    let counts = map_indices(particles.len(), exec, |i| {
        let mut n = 1;
        grid.for_each_neighbor(particles.positions(), i, |_, _, _| n += 1);
        n
    });
    let (mean, harmonic, max) = mean_volumes(&volumes);
    VolumeStats { mean, harmonic, max, max_neighbors: counts.into_iter().max().unwrap_or(1) }
}

/// Write a particle snapshot as CSV with header `x,y,volume,phi`.
pub fn write_snapshot_csv<W: Write>(out: &mut W, positions: &[Vec2], volumes: &[f64], phi: &[f64]) -> std::io::Result<()> {
    writeln!(out, "x,y,volume,phi")?;
    for ((p, v), f) in positions.iter().zip(volumes).zip(phi) {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, v, f)?;
    }
    Ok(())
}
