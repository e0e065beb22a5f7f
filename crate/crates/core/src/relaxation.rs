//! Particle relaxation as gradient descent on the total error
//!
//! `E = v0^2 sum_ij W(|x_i - x_j|) - V + 2 v0 sum_i B(phi_i)`
//!
//! where the pair sum includes `i == j` and `B` is
//! [`KernelSpec::boundary_integral`]. The boundary sum is absent when no
//! level set bounds the domain. Forces are the exact negative gradient of
//! `E`; the supremum particle volume that scales the discrete error is
//! replaced by `v0` throughout.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indices, Execution};
use crate::geometry::{LevelSet, Vec2};
use crate::kernel::KernelSpec;
use crate::particles::{particle_based_fraction, NeighborGrid, ParticleSet, Topology};

/// `e(x) = alpha(x) - P(-phi(x))`; without a level set `P = 1`.
pub fn error_density(
    x: &Vec2,
    particles: &ParticleSet,
    grid: &NeighborGrid,
    level_set: Option<&dyn LevelSet>,
    kernel: &KernelSpec,
) -> Result<f64> {
    let alpha = particle_based_fraction(x, particles, grid, kernel);
    let p = match level_set {
        Some(ls) => kernel.smoothed_fraction(ls.phi(x)?),
        None => 1.0,
    };
    Ok(alpha - p)
}

/// Total error of the current configuration; `grid` must be current.
pub fn total_error(
    particles: &ParticleSet,
    grid: &NeighborGrid,
    level_set: Option<&dyn LevelSet>,
    kernel: &KernelSpec,
    exec: Execution,
) -> Result<f64> {
    let v0 = particles.reference_volume();
    let terms = map_indices(particles.len(), exec, |i| -> Result<(f64, f64)> {
        let mut wsum = kernel.value(0.0);
        grid.for_each_neighbor(particles.positions(), i, |_, _, r| wsum += kernel.value(r));
        let boundary = match level_set {
            Some(ls) => kernel.boundary_integral(ls.phi(&particles.positions()[i])?),
            None => 0.0,
        };
        Ok((wsum, boundary))
    });
    let (mut pair, mut boundary) = (0.0, 0.0);
    for t in terms {
        let (w, b) = t?;
        pair += w;
        boundary += b;
    }
    Ok(v0 * v0 * pair - particles.domain_volume() + 2.0 * v0 * boundary)
}

/// `U_i = -dE/dx_i = 2 v0^2 sum_{j != i} W'(r_ij) e_ij`, `e_ij = (x_j - x_i) / r_ij`.
///
/// Coincident pairs are skipped; their limit contribution is zero since `W'(0) = 0`.
pub fn interior_gradient(i: usize, particles: &ParticleSet, grid: &NeighborGrid, kernel: &KernelSpec) -> Vec2 {
    pair_force(i, particles.positions(), particles.reference_volume(), grid, kernel).0
}

fn pair_force(i: usize, positions: &[Vec2], v0: f64, grid: &NeighborGrid, kernel: &KernelSpec) -> (Vec2, f64, u32) {
    let scale = 2.0 * v0 * v0;
    let mut force = Vec2::zeros();
    let mut wsum = kernel.value(0.0);
    let mut coincident = 0;
    grid.for_each_neighbor(positions, i, |_, d, r| {
        wsum += kernel.value(r);
        if r > 0.0 {
            force += d * (scale * kernel.derivative(r) / r);
        } else {
            coincident += 1;
        }
    });
    (force, wsum, coincident)
}

/// Inward compensating force `-2 W1(max(-phi, 0)) v0 n`, the negative
/// gradient of the boundary term for a unit-gradient level set.
pub fn boundary_force(phi: f64, normal: &Vec2, v0: f64, kernel: &KernelSpec) -> Vec2 {
    -normal * (2.0 * kernel.w1((-phi).max(0.0)) * v0)
}

/// Interior gradient plus the boundary force at particle `i`.
pub fn bounded_gradient(
    i: usize,
    particles: &ParticleSet,
    grid: &NeighborGrid,
    level_set: &dyn LevelSet,
    kernel: &KernelSpec,
) -> Result<Vec2> {
    let x = &particles.positions()[i];
    let phi = level_set.phi(x)?;
    let mut force = interior_gradient(i, particles, grid, kernel);
    if phi > -kernel.cutoff() {
        force += boundary_force(phi, &level_set.normal(x)?, particles.reference_volume(), kernel);
    }
    Ok(force)
}

/// Move every particle by `U_i * dT` with `dT = c h / max |U|`, so the largest
/// displacement is exactly `c h`. Returns `None` when all forces vanish.
pub fn step_present(positions: &mut [Vec2], forces: &[Vec2], max_displacement: f64, topology: &Topology) -> Option<f64> {
    let max_force = forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
    if !(max_force > 0.0) {
        return None;
    }
    let dt = max_displacement / max_force;
    for (x, f) in positions.iter_mut().zip(forces) {
        *x = topology.wrap(*x + f * dt);
    }
    Some(dt)
}

/// Acceleration of the inertial scheme with a pairwise viscous term:
/// `a_i = 2 v0^2 sum_j W' e_ij + mu v0^2 sum_j W' (u_i - u_j) / r_ij`.
pub fn litvinov_acceleration(
    i: usize,
    positions: &[Vec2],
    velocities: &[Vec2],
    v0: f64,
    viscosity: f64,
    grid: &NeighborGrid,
    kernel: &KernelSpec,
) -> Vec2 {
    let v02 = v0 * v0;
    let mut a = Vec2::zeros();
    grid.for_each_neighbor(positions, i, |j, d, r| {
        if r > 0.0 {
            let dw = kernel.derivative(r);
            a += d * (2.0 * v02 * dw / r);
            a += (velocities[i] - velocities[j]) * (viscosity * v02 * dw / r);
        }
    });
    a
}

/// `x += u dt + a dt^2 / 2`, `u += a dt`. With no fixed `dt` the step is
/// `0.25 sqrt(h / max |a|)`. Returns the time step used, or `None` if both
/// accelerations and velocities vanish.
pub fn step_litvinov(
    positions: &mut [Vec2],
    velocities: &mut [Vec2],
    accelerations: &[Vec2],
    cutoff: f64,
    fixed_dt: Option<f64>,
    topology: &Topology,
) -> Option<f64> {
    let max_a = accelerations.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let dt = match fixed_dt {
        Some(dt) => dt,
        None if max_a > 0.0 => 0.25 * (cutoff / max_a).sqrt(),
        None => return None,
    };
    if max_a == 0.0 && velocities.iter().all(|u| u.norm_squared() == 0.0) {
        return None;
    }
    for ((x, u), a) in positions.iter_mut().zip(velocities.iter_mut()).zip(accelerations) {
        *x = topology.wrap(*x + *u * dt + a * (0.5 * dt * dt));
        *u += a * dt;
    }
    Some(dt)
}

/// Project particles with `phi > -dx/2` onto the level `phi = -dx/2`.
/// Returns the number of particles moved.
pub fn surface_bound_project(positions: &mut [Vec2], level_set: &dyn LevelSet, spacing: f64) -> Result<usize> {
    let mut moved = 0;
    for x in positions.iter_mut() {
        let phi = level_set.phi(x)?;
        if phi > -0.5 * spacing {
            let n = level_set.normal(x)?;
            *x -= n * (phi + 0.5 * spacing);
            moved += 1;
        }
    }
    Ok(moved)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    /// Pseudo-force update along the negative gradient of the total error.
    GradientDescent,
    /// Inertial update with a viscous pair term; velocities start at zero.
    Litvinov { viscosity: f64, time_step: Option<f64> },
    /// Pair forces only, followed by projection of the outermost particles to
    /// `phi = -spacing / 2`. Comparison baseline.
    SurfaceBounding { spacing: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::GradientDescent => "gradient_descent",
            Scheme::Litvinov { .. } => "litvinov",
            Scheme::SurfaceBounding { .. } => "gradient_descent_with_surface_bounding",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RelaxationConfig {
    /// `c` in `dT = c h / max |U|`.
    pub step_coefficient: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
    /// Stop once `|E(s) - E(s - window)| / E(s - window)` drops below this.
    pub convergence_tolerance: f64,
    pub convergence_window: usize,
    /// Record every n-th step in the trace (the final state is always recorded).
    pub trace_stride: usize,
    pub execution: Execution,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            step_coefficient: 0.01,
            max_steps: 20_000,
            scheme: Scheme::GradientDescent,
            convergence_tolerance: 1e-10,
            convergence_window: 100,
            trace_stride: 1,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub energy: f64,
    pub max_force: f64,
    pub max_phi: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "step,E,max_U,max_phi")?;
        for r in &self.records {
            writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.step, r.energy, r.max_force, r.max_phi)?;
        }
        Ok(())
    }

    pub fn energy_at(&self, step: usize) -> Option<f64> {
        self.records.iter().find(|r| r.step == step).map(|r| r.energy)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Energy, forces and per-particle level-set values of one configuration.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: f64,
    pub forces: Vec<Vec2>,
    pub phi: Vec<f64>,
    pub max_force: f64,
    /// `-inf` when the domain is not bounded by a level set.
    pub max_phi: f64,
    pub coincident_pairs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Moved(TraceRecord),
    /// All forces vanished; no step was taken.
    Converged(TraceRecord),
}

/// Stateful driver for one relaxation run.
pub struct Relaxer<'a> {
    kernel: KernelSpec,
    topology: Topology,
    level_set: Option<&'a dyn LevelSet>,
    config: RelaxationConfig,
    particles: ParticleSet,
    grid: NeighborGrid,
    velocities: Vec<Vec2>,
    step: usize,
    coincident_pairs: usize,
}

impl<'a> Relaxer<'a> {
    pub fn new(
        particles: ParticleSet,
        kernel: KernelSpec,
        topology: Topology,
        level_set: Option<&'a dyn LevelSet>,
        config: RelaxationConfig,
    ) -> Result<Self> {
        if !(config.step_coefficient.is_finite() && config.step_coefficient > 0.0) {
            return Err(invalid(format!("step coefficient must be positive, got {}", config.step_coefficient)));
        }
        if config.trace_stride == 0 || config.convergence_window == 0 {
            return Err(invalid("trace stride and convergence window must be at least 1"));
        }
        match config.scheme {
            Scheme::SurfaceBounding { spacing } if level_set.is_none() || !(spacing > 0.0) => {
                return Err(invalid("surface bounding needs a level set and a positive spacing"));
            }
            Scheme::Litvinov { viscosity, time_step } if !(viscosity >= 0.0) || time_step.is_some_and(|dt| !(dt > 0.0)) => {
                return Err(invalid("litvinov scheme needs viscosity >= 0 and a positive time step"));
            }
            _ => {}
        }
        if level_set.is_some() && kernel.cutoff() <= 2.0 * particles.effective_spacing() {
            log::warn!(
                "kernel cut-off {} is not larger than twice the particle spacing {}; the boundary term loses accuracy",
                kernel.cutoff(),
                particles.effective_spacing()
            );
        }
        let grid = NeighborGrid::build(kernel.cutoff(), topology, particles.positions())?;
        let velocities = vec![Vec2::zeros(); particles.len()];
        Ok(Self { kernel, topology, level_set, config, particles, grid, velocities, step: 0, coincident_pairs: 0 })
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn grid(&self) -> &NeighborGrid {
        &self.grid
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Pairs dropped so far because two particles coincided exactly.
    pub fn coincident_pairs(&self) -> usize {
        self.coincident_pairs
    }

    pub fn into_particles(self) -> ParticleSet {
        self.particles
    }

    /// Rebuild the neighbor grid and evaluate energy and forces in one pass.
    /// Forces include the boundary term unless the scheme is surface bounding.
    pub fn evaluate(&mut self) -> Result<Evaluation> {
        self.grid.rebuild(self.particles.positions());
        let v0 = self.particles.reference_volume();
        let kernel = self.kernel;
        let positions = self.particles.positions();
        let grid = &self.grid;
        let level_set = self.level_set;
        let with_boundary_force = !matches!(self.config.scheme, Scheme::SurfaceBounding { .. });

        let local = map_indices(positions.len(), self.config.execution, |i| -> Result<(Vec2, f64, f64, f64, u32)> {
            let (mut force, wsum, coincident) = pair_force(i, positions, v0, grid, &kernel);
            let (phi, boundary) = match level_set {
                Some(ls) => {
                    let phi = ls.phi(&positions[i])?;
                    if with_boundary_force && phi > -kernel.cutoff() {
                        force += boundary_force(phi, &ls.normal(&positions[i])?, v0, &kernel);
                    }
                    (phi, kernel.boundary_integral(phi))
                }
                None => (f64::NEG_INFINITY, 0.0),
            };
            Ok((force, wsum, phi, boundary, coincident))
        });

        let n = positions.len();
        let mut forces = Vec::with_capacity(n);
        let mut phis = Vec::with_capacity(n);
        let (mut pair, mut boundary, mut max_force, mut max_phi, mut coincident) = (0.0, 0.0, 0.0f64, f64::NEG_INFINITY, 0);
        for item in local {
            let (f, w, phi, b, c) = item?;
            pair += w;
            boundary += b;
            max_force = max_force.max(f.norm());
            max_phi = max_phi.max(phi);
            coincident += c as usize;
            forces.push(f);
            phis.push(phi);
        }
        let energy = v0 * v0 * pair - self.particles.domain_volume() + 2.0 * v0 * boundary;
        Ok(Evaluation { energy, forces, phi: phis, max_force, max_phi, coincident_pairs: coincident / 2 })
    }

    /// Evaluate the current state and advance it by one step of the
    /// configured scheme. The returned record describes the state before the
    /// step.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let eval = self.evaluate()?;
        self.advance(&eval)
    }

    fn advance(&mut self, eval: &Evaluation) -> Result<StepOutcome> {
        let record = TraceRecord { step: self.step, energy: eval.energy, max_force: eval.max_force, max_phi: eval.max_phi };
        if eval.coincident_pairs > 0 {
            log::warn!("step {}: {} coincident particle pairs skipped", self.step, eval.coincident_pairs);
            self.coincident_pairs += eval.coincident_pairs;
        }
        let max_disp = self.config.step_coefficient * self.kernel.cutoff();
        let moved = match self.config.scheme {
            Scheme::GradientDescent => step_present(self.particles.positions_mut(), &eval.forces, max_disp, &self.topology).is_some(),
            Scheme::SurfaceBounding { spacing } => {
                let moved = step_present(self.particles.positions_mut(), &eval.forces, max_disp, &self.topology).is_some();
                let ls = self.level_set.expect("checked at construction");
                surface_bound_project(self.particles.positions_mut(), ls, spacing)?;
                moved
            }
            Scheme::Litvinov { viscosity, time_step } => {
                let v0 = self.particles.reference_volume();
                let positions = self.particles.positions();
                let velocities = &self.velocities;
                let grid = &self.grid;
                let kernel = self.kernel;
                let acc = map_indices(positions.len(), self.config.execution, |i| {
                    litvinov_acceleration(i, positions, velocities, v0, viscosity, grid, &kernel)
                });
                step_litvinov(
                    self.particles.positions_mut(),
                    &mut self.velocities,
                    &acc,
                    self.kernel.cutoff(),
                    time_step,
                    &self.topology,
                )
                .is_some()
            }
        };
        if moved {
            self.step += 1;
            Ok(StepOutcome::Moved(record))
        } else {
            Ok(StepOutcome::Converged(record))
        }
    }

    /// Iterate until `max_steps`, energy stagnation over the convergence
    /// window, or vanishing forces. Errors if `E` grows tenfold.
    pub fn run(mut self) -> Result<(ParticleSet, EnergyTrace)> {
        let mut trace = EnergyTrace::default();
        let mut energies = Vec::new();
        let cfg = self.config.clone();
        loop {
            let eval = self.evaluate()?;
            let s = self.step;
            energies.push(eval.energy);
            let e0 = energies[0];
            if e0 > 0.0 && eval.energy > 10.0 * e0 {
                return Err(Error::Divergence { step: s, energy: eval.energy, initial: e0 });
            }
            let record = TraceRecord { step: s, energy: eval.energy, max_force: eval.max_force, max_phi: eval.max_phi };
            let stagnated = s >= cfg.convergence_window && {
                let prev = energies[s - cfg.convergence_window];
                (eval.energy - prev).abs() <= cfg.convergence_tolerance * prev.abs()
            };
            let finished = s >= cfg.max_steps || stagnated;
            if finished {
                trace.records.push(record);
                break;
            }
            if s.is_multiple_of(cfg.trace_stride) {
                trace.records.push(record);
            }
            if let StepOutcome::Converged(_) = self.advance(&eval)? {
                if trace.records.last().map(|r| r.step) != Some(s) {
                    trace.records.push(record);
                }
                break;
            }
        }
        Ok((self.particles, trace))
    }
}

/// Relax `particles` with the given configuration.
pub fn relax(
    particles: ParticleSet,
    kernel: KernelSpec,
    topology: Topology,
    level_set: Option<&dyn LevelSet>,
    config: RelaxationConfig,
) -> Result<(ParticleSet, EnergyTrace)> {
    Relaxer::new(particles, kernel, topology, level_set, config)?.run()
}
