//! End-to-end runs driven by a [`RunConfig`]: seeding, relaxation and file output.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{CutoffReference, LevelSetSource, RunConfig, SchemeName, VolumeSource};
use crate::diagnostics::{hexatic_order, tetratic_order};
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{LevelSet, LevelSetField, Shape, Vec2};
use crate::kernel::{KernelSpec, KERNEL_FORM};
use crate::particles::{initialize_jittered, particle_volumes, write_snapshot_csv, CellLayout, NeighborGrid, ParticleSet, Topology};
use crate::relaxation::{relax, EnergyTrace, RelaxationConfig};

/// One independently relaxed domain, ready to run.
pub struct Region {
    /// `None` for the periodic box.
    pub name: Option<String>,
    pub particles: ParticleSet,
    pub kernel: KernelSpec,
    pub topology: Topology,
    pub level_set: Option<Box<dyn LevelSet>>,
    pub cell_spacing: f64,
}

impl Region {
    pub fn level_set(&self) -> Option<&dyn LevelSet> {
        self.level_set.as_deref()
    }
}

/// Seed every region of `cfg` (or the periodic box when there are none).
pub fn prepare(cfg: &RunConfig) -> Result<Vec<Region>> {
    cfg.validate()?;
    let dx = cfg.grid.cell_spacing()?;
    let cells = CellLayout {
        origin: Vec2::new(cfg.grid.origin[0], cfg.grid.origin[1]),
        spacing: dx,
        nx: cfg.grid.n[0],
        ny: cfg.grid.n[1],
    };
    let cutoff = |ps: &ParticleSet| -> Result<KernelSpec> {
        let h = match cfg.kernel.reference()? {
            CutoffReference::CellSpacing(m) => m * dx,
            CutoffReference::ParticleSpacing(m) => m * ps.effective_spacing(),
        };
        KernelSpec::two_d(h)
    };

    if cfg.is_periodic() {
        let particles = initialize_jittered(&cells, None, cfg.init.jitter, cfg.init.seed)?;
        let kernel = cutoff(&particles)?;
        return Ok(vec![Region {
            name: None,
            particles,
            kernel,
            topology: cells.periodic_topology(),
            level_set: None,
            cell_spacing: dx,
        }]);
    }

    let mut out = Vec::with_capacity(cfg.regions.len());
    for region in &cfg.regions {
        let shape: Shape = region.shape.build()?;
        let level_set: Box<dyn LevelSet> = match region.level_set {
            LevelSetSource::Analytic => Box::new(shape.clone()),
            LevelSetSource::Grid => Box::new(LevelSetField::sample(&shape, cells.origin, dx, cells.nx + 1, cells.ny + 1)?),
        };
        let mut particles = initialize_jittered(&cells, Some(level_set.as_ref()), cfg.init.jitter, cfg.init.seed)?;
        if region.volume == VolumeSource::Analytic {
            let area = shape.area().expect("checked by validate");
            particles = particles.with_domain_volume(area)?;
        }
        let kernel = cutoff(&particles)?;
        out.push(Region {
            name: Some(region.name.clone()),
            particles,
            kernel,
            topology: Topology::Open,
            level_set: Some(level_set),
            cell_spacing: dx,
        });
    }
    Ok(out)
}

/// Outcome of relaxing one region.
#[derive(Clone, Debug)]
pub struct RegionResult {
    pub name: Option<String>,
    pub particles: ParticleSet,
    pub trace: EnergyTrace,
    pub kernel: KernelSpec,
    pub topology: Topology,
    /// Bond order over interior particles (`phi <= -h` in bounded regions).
    pub psi6: Option<f64>,
    pub psi4: Option<f64>,
    pub max_phi: f64,
    /// Particles with `phi > 0` at the end of the run.
    pub outside: usize,
}

/// Relax one prepared region and compute its end-of-run diagnostics.
pub fn relax_region(region: &Region, config: RelaxationConfig) -> Result<RegionResult> {
    let (particles, trace) = relax(region.particles.clone(), region.kernel, region.topology, region.level_set(), config)?;
    let phi = final_phi(&particles, region.level_set())?;
    let max_phi = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let outside = phi.iter().filter(|&&p| p > 0.0).count();
    let mask: Option<Vec<bool>> = region.level_set().map(|_| phi.iter().map(|&p| p <= -region.kernel.cutoff()).collect());
    let psi6 = hexatic_order(&particles, region.topology, mask.as_deref()).ok();
    let psi4 = tetratic_order(&particles, region.topology, mask.as_deref()).ok();
    Ok(RegionResult {
        name: region.name.clone(),
        particles,
        trace,
        kernel: region.kernel,
        topology: region.topology,
        psi6,
        psi4,
        max_phi,
        outside,
    })
}

fn final_phi(particles: &ParticleSet, level_set: Option<&dyn LevelSet>) -> Result<Vec<f64>> {
    match level_set {
        Some(ls) => particles.positions().iter().map(|x| ls.phi(x)).collect(),
        None => Ok(vec![f64::NEG_INFINITY; particles.len()]),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Write `x,y,volume,phi` for the final particle positions.
pub fn write_snapshot(path: &Path, result: &RegionResult, level_set: Option<&dyn LevelSet>, exec: Execution) -> Result<()> {
    let grid = NeighborGrid::build(result.kernel.cutoff(), result.topology, result.particles.positions())?;
    let volumes = particle_volumes(&result.particles, &grid, &result.kernel, exec);
    let phi = final_phi(&result.particles, level_set)?;
    let mut out = create(path)?;
    write_snapshot_csv(&mut out, result.particles.positions(), &volumes, &phi)?;
    out.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &EnergyTrace) -> Result<()> {
    let mut out = create(path)?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into())
}

fn meta_block(cfg: &RunConfig, scheme: SchemeName, result: &RegionResult) -> String {
    let dx = cfg.grid.cell_spacing().unwrap_or(f64::NAN);
    let last = result.trace.last();
    let mut s = String::new();
    let _ = writeln!(s, "kernel = {KERNEL_FORM}");
    let _ = writeln!(s, "scheme = {scheme:?}");
    let _ = writeln!(s, "h = {:.16e}", result.kernel.cutoff());
    let _ = writeln!(s, "h_over_dx = {:.6}", result.kernel.cutoff() / dx);
    let _ = writeln!(s, "h_over_dp = {:.6}", result.kernel.cutoff() / result.particles.effective_spacing());
    let _ = writeln!(s, "c = {}", cfg.relaxation.c);
    if scheme == SchemeName::Litvinov {
        let _ = writeln!(s, "viscosity = {}", cfg.relaxation.viscosity);
    }
    let _ = writeln!(s, "N = {}", result.particles.len());
    let _ = writeln!(s, "volume = {:.16e}", result.particles.domain_volume());
    let _ = writeln!(s, "seed = {}", cfg.init.seed);
    let _ = writeln!(s, "jitter = {}", cfg.init.jitter);
    let _ = writeln!(s, "steps = {}", last.map_or(0, |r| r.step));
    let _ = writeln!(s, "final_E = {:.16e}", last.map_or(f64::NAN, |r| r.energy));
    let _ = writeln!(s, "initial_E = {:.16e}", result.trace.records.first().map_or(f64::NAN, |r| r.energy));
    let _ = writeln!(s, "psi6 = {}", opt(result.psi6));
    let _ = writeln!(s, "psi4 = {}", opt(result.psi4));
    if result.max_phi.is_finite() {
        let _ = writeln!(s, "max_phi = {:.6e}", result.max_phi);
        let _ = writeln!(s, "outside = {}", result.outside);
    }
    s
}

/// Paths written by a relax run.
#[derive(Clone, Debug)]
pub struct RunFiles {
    pub particles: Vec<PathBuf>,
    pub traces: Vec<PathBuf>,
    pub meta: PathBuf,
}

/// Seed, relax and write `particles_final*.csv`, `trace*.csv` and `run_meta.txt`.
/// Files get a `_<region>` suffix when the config has more than one region.
pub fn run_relax(cfg: &RunConfig, out_dir: &Path) -> Result<(Vec<RegionResult>, RunFiles)> {
    let regions = prepare(cfg)?;
    fs::create_dir_all(out_dir)?;
    let multi = regions.len() > 1;
    let scheme = cfg.relaxation.scheme;
    let mut results = Vec::new();
    let mut files = RunFiles { particles: Vec::new(), traces: Vec::new(), meta: out_dir.join("run_meta.txt") };
    let mut meta = String::new();
    for region in &regions {
        let rc = cfg.relaxation.to_config(scheme, region.cell_spacing);
        let exec = rc.execution;
        let result = relax_region(region, rc)?;
        let suffix = match (&region.name, multi) {
            (Some(name), true) => format!("_{name}"),
            _ => String::new(),
        };
        let p = out_dir.join(format!("particles_final{suffix}.csv"));
        let t = out_dir.join(format!("trace{suffix}.csv"));
        write_snapshot(&p, &result, region.level_set(), exec)?;
        write_trace(&t, &result.trace)?;
        if let Some(name) = &region.name {
            let _ = writeln!(meta, "[{name}]");
        }
        meta.push_str(&meta_block(cfg, scheme, &result));
        if multi {
            meta.push('\n');
        }
        files.particles.push(p);
        files.traces.push(t);
        results.push(result);
    }
    fs::write(&files.meta, meta)?;
    Ok((results, files))
}

/// Inclusive step ranges.
pub type StepRanges = Vec<(usize, usize)>;

/// Step ranges (inclusive, over common recorded steps) where `a` has the
/// strictly lower energy, and where `b` does.
pub fn leading_ranges(a: &EnergyTrace, b: &EnergyTrace) -> (StepRanges, StepRanges) {
    let mut ra = StepRanges::new();
    let mut rb = StepRanges::new();
    let mut last: Option<(bool, usize)> = None;
    let mut j = 0;
    for ra_rec in &a.records {
        while j < b.records.len() && b.records[j].step < ra_rec.step {
            j += 1;
        }
        let Some(rb_rec) = b.records.get(j).filter(|r| r.step == ra_rec.step) else { continue };
        let lead = if ra_rec.energy < rb_rec.energy {
            Some(true)
        } else if rb_rec.energy < ra_rec.energy {
            Some(false)
        } else {
            None
        };
        let s = ra_rec.step;
        match lead {
            Some(who) => {
                let list = if who { &mut ra } else { &mut rb };
                match (last, list.last_mut()) {
                    (Some((prev, _)), Some(range)) if prev == who => range.1 = s,
                    _ => list.push((s, s)),
                }
                last = Some((who, s));
            }
            None => last = None,
        }
    }
    (ra, rb)
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub gradient_descent: RegionResult,
    pub litvinov: RegionResult,
    pub gradient_descent_leads: StepRanges,
    pub litvinov_leads: StepRanges,
}

impl Comparison {
    pub fn summary(&self) -> String {
        let fmt = |r: &[(usize, usize)]| {
            if r.is_empty() {
                "none".to_string()
            } else {
                r.iter().map(|(a, b)| format!("[{a}, {b}]")).collect::<Vec<_>>().join(" ")
            }
        };
        format!(
            "gradient_descent leads on steps {}; litvinov leads on steps {}; psi6 {} vs {}",
            fmt(&self.gradient_descent_leads),
            fmt(&self.litvinov_leads),
            opt(self.gradient_descent.psi6),
            opt(self.litvinov.psi6),
        )
    }
}

/// Relax the same initial state with gradient descent and with the inertial
/// scheme. Only the first region (or the periodic box) is used.
pub fn compare_region(cfg: &RunConfig, region: &Region) -> Result<Comparison> {
    let gd = relax_region(region, cfg.relaxation.to_config(SchemeName::GradientDescent, region.cell_spacing))?;
    let lv = relax_region(region, cfg.relaxation.to_config(SchemeName::Litvinov, region.cell_spacing))?;
    let (gd_leads, lv_leads) = leading_ranges(&gd.trace, &lv.trace);
    Ok(Comparison { gradient_descent: gd, litvinov: lv, gradient_descent_leads: gd_leads, litvinov_leads: lv_leads })
}

/// Run [`compare_region`] and write both traces, both snapshots, `run_meta.txt`
/// and `compare_summary.txt`.
pub fn run_compare(cfg: &RunConfig, out_dir: &Path) -> Result<Comparison> {
    let regions = prepare(cfg)?;
    let region = &regions[0];
    fs::create_dir_all(out_dir)?;
    let cmp = compare_region(cfg, region)?;
    let exec = cfg.relaxation.to_config(SchemeName::GradientDescent, region.cell_spacing).execution;
    let mut meta = String::new();
    for (name, scheme, result) in [
        ("gradient_descent", SchemeName::GradientDescent, &cmp.gradient_descent),
        ("litvinov", SchemeName::Litvinov, &cmp.litvinov),
    ] {
        write_trace(&out_dir.join(format!("trace_{name}.csv")), &result.trace)?;
        write_snapshot(&out_dir.join(format!("particles_final_{name}.csv")), result, region.level_set(), exec)?;
        let _ = writeln!(meta, "[{name}]");
        meta.push_str(&meta_block(cfg, scheme, result));
        meta.push('\n');
    }
    fs::write(out_dir.join("run_meta.txt"), meta)?;
    fs::write(out_dir.join("compare_summary.txt"), cmp.summary() + "\n")?;
    Ok(cmp)
}
