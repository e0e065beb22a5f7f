//! Two-dimensional Bravais lattices at unit area per site and the
//! characteristic volume `v_c = 1 / sum_p W(|p|, h)` that decides which
//! pattern a relaxation settles into.
//!
//! Shape parameters: with base `a` along x and `k a^2 = 1`,
//!
//! * rectangular `(a, 0), (0, k a)`
//! * diamond `(a, 0), (a/2, k a)`
//! * parallelogram `(a, 0), (r k a, k a)`
//!
//! The search ranges are `k in [1, 3]` and `r in [0, 0.5]`. Slants `r` and
//! `1/k - r` are mirror images, so `[0, 1/(2k)]` already covers every shape.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indices, Execution};
use crate::geometry::Vec2;
use crate::kernel::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatticeType {
    Hexagonal,
    Square,
    Diamond,
    Rectangular,
    Parallelogram,
}

impl LatticeType {
    /// Column order of prediction tables.
    pub const ALL: [LatticeType; 5] = [
        LatticeType::Hexagonal,
        LatticeType::Square,
        LatticeType::Diamond,
        LatticeType::Rectangular,
        LatticeType::Parallelogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeType::Hexagonal => "hexagonal",
            LatticeType::Square => "square",
            LatticeType::Diamond => "diamond",
            LatticeType::Rectangular => "rectangular",
            LatticeType::Parallelogram => "parallelogram",
        }
    }

    /// Lower is more symmetric; breaks exact ties between nested families.
    fn symmetry_rank(self) -> u8 {
        match self {
            LatticeType::Hexagonal => 0,
            LatticeType::Square => 1,
            LatticeType::Rectangular => 2,
            LatticeType::Diamond => 3,
            LatticeType::Parallelogram => 4,
        }
    }
}

impl fmt::Display for LatticeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LatticeType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| invalid(format!("unknown lattice type `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    kind: LatticeType,
    k: f64,
    r: f64,
}

impl LatticeSpec {
    pub fn hexagonal() -> Self {
        Self { kind: LatticeType::Hexagonal, k: 1.0, r: 0.0 }
    }

    pub fn square() -> Self {
        Self { kind: LatticeType::Square, k: 1.0, r: 0.0 }
    }

    pub fn rectangular(k: f64) -> Result<Self> {
        Ok(Self { kind: LatticeType::Rectangular, k: check_ratio(k)?, r: 0.0 })
    }

    pub fn diamond(k: f64) -> Result<Self> {
        Ok(Self { kind: LatticeType::Diamond, k: check_ratio(k)?, r: 0.0 })
    }

    pub fn parallelogram(k: f64, r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(invalid(format!("slant must be finite, got {r}")));
        }
        Ok(Self { kind: LatticeType::Parallelogram, k: check_ratio(k)?, r })
    }

    pub fn kind(&self) -> LatticeType {
        self.kind
    }

    /// Aspect ratio, where the type has one.
    pub fn ratio(&self) -> Option<f64> {
        match self.kind {
            LatticeType::Rectangular | LatticeType::Diamond | LatticeType::Parallelogram => Some(self.k),
            _ => None,
        }
    }

    pub fn slant(&self) -> Option<f64> {
        (self.kind == LatticeType::Parallelogram).then_some(self.r)
    }

    /// Primitive vectors spanning a cell of unit area.
    pub fn generators(&self) -> (Vec2, Vec2) {
        match self.kind {
            LatticeType::Square => (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)),
            LatticeType::Hexagonal => {
                let s = (2.0 / 3f64.sqrt()).sqrt();
                (Vec2::new(s, 0.0), Vec2::new(0.5 * s, 0.5 * 3f64.sqrt() * s))
            }
            LatticeType::Rectangular => {
                let a = 1.0 / self.k.sqrt();
                (Vec2::new(a, 0.0), Vec2::new(0.0, self.k * a))
            }
            LatticeType::Diamond => {
                let a = 1.0 / self.k.sqrt();
                (Vec2::new(a, 0.0), Vec2::new(0.5 * a, self.k * a))
            }
            LatticeType::Parallelogram => {
                let a = 1.0 / self.k.sqrt();
                (Vec2::new(a, 0.0), Vec2::new(self.r * self.k * a, self.k * a))
            }
        }
    }
}

fn check_ratio(k: f64) -> Result<f64> {
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(invalid(format!("aspect ratio must be positive, got {k}")))
    }
}

/// Visit `i b1 + j b2` for every lattice site strictly inside `radius`.
fn for_each_site<F: FnMut(Vec2)>(b1: &Vec2, b2: &Vec2, radius: f64, mut f: F) -> Result<()> {
    if !(radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let det = b1.x * b2.y - b1.y * b2.x;
    let scale = b1.norm().max(b2.norm());
    if !(det.abs() > 1e-12 * scale * scale) {
        return Err(invalid("degenerate lattice generators"));
    }
    // |i| = |p x b2| / |det| <= R |b2| / |det|, and likewise for j
    let imax = (radius * b2.norm() / det.abs()).floor() as i64;
    let jmax = (radius * b1.norm() / det.abs()).floor() as i64;
    for j in -jmax..=jmax {
        for i in -imax..=imax {
            let p = b1 * i as f64 + b2 * j as f64;
            if p.norm() < radius {
                f(p);
            }
        }
    }
    Ok(())
}

/// Sites of the lattice spanned by `b1`, `b2` with `|p| < radius`, origin included.
pub fn points_from_generators(b1: &Vec2, b2: &Vec2, radius: f64) -> Result<Vec<Vec2>> {
    let mut out = Vec::new();
    for_each_site(b1, b2, radius, |p| out.push(p))?;
    Ok(out)
}

pub fn lattice_points_within(spec: &LatticeSpec, radius: f64) -> Result<Vec<Vec2>> {
    let (b1, b2) = spec.generators();
    points_from_generators(&b1, &b2, radius)
}

/// `1 / sum_p W(|p|, h)` over all sites including the origin, in units of site area.
pub fn characteristic_volume(spec: &LatticeSpec, h: f64) -> Result<f64> {
    let kernel = KernelSpec::two_d(h)?;
    let (b1, b2) = spec.generators();
    let mut sum = 0.0;
    for_each_site(&b1, &b2, h, |p| sum += kernel.value(p.norm()))?;
    Ok(1.0 / sum)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub spec: LatticeSpec,
    pub volume: f64,
}

const K_RANGE: (f64, f64) = (1.0, 3.0);
const R_RANGE: (f64, f64) = (0.0, 0.5);
const GRID_STEP: f64 = 0.01;
const REFINED_STEP: f64 = 1e-4;

/// Largest characteristic volume within one lattice type: grid search over
/// the shape parameters followed by a compass search down to `1e-4`.
pub fn maximize_type(kind: LatticeType, h: f64) -> Result<Maximum> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("cut-off must be positive, got {h}")));
    }
    let build = |k: f64, r: f64| match kind {
        LatticeType::Hexagonal => Ok(LatticeSpec::hexagonal()),
        LatticeType::Square => Ok(LatticeSpec::square()),
        LatticeType::Rectangular => LatticeSpec::rectangular(k),
        LatticeType::Diamond => LatticeSpec::diamond(k),
        LatticeType::Parallelogram => LatticeSpec::parallelogram(k, r),
    };
    let eval = |k: f64, r: f64| -> Result<f64> { characteristic_volume(&build(k, r)?, h) };
    let (has_k, has_r) = match kind {
        LatticeType::Hexagonal | LatticeType::Square => (false, false),
        LatticeType::Rectangular | LatticeType::Diamond => (true, false),
        LatticeType::Parallelogram => (true, true),
    };
    if !has_k {
        let spec = build(1.0, 0.0)?;
        return Ok(Maximum { spec, volume: characteristic_volume(&spec, h)? });
    }

    let nk = ((K_RANGE.1 - K_RANGE.0) / GRID_STEP).round() as usize;
    let nr = if has_r { ((R_RANGE.1 - R_RANGE.0) / GRID_STEP).round() as usize } else { 0 };
    let (mut bk, mut br, mut bv) = (K_RANGE.0, R_RANGE.0, f64::NEG_INFINITY);
    for ik in 0..=nk {
        let k = K_RANGE.0 + ik as f64 * GRID_STEP;
        for ir in 0..=nr {
            let r = R_RANGE.0 + ir as f64 * GRID_STEP;
            let v = eval(k, r)?;
            if v > bv {
                (bk, br, bv) = (k, r, v);
            }
        }
    }

    let mut step = 0.5 * GRID_STEP;
    while step >= REFINED_STEP {
        let mut improved = false;
        let moves: &[(f64, f64)] = if has_r {
            &[(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        } else {
            &[(1.0, 0.0), (-1.0, 0.0)]
        };
        for (dk, dr) in moves {
            let k = (bk + dk * step).clamp(K_RANGE.0, K_RANGE.1);
            let r = (br + dr * step).clamp(R_RANGE.0, R_RANGE.1);
            let v = eval(k, r)?;
            if v > bv {
                (bk, br, bv) = (k, r, v);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Maximum { spec: build(bk, br)?, volume: bv })
}

/// One row of the prediction table.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub h: f64,
    /// Per-type maxima in [`LatticeType::ALL`] order.
    pub maxima: [Maximum; 5],
    pub pattern: LatticeType,
}

impl PredictionRow {
    pub fn volume(&self, kind: LatticeType) -> f64 {
        self.maxima[LatticeType::ALL.iter().position(|&t| t == kind).unwrap()].volume
    }

    pub fn winner(&self) -> &Maximum {
        &self.maxima[LatticeType::ALL.iter().position(|&t| t == self.pattern).unwrap()]
    }

    /// Difference between the two largest per-type volumes.
    pub fn top_gap(&self) -> f64 {
        let mut v: Vec<f64> = self.maxima.iter().map(|m| m.volume).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v[0] - v[1]
    }
}

const TIE: f64 = 1e-7;

/// The pattern with the largest characteristic volume at cut-off `h`. Types
/// within `1e-7` of the best count as tied and the more symmetric one wins.
pub fn predict_pattern(h: f64) -> Result<PredictionRow> {
    let mut maxima = Vec::with_capacity(5);
    for kind in LatticeType::ALL {
        maxima.push(maximize_type(kind, h)?);
    }
    let best = maxima.iter().map(|m| m.volume).fold(f64::NEG_INFINITY, f64::max);
    let pattern = maxima
        .iter()
        .filter(|m| m.volume >= best - TIE)
        .map(|m| m.spec.kind())
        .min_by_key(|t| t.symmetry_rank())
        .expect("five candidates");
    Ok(PredictionRow { h, maxima: maxima.try_into().expect("five maxima"), pattern })
}

/// Rows for `h = h_min, h_min + step, ...` up to `h_max` (inclusive within rounding).
pub fn prediction_table(h_min: f64, h_max: f64, step: f64, exec: Execution) -> Result<Vec<PredictionRow>> {
    if !(h_min > 0.0 && h_max >= h_min && step > 0.0 && h_max.is_finite()) {
        return Err(invalid(format!("invalid range [{h_min}, {h_max}] with step {step}")));
    }
    let n = ((h_max - h_min) / step + 1e-9).floor() as usize + 1;
    map_indices(n, exec, |i| predict_pattern(h_min + i as f64 * step)).into_iter().collect()
}

pub fn write_prediction_csv<W: Write>(out: &mut W, rows: &[PredictionRow]) -> std::io::Result<()> {
    writeln!(out, "h,v_hex,v_square,v_diamond,v_rect,v_para,pattern,k,r")?;
    for row in rows {
        write!(out, "{}", row.h)?;
        for m in &row.maxima {
            write!(out, ",{:.16e}", m.volume)?;
        }
        let spec = &row.winner().spec;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
        writeln!(out, ",{},{},{}", row.pattern, opt(spec.ratio()), opt(spec.slant()))?;
    }
    Ok(())
}
