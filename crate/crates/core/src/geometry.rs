//! Signed-distance descriptions of 2D domains.
//!
//! The sign convention is negative inside, positive outside and zero on the
//! boundary. Analytic [`Shape`]s and grid-sampled [`LevelSetField`]s both
//! implement [`LevelSet`], which is what the relaxation consumes.

use crate::error::{invalid, Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

/// A signed-distance function with an outward unit normal.
pub trait LevelSet: Send + Sync {
    fn phi(&self, x: &Vec2) -> Result<f64>;
    fn normal(&self, x: &Vec2) -> Result<Vec2>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Circle { center: Vec2, radius: f64 },
    Annulus { center: Vec2, inner: f64, outer: f64 },
    HalfPlane { point: Vec2, normal: Vec2 },
    AxisBox { min: Vec2, max: Vec2 },
    Union(Box<Shape>, Box<Shape>),
    Intersection(Box<Shape>, Box<Shape>),
    Complement(Box<Shape>),
}

fn finite(v: &Vec2) -> bool {
    v.x.is_finite() && v.y.is_finite()
}

impl Shape {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(finite(&center) && radius.is_finite() && radius > 0.0) {
            return Err(invalid(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Shape::Circle { center, radius })
    }

    pub fn annulus(center: Vec2, inner: f64, outer: f64) -> Result<Self> {
        if !(finite(&center) && inner.is_finite() && outer.is_finite() && inner > 0.0 && inner < outer) {
            return Err(invalid(format!("annulus needs 0 < r_inner < r_outer, got {inner}, {outer}")));
        }
        Ok(Shape::Annulus { center, inner, outer })
    }

    /// Half plane `{x : (x - point) . normal <= 0}`; `normal` points outward.
    pub fn half_plane(point: Vec2, normal: Vec2) -> Result<Self> {
        let len = normal.norm();
        if !(finite(&point) && len.is_finite() && len > 0.0) {
            return Err(invalid("half plane needs a finite non-zero normal"));
        }
        Ok(Shape::HalfPlane { point, normal: normal / len })
    }

    pub fn axis_box(min: Vec2, max: Vec2) -> Result<Self> {
        if !(finite(&min) && finite(&max) && min.x < max.x && min.y < max.y) {
            return Err(invalid("box needs min < max on both axes"));
        }
        Ok(Shape::AxisBox { min, max })
    }

    /// Union via `min(phi_a, phi_b)`; distance-like only near the boundary.
    pub fn union(self, other: Shape) -> Self {
        Shape::Union(Box::new(self), Box::new(other))
    }

    /// Intersection via `max(phi_a, phi_b)`; distance-like only near the boundary.
    pub fn intersection(self, other: Shape) -> Self {
        Shape::Intersection(Box::new(self), Box::new(other))
    }

    pub fn complement(self) -> Self {
        Shape::Complement(Box::new(self))
    }

    pub fn signed_distance(&self, x: &Vec2) -> f64 {
        match self {
            Shape::Circle { center, radius } => (x - center).norm() - radius,
            Shape::Annulus { center, inner, outer } => {
                let d = (x - center).norm();
                (inner - d).max(d - outer)
            }
            Shape::HalfPlane { point, normal } => (x - point).dot(normal),
            Shape::AxisBox { min, max } => {
                let c = 0.5 * (min + max);
                let half = 0.5 * (max - min);
                let q = (x - c).abs() - half;
                let outside = Vec2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                outside + q.x.max(q.y).min(0.0)
            }
            Shape::Union(a, b) => a.signed_distance(x).min(b.signed_distance(x)),
            Shape::Intersection(a, b) => a.signed_distance(x).max(b.signed_distance(x)),
            Shape::Complement(a) => -a.signed_distance(x),
        }
    }

    /// Analytic gradient of the signed distance; `None` on skeleton points
    /// where it is undefined (e.g. a circle's center).
    pub fn gradient(&self, x: &Vec2) -> Option<Vec2> {
        match self {
            Shape::Circle { center, .. } => radial(x - center),
            Shape::Annulus { center, inner, outer } => {
                let d = (x - center).norm();
                let dir = radial(x - center)?;
                if d - outer >= inner - d {
                    Some(dir)
                } else {
                    Some(-dir)
                }
            }
            Shape::HalfPlane { normal, .. } => Some(*normal),
            Shape::AxisBox { min, max } => {
                let c = 0.5 * (min + max);
                let half = 0.5 * (max - min);
                let p = x - c;
                let q = p.abs() - half;
                let sx = p.x.signum();
                let sy = p.y.signum();
                if q.x > 0.0 || q.y > 0.0 {
                    let out = Vec2::new(q.x.max(0.0) * sx, q.y.max(0.0) * sy);
                    radial(out)
                } else if q.x > q.y {
                    Some(Vec2::new(sx, 0.0))
                } else if q.y > q.x {
                    Some(Vec2::new(0.0, sy))
                } else {
                    None
                }
            }
            Shape::Union(a, b) => {
                if a.signed_distance(x) <= b.signed_distance(x) {
                    a.gradient(x)
                } else {
                    b.gradient(x)
                }
            }
            Shape::Intersection(a, b) => {
                if a.signed_distance(x) >= b.signed_distance(x) {
                    a.gradient(x)
                } else {
                    b.gradient(x)
                }
            }
            Shape::Complement(a) => a.gradient(x).map(|g| -g),
        }
    }

    /// Exact enclosed area where it is known in closed form.
    pub fn area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self {
            Shape::Circle { radius, .. } => Some(PI * radius * radius),
            Shape::Annulus { inner, outer, .. } => Some(PI * (outer * outer - inner * inner)),
            Shape::AxisBox { min, max } => Some((max.x - min.x) * (max.y - min.y)),
            _ => None,
        }
    }
}

fn radial(v: Vec2) -> Option<Vec2> {
    let n = v.norm();
    (n > 0.0).then(|| v / n)
}

impl LevelSet for Shape {
    fn phi(&self, x: &Vec2) -> Result<f64> {
        Ok(self.signed_distance(x))
    }

    fn normal(&self, x: &Vec2) -> Result<Vec2> {
        self.gradient(x).ok_or(Error::DegenerateGradient(*x))
    }
}

/// Signed distance sampled on the nodes of a Cartesian background grid.
#[derive(Clone, Debug)]
pub struct LevelSetField {
    origin: Vec2,
    spacing: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl LevelSetField {
    /// Node `(i, j)` holds `shape.signed_distance(origin + (i dx, j dx))`.
    pub fn sample(shape: &Shape, origin: Vec2, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(invalid(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        if !(spacing.is_finite() && spacing > 0.0 && finite(&origin)) {
            return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = origin + Vec2::new(i as f64 * spacing, j as f64 * spacing);
                values.push(shape.signed_distance(&x));
            }
        }
        Self::from_values(origin, spacing, nx, ny, values)
    }

    /// Build from row-major node values (`i` fastest).
    pub fn from_values(origin: Vec2, spacing: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(invalid("node value count does not match grid size"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("level-set values must be finite"));
        }
        Ok(Self { origin, spacing, nx, ny, values })
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn node_position(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.spacing, j as f64 * self.spacing)
    }

    /// Upper corner of the sampled box.
    pub fn max_corner(&self) -> Vec2 {
        self.node_position(self.nx - 1, self.ny - 1)
    }

    /// Bilinear interpolation of the node values.
    pub fn interpolate(&self, x: &Vec2) -> Result<f64> {
        let gx = (x.x - self.origin.x) / self.spacing;
        let gy = (x.y - self.origin.y) / self.spacing;
        let (ex, ey) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        // nodes themselves may sit a rounding error outside
        let tol = 1e-9;
        if !(gx >= -tol && gy >= -tol && gx <= ex + tol && gy <= ey + tol) {
            return Err(Error::OutOfDomain(*x));
        }
        let gx = gx.clamp(0.0, ex);
        let gy = gy.clamp(0.0, ey);
        let i = (gx.floor() as usize).min(self.nx - 2);
        let j = (gy.floor() as usize).min(self.ny - 2);
        let tx = gx - i as f64;
        let ty = gy - j as f64;
        let v00 = self.node(i, j);
        let v10 = self.node(i + 1, j);
        let v01 = self.node(i, j + 1);
        let v11 = self.node(i + 1, j + 1);
        Ok((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    /// Normalized central-difference gradient (step `dx`) of the interpolated
    /// field. Probe points are clamped to the grid.
    pub fn normal(&self, x: &Vec2) -> Result<Vec2> {
        // validates that x itself is covered
        self.interpolate(x)?;
        let lo = self.origin;
        let hi = self.max_corner();
        let probe = |p: Vec2| {
            let q = Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
            self.interpolate(&q).map(|v| (v, q))
        };
        let dx = self.spacing;
        let (xp, qxp) = probe(x + Vec2::new(dx, 0.0))?;
        let (xm, qxm) = probe(x - Vec2::new(dx, 0.0))?;
        let (yp, qyp) = probe(x + Vec2::new(0.0, dx))?;
        let (ym, qym) = probe(x - Vec2::new(0.0, dx))?;
        let g = Vec2::new((xp - xm) / (qxp.x - qxm.x), (yp - ym) / (qyp.y - qym.y));
        let len = g.norm();
        if !(len >= 1e-8) {
            return Err(Error::DegenerateGradient(*x));
        }
        Ok(g / len)
    }
}

impl LevelSet for LevelSetField {
    fn phi(&self, x: &Vec2) -> Result<f64> {
        self.interpolate(x)
    }

    fn normal(&self, x: &Vec2) -> Result<Vec2> {
        LevelSetField::normal(self, x)
    }
}
