//! Five-point finite-difference matrices for
//! `-(a u_x)_x - (b u_y)_y = f` on the unit square with zero Dirichlet
//! boundary conditions and piecewise-constant coefficients.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SparseSymMatrix, VertexSet};

/// Where the coefficients take their jump value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// No jump anywhere.
    Constant,
    /// The open square `(0.25, 0.75)^2`.
    SquareJump,
    /// Cells `(i, j)` of a 5x5 checkerboard with `i + j` even.
    Checkerboard5,
}

/// How a face coefficient is formed from the two adjacent node values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceMean {
    #[default]
    Harmonic,
    Arithmetic,
}

/// Where the piecewise-constant coefficients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// At the grid nodes, combined across each face by [`FaceMean`].
    #[default]
    Node,
    /// Directly at face midpoints.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    /// Interior points per side; `h = 1 / (grid + 1)`.
    pub grid: usize,
    pub geometry: Geometry,
    /// Value of `a` inside the jump region (1 outside).
    pub jump_a: f64,
    /// Value of `b` inside the jump region (1 outside).
    pub jump_b: f64,
    pub face_mean: FaceMean,
    pub sampling: Sampling,
}

impl DiffusionSpec {
    pub fn new(geometry: Geometry, jump_a: f64, jump_b: f64) -> Self {
        DiffusionSpec {
            grid: 20,
            geometry,
            jump_a,
            jump_b,
            face_mean: FaceMean::Harmonic,
            sampling: Sampling::Node,
        }
    }

    /// Named test problems: `constant`, `square-jump-ab`, `square-jump-a`,
    /// `checker-ab`, `checker-a`.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" => Self::new(Geometry::Constant, 1.0, 1.0),
            "square-jump-ab" => Self::new(Geometry::SquareJump, 100.0, 100.0),
            "square-jump-a" => Self::new(Geometry::SquareJump, 100.0, 1.0),
            "checker-ab" => Self::new(Geometry::Checkerboard5, 100.0, 100.0),
            "checker-a" => Self::new(Geometry::Checkerboard5, 100.0, 1.0),
            _ => return Err(Error::InvalidConfig(format!("unknown model '{name}'"))),
        })
    }

    pub const NAMES: [&'static str; 5] = [
        "constant",
        "square-jump-ab",
        "square-jump-a",
        "checker-ab",
        "checker-a",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::InvalidConfig(
                "grid must have at least 2 points per side".into(),
            ));
        }
        if !(self.jump_a > 0.0
            && self.jump_a.is_finite()
            && self.jump_b > 0.0
            && self.jump_b.is_finite())
        {
            return Err(Error::InvalidConfig(
                "jump values must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.grid * self.grid
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.grid + 1) as f64
    }

    /// Coordinates of vertex `u`; `u = q * grid + p` with `x = (p + 1) h`.
    pub fn coords(&self, u: usize) -> (f64, f64) {
        let (p, q) = (u % self.grid, u / self.grid);
        ((p + 1) as f64 * self.h(), (q + 1) as f64 * self.h())
    }

    pub fn in_jump_region(&self, x: f64, y: f64) -> bool {
        match self.geometry {
            Geometry::Constant => false,
            Geometry::SquareJump => 0.25 < x && x < 0.75 && 0.25 < y && y < 0.75,
            Geometry::Checkerboard5 => {
                if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                    return false;
                }
                let cell = |t: f64| ((t * 5.0).floor() as usize).min(4);
                (cell(x) + cell(y)) % 2 == 0
            }
        }
    }

    fn coef_a(&self, x: f64, y: f64) -> f64 {
        if self.in_jump_region(x, y) {
            self.jump_a
        } else {
            1.0
        }
    }

    fn coef_b(&self, x: f64, y: f64) -> f64 {
        if self.in_jump_region(x, y) {
            self.jump_b
        } else {
            1.0
        }
    }

    /// Coefficient on the face between two neighboring points.
    fn face(&self, coef: impl Fn(f64, f64) -> f64, p0: (f64, f64), p1: (f64, f64)) -> f64 {
        match self.sampling {
            Sampling::Midpoint => coef(0.5 * (p0.0 + p1.0), 0.5 * (p0.1 + p1.1)),
            Sampling::Node => {
                let (c0, c1) = (coef(p0.0, p0.1), coef(p1.0, p1.1));
                match self.face_mean {
                    FaceMean::Harmonic => 2.0 * c0 * c1 / (c0 + c1),
                    FaceMean::Arithmetic => 0.5 * (c0 + c1),
                }
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Constant => "constant",
            Geometry::SquareJump => "square-jump",
            Geometry::Checkerboard5 => "checkerboard5",
        })
    }
}

impl FromStr for FaceMean {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(FaceMean::Harmonic),
            "arithmetic" => Ok(FaceMean::Arithmetic),
            _ => Err(Error::InvalidConfig(format!("unknown face mean '{s}'"))),
        }
    }
}

impl FromStr for Sampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(Sampling::Node),
            "midpoint" => Ok(Sampling::Midpoint),
            _ => Err(Error::InvalidConfig(format!("unknown sampling '{s}'"))),
        }
    }
}

/// Assembles the (unscaled) finite-difference matrix.
pub fn fd_diffusion(spec: &DiffusionSpec) -> Result<SparseSymMatrix> {
    spec.validate()?;
    let k = spec.grid;
    let h = spec.h();
    let inv_h2 = 1.0 / (h * h);
    let pt = |p: isize, q: isize| ((p + 1) as f64 * h, (q + 1) as f64 * h);
    let a = |x: f64, y: f64| spec.coef_a(x, y);
    let b = |x: f64, y: f64| spec.coef_b(x, y);
    let mut t = Vec::with_capacity(3 * k * k);
    for q in 0..k as isize {
        for p in 0..k as isize {
            let u = (q as usize) * k + p as usize;
            let here = pt(p, q);
            let west = spec.face(a, here, pt(p - 1, q));
            let east = spec.face(a, here, pt(p + 1, q));
            let south = spec.face(b, here, pt(p, q - 1));
            let north = spec.face(b, here, pt(p, q + 1));
            t.push((u, u, (west + east + south + north) * inv_h2));
            if p > 0 {
                t.push((u, u - 1, -west * inv_h2));
            }
            if q > 0 {
                t.push((u, u - k, -south * inv_h2));
            }
        }
    }
    SparseSymMatrix::from_triangle_triplets(k * k, &t)
}

/// One row of the plotting table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub vertex: usize,
    pub x: f64,
    pub y: f64,
    pub subdomain: usize,
    pub in_jump: bool,
}

/// Per-node coordinates, subdomain id and jump-region flag. A vertex in
/// several (overlapping) subdomains gets the first id.
pub fn grid_plot_data(partition: &[VertexSet], spec: &DiffusionSpec) -> Result<Vec<GridPoint>> {
    let n = spec.n();
    let mut id = vec![None; n];
    for (s, set) in partition.iter().enumerate() {
        for &v in set {
            if v >= n {
                return Err(Error::IndexOutOfRange { index: v, n });
            }
            id[v].get_or_insert(s);
        }
    }
    (0..n)
        .map(|v| {
            let subdomain = id[v].ok_or(Error::DimensionMismatch {
                expected: n,
                found: partition.iter().map(VertexSet::len).sum(),
            })?;
            let (x, y) = spec.coords(v);
            Ok(GridPoint {
                vertex: v,
                x,
                y,
                subdomain,
                in_jump: spec.in_jump_region(x, y),
            })
        })
        .collect()
}

pub fn write_grid_csv<W: Write>(points: &[GridPoint], header: &[String], mut w: W) -> Result<()> {
    for h in header {
        for line in h.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "vertex,x,y,subdomain,in_jump")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.vertex,
            p.x,
            p.y,
            p.subdomain,
            u8::from(p.in_jump)
        )?;
    }
    Ok(())
}
