//! Chart coordinates for the low-dimensional portraits: the projective
//! plane in an upper-hemisphere polar chart, projective lines as angles in
//! [0, π), and the torus of two projective lines as an angle pair.

use anyhow::{anyhow, Result};
use flagflow::{Flag, FlagType};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// RP¹ of one factor: coordinate x is the line angle, y = 0.
    Line { factor: usize },
    /// RP² of one SL(3) factor; `plane` selects the Grassmannian of planes,
    /// charted through the unit normal.
    ProjectivePlane { factor: usize, plane: bool },
    /// RP¹ × RP¹: both coordinates are angles in [0, π).
    Torus { factors: (usize, usize) },
}

impl Chart {
    pub fn id(&self) -> &'static str {
        match self {
            Chart::Line { .. } => "rp1-angle",
            Chart::ProjectivePlane { .. } => "rp2-polar",
            Chart::Torus { .. } => "torus-angles",
        }
    }
}

/// Pick the chart for a flag type of total dimension ≤ 2, or report that
/// the manifold is too large to draw.
pub fn chart_for(t: &FlagType) -> Result<Chart> {
    let dim = t.manifold_dim();
    if dim == 0 || dim > 2 {
        return Err(anyhow!(
            "flag manifold dimension {dim} outside the portrait range 1..=2"
        ));
    }
    let active: Vec<(usize, usize, &[usize])> = t
        .parts()
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(f, p)| (f, t.spec().factors()[f], p.as_slice()))
        .collect();
    match active.as_slice() {
        [(f, 2, [1])] => Ok(Chart::Line { factor: *f }),
        [(f, 3, [1])] => Ok(Chart::ProjectivePlane {
            factor: *f,
            plane: false,
        }),
        [(f, 3, [2])] => Ok(Chart::ProjectivePlane {
            factor: *f,
            plane: true,
        }),
        [(f1, 2, [1]), (f2, 2, [1])] => Ok(Chart::Torus {
            factors: (*f1, *f2),
        }),
        _ => Err(anyhow!("no chart for this flag type")),
    }
}

fn line_angle(x: &Flag, factor: usize) -> f64 {
    let v = x.frame(factor).column(0);
    let mut theta = v[1].atan2(v[0]);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta >= std::f64::consts::PI {
        theta -= std::f64::consts::PI;
    }
    theta
}

fn rp2_polar(x: &Flag, factor: usize, plane: bool) -> (f64, f64) {
    // Chart point: the line itself, or the unit normal of the plane (the
    // complement column of the canonical frame).
    let col = if plane { 2 } else { 0 };
    let mut v: DVector<f64> = x.frame(factor).column(col).into_owned();
    // Upper hemisphere sign convention, with deterministic equator fallback.
    let flip = if v[2].abs() > 1e-12 {
        v[2] < 0.0
    } else if v[0].abs() > 1e-12 {
        v[0] < 0.0
    } else {
        v[1] < 0.0
    };
    if flip {
        v = -v;
    }
    let r = v[2].clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]);
    (r * phi.cos(), r * phi.sin())
}

/// Chart coordinates of a flag.
pub fn coords(chart: &Chart, x: &Flag) -> (f64, f64) {
    match chart {
        Chart::Line { factor } => (line_angle(x, *factor), 0.0),
        Chart::ProjectivePlane { factor, plane } => rp2_polar(x, *factor, *plane),
        Chart::Torus { factors } => (line_angle(x, factors.0), line_angle(x, factors.1)),
    }
}

/// Deterministic grid of starting flags covering the chart.
pub fn start_points(chart: &Chart, t: &FlagType, count: usize) -> Vec<Flag> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let mut out = Vec::with_capacity(count);
    match chart {
        Chart::Line { factor } => {
            for i in 0..count {
                let theta = std::f64::consts::PI * i as f64 / count as f64;
                out.push(line_flag(t, &[(*factor, theta)]));
            }
        }
        Chart::Torus { factors } => {
            let side = (count as f64).sqrt().ceil() as usize;
            for i in 0..side {
                for j in 0..side {
                    if out.len() >= count {
                        break;
                    }
                    let a = std::f64::consts::PI * (i as f64 + 0.37) / side as f64;
                    let b = std::f64::consts::PI * (j as f64 + 0.71) / side as f64;
                    out.push(line_flag(t, &[(factors.0, a), (factors.1, b)]));
                }
            }
        }
        Chart::ProjectivePlane { factor, plane } => {
            // Spherical Fibonacci points on the upper hemisphere.
            for i in 0..count {
                let z = (i as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * i as f64;
                let v = DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z]);
                out.push(rp2_flag(t, *factor, &v, *plane));
            }
        }
    }
    out
}

/// Flag with prescribed line angles in the given SL(2) factors and base
/// frames elsewhere.
fn line_flag(t: &FlagType, angles: &[(usize, f64)]) -> Flag {
    let mats: Vec<nalgebra::DMatrix<f64>> = t
        .spec()
        .factors()
        .iter()
        .enumerate()
        .map(|(f, &n)| {
            if let Some((_, theta)) = angles.iter().find(|(af, _)| *af == f) {
                nalgebra::DMatrix::from_row_slice(
                    2,
                    2,
                    &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
                )
            } else {
                nalgebra::DMatrix::identity(n, n)
            }
        })
        .collect();
    flagflow::flag_from_basis(&mats, t.clone()).expect("rotation frames are invertible")
}

/// Flag of RP² through a unit vector: the line it spans, or the plane
/// normal to it.
fn rp2_flag(t: &FlagType, factor: usize, v: &DVector<f64>, plane: bool) -> Flag {
    // Complete v to a basis with the two least-aligned coordinate vectors.
    let mut idx: Vec<usize> = (0..3).collect();
    idx.sort_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap());
    let mut m = nalgebra::DMatrix::zeros(3, 3);
    if plane {
        // Plane orthogonal to v: its two spanning columns first.
        let e1 = coordinate_complement(v, idx[0]);
        let e2 = coordinate_complement(v, idx[1]);
        m.set_column(0, &e1);
        m.set_column(1, &e2);
        m.set_column(2, &v.clone());
    } else {
        m.set_column(0, &v.clone());
        m[(idx[0], 1)] = 1.0;
        m[(idx[1], 2)] = 1.0;
    }
    let mats: Vec<nalgebra::DMatrix<f64>> = t
        .spec()
        .factors()
        .iter()
        .enumerate()
        .map(|(f, &n)| {
            if f == factor {
                m.clone()
            } else {
                nalgebra::DMatrix::identity(n, n)
            }
        })
        .collect();
    flagflow::flag_from_basis(&mats, t.clone()).expect("completion is invertible")
}

fn coordinate_complement(v: &DVector<f64>, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(3);
    e[i] = 1.0;
    let proj = v.dot(&e);
    &e - v * proj
}
