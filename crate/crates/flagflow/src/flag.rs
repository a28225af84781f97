//! Flag-manifold points as canonical orthonormal frames, the left
//! translation action, tangent vectors carried as Lie-algebra
//! representatives, and the K-invariant metric.
//!
//! A flag of type Θ = (d_1 < … < d_k) is stored as an n×n orthonormal frame
//! Q whose first d_i columns span the i-th subspace. The frame is canonical:
//! each step-increment subspace gets the deterministic basis of its
//! orthogonal projector, so equal flags have equal frames and the standard
//! orthogonal group acts by exact isometries.

use crate::error::{Error, Result};
use crate::lie::{AlgElem, GroupElem, SemisimpleSpec};
use crate::linalg::{self, canonical_range_basis, strict_block_lower, RMat};

/// Flag type Θ: strictly increasing subspace dimensions per factor. The
/// empty list is the one-point manifold, the full list the maximal flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagType {
    spec: SemisimpleSpec,
    parts: Vec<Vec<usize>>,
}

impl FlagType {
    pub fn new(spec: SemisimpleSpec, parts: Vec<Vec<usize>>) -> Result<Self> {
        if parts.len() != spec.num_factors() {
            return Err(Error::SpecMismatch);
        }
        for (i, (dims, &n)) in parts.iter().zip(spec.factors()).enumerate() {
            let mut prev = 0;
            for &d in dims {
                if d <= prev || d >= n {
                    return Err(Error::InvalidFlagType { factor: i });
                }
                prev = d;
            }
        }
        Ok(Self { spec, parts })
    }

    /// Maximal flag type (1, 2, …, n-1) in every factor.
    pub fn full(spec: SemisimpleSpec) -> Self {
        let parts = spec.factors().iter().map(|&n| (1..n).collect()).collect();
        Self { spec, parts }
    }

    pub fn spec(&self) -> &SemisimpleSpec {
        &self.spec
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    /// Cumulative step boundaries for a factor, ending at n (the complement
    /// step included).
    pub fn boundaries(&self, factor: usize) -> Vec<usize> {
        let n = self.spec.factors()[factor];
        let mut b = self.parts[factor].clone();
        b.push(n);
        b
    }

    /// Step sizes c_1, …, c_{k+1} for a factor.
    pub fn step_sizes(&self, factor: usize) -> Vec<usize> {
        let mut sizes = Vec::new();
        let mut prev = 0;
        for &b in &self.boundaries(factor) {
            sizes.push(b - prev);
            prev = b;
        }
        sizes
    }

    /// dim F_Θ = Σ_factors Σ_{i<i'} c_i c_{i'}.
    pub fn manifold_dim(&self) -> usize {
        (0..self.spec.num_factors())
            .map(|f| {
                let c = self.step_sizes(f);
                let mut acc = 0;
                for i in 0..c.len() {
                    for ip in (i + 1)..c.len() {
                        acc += c[i] * c[ip];
                    }
                }
                acc
            })
            .sum()
    }
}

/// A point of F_Θ: one canonical orthonormal frame per factor.
#[derive(Debug, Clone)]
pub struct Flag {
    flag_type: FlagType,
    frames: Vec<RMat>,
}

impl Flag {
    /// The base point b_Θ with identity frames.
    pub fn base_point(flag_type: FlagType) -> Self {
        let frames = flag_type
            .spec()
            .factors()
            .iter()
            .map(|&n| RMat::identity(n, n))
            .collect();
        Self { flag_type, frames }
    }

    pub fn flag_type(&self) -> &FlagType {
        &self.flag_type
    }

    pub fn spec(&self) -> &SemisimpleSpec {
        self.flag_type.spec()
    }

    pub fn frame(&self, factor: usize) -> &RMat {
        &self.frames[factor]
    }

    pub(crate) fn from_frames_unchecked(flag_type: FlagType, frames: Vec<RMat>) -> Self {
        Self { flag_type, frames }
    }

    /// Orthogonal projector onto the subspace of step `i` (0-based; step i
    /// has dimension d_{i+1}).
    pub fn step_projector(&self, factor: usize, i: usize) -> RMat {
        let d = self.flag_type.parts()[factor][i];
        let q = self.frames[factor].columns(0, d);
        q * q.transpose()
    }

    /// Flag equality: all step projectors within `tol` in operator norm.
    pub fn approx_eq(&self, other: &Flag, tol: f64) -> bool {
        if self.flag_type != other.flag_type {
            return false;
        }
        for f in 0..self.frames.len() {
            for i in 0..self.flag_type.parts()[f].len() {
                let diff = self.step_projector(f, i) - other.step_projector(f, i);
                if linalg::op_norm(&diff) > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Canonicalize one factor: full QR for the nested spans, then the
/// deterministic projector basis per step increment.
fn canonical_frame(m: &RMat, boundaries: &[usize], factor: usize) -> Result<RMat> {
    let n = m.nrows();
    let qr = m.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let scale = m.norm().max(1.0);
    for i in 0..n {
        if r[(i, i)].abs() <= 1e-13 * scale {
            return Err(Error::SingularBasis { factor });
        }
    }
    let mut frame = RMat::zeros(n, n);
    let mut prev = 0;
    for &b in boundaries {
        let width = b - prev;
        let block = q.columns(prev, width);
        let projector = block * block.transpose();
        let basis = canonical_range_basis(&projector, width)
            .map_err(|_| Error::SingularBasis { factor })?;
        frame.view_mut((0, prev), (n, width)).copy_from(&basis);
        prev = b;
    }
    Ok(frame)
}

/// Build the flag spanned by the leading columns of each factor's basis
/// matrix.
pub fn flag_from_basis(basis: &[RMat], flag_type: FlagType) -> Result<Flag> {
    if basis.len() != flag_type.spec().num_factors() {
        return Err(Error::SpecMismatch);
    }
    let mut frames = Vec::with_capacity(basis.len());
    for (f, m) in basis.iter().enumerate() {
        let n = flag_type.spec().factors()[f];
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::NonSquareInput {
                index: f,
                expected: n,
            });
        }
        frames.push(canonical_frame(m, &flag_type.boundaries(f), f)?);
    }
    Ok(Flag { flag_type, frames })
}

/// Left translation g·x.
pub fn act(g: &GroupElem, x: &Flag) -> Result<Flag> {
    assert_eq!(g.spec(), x.spec(), "spec mismatch");
    let mut frames = Vec::with_capacity(x.frames.len());
    for (f, frame) in x.frames.iter().enumerate() {
        let moved = g.block(f) * frame;
        frames.push(canonical_frame(&moved, &x.flag_type.boundaries(f), f)?);
    }
    Ok(Flag {
        flag_type: x.flag_type.clone(),
        frames,
    })
}

/// Tangent vector at a flag: a Lie-algebra representative together with its
/// canonical reduced form (the strictly-block-lower matrix in the frame).
#[derive(Debug, Clone)]
pub struct TangentVec {
    base: Flag,
    rep: AlgElem,
    reduced: Vec<RMat>,
}

impl TangentVec {
    pub fn base(&self) -> &Flag {
        &self.base
    }

    pub fn rep(&self) -> &AlgElem {
        &self.rep
    }

    pub fn reduced(&self, factor: usize) -> &RMat {
        &self.reduced[factor]
    }

    /// Riemannian norm: Cartan norm of the reduced form.
    pub fn norm(&self) -> f64 {
        self.reduced
            .iter()
            .map(|z| z.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// The induced tangent vector X·x of the one-parameter flow exp(tX) at x.
pub fn induced_vector(x_alg: &AlgElem, x: &Flag) -> TangentVec {
    assert_eq!(x_alg.spec(), x.spec(), "spec mismatch");
    let reduced = x
        .frames
        .iter()
        .zip(x_alg.blocks())
        .enumerate()
        .map(|(f, (q, block))| {
            let in_frame = q.transpose() * block * q;
            strict_block_lower(&in_frame, &x.flag_type.boundaries(f))
        })
        .collect();
    TangentVec {
        base: x.clone(),
        rep: x_alg.clone(),
        reduced,
    }
}

/// Riemannian norm of a tangent vector.
pub fn tangent_norm(v: &TangentVec) -> f64 {
    v.norm()
}

/// Differential of the action: base moves by g, the representative by
/// Ad(g), and the reduced form is recomputed at the new frame.
pub fn pushforward(g: &GroupElem, v: &TangentVec) -> Result<TangentVec> {
    let base = act(g, &v.base)?;
    let rep = g.adjoint(&v.rep)?;
    Ok(induced_vector(&rep, &base))
}

/// Analytic derivative of the step-i orthogonal projector along the flow of
/// X: Ṗ = (I-P)XP + PXᵀ(I-P). Serves as the implementation-independent
/// target for finite-difference checks.
pub fn step_projector_derivative(x_alg: &AlgElem, x: &Flag, factor: usize, i: usize) -> RMat {
    let p = x.step_projector(factor, i);
    let n = p.nrows();
    let id = RMat::identity(n, n);
    let xb = x_alg.block(factor);
    (&id - &p) * xb * &p + &p * xb.transpose() * (&id - &p)
}

/// Dimension of the reduced-form space at any flag: number of free entries
/// strictly below the block diagonal, summed over factors. Equals dim F_Θ.
pub fn reduced_space_dim(t: &FlagType) -> usize {
    t.manifold_dim()
}
