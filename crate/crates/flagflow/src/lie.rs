//! Matrix-level Lie theory for products of SL(n,ℝ) factors: Jordan
//! decompositions, chamber normalization of hyperbolic elements, restricted
//! roots and the decay constant μ, the Cartan inner product, and the
//! positive/negative eigenspaces of ad(H).
//!
//! Elements are stored one real block per factor. The additive Jordan
//! decomposition X = E + H + N (elliptic + hyperbolic + nilpotent) and the
//! multiplicative one g = e·h·u are computed from spectral projectors
//! assembled out of the complex Schur form, so defective inputs are handled
//! without ever forming an eigenvector matrix.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    self, canonical_range_basis, real_part_checked, spectral_clusters, to_complex, CMat, RMat,
};
use crate::tol;

/// Product of SL(n_i, ℝ) factors, identified by the block sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemisimpleSpec {
    factors: Vec<usize>,
}

impl SemisimpleSpec {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::SpecMismatch);
        }
        for (i, &n) in factors.iter().enumerate() {
            if n < 2 {
                return Err(Error::NonSquareInput {
                    index: i,
                    expected: 2,
                });
            }
        }
        Ok(Self { factors })
    }

    /// Single SL(n, ℝ) factor.
    pub fn simple(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }
}

/// Lie-algebra element: one traceless block per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElem {
    spec: SemisimpleSpec,
    blocks: Vec<RMat>,
}

impl AlgElem {
    pub fn new(spec: SemisimpleSpec, blocks: Vec<RMat>) -> Result<Self> {
        check_block_shapes(&spec, &blocks)?;
        for (i, b) in blocks.iter().enumerate() {
            let scale = b.norm().max(1.0);
            let trace = b.trace();
            if trace.abs() > tol::EPS_NUM * scale {
                return Err(Error::NotTraceless { index: i, trace });
            }
        }
        Ok(Self { spec, blocks })
    }

    /// Single-factor convenience constructor.
    pub fn from_single(block: RMat) -> Result<Self> {
        let spec = SemisimpleSpec::simple(block.nrows())?;
        Self::new(spec, vec![block])
    }

    pub(crate) fn from_blocks_unchecked(spec: SemisimpleSpec, blocks: Vec<RMat>) -> Self {
        Self { spec, blocks }
    }

    pub fn zero(spec: SemisimpleSpec) -> Self {
        let blocks = spec.factors().iter().map(|&n| RMat::zeros(n, n)).collect();
        Self { spec, blocks }
    }

    pub fn spec(&self) -> &SemisimpleSpec {
        &self.spec
    }

    pub fn block(&self, factor: usize) -> &RMat {
        &self.blocks[factor]
    }

    pub fn blocks(&self) -> &[RMat] {
        &self.blocks
    }

    pub fn add(&self, other: &AlgElem) -> AlgElem {
        assert_eq!(self.spec, other.spec, "spec mismatch");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    pub fn sub(&self, other: &AlgElem) -> AlgElem {
        assert_eq!(self.spec, other.spec, "spec mismatch");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    pub fn scale(&self, c: f64) -> AlgElem {
        let blocks = self.blocks.iter().map(|b| b * c).collect();
        Self::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    pub fn commutator(&self, other: &AlgElem) -> AlgElem {
        assert_eq!(self.spec, other.spec, "spec mismatch");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * b - b * a)
            .collect();
        Self::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    /// Cartan (Frobenius) norm across all factors.
    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Matrix exponential, factor by factor.
    pub fn exp(&self) -> GroupElem {
        let blocks = self.blocks.iter().map(|b| b.exp()).collect();
        GroupElem::from_blocks_unchecked(self.spec.clone(), blocks)
    }
}

/// Group element: one unimodular block per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElem {
    spec: SemisimpleSpec,
    blocks: Vec<RMat>,
}

impl GroupElem {
    pub fn new(spec: SemisimpleSpec, blocks: Vec<RMat>) -> Result<Self> {
        check_block_shapes(&spec, &blocks)?;
        for (i, b) in blocks.iter().enumerate() {
            let n = b.nrows() as i32;
            let det = b.determinant();
            // Condition-scaled bound: determinants of large matrices pick up
            // roundoff proportional to ‖g‖^n.
            let bound = tol::EPS_NUM * linalg::op_norm(b).max(1.0).powi(n) * 1e3;
            if (det - 1.0).abs() > bound.max(tol::EPS_NUM * 1e3) {
                return Err(Error::NotUnimodular { index: i, det });
            }
        }
        Ok(Self { spec, blocks })
    }

    pub fn from_single(block: RMat) -> Result<Self> {
        let spec = SemisimpleSpec::simple(block.nrows())?;
        Self::new(spec, vec![block])
    }

    pub(crate) fn from_blocks_unchecked(spec: SemisimpleSpec, blocks: Vec<RMat>) -> Self {
        Self { spec, blocks }
    }

    pub fn identity(spec: SemisimpleSpec) -> Self {
        let blocks = spec
            .factors()
            .iter()
            .map(|&n| RMat::identity(n, n))
            .collect();
        Self { spec, blocks }
    }

    pub fn spec(&self) -> &SemisimpleSpec {
        &self.spec
    }

    pub fn block(&self, factor: usize) -> &RMat {
        &self.blocks[factor]
    }

    pub fn blocks(&self) -> &[RMat] {
        &self.blocks
    }

    pub fn compose(&self, other: &GroupElem) -> GroupElem {
        assert_eq!(self.spec, other.spec, "spec mismatch");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    pub fn inverse(&self) -> Result<GroupElem> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            let inv = b
                .clone()
                .try_inverse()
                .ok_or(Error::SingularBasis { factor: i })?;
            blocks.push(inv);
        }
        Ok(Self::from_blocks_unchecked(self.spec.clone(), blocks))
    }

    /// Adjoint action g X g⁻¹ on a Lie-algebra element.
    pub fn adjoint(&self, x: &AlgElem) -> Result<AlgElem> {
        assert_eq!(self.spec, *x.spec(), "spec mismatch");
        let inv = self.inverse()?;
        let blocks = self
            .blocks
            .iter()
            .zip(x.blocks())
            .zip(inv.blocks())
            .map(|((g, xb), gi)| g * xb * gi)
            .collect();
        Ok(AlgElem::from_blocks_unchecked(self.spec.clone(), blocks))
    }

    /// True when every block is orthogonal within `eps`.
    pub fn is_orthogonal(&self, eps: f64) -> bool {
        self.blocks.iter().all(|b| {
            let n = b.nrows();
            (b.transpose() * b - RMat::identity(n, n)).norm() <= eps * (n as f64)
        })
    }

    /// Integer power by repeated squaring; negative powers invert first.
    pub fn powi(&self, k: i64) -> Result<GroupElem> {
        if k == 0 {
            return Ok(Self::identity(self.spec.clone()));
        }
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut acc = Self::identity(self.spec.clone());
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.compose(&sq);
            }
            sq = sq.compose(&sq);
            exp >>= 1;
        }
        Ok(acc)
    }
}

fn check_block_shapes(spec: &SemisimpleSpec, blocks: &[RMat]) -> Result<()> {
    if blocks.len() != spec.num_factors() {
        return Err(Error::SpecMismatch);
    }
    for (i, (b, &n)) in blocks.iter().zip(spec.factors()).enumerate() {
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::NonSquareInput {
                index: i,
                expected: n,
            });
        }
    }
    Ok(())
}

/// Additive Jordan decomposition X = E + H + N into commuting elliptic,
/// hyperbolic and nilpotent parts.
#[derive(Debug, Clone)]
pub struct AdditiveJordan {
    pub elliptic: AlgElem,
    pub hyperbolic: AlgElem,
    pub nilpotent: AlgElem,
}

impl AdditiveJordan {
    pub fn reconstruct(&self) -> AlgElem {
        self.elliptic.add(&self.hyperbolic).add(&self.nilpotent)
    }
}

/// Multiplicative Jordan decomposition g = e·h·u with h = exp(H) and
/// u = exp(N); the logs are carried along.
#[derive(Debug, Clone)]
pub struct MultiplicativeJordan {
    pub elliptic: GroupElem,
    pub hyperbolic: GroupElem,
    pub unipotent: GroupElem,
    pub hyperbolic_log: AlgElem,
    pub nilpotent_log: AlgElem,
}

impl MultiplicativeJordan {
    pub fn reconstruct(&self) -> GroupElem {
        self.elliptic
            .compose(&self.hyperbolic)
            .compose(&self.unipotent)
    }
}

/// Chamber-normalized hyperbolic element for one factor: the sorted
/// distinct spectrum, multiplicities, and a conjugator V whose column
/// groups are orthonormal bases of the eigenspaces.
#[derive(Debug, Clone)]
pub struct ChamberFactor {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    conjugator: RMat,
    conjugator_inv: RMat,
}

impl ChamberFactor {
    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn num_groups(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Start offsets of each eigenvalue group in the adapted ordering.
    pub fn group_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.multiplicities.len());
        let mut acc = 0;
        for &m in &self.multiplicities {
            offsets.push(acc);
            acc += m;
        }
        offsets
    }

    /// Eigenvalue group containing the adapted coordinate `idx`.
    pub fn group_of(&self, idx: usize) -> usize {
        let mut acc = 0;
        for (j, &m) in self.multiplicities.iter().enumerate() {
            acc += m;
            if idx < acc {
                return j;
            }
        }
        panic!("index {idx} out of range");
    }

    pub fn conjugator(&self) -> &RMat {
        &self.conjugator
    }

    pub fn conjugator_inv(&self) -> &RMat {
        &self.conjugator_inv
    }

    /// Orthonormal basis of the eigenspace of group `j` (the corresponding
    /// conjugator columns, which are orthonormal per group by construction).
    pub fn eigenspace_basis(&self, j: usize) -> RMat {
        let off = self.group_offsets()[j];
        let m = self.multiplicities[j];
        self.conjugator.view((0, off), (self.dim(), m)).into_owned()
    }

    /// The adapted diagonal matrix V⁻¹ H V.
    pub fn diagonal(&self) -> RMat {
        let n = self.dim();
        let mut d = RMat::zeros(n, n);
        let mut idx = 0;
        for (&lambda, &m) in self.eigenvalues.iter().zip(&self.multiplicities) {
            for _ in 0..m {
                d[(idx, idx)] = lambda;
                idx += 1;
            }
        }
        d
    }
}

/// Chamber normalization of a hyperbolic element across all factors.
#[derive(Debug, Clone)]
pub struct Chamber {
    spec: SemisimpleSpec,
    factors: Vec<ChamberFactor>,
}

impl Chamber {
    pub fn spec(&self) -> &SemisimpleSpec {
        &self.spec
    }

    pub fn factor(&self, i: usize) -> &ChamberFactor {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[ChamberFactor] {
        &self.factors
    }

    /// H expressed in its own adapted coordinates: the sorted diagonal.
    pub fn diagonal_elem(&self) -> AlgElem {
        let blocks = self.factors.iter().map(|f| f.diagonal()).collect();
        AlgElem::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    /// The original element V·diag·V⁻¹.
    pub fn reconstruct(&self) -> AlgElem {
        let blocks = self
            .factors
            .iter()
            .map(|f| f.conjugator() * f.diagonal() * f.conjugator_inv())
            .collect();
        AlgElem::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    /// Conjugate a Lie-algebra element into adapted coordinates: V⁻¹ X V.
    pub fn to_adapted(&self, x: &AlgElem) -> AlgElem {
        assert_eq!(self.spec, *x.spec(), "spec mismatch");
        let blocks = self
            .factors
            .iter()
            .zip(x.blocks())
            .map(|(f, b)| f.conjugator_inv() * b * f.conjugator())
            .collect();
        AlgElem::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    /// Conjugate back to original coordinates: V X V⁻¹.
    pub fn from_adapted(&self, x: &AlgElem) -> AlgElem {
        assert_eq!(self.spec, *x.spec(), "spec mismatch");
        let blocks = self
            .factors
            .iter()
            .zip(x.blocks())
            .map(|(f, b)| f.conjugator() * b * f.conjugator_inv())
            .collect();
        AlgElem::from_blocks_unchecked(self.spec.clone(), blocks)
    }

    /// True when every conjugator is orthogonal within `eps` (exact metric
    /// checks are only available in that case).
    pub fn is_orthogonal(&self, eps: f64) -> bool {
        self.factors.iter().all(|f| {
            let n = f.dim();
            (f.conjugator().transpose() * f.conjugator() - RMat::identity(n, n)).norm()
                <= eps * n as f64
        })
    }
}

/// Stable/unstable side selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Additive Jordan decomposition with the default clustering tolerance.
pub fn additive_jordan(x: &AlgElem) -> Result<AdditiveJordan> {
    additive_jordan_with(x, tol::EPS_CLUSTER)
}

/// Additive Jordan decomposition, clustering eigenvalues at `eps_cluster`.
///
/// The semisimple part is Σ λ_j P_j over the spectral projectors; its real
/// and imaginary spectral halves give H and E, and N is the remainder.
pub fn additive_jordan_with(x: &AlgElem, eps_cluster: f64) -> Result<AdditiveJordan> {
    let mut elliptic = Vec::new();
    let mut hyperbolic = Vec::new();
    let mut nilpotent = Vec::new();
    for block in x.blocks() {
        let n = block.nrows();
        let clusters = spectral_clusters(block, eps_cluster)?;
        let mut semi = CMat::zeros(n, n);
        let mut hyper = CMat::zeros(n, n);
        let mut ell = CMat::zeros(n, n);
        for c in &clusters {
            semi += &c.projector * c.value;
            hyper += &c.projector * Complex::new(c.value.re, 0.0);
            ell += &c.projector * Complex::new(0.0, c.value.im);
        }
        let residue_tol = 1e-8 * block.norm().max(1.0);
        let semi_r = real_part_checked(&semi, residue_tol)?;
        hyperbolic.push(real_part_checked(&hyper, residue_tol)?);
        elliptic.push(real_part_checked(&ell, residue_tol)?);
        nilpotent.push(block - semi_r);
    }
    Ok(AdditiveJordan {
        elliptic: AlgElem::from_blocks_unchecked(x.spec().clone(), elliptic),
        hyperbolic: AlgElem::from_blocks_unchecked(x.spec().clone(), hyperbolic),
        nilpotent: AlgElem::from_blocks_unchecked(x.spec().clone(), nilpotent),
    })
}

/// Multiplicative Jordan decomposition with the default tolerance.
pub fn multiplicative_jordan(g: &GroupElem) -> Result<MultiplicativeJordan> {
    multiplicative_jordan_with(g, tol::EPS_CLUSTER)
}

/// Multiplicative Jordan decomposition g = e·h·u.
///
/// The semisimple factor s = Σ λ_j P_j splits polar-wise into h = Σ|λ_j|P_j
/// and e = s·h⁻¹; the unipotent factor is u = s⁻¹·g and its log comes from
/// the terminating series on u - 1.
pub fn multiplicative_jordan_with(g: &GroupElem, eps_cluster: f64) -> Result<MultiplicativeJordan> {
    let mut elliptic = Vec::new();
    let mut hyperbolic = Vec::new();
    let mut unipotent = Vec::new();
    let mut hyperbolic_log = Vec::new();
    let mut nilpotent_log = Vec::new();
    for (fi, block) in g.blocks().iter().enumerate() {
        let n = block.nrows();
        let clusters = spectral_clusters(block, eps_cluster)?;
        let mut semi = CMat::zeros(n, n);
        let mut hyper = CMat::zeros(n, n);
        let mut hlog = CMat::zeros(n, n);
        for c in &clusters {
            let modulus = c.value.norm();
            if modulus < 1e-300 {
                return Err(Error::SingularBasis { factor: fi });
            }
            semi += &c.projector * c.value;
            hyper += &c.projector * Complex::new(modulus, 0.0);
            hlog += &c.projector * Complex::new(modulus.ln(), 0.0);
        }
        let scale = block.norm().max(1.0);
        let residue_tol = 1e-8 * scale;
        let h = real_part_checked(&hyper, residue_tol)?;
        let h_log = real_part_checked(&hlog, residue_tol)?;
        let semi_inv = semi
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularBasis { factor: fi })?;
        let u = real_part_checked(&(semi_inv * to_complex(block)), residue_tol)?;
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis { factor: fi })?;
        let e = real_part_checked(&(semi * to_complex(&h_inv)), residue_tol)?;
        let n_log = unipotent_log(&u, fi)?;
        elliptic.push(e);
        hyperbolic.push(h);
        unipotent.push(u);
        hyperbolic_log.push(h_log);
        nilpotent_log.push(n_log);
    }
    Ok(MultiplicativeJordan {
        elliptic: GroupElem::from_blocks_unchecked(g.spec().clone(), elliptic),
        hyperbolic: GroupElem::from_blocks_unchecked(g.spec().clone(), hyperbolic),
        unipotent: GroupElem::from_blocks_unchecked(g.spec().clone(), unipotent),
        hyperbolic_log: AlgElem::from_blocks_unchecked(g.spec().clone(), hyperbolic_log),
        nilpotent_log: AlgElem::from_blocks_unchecked(g.spec().clone(), nilpotent_log),
    })
}

/// log of a unipotent block via the terminating series on u - 1.
fn unipotent_log(u: &RMat, factor: usize) -> Result<RMat> {
    let n = u.nrows();
    let shifted = u - RMat::identity(n, n);
    // Nilpotency check: (u - 1)^n must vanish numerically.
    let mut power = shifted.clone();
    for _ in 1..n {
        power = &power * &shifted;
    }
    if power.norm() > 1e-6 * u.norm().max(1.0).powi(n as i32) {
        return Err(Error::ClusterAmbiguity {
            tol: tol::EPS_CLUSTER,
            detail: format!("unipotent factor {factor} is not nilpotent-shifted"),
        });
    }
    let mut log = RMat::zeros(n, n);
    let mut term = shifted.clone();
    for k in 1..n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        log += &term * (sign / k as f64);
        term = &term * &shifted;
    }
    Ok(log)
}

/// Chamber normalization with the default tolerance.
pub fn chamber_normalize(h: &AlgElem) -> Result<Chamber> {
    chamber_normalize_with(h, tol::EPS_CLUSTER)
}

/// Sort the (real, semisimple) spectrum of H strictly decreasing per factor
/// and build the conjugator V whose column groups are orthonormal
/// eigenspace bases.
pub fn chamber_normalize_with(h: &AlgElem, eps_cluster: f64) -> Result<Chamber> {
    let mut factors = Vec::with_capacity(h.spec().num_factors());
    for (fi, block) in h.blocks().iter().enumerate() {
        let n = block.nrows();
        let scale = block.norm().max(1.0);
        let clusters = spectral_clusters(block, eps_cluster)?;
        let mut eigenvalues = Vec::with_capacity(clusters.len());
        let mut multiplicities = Vec::with_capacity(clusters.len());
        let mut v = RMat::zeros(n, n);
        let mut off = 0;
        for c in &clusters {
            if c.value.im != 0.0 {
                return Err(Error::NotHyperbolic(format!(
                    "complex eigenvalue {} in factor {fi}",
                    c.value
                )));
            }
            let p = real_part_checked(&c.projector, 1e-8 * scale)
                .map_err(|_| Error::NotHyperbolic(format!("complex eigenspace in factor {fi}")))?;
            // Semisimplicity: (H - λ) must vanish on the generalized eigenspace.
            if ((block - RMat::identity(n, n) * c.value.re) * &p).norm() > 1e-7 * scale {
                return Err(Error::NotHyperbolic(format!(
                    "defective eigenvalue {} in factor {fi}",
                    c.value.re
                )));
            }
            let basis = canonical_range_basis(&p, c.mult).map_err(|_| {
                Error::NotHyperbolic(format!("rank-deficient eigenspace in factor {fi}"))
            })?;
            v.view_mut((0, off), (n, c.mult)).copy_from(&basis);
            eigenvalues.push(c.value.re);
            multiplicities.push(c.mult);
            off += c.mult;
        }
        if off != n {
            return Err(Error::NotHyperbolic(format!(
                "eigenspaces of factor {fi} span only {off} of {n} dimensions"
            )));
        }
        let v_inv = v
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis { factor: fi })?;
        let factor = ChamberFactor {
            eigenvalues,
            multiplicities,
            conjugator: v,
            conjugator_inv: v_inv,
        };
        // Reconstruction sanity: V diag V⁻¹ must reproduce H.
        let recon = factor.conjugator() * factor.diagonal() * factor.conjugator_inv();
        if (recon - block).norm() > 1e-7 * scale {
            return Err(Error::NotHyperbolic(format!(
                "conjugator reconstruction failed in factor {fi}"
            )));
        }
        factors.push(factor);
    }
    Ok(Chamber {
        spec: h.spec().clone(),
        factors,
    })
}

/// μ = min{α(H) : α(H) > 0} over all factors: the smallest positive
/// difference of chamber eigenvalues, i.e. the guaranteed decay rate.
pub fn mu_gap(c: &Chamber) -> Result<f64> {
    let mut mu = f64::INFINITY;
    for f in c.factors() {
        for w in f.eigenvalues.windows(2) {
            mu = mu.min(w[0] - w[1]);
        }
    }
    if mu.is_finite() {
        Ok(mu)
    } else {
        Err(Error::NoPositiveRoot)
    }
}

/// Cartan inner product ⟨X, Y⟩ = Σ_factors tr(X Yᵀ).
pub fn cartan_inner(x: &AlgElem, y: &AlgElem) -> Result<f64> {
    if x.spec() != y.spec() {
        return Err(Error::SpecMismatch);
    }
    Ok(x.blocks()
        .iter()
        .zip(y.blocks())
        .map(|(a, b)| a.dot(b))
        .sum())
}

/// Basis of n±_H, the sum of the positive (or negative) eigenspaces of
/// ad(H): elementary matrices across eigenvalue groups in adapted
/// coordinates, conjugated back by V. Ordered by factor, then (row, col).
pub fn ad_eigenspaces(c: &Chamber, sign: Sign) -> Vec<AlgElem> {
    let mut basis = Vec::new();
    for (fi, f) in c.factors().iter().enumerate() {
        let n = f.dim();
        for a in 0..n {
            for b in 0..n {
                let (ga, gb) = (f.group_of(a), f.group_of(b));
                let keep = match sign {
                    Sign::Plus => ga < gb,  // λ_a > λ_b
                    Sign::Minus => ga > gb, // λ_a < λ_b
                };
                if !keep {
                    continue;
                }
                let mut elementary = RMat::zeros(n, n);
                elementary[(a, b)] = 1.0;
                let conj = f.conjugator() * elementary * f.conjugator_inv();
                let mut blocks: Vec<RMat> = c
                    .spec()
                    .factors()
                    .iter()
                    .map(|&m| RMat::zeros(m, m))
                    .collect();
                blocks[fi] = conj;
                basis.push(AlgElem::from_blocks_unchecked(c.spec().clone(), blocks));
            }
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use approx::assert_relative_eq;
    use rand::Rng;

    pub(crate) fn fig1_parts() -> (RMat, RMat) {
        let h = RMat::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let n = RMat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        (h, n)
    }

    #[test]
    fn additive_jordan_on_projective_plane_generator() {
        let (h, n) = fig1_parts();
        let x = AlgElem::from_single(&h + &n).unwrap();
        let j = additive_jordan(&x).unwrap();
        assert!(j.elliptic.norm() < 1e-12);
        assert_relative_eq!(j.hyperbolic.block(0), &h, epsilon = 1e-10);
        assert_relative_eq!(j.nilpotent.block(0), &n, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_elements_are_hyperbolic() {
        let mut rng = sample::rng_from_seed(11);
        let x = AlgElem::from_single(sample::gaussian_symmetric_traceless(&mut rng, 5)).unwrap();
        let j = additive_jordan(&x).unwrap();
        assert!(j.elliptic.norm() < 1e-9 * x.norm());
        assert!(j.nilpotent.norm() < 1e-9 * x.norm());
        assert_relative_eq!(j.hyperbolic.block(0), x.block(0), epsilon = 1e-9);
    }

    /// Commuting triple with known parts: hyperbolic diag(t,t,t,t,-4t),
    /// elliptic rotation inside the t-eigenspace, nilpotent complex-linear
    /// shift inside the joint eigenspace, all conjugated by a random basis.
    fn commuting_triple(rng: &mut impl Rng) -> (AlgElem, RMat, RMat, RMat) {
        let t = 0.7;
        let c = 1.3;
        let mut h = RMat::identity(5, 5) * t;
        h[(4, 4)] = -4.0 * t;
        // Realified i·c·I_2 on coordinates (0,1) and (2,3).
        let mut e = RMat::zeros(5, 5);
        e[(0, 1)] = -c;
        e[(1, 0)] = c;
        e[(2, 3)] = -c;
        e[(3, 2)] = c;
        // Realified complex nilpotent [[0,1],[0,0]].
        let mut nn = RMat::zeros(5, 5);
        nn[(0, 2)] = 1.0;
        nn[(1, 3)] = 1.0;
        let w = sample::gaussian_matrix(rng, 5, 5) * 0.3 + RMat::identity(5, 5);
        let w_inv = w.clone().try_inverse().unwrap();
        let conj = |m: &RMat| &w * m * &w_inv;
        let (he, ee, ne) = (conj(&h), conj(&e), conj(&nn));
        let x = AlgElem::from_single(&he + &ee + &ne).unwrap();
        (x, ee, he, ne)
    }

    #[test]
    fn additive_jordan_recovers_commuting_construction() {
        let mut rng = sample::rng_from_seed(23);
        for _ in 0..5 {
            let (x, e, h, n) = commuting_triple(&mut rng);
            // Defective spectra scatter computed eigenvalues by ~sqrt(machine
            // epsilon), so cluster at a coarser tolerance than the default.
            let j = additive_jordan_with(&x, 1e-6).unwrap();
            let scale = x.norm();
            assert!((j.elliptic.block(0) - &e).norm() < 1e-8 * scale);
            assert!((j.hyperbolic.block(0) - &h).norm() < 1e-8 * scale);
            assert!((j.nilpotent.block(0) - &n).norm() < 1e-8 * scale);
        }
    }

    #[test]
    fn jordan_parts_commute_and_reconstruct() {
        let mut rng = sample::rng_from_seed(37);
        for _ in 0..20 {
            let x = AlgElem::from_single(sample::gaussian_traceless(&mut rng, 4)).unwrap();
            let j = match additive_jordan(&x) {
                Ok(j) => j,
                Err(Error::ClusterAmbiguity { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let scale = x.norm().max(1.0);
            assert!(j.reconstruct().sub(&x).norm() < 1e-9 * scale);
            assert!(j.elliptic.commutator(&j.hyperbolic).norm() < 1e-9 * scale);
            assert!(j.elliptic.commutator(&j.nilpotent).norm() < 1e-9 * scale);
            assert!(j.hyperbolic.commutator(&j.nilpotent).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn multiplicative_jordan_of_flow_at_time_one() {
        let (h, n) = fig1_parts();
        let x = &h + &n;
        let g = GroupElem::from_single(x.exp()).unwrap();
        let j = multiplicative_jordan(&g).unwrap();
        assert_relative_eq!(j.hyperbolic.block(0), &h.exp(), epsilon = 1e-9);
        assert_relative_eq!(j.unipotent.block(0), &n.exp(), epsilon = 1e-9);
        assert_relative_eq!(j.elliptic.block(0), &RMat::identity(3, 3), epsilon = 1e-9);
        assert_relative_eq!(j.hyperbolic_log.block(0), &h, epsilon = 1e-9);
        assert_relative_eq!(j.nilpotent_log.block(0), &n, epsilon = 1e-9);
    }

    #[test]
    fn orthogonal_elements_are_elliptic() {
        let mut rng = sample::rng_from_seed(41);
        let q = sample::haar_rotation(&mut rng, 4);
        let g = GroupElem::from_single(q.clone()).unwrap();
        let j = multiplicative_jordan(&g).unwrap();
        assert_relative_eq!(j.elliptic.block(0), &q, epsilon = 1e-8);
        assert!((j.hyperbolic.block(0) - RMat::identity(4, 4)).norm() < 1e-8);
        assert!((j.unipotent.block(0) - RMat::identity(4, 4)).norm() < 1e-8);
    }

    #[test]
    fn positive_diagonalizable_elements_are_hyperbolic() {
        let mut rng = sample::rng_from_seed(43);
        let w = sample::gaussian_matrix(&mut rng, 4, 4) * 0.3 + RMat::identity(4, 4);
        let w_inv = w.clone().try_inverse().unwrap();
        let d = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 0.5, 0.2]));
        let mut g = &w * d * &w_inv;
        let det = g.determinant();
        g /= det.powf(0.25);
        let g = GroupElem::from_single(g.clone()).unwrap();
        let j = multiplicative_jordan(&g).unwrap();
        assert!((j.elliptic.block(0) - RMat::identity(4, 4)).norm() < 1e-8);
        assert!((j.unipotent.block(0) - RMat::identity(4, 4)).norm() < 1e-8);
        assert_relative_eq!(j.hyperbolic.block(0), g.block(0), epsilon = 1e-8);
    }

    #[test]
    fn consistency_of_multiplicative_and_additive_logs() {
        let mut rng = sample::rng_from_seed(47);
        for _ in 0..10 {
            let x = AlgElem::from_single(sample::gaussian_traceless(&mut rng, 4)).unwrap();
            let (add, mult) = match (additive_jordan(&x), multiplicative_jordan(&x.exp())) {
                (Ok(a), Ok(m)) => (a, m),
                _ => continue,
            };
            assert!(
                mult.hyperbolic_log.sub(&add.hyperbolic).norm() < 1e-8 * x.norm().max(1.0),
                "hyperbolic logs disagree"
            );
        }
    }

    #[test]
    fn chamber_sorts_and_reconstructs() {
        let (h, _) = fig1_parts();
        let c = chamber_normalize(&AlgElem::from_single(h.clone()).unwrap()).unwrap();
        let f = c.factor(0);
        assert_eq!(f.eigenvalues, vec![2.0, -1.0]);
        assert_eq!(f.multiplicities, vec![1, 2]);
        // Conjugator puts e3 first.
        assert_relative_eq!(f.conjugator()[(2, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.reconstruct().block(0), &h, epsilon = 1e-10);
    }

    #[test]
    fn chamber_of_zero_is_trivial() {
        let c = chamber_normalize(&AlgElem::zero(SemisimpleSpec::simple(4).unwrap())).unwrap();
        let f = c.factor(0);
        assert_eq!(f.eigenvalues, vec![0.0]);
        assert_eq!(f.multiplicities, vec![4]);
        assert_relative_eq!(f.conjugator(), &RMat::identity(4, 4), epsilon = 1e-12);
        assert!(mu_gap(&c).is_err());
    }

    #[test]
    fn chamber_matches_symmetric_eigensolver() {
        let mut rng = sample::rng_from_seed(53);
        for _ in 0..10 {
            let m = sample::gaussian_symmetric_traceless(&mut rng, 5);
            let c = chamber_normalize(&AlgElem::from_single(m.clone()).unwrap()).unwrap();
            let mut expected = m.symmetric_eigen().eigenvalues.as_slice().to_vec();
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut got = Vec::new();
            let f = c.factor(0);
            for (j, &lambda) in f.eigenvalues.iter().enumerate() {
                got.extend(std::iter::repeat(lambda).take(f.multiplicities[j]));
            }
            for (a, b) in got.iter().zip(&expected) {
                assert_relative_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn non_hyperbolic_inputs_are_rejected() {
        // Rotation generator: purely imaginary spectrum.
        let skew = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        match chamber_normalize(&AlgElem::from_single(skew).unwrap()) {
            Err(Error::NotHyperbolic(_)) => {}
            other => panic!("expected NotHyperbolic, got {other:?}"),
        }
        // Defective: nontrivial Jordan block.
        let jordan = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        match chamber_normalize(&AlgElem::from_single(jordan).unwrap()) {
            Err(Error::NotHyperbolic(_)) => {}
            other => panic!("expected NotHyperbolic, got {other:?}"),
        }
    }

    #[test]
    fn mu_gap_values() {
        let h = AlgElem::from_single(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0, -1.0, -1.0,
        ])))
        .unwrap();
        let c = chamber_normalize(&h).unwrap();
        assert_relative_eq!(mu_gap(&c).unwrap(), 3.0);

        // Product with one trivial factor.
        let spec = SemisimpleSpec::new(vec![2, 2]).unwrap();
        let h = AlgElem::new(
            spec,
            vec![
                RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0])),
                RMat::zeros(2, 2),
            ],
        )
        .unwrap();
        let c = chamber_normalize(&h).unwrap();
        assert_relative_eq!(mu_gap(&c).unwrap(), 2.0);

        // Brute force over all pairwise differences.
        let diag = vec![3.0, 1.0, 0.0, -4.0];
        let h = AlgElem::from_single(RMat::from_diagonal(&nalgebra::DVector::from_vec(
            diag.clone(),
        )))
        .unwrap();
        let c = chamber_normalize(&h).unwrap();
        let brute = diag
            .iter()
            .flat_map(|&a| diag.iter().map(move |&b| a - b))
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(mu_gap(&c).unwrap(), brute);
        assert_relative_eq!(mu_gap(&c).unwrap(), 1.0);
    }

    #[test]
    fn mu_scales_linearly() {
        let mut rng = sample::rng_from_seed(59);
        let h = AlgElem::from_single(sample::gaussian_symmetric_traceless(&mut rng, 4)).unwrap();
        let c1 = chamber_normalize(&h).unwrap();
        let c2 = chamber_normalize(&h.scale(2.5)).unwrap();
        assert_relative_eq!(
            mu_gap(&c2).unwrap(),
            2.5 * mu_gap(&c1).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn cartan_inner_on_elementary_matrices() {
        let mut e12 = RMat::zeros(3, 3);
        e12[(0, 1)] = 1.0;
        let mut e21 = RMat::zeros(3, 3);
        e21[(1, 0)] = 1.0;
        let x = AlgElem::from_single(e12).unwrap();
        let y = AlgElem::from_single(e21).unwrap();
        assert_relative_eq!(cartan_inner(&x, &x).unwrap(), 1.0);
        assert_relative_eq!(cartan_inner(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn cartan_inner_is_orthogonally_invariant() {
        let mut rng = sample::rng_from_seed(61);
        let x = AlgElem::from_single(sample::gaussian_traceless(&mut rng, 4)).unwrap();
        let y = AlgElem::from_single(sample::gaussian_traceless(&mut rng, 4)).unwrap();
        let base = cartan_inner(&x, &y).unwrap();
        for _ in 0..20 {
            let k = GroupElem::from_single(sample::haar_rotation(&mut rng, 4)).unwrap();
            let kx = k.adjoint(&x).unwrap();
            let ky = k.adjoint(&y).unwrap();
            assert_relative_eq!(cartan_inner(&kx, &ky).unwrap(), base, epsilon = 1e-12);
        }
    }

    #[test]
    fn ad_eigenspace_dimensions_and_eigenvalues() {
        let h = AlgElem::from_single(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0, -1.0, -1.0,
        ])))
        .unwrap();
        let c = chamber_normalize(&h).unwrap();
        let plus = ad_eigenspaces(&c, Sign::Plus);
        assert_eq!(plus.len(), 2);
        // In sorted coordinates these are E_12 and E_13 conjugated back.
        for y in &plus {
            let bracket = h.commutator(y);
            // ad(H) eigenvalue must be 2 - (-1) = 3 here.
            assert!(bracket.sub(&y.scale(3.0)).norm() < 1e-10);
        }
        let minus = ad_eigenspaces(&c, Sign::Minus);
        assert_eq!(minus.len(), 2);

        let zero = chamber_normalize(&AlgElem::zero(SemisimpleSpec::simple(3).unwrap())).unwrap();
        assert!(ad_eigenspaces(&zero, Sign::Plus).is_empty());

        // Regular element: dim n⁺ = number of pairs = 3 in sl(3).
        let reg = AlgElem::from_single(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 0.0, -1.0,
        ])))
        .unwrap();
        let creg = chamber_normalize(&reg).unwrap();
        assert_eq!(ad_eigenspaces(&creg, Sign::Plus).len(), 3);
    }

    #[test]
    fn ad_h_eigenvalues_on_returned_basis() {
        let mut rng = sample::rng_from_seed(67);
        let h = AlgElem::from_single(sample::gaussian_symmetric_traceless(&mut rng, 4)).unwrap();
        let c = chamber_normalize(&h).unwrap();
        let f = c.factor(0);
        let mut expected_roots: Vec<f64> = Vec::new();
        for (j, &lj) in f.eigenvalues.iter().enumerate() {
            for (jp, &ljp) in f.eigenvalues.iter().enumerate() {
                if j < jp {
                    for _ in 0..f.multiplicities[j] * f.multiplicities[jp] {
                        expected_roots.push(lj - ljp);
                    }
                }
            }
        }
        let basis = ad_eigenspaces(&c, Sign::Plus);
        assert_eq!(basis.len(), expected_roots.len());
        // ad(H) is self-adjoint for the Cartan inner product when H is
        // symmetric.
        for (a, b) in basis.iter().zip(basis.iter().rev()) {
            let lhs = cartan_inner(&h.commutator(a), b).unwrap();
            let rhs = cartan_inner(a, &h.commutator(b)).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * h.norm().max(1.0));
        }
        for y in &basis {
            let bracket = h.commutator(y);
            // Each basis element is an ad(H) eigenvector with a positive root value.
            let alpha = cartan_inner(&bracket, y).unwrap() / cartan_inner(y, y).unwrap();
            assert!(alpha > 0.0);
            assert!(bracket.sub(&y.scale(alpha)).norm() < 1e-8 * h.norm().max(1.0));
            assert!(expected_roots.iter().any(|r| (r - alpha).abs() < 1e-6));
        }
    }
}
