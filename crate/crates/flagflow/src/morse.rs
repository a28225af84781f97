//! Minimal Morse components of the hyperbolic flow on a flag manifold:
//! enumeration by dimension profile, membership classification via
//! principal angles, base points, the normal-bundle fibers l±_x, the
//! Whitney complement check, and the Conley-index degree shift.
//!
//! Components are indexed by dimension profiles: per factor an s×(k+1)
//! integer matrix whose (j,i) entry is the dimension gained by flag step i
//! inside eigenvalue group j. Row sums are the eigenvalue multiplicities,
//! column sums the step sizes. Distinct Weyl representatives of the same
//! component collapse to one profile, so the index is canonical.

use crate::error::{Error, Result};
use crate::flag::{flag_from_basis, induced_vector, Flag, FlagType};
use crate::lie::{AlgElem, Chamber, Sign};
use crate::linalg::{self, canonical_range_basis, intersection_basis, intersection_dim, RMat};
use crate::tol;

/// Combinatorial index of a fixed component: one integer matrix per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimensionProfile {
    factors: Vec<Vec<Vec<usize>>>,
}

impl DimensionProfile {
    pub fn new(factors: Vec<Vec<Vec<usize>>>) -> Self {
        Self { factors }
    }

    pub fn factor(&self, f: usize) -> &Vec<Vec<usize>> {
        &self.factors[f]
    }

    pub fn factors(&self) -> &[Vec<Vec<usize>>] {
        &self.factors
    }

    /// Row and column sums must match the chamber multiplicities and the
    /// flag-type step sizes.
    pub fn is_consistent(&self, c: &Chamber, t: &FlagType) -> bool {
        if self.factors.len() != c.spec().num_factors() {
            return false;
        }
        for (f, d) in self.factors.iter().enumerate() {
            let mults = &c.factor(f).multiplicities;
            let steps = t.step_sizes(f);
            if d.len() != mults.len() || d.iter().any(|row| row.len() != steps.len()) {
                return false;
            }
            for (row, &m) in d.iter().zip(mults) {
                if row.iter().sum::<usize>() != m {
                    return false;
                }
            }
            for (i, &cstep) in steps.iter().enumerate() {
                if d.iter().map(|row| row[i]).sum::<usize>() != cstep {
                    return false;
                }
            }
        }
        true
    }
}

/// n_w: the rank of the unstable bundle V⁺ over the component, which is the
/// degree shift in the Conley-index cohomology.
pub fn conley_shift(p: &DimensionProfile) -> usize {
    let mut acc = 0;
    for d in p.factors() {
        let s = d.len();
        for j in 0..s {
            for jp in (j + 1)..s {
                let cols = d[j].len();
                for i in 0..cols {
                    for ip in 0..i {
                        // group j is higher (λ_j > λ_{j'}), step i comes later
                        acc += d[j][i] * d[jp][ip];
                    }
                }
            }
        }
    }
    acc
}

/// Rank of the stable bundle V⁻ over the component.
pub fn stable_rank(p: &DimensionProfile) -> usize {
    let mut acc = 0;
    for d in p.factors() {
        let s = d.len();
        for j in 0..s {
            for jp in (j + 1)..s {
                let cols = d[j].len();
                for i in 0..cols {
                    for ip in (i + 1)..cols {
                        acc += d[j][i] * d[jp][ip];
                    }
                }
            }
        }
    }
    acc
}

/// Dimension of the component itself.
pub fn fix_dim(p: &DimensionProfile) -> usize {
    let mut acc = 0;
    for d in p.factors() {
        for row in d {
            for i in 0..row.len() {
                for ip in (i + 1)..row.len() {
                    acc += row[i] * row[ip];
                }
            }
        }
    }
    acc
}

/// Induced flag types on the eigenvalue groups: per factor, per group, the
/// strictly increasing partial sums of the row (complement dropped). The
/// component is diffeomorphic to the product of these flag manifolds.
pub fn factor_structure(p: &DimensionProfile, c: &Chamber, t: &FlagType) -> Vec<Vec<Vec<usize>>> {
    let _ = t;
    let mut out = Vec::with_capacity(p.factors().len());
    for (f, d) in p.factors().iter().enumerate() {
        let mults = &c.factor(f).multiplicities;
        let mut per_group = Vec::with_capacity(d.len());
        for (row, &m) in d.iter().zip(mults) {
            let mut dims = Vec::new();
            let mut acc = 0;
            for &entry in &row[..row.len().saturating_sub(1)] {
                acc += entry;
                if acc > 0 && acc < m && dims.last() != Some(&acc) {
                    dims.push(acc);
                }
            }
            per_group.push(dims);
        }
        out.push(per_group);
    }
    out
}

/// A minimal Morse component: its profile, a concrete base point, the
/// dimension split of the Whitney decomposition, and the induced flag types
/// of the eigenvalue groups.
#[derive(Debug, Clone)]
pub struct MorseComponent {
    pub profile: DimensionProfile,
    pub base_point: Flag,
    pub dim_fix: usize,
    pub dim_v_plus: usize,
    pub dim_v_minus: usize,
    pub factor_structure: Vec<Vec<Vec<usize>>>,
}

impl MorseComponent {
    /// No unstable directions: everything nearby converges here.
    pub fn is_attractor(&self) -> bool {
        self.dim_v_plus == 0
    }

    /// No stable directions.
    pub fn is_repeller(&self) -> bool {
        self.dim_v_minus == 0
    }
}

/// All nonnegative integer matrices with the given row and column sums, in
/// lexicographic order.
fn contingency_tables(rows: &[usize], cols: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    let mut col_left = cols.to_vec();
    fill_rows(rows, &mut col_left, &mut current, &mut out);
    out
}

fn fill_rows(
    rows: &[usize],
    col_left: &mut [usize],
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if rows.is_empty() {
        if col_left.iter().all(|&c| c == 0) {
            out.push(current.clone());
        }
        return;
    }
    let mut row = vec![0; col_left.len()];
    fill_entries(rows[0], 0, &mut row, col_left, &mut |row, col_left| {
        current.push(row.to_vec());
        fill_rows(&rows[1..], col_left, current, out);
        current.pop();
    });
}

fn fill_entries(
    remaining: usize,
    idx: usize,
    row: &mut [usize],
    col_left: &mut [usize],
    emit: &mut impl FnMut(&[usize], &mut [usize]),
) {
    if idx == row.len() {
        if remaining == 0 {
            emit(row, col_left);
        }
        return;
    }
    let max = remaining.min(col_left[idx]);
    for v in 0..=max {
        row[idx] = v;
        col_left[idx] -= v;
        fill_entries(remaining - v, idx + 1, row, col_left, emit);
        col_left[idx] += v;
    }
    row[idx] = 0;
}

/// Enumerate every minimal Morse component of the hyperbolic flow of the
/// chamber on F_Θ: one per dimension profile, cartesian across factors.
pub fn enumerate_components(c: &Chamber, t: &FlagType) -> Vec<MorseComponent> {
    assert_eq!(c.spec(), t.spec(), "spec mismatch");
    let per_factor: Vec<Vec<Vec<Vec<usize>>>> = (0..c.spec().num_factors())
        .map(|f| contingency_tables(&c.factor(f).multiplicities, &t.step_sizes(f)))
        .collect();

    let mut profiles = vec![Vec::new()];
    for factor_tables in &per_factor {
        let mut next = Vec::with_capacity(profiles.len() * factor_tables.len());
        for prefix in &profiles {
            for table in factor_tables {
                let mut grown: Vec<Vec<Vec<usize>>> = prefix.clone();
                grown.push(table.clone());
                next.push(grown);
            }
        }
        profiles = next;
    }

    profiles
        .into_iter()
        .map(|factors| {
            let profile = DimensionProfile::new(factors);
            let base = base_point(&profile, c, t).expect("enumerated profile is consistent");
            let structure = factor_structure(&profile, c, t);
            MorseComponent {
                dim_fix: fix_dim(&profile),
                dim_v_plus: conley_shift(&profile),
                dim_v_minus: stable_rank(&profile),
                factor_structure: structure,
                base_point: base,
                profile,
            }
        })
        .collect()
}

/// Classify a flag onto a component of the chamber flow at the default
/// fixed-point tolerance; `None` means the flag is not fixed.
pub fn classify_flag(x: &Flag, c: &Chamber) -> Option<DimensionProfile> {
    classify_flag_with(x, c, tol::EPS_FIX)
}

/// Classification at an explicit tolerance: all step subspaces must be
/// H-invariant, and the profile is read off from principal-angle
/// intersection dimensions with the eigenspaces.
///
/// Invariance of V_i means H V_i ⊆ V_i, i.e. (I-P)HP = 0 for the step
/// projector P. (Full commutation `[P,H] = 0` would additionally force the
/// orthogonal complement to be invariant, which fails for non-symmetric H.)
pub fn classify_flag_with(x: &Flag, c: &Chamber, eps: f64) -> Option<DimensionProfile> {
    assert_eq!(x.spec(), c.spec(), "spec mismatch");
    let h = c.reconstruct();
    let t = x.flag_type();
    let mut factors = Vec::with_capacity(c.spec().num_factors());
    for f in 0..c.spec().num_factors() {
        let hb = h.block(f);
        let scale = hb.norm().max(1.0);
        let cf = c.factor(f);
        let steps = t.parts()[f].clone();
        let id = RMat::identity(hb.nrows(), hb.ncols());
        for (i, _) in steps.iter().enumerate() {
            let p = x.step_projector(f, i);
            if ((&id - &p) * hb * &p).norm() > eps * scale {
                return None;
            }
        }
        let boundaries = t.boundaries(f);
        let s = cf.num_groups();
        let mut d = vec![vec![0usize; boundaries.len()]; s];
        for (j, row) in d.iter_mut().enumerate() {
            let basis = cf.eigenspace_basis(j);
            let mut prev = 0usize;
            for (i, &b) in boundaries.iter().enumerate() {
                let dim = if b == cf.dim() {
                    cf.multiplicities[j]
                } else {
                    let q = x.frame(f).columns(0, b).into_owned();
                    intersection_dim(&q, &basis, eps)
                };
                if dim < prev {
                    return None;
                }
                row[i] = dim - prev;
                prev = dim;
            }
        }
        // Column sums must reproduce the step sizes.
        let sizes = t.step_sizes(f);
        for (i, &cstep) in sizes.iter().enumerate() {
            if d.iter().map(|row| row[i]).sum::<usize>() != cstep {
                return None;
            }
        }
        factors.push(d);
    }
    Some(DimensionProfile::new(factors))
}

/// Adapted-coordinate bookkeeping for one component: the assignment of
/// adapted coordinates (eigenbasis columns) to flag steps, consumed left to
/// right within each group.
pub(crate) struct AdaptedStructure {
    /// per factor: adapted index -> flag step
    pub step_of: Vec<Vec<usize>>,
    /// per factor: adapted index -> eigenvalue group
    pub grp_of: Vec<Vec<usize>>,
    /// per factor: frame column position (step-ordered) -> adapted index
    pub base_columns: Vec<Vec<usize>>,
    /// per factor: step -> adapted indices consumed by that step, per group order
    pub step_indices: Vec<Vec<Vec<usize>>>,
}

impl AdaptedStructure {
    pub fn new(p: &DimensionProfile, c: &Chamber, t: &FlagType) -> Result<Self> {
        if !p.is_consistent(c, t) {
            return Err(Error::InconsistentProfile);
        }
        let mut step_of = Vec::new();
        let mut grp_of = Vec::new();
        let mut base_columns = Vec::new();
        let mut step_indices = Vec::new();
        for f in 0..c.spec().num_factors() {
            let cf = c.factor(f);
            let n = cf.dim();
            let offsets = cf.group_offsets();
            let num_steps = t.boundaries(f).len();
            let d = p.factor(f);
            let mut consumed = vec![0usize; cf.num_groups()];
            let mut step_map = vec![0usize; n];
            let mut cols = Vec::with_capacity(n);
            let mut per_step: Vec<Vec<usize>> = vec![Vec::new(); num_steps];
            for i in 0..num_steps {
                for j in 0..cf.num_groups() {
                    for _ in 0..d[j][i] {
                        let idx = offsets[j] + consumed[j];
                        consumed[j] += 1;
                        step_map[idx] = i;
                        cols.push(idx);
                        per_step[i].push(idx);
                    }
                }
            }
            step_of.push(step_map);
            grp_of.push((0..n).map(|idx| cf.group_of(idx)).collect());
            base_columns.push(cols);
            step_indices.push(per_step);
        }
        Ok(Self {
            step_of,
            grp_of,
            base_columns,
            step_indices,
        })
    }

    /// Index pairs (factor, a, b) of the elementary matrices spanning the
    /// requested space at the coordinate base point in adapted coordinates.
    pub fn pattern(&self, kind: PatternKind) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for f in 0..self.step_of.len() {
            let n = self.step_of[f].len();
            for a in 0..n {
                for b in 0..n {
                    if self.step_of[f][a] <= self.step_of[f][b] {
                        continue;
                    }
                    let (ga, gb) = (self.grp_of[f][a], self.grp_of[f][b]);
                    let keep = match kind {
                        PatternKind::FiberPlus => ga < gb,
                        PatternKind::FiberMinus => ga > gb,
                        PatternKind::FixTangent => ga == gb,
                    };
                    if keep {
                        out.push((f, a, b));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PatternKind {
    FiberPlus,
    FiberMinus,
    FixTangent,
}

impl From<Sign> for PatternKind {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Plus => PatternKind::FiberPlus,
            Sign::Minus => PatternKind::FiberMinus,
        }
    }
}

/// Concrete base point of the component: eigenbasis columns assigned to
/// steps in the deterministic consumption order.
pub fn base_point(p: &DimensionProfile, c: &Chamber, t: &FlagType) -> Result<Flag> {
    let structure = AdaptedStructure::new(p, c, t)?;
    let mut mats = Vec::with_capacity(c.spec().num_factors());
    for f in 0..c.spec().num_factors() {
        let cf = c.factor(f);
        let n = cf.dim();
        let v = cf.conjugator();
        let mut m = RMat::zeros(n, n);
        for (pos, &idx) in structure.base_columns[f].iter().enumerate() {
            m.set_column(pos, &v.column(idx));
        }
        mats.push(m);
    }
    flag_from_basis(&mats, t.clone())
}

/// The adapted-coordinate flag of the component base point (conjugator
/// replaced by the identity).
pub(crate) fn adapted_base_flag(structure: &AdaptedStructure, t: &FlagType) -> Flag {
    let mut frames = Vec::with_capacity(structure.base_columns.len());
    for cols in &structure.base_columns {
        let n = cols.len();
        let mut m = RMat::zeros(n, n);
        for (pos, &idx) in cols.iter().enumerate() {
            m[(idx, pos)] = 1.0;
        }
        frames.push(m);
    }
    Flag::from_frames_unchecked(t.clone(), frames)
}

/// Block-diagonal orthogonal frame k (in adapted coordinates, one block per
/// eigenvalue group) with x_adapted = k · base. Exists exactly when the
/// flag lies on the component.
pub(crate) fn component_frame(
    x_adapted: &Flag,
    structure: &AdaptedStructure,
    c: &Chamber,
    eps: f64,
) -> Result<Vec<RMat>> {
    let t = x_adapted.flag_type();
    let mut frames = Vec::with_capacity(c.spec().num_factors());
    for f in 0..c.spec().num_factors() {
        let cf = c.factor(f);
        let n = cf.dim();
        let offsets = cf.group_offsets();
        let boundaries = t.boundaries(f);
        let mut k = RMat::zeros(n, n);
        for j in 0..cf.num_groups() {
            let m = cf.multiplicities[j];
            let mut coord_basis = RMat::zeros(n, m);
            for r in 0..m {
                coord_basis[(offsets[j] + r, r)] = 1.0;
            }
            let mut accumulated = RMat::zeros(n, 0);
            let mut consumed = 0usize;
            for (i, &b) in boundaries.iter().enumerate() {
                let indices: Vec<usize> = structure.step_indices[f][i]
                    .iter()
                    .copied()
                    .filter(|&idx| structure.grp_of[f][idx] == j)
                    .collect();
                let want = indices.len();
                if want == 0 {
                    continue;
                }
                let q = x_adapted.frame(f).columns(0, b).into_owned();
                let inter = intersection_basis(&q, &coord_basis, eps);
                if inter.ncols() != consumed + want {
                    return Err(Error::NotOnComponent);
                }
                // New directions: the part of the intersection orthogonal to
                // what previous steps already claimed.
                let residual = &inter - &accumulated * (accumulated.transpose() * &inter);
                let fresh =
                    canonical_range_basis(&residual, want).map_err(|_| Error::NotOnComponent)?;
                for (r, &idx) in indices.iter().enumerate() {
                    k.set_column(idx, &fresh.column(r));
                }
                let mut grown = RMat::zeros(n, consumed + want);
                grown
                    .view_mut((0, 0), (n, consumed))
                    .copy_from(&accumulated);
                grown.view_mut((0, consumed), (n, want)).copy_from(&fresh);
                accumulated = grown;
                consumed += want;
            }
        }
        if (k.transpose() * &k - RMat::identity(n, n)).norm() > 1e-6 * n as f64 {
            return Err(Error::NotOnComponent);
        }
        frames.push(k);
    }
    Ok(frames)
}

/// Convert a flag to the chamber's adapted coordinates.
pub(crate) fn to_adapted_flag(x: &Flag, c: &Chamber) -> Result<Flag> {
    let mats: Vec<RMat> = (0..c.spec().num_factors())
        .map(|f| c.factor(f).conjugator_inv() * x.frame(f))
        .collect();
    flag_from_basis(&mats, x.flag_type().clone())
}

/// Cartan-orthonormal basis of the fiber l±_x = k(n±_H ∩ w n⁻_Θ), returned
/// in the coordinates of x. Its induced vectors span the normal fiber
/// V±(H,w)_x; orthonormality (and the norm-equality case of the metric
/// lemma) is exact whenever the chamber conjugator is orthogonal.
pub fn normal_fiber(
    x: &Flag,
    p: &DimensionProfile,
    c: &Chamber,
    sign: Sign,
) -> Result<Vec<AlgElem>> {
    let structure = AdaptedStructure::new(p, c, x.flag_type())?;
    if classify_flag(x, c).as_ref() != Some(p) {
        return Err(Error::NotOnComponent);
    }
    let x_ad = to_adapted_flag(x, c)?;
    let k = component_frame(&x_ad, &structure, c, tol::EPS_FIX)?;
    Ok(pattern_basis(&structure, c, &k, PatternKind::from(sign)))
}

/// Elementary-matrix basis Ad(k) E_ab for a pattern, in adapted
/// coordinates. Cartan-orthonormal since k is orthogonal.
pub(crate) fn pattern_basis_adapted(
    structure: &AdaptedStructure,
    spec: &crate::lie::SemisimpleSpec,
    k: &[RMat],
    kind: PatternKind,
) -> Vec<AlgElem> {
    let mut out = Vec::new();
    for (f, a, b) in structure.pattern(kind) {
        let n = spec.factors()[f];
        let mut e = RMat::zeros(n, n);
        e[(a, b)] = 1.0;
        let adapted = &k[f] * e * k[f].transpose();
        let mut blocks: Vec<RMat> = spec.factors().iter().map(|&m| RMat::zeros(m, m)).collect();
        blocks[f] = adapted;
        out.push(AlgElem::from_blocks_unchecked(spec.clone(), blocks));
    }
    out
}

/// The same basis conjugated back to original coordinates by V.
pub(crate) fn pattern_basis(
    structure: &AdaptedStructure,
    c: &Chamber,
    k: &[RMat],
    kind: PatternKind,
) -> Vec<AlgElem> {
    pattern_basis_adapted(structure, c.spec(), k, kind)
        .into_iter()
        .map(|y| c.from_adapted(&y))
        .collect()
}

/// Result of the Whitney-complement rank test at a point of a component.
#[derive(Debug, Clone)]
pub struct WhitneyReport {
    pub ok: bool,
    pub dim_fix: usize,
    pub dim_v_plus: usize,
    pub dim_v_minus: usize,
    pub min_singular: f64,
}

/// Assemble induced vectors of (tangent of fix) ∪ (fiber +) ∪ (fiber -) at
/// x and test that they span T_x F_Θ with smallest singular value above the
/// rank tolerance.
pub fn whitney_check(x: &Flag, p: &DimensionProfile, c: &Chamber) -> Result<WhitneyReport> {
    let structure = AdaptedStructure::new(p, c, x.flag_type())?;
    if classify_flag(x, c).as_ref() != Some(p) {
        return Err(Error::NotOnComponent);
    }
    let x_ad = to_adapted_flag(x, c)?;
    let k = component_frame(&x_ad, &structure, c, tol::EPS_FIX)?;

    let fix = pattern_basis(&structure, c, &k, PatternKind::FixTangent);
    let plus = pattern_basis(&structure, c, &k, PatternKind::FiberPlus);
    let minus = pattern_basis(&structure, c, &k, PatternKind::FiberMinus);
    let (nf, np, nm) = (fix.len(), plus.len(), minus.len());

    let total_dim = x.flag_type().manifold_dim();
    let ambient: usize = x.spec().factors().iter().map(|&n| n * n).sum();
    let mut columns = RMat::zeros(ambient, nf + np + nm);
    for (col, y) in fix.iter().chain(&plus).chain(&minus).enumerate() {
        let v = induced_vector(y, x);
        let mut flat = Vec::with_capacity(ambient);
        for f in 0..x.spec().num_factors() {
            flat.extend(v.reduced(f).iter().copied());
        }
        let mut vec = nalgebra::DVector::from_vec(flat);
        let nrm = vec.norm();
        if nrm > 0.0 {
            vec /= nrm;
        }
        columns.set_column(col, &vec);
    }

    let min_singular = if nf + np + nm == total_dim && total_dim > 0 {
        linalg::min_singular(&columns)
    } else if total_dim == 0 {
        1.0
    } else {
        0.0
    };
    Ok(WhitneyReport {
        ok: min_singular > tol::EPS_RANK,
        dim_fix: nf,
        dim_v_plus: np,
        dim_v_minus: nm,
        min_singular,
    })
}
