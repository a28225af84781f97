//! Shared dense linear algebra: spectral projectors via the complex Schur
//! form, triangular Sylvester solves, canonical subspace bases, and
//! principal-angle dimension counts.
//!
//! Everything here is sized for small blocks (n ≤ 12 or so); clarity and
//! determinism win over asymptotics.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub(crate) type RMat = DMatrix<f64>;
pub(crate) type CMat = DMatrix<Complex<f64>>;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 20_000;

pub(crate) fn to_complex(a: &RMat) -> CMat {
    a.map(|x| Complex::new(x, 0.0))
}

/// Extract the real part, failing if any imaginary entry exceeds `tol`.
pub(crate) fn real_part_checked(a: &CMat, tol: f64) -> Result<RMat> {
    let worst = a.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::ClusterAmbiguity {
            tol,
            detail: format!("imaginary residue {worst:e} after conjugate pairing"),
        });
    }
    Ok(a.map(|z| z.re))
}

/// One eigenvalue cluster of a real matrix together with its spectral
/// projector (the projector onto the generalized eigenspace along the
/// others). Projectors are kept complex; conjugate clusters pair up.
#[derive(Debug, Clone)]
pub(crate) struct SpectralCluster {
    pub value: Complex<f64>,
    pub mult: usize,
    pub projector: CMat,
}

/// Cluster the spectrum of `a` at absolute threshold `eps_cluster * scale`
/// and return one spectral projector per cluster, sorted by descending real
/// part (ties broken by descending imaginary part).
pub(crate) fn spectral_clusters(a: &RMat, eps_cluster: f64) -> Result<Vec<SpectralCluster>> {
    let n = a.nrows();
    let ac = to_complex(a);
    let schur = ac
        .clone()
        .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(Error::SchurFailed)?;
    let (q, t) = schur.unpack();
    let eigs: Vec<Complex<f64>> = (0..n).map(|i| t[(i, i)]).collect();

    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tau = eps_cluster * scale;

    let assignment = cluster_indices(&eigs, tau)?;
    let num_clusters = assignment.iter().copied().max().unwrap() + 1;

    let mut clusters = Vec::with_capacity(num_clusters);
    for c in 0..num_clusters {
        let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
        let mean = members.iter().map(|&i| eigs[i]).sum::<Complex<f64>>() / members.len() as f64;
        let select: Vec<bool> = (0..n).map(|i| assignment[i] == c).collect();
        let projector = spectral_projector(&q, &t, &select, tau)?;
        clusters.push(SpectralCluster {
            value: mean,
            mult: members.len(),
            projector,
        });
    }

    pair_conjugates(&mut clusters, tau)?;
    clusters.sort_by(|x, y| {
        (y.value.re, y.value.im)
            .partial_cmp(&(x.value.re, x.value.im))
            .unwrap()
    });
    Ok(clusters)
}

/// Union-find merge of eigenvalues at distance ≤ tau, with stability checks:
/// clusters must have small diameter and stay well apart, otherwise the
/// grouping (and everything downstream) is untrustworthy.
fn cluster_indices(eigs: &[Complex<f64>], tau: f64) -> Result<Vec<usize>> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() <= tau {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = next;
            next += 1;
        }
        label[i] = label[root];
    }

    let mut max_diameter: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (eigs[i] - eigs[j]).norm();
            if label[i] == label[j] {
                max_diameter = max_diameter.max(d);
            } else {
                min_gap = min_gap.min(d);
            }
        }
    }
    if max_diameter > 2.0 * tau {
        return Err(Error::ClusterAmbiguity {
            tol: tau,
            detail: format!("cluster diameter {max_diameter:e} from chained merges"),
        });
    }
    if min_gap < 2.0 * tau {
        return Err(Error::ClusterAmbiguity {
            tol: tau,
            detail: format!("inter-cluster gap {min_gap:e} too close to threshold"),
        });
    }
    Ok(label)
}

/// Force conjugate symmetry on the cluster values: real means snap to the
/// axis, complex means pair with the mirror cluster exactly.
fn pair_conjugates(clusters: &mut [SpectralCluster], tau: f64) -> Result<()> {
    let ambiguity = |detail: String| Error::ClusterAmbiguity { tol: tau, detail };
    let mut done = vec![false; clusters.len()];
    for i in 0..clusters.len() {
        if done[i] {
            continue;
        }
        if clusters[i].value.im.abs() <= tau {
            clusters[i].value.im = 0.0;
            done[i] = true;
            continue;
        }
        let target = clusters[i].value.conj();
        let partner = (0..clusters.len())
            .filter(|&j| j != i && !done[j])
            .min_by(|&x, &y| {
                (clusters[x].value - target)
                    .norm()
                    .partial_cmp(&(clusters[y].value - target).norm())
                    .unwrap()
            })
            .ok_or_else(|| ambiguity("unpaired complex cluster".into()))?;
        if (clusters[partner].value - target).norm() > 4.0 * tau
            || clusters[partner].mult != clusters[i].mult
        {
            return Err(ambiguity("conjugate pairing failed".into()));
        }
        let canon = 0.5 * (clusters[i].value + clusters[partner].value.conj());
        clusters[i].value = canon;
        clusters[partner].value = canon.conj();
        done[i] = true;
        done[partner] = true;
    }
    Ok(())
}

/// Spectral projector of the matrix Q T Q^H onto the invariant subspace of
/// the selected diagonal entries, along the complementary one. Reorders a
/// copy of the Schur pair so the selection leads, then block-diagonalizes
/// with one triangular Sylvester solve.
fn spectral_projector(q: &CMat, t: &CMat, select: &[bool], tau: f64) -> Result<CMat> {
    let n = t.nrows();
    let m = select.iter().filter(|&&s| s).count();
    if m == n {
        return Ok(CMat::identity(n, n));
    }
    let mut q = q.clone();
    let mut t = t.clone();
    let mut sel = select.to_vec();
    let mut target = 0;
    for k in 0..n {
        if sel[k] {
            let mut j = k;
            while j > target {
                swap_adjacent(&mut q, &mut t, j - 1);
                sel.swap(j - 1, j);
                j -= 1;
            }
            target += 1;
        }
    }

    let t11 = t.view((0, 0), (m, m)).into_owned();
    let t12 = t.view((0, m), (m, n - m)).into_owned();
    let t22 = t.view((m, m), (n - m, n - m)).into_owned();
    let r = solve_triangular_sylvester(&t11, &t22, &(-t12), tau)?;

    // P = Q [I  -R; 0  0] Q^H
    let mut inner = CMat::zeros(n, n);
    inner
        .view_mut((0, 0), (m, m))
        .copy_from(&CMat::identity(m, m));
    inner.view_mut((0, m), (m, n - m)).copy_from(&(-&r));
    Ok(&q * inner * q.adjoint())
}

/// Unitary similarity exchanging the diagonal entries at k and k+1 of an
/// upper-triangular t, accumulating into q.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    let x1 = b;
    let x2 = d - a;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm < f64::MIN_POSITIVE.sqrt() {
        // Equal eigenvalues: exchanging labels changes nothing.
        return;
    }
    let u1 = x1 / nrm;
    let u2 = x2 / nrm;
    let u = nalgebra::Matrix2::new(u1, -u2.conj(), u2, u1.conj());

    let n = t.nrows();
    for col in 0..n {
        let r0 = t[(k, col)];
        let r1 = t[(k + 1, col)];
        t[(k, col)] = u[(0, 0)].conj() * r0 + u[(1, 0)].conj() * r1;
        t[(k + 1, col)] = u[(0, 1)].conj() * r0 + u[(1, 1)].conj() * r1;
    }
    for row in 0..n {
        let c0 = t[(row, k)];
        let c1 = t[(row, k + 1)];
        t[(row, k)] = c0 * u[(0, 0)] + c1 * u[(1, 0)];
        t[(row, k + 1)] = c0 * u[(0, 1)] + c1 * u[(1, 1)];
        let q0 = q[(row, k)];
        let q1 = q[(row, k + 1)];
        q[(row, k)] = q0 * u[(0, 0)] + q1 * u[(1, 0)];
        q[(row, k + 1)] = q0 * u[(0, 1)] + q1 * u[(1, 1)];
    }
    t[(k + 1, k)] = Complex::new(0.0, 0.0);
}

/// Solve T11 R - R T22 = C for upper-triangular T11, T22 by forward column
/// substitution. Solvable exactly when the two spectra are disjoint.
fn solve_triangular_sylvester(t11: &CMat, t22: &CMat, c: &CMat, tau: f64) -> Result<CMat> {
    let m = t11.nrows();
    let p = t22.nrows();
    let mut r = CMat::zeros(m, p);
    for j in 0..p {
        let mut rhs: Vec<Complex<f64>> = (0..m).map(|i| c[(i, j)]).collect();
        for i in 0..j {
            let tij = t22[(i, j)];
            for row in 0..m {
                rhs[row] += r[(row, i)] * tij;
            }
        }
        // (T11 - t22[j,j] I) x = rhs, upper triangular back substitution.
        let shift = t22[(j, j)];
        for row in (0..m).rev() {
            let mut acc = rhs[row];
            for col in (row + 1)..m {
                acc -= t11[(row, col)] * r[(col, j)];
            }
            let diag = t11[(row, row)] - shift;
            if diag.norm() <= tau {
                return Err(Error::ClusterAmbiguity {
                    tol: tau,
                    detail: "Sylvester solve hit a near-zero spectral gap".into(),
                });
            }
            r[(row, j)] = acc / diag;
        }
    }
    Ok(r)
}

/// Deterministic orthonormal basis of the column span of `m`, which must
/// have numerical rank `rank`. Greedy pivoted Gram-Schmidt with
/// re-orthogonalization; ties and signs are broken by lowest index, so the
/// result depends only on the input matrix.
pub(crate) fn canonical_range_basis(m: &RMat, rank: usize) -> Result<RMat> {
    let n = m.nrows();
    let cols = m.ncols();
    let mut residual: Vec<nalgebra::DVector<f64>> =
        (0..cols).map(|j| m.column(j).into_owned()).collect();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut pivot = 0;
        for j in 1..cols {
            if residual[j].norm() > residual[pivot].norm() {
                pivot = j;
            }
        }
        let mut v = residual[pivot].clone();
        // Second orthogonalization pass.
        for b in &basis {
            let coeff = b.dot(&v);
            v -= b * coeff;
        }
        let nv = v.norm();
        if nv < 1e-12 {
            return Err(Error::SingularBasis { factor: 0 });
        }
        v /= nv;
        sign_normalize(&mut v);
        for r in residual.iter_mut() {
            let coeff = v.dot(r);
            *r -= &v * coeff;
        }
        basis.push(v);
    }
    let mut out = RMat::zeros(n, rank);
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    Ok(out)
}

/// Flip the sign so the entry of largest magnitude (first on ties) is
/// positive.
fn sign_normalize(v: &mut nalgebra::DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        *v = -v.clone();
    }
}

/// Number of principal angles with cos θ ≥ 1 - cos_tol between the spans of
/// two orthonormal column blocks; this is dim(span A ∩ span B) at the given
/// tolerance.
pub(crate) fn intersection_dim(qa: &RMat, qb: &RMat, cos_tol: f64) -> usize {
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return 0;
    }
    let m = qa.transpose() * qb;
    let sv = m.svd(false, false).singular_values;
    sv.iter().filter(|&&s| s >= 1.0 - cos_tol).count()
}

/// Orthonormal basis of span A ∩ span B, expressed inside span B (principal
/// vectors on the B side with cos θ ≥ 1 - cos_tol).
pub(crate) fn intersection_basis(qa: &RMat, qb: &RMat, cos_tol: f64) -> RMat {
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return RMat::zeros(qb.nrows(), 0);
    }
    let m = qa.transpose() * qb;
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let count = svd
        .singular_values
        .iter()
        .filter(|&&s| s >= 1.0 - cos_tol)
        .count();
    let mut out = RMat::zeros(qb.nrows(), count);
    for j in 0..count {
        let dir = qb * vt.row(j).transpose();
        out.set_column(j, &dir);
    }
    out
}

/// Zero every entry except those strictly below the block diagonal cut by
/// `boundaries` (cumulative step ends, last equal to n).
pub(crate) fn strict_block_lower(a: &RMat, boundaries: &[usize]) -> RMat {
    let n = a.nrows();
    let step_of = |idx: usize| boundaries.iter().position(|&b| idx < b).unwrap();
    RMat::from_fn(n, n, |r, c| {
        if step_of(r) > step_of(c) {
            a[(r, c)]
        } else {
            0.0
        }
    })
}

/// Operator (spectral) norm.
pub(crate) fn op_norm(a: &RMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values[0]
}

/// Smallest singular value.
pub(crate) fn min_singular(a: &RMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    sv[sv.len() - 1]
}

/// Numerical rank at a relative threshold.
pub(crate) fn numerical_rank(a: &RMat, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv[0];
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}
