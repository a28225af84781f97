//! Translation flows on flag manifolds: flow maps, empirical verification
//! of normal hyperbolicity (decay-exponent measurements on the normal
//! bundles), invariance checks, trajectory classification, and the
//! recurrent-set membership test.
//!
//! Decay measurements run in the chamber's adapted coordinates, where the
//! commuting Jordan factors are exactly block-diagonal per eigenvalue
//! group. Each group's transport is a scalar e^{λt} times a bounded block,
//! so matrix entries keep full relative precision even when the norms being
//! measured decay to 1e-13 and below. Exponents are conjugation-invariant,
//! so verdicts transfer back to the original coordinates; only the constant
//! c absorbs the conjugator's conditioning.

use crate::error::{Error, Result};
use crate::flag::{act, induced_vector, Flag};
use crate::lie::{mu_gap, AdditiveJordan, AlgElem, Chamber, GroupElem, MultiplicativeJordan, Sign};
use crate::linalg::{self, RMat};
use crate::morse::{
    adapted_base_flag, classify_flag_with, component_frame, pattern_basis_adapted,
    AdaptedStructure, DimensionProfile, MorseComponent, PatternKind,
};
use crate::par;
use crate::sample;
use crate::tol;

/// Flow generator: a Lie-algebra element for continuous time or a group
/// element iterated over the integers.
#[derive(Debug, Clone)]
pub enum Generator {
    Continuous(AlgElem),
    Discrete(GroupElem),
}

/// Jordan data of the generator.
#[derive(Debug, Clone)]
pub enum JordanData {
    Continuous(AdditiveJordan),
    Discrete(MultiplicativeJordan),
}

/// A translation flow with its derived Jordan data and chamber.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    generator: Generator,
    jordan: JordanData,
    chamber: Chamber,
}

impl FlowSpec {
    /// Continuous flow t ↦ exp(tX).
    pub fn continuous(x: AlgElem) -> Result<Self> {
        Self::continuous_with(x, crate::tol::EPS_CLUSTER)
    }

    /// Continuous flow with an explicit eigenvalue-clustering tolerance.
    pub fn continuous_with(x: AlgElem, eps_cluster: f64) -> Result<Self> {
        let jordan = crate::lie::additive_jordan_with(&x, eps_cluster)?;
        let chamber = crate::lie::chamber_normalize_with(&jordan.hyperbolic, eps_cluster)?;
        Ok(Self {
            generator: Generator::Continuous(x),
            jordan: JordanData::Continuous(jordan),
            chamber,
        })
    }

    /// Discrete flow k ↦ g^k.
    pub fn discrete(g: GroupElem) -> Result<Self> {
        Self::discrete_with(g, crate::tol::EPS_CLUSTER)
    }

    /// Discrete flow with an explicit eigenvalue-clustering tolerance.
    pub fn discrete_with(g: GroupElem, eps_cluster: f64) -> Result<Self> {
        let jordan = crate::lie::multiplicative_jordan_with(&g, eps_cluster)?;
        let chamber = crate::lie::chamber_normalize_with(&jordan.hyperbolic_log, eps_cluster)?;
        Ok(Self {
            generator: Generator::Discrete(g),
            jordan: JordanData::Discrete(jordan),
            chamber,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn chamber(&self) -> &Chamber {
        &self.chamber
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.generator, Generator::Discrete(_))
    }

    /// H: log of the hyperbolic Jordan factor.
    pub fn hyperbolic_log(&self) -> &AlgElem {
        match &self.jordan {
            JordanData::Continuous(j) => &j.hyperbolic,
            JordanData::Discrete(j) => &j.hyperbolic_log,
        }
    }

    /// N: log of the unipotent Jordan factor.
    pub fn nilpotent_log(&self) -> &AlgElem {
        match &self.jordan {
            JordanData::Continuous(j) => &j.nilpotent,
            JordanData::Discrete(j) => &j.nilpotent_log,
        }
    }

    pub fn jordan(&self) -> &JordanData {
        &self.jordan
    }

    /// μ of the chamber.
    pub fn mu(&self) -> Result<f64> {
        mu_gap(&self.chamber)
    }

    /// The group element realizing time t: exp(tX) or g^t.
    pub fn transport(&self, t: f64) -> Result<GroupElem> {
        match &self.generator {
            Generator::Continuous(x) => Ok(x.scale(t).exp()),
            Generator::Discrete(g) => {
                let k = t.round();
                if (t - k).abs() > 1e-9 {
                    return Err(Error::NonIntegerTime(t));
                }
                g.powi(k as i64)
            }
        }
    }

    /// Default verification horizon: 10 time units or 20 iterations.
    pub fn default_horizon(&self) -> f64 {
        if self.is_discrete() {
            20.0
        } else {
            10.0
        }
    }
}

/// The flow map g^t applied to a flag.
pub fn flow(fs: &FlowSpec, t: f64, x: &Flag) -> Result<Flag> {
    act(&fs.transport(t)?, x)
}

/// Flow in short re-orthonormalized substeps. Equivalent to `flow` but
/// keeps the frame QR well conditioned over long horizons, where a single
/// transport matrix would have dynamic range e^(spread·T).
fn flow_stepped(fs: &FlowSpec, t: f64, x: &Flag) -> Result<Flag> {
    let steps = (t.abs().ceil() as usize).clamp(1, 256);
    let dt = t / steps as f64;
    let g = fs.transport(dt)?;
    let mut cur = x.clone();
    for _ in 0..steps {
        cur = act(&g, &cur)?;
    }
    Ok(cur)
}

/// Adapted-coordinate transport: per factor and eigenvalue group, the flow
/// block is the scalar e^{λ_j t} times a bounded (elliptic·unipotent)
/// block. Off-group couplings vanish identically because the elliptic and
/// unipotent factors centralize H.
pub(crate) struct AdaptedFlow {
    discrete: bool,
    factors: Vec<AdaptedFlowFactor>,
}

struct AdaptedFlowFactor {
    n: usize,
    offsets: Vec<usize>,
    mults: Vec<usize>,
    lambdas: Vec<f64>,
    bounded: Vec<RMat>,
    bounded_inv: Vec<RMat>,
}

impl AdaptedFlow {
    pub fn new(fs: &FlowSpec) -> Result<Self> {
        Self::from_parts(fs.chamber(), &fs.generator)
    }

    pub fn from_parts(c: &Chamber, generator: &Generator) -> Result<Self> {
        let mut factors = Vec::with_capacity(c.spec().num_factors());
        for f in 0..c.spec().num_factors() {
            let cf = c.factor(f);
            let n = cf.dim();
            let offsets = cf.group_offsets();
            let mults = cf.multiplicities.clone();
            let lambdas = cf.eigenvalues.clone();
            let mut bounded = Vec::with_capacity(mults.len());
            let mut bounded_inv = Vec::with_capacity(mults.len());
            match generator {
                Generator::Continuous(x) => {
                    let x_ad = cf.conjugator_inv() * x.block(f) * cf.conjugator();
                    for (j, (&off, &m)) in offsets.iter().zip(&mults).enumerate() {
                        let mut block = x_ad.view((off, off), (m, m)).into_owned();
                        for i in 0..m {
                            block[(i, i)] -= lambdas[j];
                        }
                        bounded.push(block);
                        bounded_inv.push(RMat::zeros(0, 0));
                    }
                }
                Generator::Discrete(g) => {
                    let g_ad = cf.conjugator_inv() * g.block(f) * cf.conjugator();
                    for (j, (&off, &m)) in offsets.iter().zip(&mults).enumerate() {
                        let block =
                            g_ad.view((off, off), (m, m)).into_owned() * (-lambdas[j]).exp();
                        let inv = block
                            .clone()
                            .try_inverse()
                            .ok_or(Error::SingularBasis { factor: f })?;
                        bounded.push(block);
                        bounded_inv.push(inv);
                    }
                }
            }
            factors.push(AdaptedFlowFactor {
                n,
                offsets,
                mults,
                lambdas,
                bounded,
                bounded_inv,
            });
        }
        Ok(Self {
            discrete: matches!(generator, Generator::Discrete(_)),
            factors,
        })
    }

    /// Block-diagonal transport matrices at time t, one per factor.
    pub fn transport(&self, t: f64) -> Result<Vec<RMat>> {
        let mut out = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let mut m = RMat::zeros(f.n, f.n);
            for j in 0..f.mults.len() {
                let scalar = (f.lambdas[j] * t).exp();
                let block = if self.discrete {
                    let k = t.round();
                    if (t - k).abs() > 1e-9 {
                        return Err(Error::NonIntegerTime(t));
                    }
                    mat_powi(&f.bounded[j], &f.bounded_inv[j], k as i64)
                } else {
                    (&f.bounded[j] * t).exp()
                };
                let (off, mm) = (f.offsets[j], f.mults[j]);
                m.view_mut((off, off), (mm, mm))
                    .copy_from(&(block * scalar));
            }
            out.push(m);
        }
        Ok(out)
    }
}

fn mat_powi(m: &RMat, m_inv: &RMat, k: i64) -> RMat {
    let n = m.nrows();
    if k == 0 {
        return RMat::identity(n, n);
    }
    let base = if k < 0 { m_inv.clone() } else { m.clone() };
    let mut exp = k.unsigned_abs();
    let mut acc = RMat::identity(n, n);
    let mut sq = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = &acc * &sq;
        }
        sq = &sq * &sq;
        exp >>= 1;
    }
    acc
}

/// Settings for decay verification.
#[derive(Debug, Clone)]
pub struct DecaySettings {
    pub samples: usize,
    pub horizon: f64,
    pub grid: usize,
    /// Slack added to -μ in the slope verdict; defaults to 0.1·μ.
    pub eps_slope: Option<f64>,
    pub seed: u64,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            samples: 20,
            horizon: 10.0,
            grid: 50,
            eps_slope: None,
            seed: 0,
        }
    }
}

/// One sampled normal vector's decay record.
#[derive(Debug, Clone)]
pub struct DecaySample {
    pub t_grid: Vec<f64>,
    pub log_norms: Vec<f64>,
    /// Least-squares slope of log-norm over time (λ_emp is its negative).
    pub slope: f64,
    /// Least-squares intercept: log of the empirical constant c.
    pub intercept: f64,
    /// (log |v_T| - log |v_0|) / T at the final time.
    pub final_slope: f64,
    pub pass: bool,
}

/// Decay verdicts for one component and sign.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub mu: f64,
    pub eps_slope: f64,
    pub sign: Sign,
    pub samples: Vec<DecaySample>,
}

impl DecayReport {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }
}

fn fit_line(ts: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (&t, &y) in ts.iter().zip(ys) {
        cov += (t - mean_t) * (y - mean_y);
        var += (t - mean_t) * (t - mean_t);
    }
    let slope = if var > 0.0 { cov / var } else { 0.0 };
    (slope, mean_y - slope * mean_t)
}

fn decay_grid(fs: &FlowSpec, horizon: f64, grid: usize) -> Vec<f64> {
    if fs.is_discrete() {
        let k = horizon.round().max(1.0) as usize;
        let mut times: Vec<f64> = if k <= grid {
            (1..=k).map(|i| i as f64).collect()
        } else {
            let mut set: Vec<usize> = (0..grid)
                .map(|i| {
                    let frac = i as f64 / (grid - 1) as f64;
                    ((k as f64).powf(frac)).round() as usize
                })
                .collect();
            set.sort_unstable();
            set.dedup();
            set.into_iter().map(|i| i as f64).collect()
        };
        if times.last() != Some(&(k as f64)) {
            times.push(k as f64);
        }
        times
    } else {
        let t0 = horizon / 100.0;
        (0..grid)
            .map(|i| {
                let frac = i as f64 / (grid - 1) as f64;
                t0 * (horizon / t0).powf(frac)
            })
            .collect()
    }
}

/// Precomputed adapted-coordinate transports at the (sign-adjusted) grid
/// times. Shared by all samples; `backward[i]` is the exact inverse of
/// `forward[i]`.
pub(crate) struct TransportTable {
    pub grid: Vec<f64>,
    pub forward: Vec<Vec<RMat>>,
    pub backward: Vec<Vec<RMat>>,
}

/// Sampling core shared by the autonomous and periodic decay verifiers:
/// random points on the component, random unit fiber vectors, log-norms
/// along the table's transports, least-squares fit, final-slope verdict
/// against -mu_rate + eps.
pub(crate) fn decay_verify_core(
    chamber: &Chamber,
    comp: &MorseComponent,
    sign: Sign,
    settings: &DecaySettings,
    mu_rate: f64,
    table: &TransportTable,
) -> Result<DecayReport> {
    let flag_type = comp.base_point.flag_type().clone();
    let structure = AdaptedStructure::new(&comp.profile, chamber, &flag_type)?;
    let pattern_kind = PatternKind::from(sign);
    if structure.pattern(pattern_kind).is_empty() {
        return Err(Error::EmptyFiber);
    }
    let base_ad = adapted_base_flag(&structure, &flag_type);
    let eps_slope = settings.eps_slope.unwrap_or(0.1 * mu_rate);
    let grid = &table.grid;
    let horizon = *grid.last().unwrap();

    let spec = chamber.spec().clone();
    let group_sizes: Vec<Vec<usize>> = (0..spec.num_factors())
        .map(|f| chamber.factor(f).multiplicities.clone())
        .collect();

    let results: Vec<Result<DecaySample>> = par::map_indexed(settings.samples, |idx| {
        let mut rng = sample::rng_from_seed(sample::derive_seed(settings.seed, idx as u64));
        // Random point on the component: block-orthogonal move of the base.
        let k_frames: Vec<RMat> = group_sizes
            .iter()
            .map(|sizes| sample::block_haar_orthogonal(&mut rng, sizes))
            .collect();
        let frames: Vec<RMat> = k_frames
            .iter()
            .zip((0..spec.num_factors()).map(|f| base_ad.frame(f)))
            .map(|(k, q)| k * q)
            .collect();
        let x0 = Flag::from_frames_unchecked(flag_type.clone(), frames);
        // Random unit vector in the fiber.
        let basis = pattern_basis_adapted(&structure, &spec, &k_frames, pattern_kind);
        let coeffs = sample::unit_coefficients(&mut rng, basis.len());
        let mut rep = AlgElem::zero(spec.clone());
        for (c, y) in coeffs.iter().zip(&basis) {
            rep = rep.add(&y.scale(*c));
        }
        let v0 = induced_vector(&rep, &x0);
        let norm0 = v0.norm();
        if norm0 <= 0.0 {
            return Err(Error::EmptyFiber);
        }

        let mut log_norms = Vec::with_capacity(grid.len());
        let mut cur = x0;
        for (i, _) in grid.iter().enumerate() {
            // Step the base incrementally (re-orthonormalizing each time),
            // but apply the adjoint analytically from t = 0 so the decayed
            // entries keep full relative precision.
            let step_blocks: Vec<RMat> = if i == 0 {
                table.forward[0].clone()
            } else {
                table.forward[i]
                    .iter()
                    .zip(&table.backward[i - 1])
                    .map(|(a, b)| a * b)
                    .collect()
            };
            let step = GroupElem::from_blocks_unchecked(spec.clone(), step_blocks);
            cur = act(&step, &cur)?;
            let rep_t_blocks: Vec<RMat> = table.forward[i]
                .iter()
                .zip(rep.blocks())
                .zip(&table.backward[i])
                .map(|((a, y), b)| a * y * b)
                .collect();
            let rep_t = AlgElem::from_blocks_unchecked(spec.clone(), rep_t_blocks);
            let vt = induced_vector(&rep_t, &cur);
            log_norms.push((vt.norm() / norm0).ln());
        }
        let (slope, intercept) = fit_line(grid, &log_norms);
        let final_slope = log_norms.last().unwrap() / horizon;
        Ok(DecaySample {
            t_grid: grid.clone(),
            log_norms,
            slope,
            intercept,
            final_slope,
            pass: final_slope <= -mu_rate + eps_slope,
        })
    });

    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }
    Ok(DecayReport {
        mu: mu_rate,
        eps_slope,
        sign,
        samples,
    })
}

/// Sample random points on the component and random unit vectors in the
/// requested normal fiber, flow them (forward for the stable side, backward
/// for the unstable one), and record log-norms against the decay bound
/// slope -μ + ε.
pub fn decay_verify(
    fs: &FlowSpec,
    comp: &MorseComponent,
    sign: Sign,
    settings: &DecaySettings,
) -> Result<DecayReport> {
    let mu = fs.mu()?;
    let flow_ad = AdaptedFlow::new(fs)?;
    let grid = decay_grid(fs, settings.horizon, settings.grid.max(2));
    let mut forward = Vec::with_capacity(grid.len());
    let mut backward = Vec::with_capacity(grid.len());
    for &t in &grid {
        let tau = match sign {
            Sign::Minus => t,
            Sign::Plus => -t,
        };
        forward.push(flow_ad.transport(tau)?);
        backward.push(flow_ad.transport(-tau)?);
    }
    let table = TransportTable {
        grid,
        forward,
        backward,
    };
    decay_verify_core(fs.chamber(), comp, sign, settings, mu, &table)
}

/// Check that the normal bundles are carried into themselves by the flow:
/// the pushed fiber span at x lands inside the fiber span at g^t·x.
pub fn fiber_invariance_check(fs: &FlowSpec, comp: &MorseComponent, seed: u64) -> Result<bool> {
    let chamber = fs.chamber();
    let flag_type = comp.base_point.flag_type().clone();
    let structure = AdaptedStructure::new(&comp.profile, chamber, &flag_type)?;
    let flow_ad = AdaptedFlow::new(fs)?;
    let base_ad = adapted_base_flag(&structure, &flag_type);
    let spec = chamber.spec().clone();
    let times: Vec<f64> = if fs.is_discrete() {
        vec![1.0, 2.0]
    } else {
        vec![1.0, 2.5]
    };
    let mut rng = sample::rng_from_seed(seed);

    for _ in 0..3 {
        let k_frames: Vec<RMat> = (0..spec.num_factors())
            .map(|f| sample::block_haar_orthogonal(&mut rng, &chamber.factor(f).multiplicities))
            .collect();
        let frames: Vec<RMat> = k_frames
            .iter()
            .zip((0..spec.num_factors()).map(|f| base_ad.frame(f)))
            .map(|(k, q)| k * q)
            .collect();
        let x0 = Flag::from_frames_unchecked(flag_type.clone(), frames);
        for sign in [Sign::Plus, Sign::Minus] {
            let kind = PatternKind::from(sign);
            let basis0 = pattern_basis_adapted(&structure, &spec, &k_frames, kind);
            if basis0.is_empty() {
                continue;
            }
            for &t in &times {
                let g = GroupElem::from_blocks_unchecked(spec.clone(), flow_ad.transport(t)?);
                let xt = act(&g, &x0)?;
                let kt = component_frame(&xt, &structure, chamber, tol::EPS_FIX)?;
                let basis_t = pattern_basis_adapted(&structure, &spec, &kt, kind);
                let dim = basis_t.len();
                // Reduced coordinates of both collections at x_t.
                let ambient: usize = spec.factors().iter().map(|&n| n * n).sum();
                let mut cols = RMat::zeros(ambient, dim + basis0.len());
                for (j, y) in basis_t.iter().enumerate() {
                    set_reduced_column(&mut cols, j, y, &xt, &spec);
                }
                for (j, y) in basis0.iter().enumerate() {
                    let pushed = g.adjoint(y)?;
                    set_reduced_column(&mut cols, dim + j, &pushed, &xt, &spec);
                }
                if linalg::numerical_rank(&cols, tol::EPS_RANK) != dim {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn set_reduced_column(
    cols: &mut RMat,
    j: usize,
    y: &AlgElem,
    x: &Flag,
    spec: &crate::lie::SemisimpleSpec,
) {
    let v = induced_vector(y, x);
    let mut flat = Vec::new();
    for f in 0..spec.num_factors() {
        flat.extend(v.reduced(f).iter().copied());
    }
    let mut col = nalgebra::DVector::from_vec(flat);
    let nrm = col.norm();
    if nrm > 0.0 {
        col /= nrm;
    }
    cols.set_column(j, &col);
}

/// Flow to the horizon and classify against the chamber of the hyperbolic
/// part at the relaxed limit tolerance; `None` means unresolved.
pub fn classify_limit(fs: &FlowSpec, x: &Flag, horizon: f64) -> Result<Option<DimensionProfile>> {
    let moved = if horizon == 0.0 {
        x.clone()
    } else {
        flow_stepped(fs, horizon, x)?
    };
    Ok(classify_flag_with(&moved, fs.chamber(), tol::EPS_LIMIT))
}

/// Recurrent-set membership: the flag is fixed by the unipotent flow, i.e.
/// every step subspace is invariant under the nilpotent log N.
pub fn unipotent_fixed(fs: &FlowSpec, x: &Flag) -> bool {
    let n_log = fs.nilpotent_log();
    let scale = n_log.norm().max(1.0);
    for f in 0..x.spec().num_factors() {
        let nb = n_log.block(f);
        let id = RMat::identity(nb.nrows(), nb.ncols());
        for i in 0..x.flag_type().parts()[f].len() {
            let p = x.step_projector(f, i);
            if ((&id - &p) * nb * &p).norm() > tol::EPS_FIX * scale {
                return false;
            }
        }
    }
    true
}
