//! Linear differential equations with periodic coefficients g'(t) = X(t)g(t):
//! the monodromy (fundamental solution over one period) via a fixed-step
//! RK4 integrator with a step-halving check, the Morse components of the
//! induced discrete flow tagged as circle-fibered sets of the suspension,
//! and decay verification in real time.

use crate::dynamics::{decay_verify_core, AdaptedFlow, DecayReport, DecaySettings};
use crate::error::{Error, Result};
use crate::flag::FlagType;
use crate::lie::{mu_gap, AlgElem, Chamber, GroupElem, MultiplicativeJordan, SemisimpleSpec, Sign};
use crate::linalg::RMat;
use crate::morse::{enumerate_components, MorseComponent};
use crate::tol;

/// One harmonic of the coefficient map: cos(2πk t/T)·A + sin(2πk t/T)·B.
#[derive(Debug, Clone)]
pub struct TrigTerm {
    pub harmonic: u32,
    pub cos_coeff: AlgElem,
    pub sin_coeff: AlgElem,
}

/// Periodic coefficient map as a finite trigonometric polynomial. Keeping
/// the input in this form guarantees exact periodicity.
#[derive(Debug, Clone)]
pub struct PeriodicSpec {
    period: f64,
    terms: Vec<TrigTerm>,
}

impl PeriodicSpec {
    pub fn new(period: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 || terms.is_empty() {
            return Err(Error::SpecMismatch);
        }
        let spec = terms[0].cos_coeff.spec().clone();
        for term in &terms {
            if term.cos_coeff.spec() != &spec || term.sin_coeff.spec() != &spec {
                return Err(Error::SpecMismatch);
            }
        }
        Ok(Self { period, terms })
    }

    /// Constant-coefficient map X(t) = X.
    pub fn constant(x: AlgElem, period: f64) -> Result<Self> {
        let zero = AlgElem::zero(x.spec().clone());
        Self::new(
            period,
            vec![TrigTerm {
                harmonic: 0,
                cos_coeff: x,
                sin_coeff: zero,
            }],
        )
    }

    /// Recover the trigonometric table of a degree-bounded coefficient map
    /// by uniform sampling: exact whenever 2·max_harmonic < samples.
    pub fn from_samples(
        period: f64,
        max_harmonic: u32,
        f: impl Fn(f64) -> AlgElem,
    ) -> Result<Self> {
        let s = (4 * (max_harmonic + 1)).max(8) as usize;
        let probe: Vec<AlgElem> = (0..s).map(|j| f(period * j as f64 / s as f64)).collect();
        let spec = probe[0].spec().clone();
        let mut terms = Vec::new();
        for k in 0..=max_harmonic {
            let mut cos_acc = AlgElem::zero(spec.clone());
            let mut sin_acc = AlgElem::zero(spec.clone());
            for (j, x) in probe.iter().enumerate() {
                let angle = 2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / s as f64;
                cos_acc = cos_acc.add(&x.scale(angle.cos()));
                sin_acc = sin_acc.add(&x.scale(angle.sin()));
            }
            let weight = if k == 0 { 1.0 } else { 2.0 } / s as f64;
            terms.push(TrigTerm {
                harmonic: k,
                cos_coeff: cos_acc.scale(weight),
                sin_coeff: sin_acc.scale(weight),
            });
        }
        Self::new(period, terms)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn spec(&self) -> &SemisimpleSpec {
        self.terms[0].cos_coeff.spec()
    }

    /// X(t).
    pub fn eval(&self, t: f64) -> AlgElem {
        let omega = 2.0 * std::f64::consts::PI / self.period;
        let mut acc = AlgElem::zero(self.spec().clone());
        for term in &self.terms {
            let angle = omega * term.harmonic as f64 * t;
            acc = acc
                .add(&term.cos_coeff.scale(angle.cos()))
                .add(&term.sin_coeff.scale(angle.sin()));
        }
        acc
    }
}

/// Classic RK4 on the matrix equation Φ' = X(t)Φ from t0 over `steps` equal
/// steps of size h.
fn rk4(ps: &PeriodicSpec, t0: f64, h: f64, steps: usize) -> Vec<RMat> {
    let spec = ps.spec().clone();
    let mut phi: Vec<RMat> = spec
        .factors()
        .iter()
        .map(|&n| RMat::identity(n, n))
        .collect();
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let x1 = ps.eval(t);
        let x2 = ps.eval(t + 0.5 * h);
        let x4 = ps.eval(t + h);
        for (f, y) in phi.iter_mut().enumerate() {
            let k1 = x1.block(f) * &*y;
            let k2 = x2.block(f) * (&*y + &k1 * (0.5 * h));
            let k3 = x2.block(f) * (&*y + &k2 * (0.5 * h));
            let k4 = x4.block(f) * (&*y + &k3 * h);
            *y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    phi
}

/// Fundamental solution Φ(s) for s ∈ [0, period], integrated at the step
/// density implied by `steps_per_period`.
pub fn fundamental_solution(ps: &PeriodicSpec, s: f64, steps_per_period: usize) -> Vec<RMat> {
    if s == 0.0 {
        return ps
            .spec()
            .factors()
            .iter()
            .map(|&n| RMat::identity(n, n))
            .collect();
    }
    let frac = (s / ps.period()).abs();
    let steps = ((steps_per_period as f64 * frac).ceil() as usize).max(1);
    rk4(ps, 0.0, s / steps as f64, steps)
}

/// Monodromy data: the period map, its Jordan decomposition, and the
/// chamber of its hyperbolic log.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub monodromy: GroupElem,
    pub jordan: MultiplicativeJordan,
    pub chamber: Chamber,
    period: f64,
    steps: usize,
}

impl MonodromyResult {
    pub fn period(&self) -> f64 {
        self.period
    }

    /// μ of the monodromy chamber, rescaled to a rate per unit time.
    pub fn mu_rate(&self) -> Result<f64> {
        Ok(mu_gap(&self.chamber)? / self.period)
    }
}

/// Integrate the monodromy M = Φ(period) and verify it: the determinant
/// must stay within 1e-8 of one and halving the step must move M by at most
/// 1e-6.
pub fn monodromy(ps: &PeriodicSpec, steps: usize) -> Result<MonodromyResult> {
    assert!(
        steps >= 100,
        "need at least 100 integrator steps per period"
    );
    let fine = rk4(ps, 0.0, ps.period() / steps as f64, steps);
    let coarse_steps = steps / 2;
    let coarse = rk4(ps, 0.0, ps.period() / coarse_steps as f64, coarse_steps);
    let mut delta: f64 = 0.0;
    for (a, b) in fine.iter().zip(&coarse) {
        delta = delta.max((a - b).norm() / a.norm().max(1.0));
    }
    if delta > 1e-6 {
        return Err(Error::StepTooCoarse { delta });
    }
    for m in &fine {
        let drift = (m.determinant() - 1.0).abs();
        if drift > 1e-8 {
            return Err(Error::StepTooCoarse { delta: drift });
        }
    }
    let monodromy = GroupElem::from_blocks_unchecked(ps.spec().clone(), fine);
    // Integration error, not machine precision, bounds how far a defective
    // eigenvalue pair of M can scatter (by its square root), so cluster at
    // a tolerance tied to the measured step-halving delta.
    let eps_cluster = tol::EPS_CLUSTER.max(10.0 * delta.max(1e-14).sqrt());
    let jordan = crate::lie::multiplicative_jordan_with(&monodromy, eps_cluster)?;
    let chamber = crate::lie::chamber_normalize_with(&jordan.hyperbolic_log, eps_cluster)?;
    Ok(MonodromyResult {
        monodromy,
        jordan,
        chamber,
        period: ps.period(),
        steps,
    })
}

/// A Morse component of the monodromy flow, which the suspension turns into
/// an S¹-fibered Morse set of the skew flow on S¹ × F_Θ.
#[derive(Debug, Clone)]
pub struct PeriodicComponent {
    pub component: MorseComponent,
}

impl PeriodicComponent {
    /// Dimension of the suspended Morse set S¹ × fix.
    pub fn suspended_dim(&self) -> usize {
        self.component.dim_fix + 1
    }
}

/// Morse components of the discrete flow of the monodromy on F_Θ, each the
/// fiber of a circle-fibered Morse set for the suspension flow.
pub fn periodic_components(mono: &MonodromyResult, t: &FlagType) -> Vec<PeriodicComponent> {
    enumerate_components(&mono.chamber, t)
        .into_iter()
        .map(|component| PeriodicComponent { component })
        .collect()
}

/// Decay verification for the periodic flow: real-time grid over whole
/// periods plus intra-period integration, with the rate bound μ(M)/T.
pub fn periodic_decay_verify(
    ps: &PeriodicSpec,
    mono: &MonodromyResult,
    comp: &MorseComponent,
    sign: Sign,
    settings: &DecaySettings,
) -> Result<DecayReport> {
    let mu_rate = mono.mu_rate()?;
    let period = mono.period;
    let chamber = &mono.chamber;
    // Adapted transport of the pure monodromy powers, against the
    // monodromy's own chamber.
    let flow_ad = AdaptedFlow::from_parts(
        chamber,
        &crate::dynamics::Generator::Discrete(mono.monodromy.clone()),
    )?;

    let periods = (settings.horizon / period).round().max(1.0);
    let horizon = periods * period;
    let grid_len = settings.grid.max(2);
    let t0 = horizon / 100.0;
    let grid: Vec<f64> = (0..grid_len)
        .map(|i| {
            let frac = i as f64 / (grid_len - 1) as f64;
            t0 * (horizon / t0).powf(frac)
        })
        .collect();

    let spec = ps.spec().clone();
    let mut forward = Vec::with_capacity(grid.len());
    let mut backward = Vec::with_capacity(grid.len());
    for &t in &grid {
        let tau = match sign {
            Sign::Minus => t,
            Sign::Plus => -t,
        };
        // Φ(kT + s) = Φ(s)·M^k, extended to negative times through
        // Φ(-u) = Φ(T - s')·M^{-k'-1}.
        let (k, s) = decompose_time(tau, period);
        let phi = fundamental_solution(ps, s, mono.steps);
        let phi_ad: Vec<RMat> = (0..spec.num_factors())
            .map(|f| {
                let cf = chamber.factor(f);
                cf.conjugator_inv() * &phi[f] * cf.conjugator()
            })
            .collect();
        let m_pow = flow_ad.transport(k as f64)?;
        let m_pow_inv = flow_ad.transport(-k as f64)?;
        let fwd: Vec<RMat> = phi_ad.iter().zip(&m_pow).map(|(p, m)| p * m).collect();
        let mut bwd = Vec::with_capacity(fwd.len());
        for (f, (p, mi)) in phi_ad.iter().zip(&m_pow_inv).enumerate() {
            let p_inv = p
                .clone()
                .try_inverse()
                .ok_or(Error::SingularBasis { factor: f })?;
            bwd.push(mi * p_inv);
        }
        forward.push(fwd);
        backward.push(bwd);
    }
    let table = crate::dynamics::TransportTable {
        grid,
        forward,
        backward,
    };
    decay_verify_core(chamber, comp, sign, settings, mu_rate, &table)
}

/// Split a signed time into (whole periods, remainder in [0, period)).
fn decompose_time(tau: f64, period: f64) -> (i64, f64) {
    let k = (tau / period).floor();
    let s = tau - k * period;
    if s >= period {
        (k as i64 + 1, 0.0)
    } else {
        (k as i64, s)
    }
}
