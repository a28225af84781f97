//! Morse decompositions of translation flows on real flag manifolds of
//! SL(n,ℝ) products, the stable/unstable normal bundles of each minimal
//! component, and numerical certificates of their normal hyperbolicity.
//!
//! The pipeline: Jordan-decompose the flow generator, chamber-normalize the
//! hyperbolic part, enumerate the fixed components of the hyperbolic flow
//! by dimension profile, build the normal fibers, and measure decay
//! exponents along sampled normal vectors against the root gap μ.

pub mod dynamics;
pub mod error;
pub mod flag;
pub mod lie;
mod linalg;
pub mod morse;
mod par;
pub mod periodic;
pub mod sample;
pub mod tol;

pub use error::{Error, Result};
pub use lie::{
    ad_eigenspaces, additive_jordan, additive_jordan_with, cartan_inner, chamber_normalize,
    chamber_normalize_with, mu_gap, multiplicative_jordan, multiplicative_jordan_with,
    AdditiveJordan, AlgElem, Chamber, ChamberFactor, GroupElem, MultiplicativeJordan,
    SemisimpleSpec, Sign,
};

pub use flag::{
    act, flag_from_basis, induced_vector, pushforward, tangent_norm, Flag, FlagType, TangentVec,
};

pub use morse::{
    base_point, classify_flag, conley_shift, enumerate_components, factor_structure, normal_fiber,
    whitney_check, DimensionProfile, MorseComponent, WhitneyReport,
};

pub use dynamics::{
    classify_limit, decay_verify, fiber_invariance_check, flow, unipotent_fixed, DecayReport,
    DecaySample, DecaySettings, FlowSpec, Generator,
};

pub use periodic::{
    monodromy, periodic_components, periodic_decay_verify, MonodromyResult, PeriodicComponent,
    PeriodicSpec, TrigTerm,
};
