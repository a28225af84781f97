//! Configuration file schema and conversion into library types.

use anyhow::{bail, Context, Result};
use flagflow::{AlgElem, FlagType, GroupElem, PeriodicSpec, SemisimpleSpec, TrigTerm};
use nalgebra::DMatrix;
use serde::Deserialize;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Sizes of the SL(n, R) factors.
    pub factors: Vec<usize>,
    pub mode: Mode,
    /// One generator matrix per factor (continuous and discrete modes).
    #[serde(default)]
    pub generator: Vec<Matrix>,
    /// Per factor, the strictly increasing subspace dimensions.
    pub flag_type: Vec<Vec<usize>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Decay-verification horizon (time units, or steps in discrete mode).
    pub horizon: Option<f64>,
    /// Horizon used to classify trajectory limits.
    pub classify_horizon: Option<f64>,
    pub samples: Option<usize>,
    pub grid: Option<usize>,
    /// Number of trajectory starts in the portrait grid.
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub periodic: Option<PeriodicConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Continuous,
    Discrete,
    Periodic,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalue clustering threshold (default 1e-8).
    pub eps_cluster: Option<f64>,
    /// Slack added to -mu in slope verdicts (default 0.1·mu).
    pub eps_slope: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub period: f64,
    /// Integrator steps per period (default 1000, minimum 100).
    pub steps: Option<usize>,
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub harmonic: u32,
    /// Cosine coefficient blocks, one per factor.
    pub cos: Vec<Matrix>,
    /// Sine coefficient blocks, one per factor (optional for harmonic 0).
    #[serde(default)]
    pub sin: Vec<Matrix>,
}

impl ProblemConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ProblemConfig =
            serde_json::from_str(&text).context("cannot parse config file")?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            bail!("factors must be nonempty");
        }
        if self.mode == Mode::Periodic {
            if self.periodic.is_none() {
                bail!("periodic mode needs a `periodic` block");
            }
        } else if self.generator.len() != self.factors.len() {
            bail!(
                "expected {} generator blocks, found {}",
                self.factors.len(),
                self.generator.len()
            );
        }
        if self.flag_type.len() != self.factors.len() {
            bail!("flag_type must list one entry per factor");
        }
        if let Some(e) = self.tolerances.eps_cluster {
            if !e.is_finite() || e <= 0.0 {
                bail!("eps_cluster must be positive");
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<SemisimpleSpec> {
        Ok(SemisimpleSpec::new(self.factors.clone())?)
    }

    pub fn flag_type_parsed(&self) -> Result<FlagType> {
        Ok(FlagType::new(self.spec()?, self.flag_type.clone())?)
    }

    pub fn generator_matrices(&self) -> Result<Vec<DMatrix<f64>>> {
        self.generator
            .iter()
            .zip(&self.factors)
            .enumerate()
            .map(|(i, (rows, &n))| {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    bail!("generator block {i} is not {n}x{n}");
                }
                Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
            })
            .collect()
    }

    pub fn alg_generator(&self) -> Result<AlgElem> {
        Ok(AlgElem::new(self.spec()?, self.generator_matrices()?)?)
    }

    pub fn group_generator(&self) -> Result<GroupElem> {
        Ok(GroupElem::new(self.spec()?, self.generator_matrices()?)?)
    }

    pub fn periodic_spec(&self) -> Result<PeriodicSpec> {
        let Some(pc) = &self.periodic else {
            bail!("missing periodic block");
        };
        let spec = self.spec()?;
        let zero = AlgElem::zero(spec.clone());
        let mut terms = Vec::with_capacity(pc.terms.len());
        for (ti, term) in pc.terms.iter().enumerate() {
            let cos_blocks = parse_blocks(&term.cos, &self.factors)
                .with_context(|| format!("term {ti} cosine blocks"))?;
            let cos_coeff = AlgElem::new(spec.clone(), cos_blocks)?;
            let sin_coeff = if term.sin.is_empty() {
                zero.clone()
            } else {
                let sin_blocks = parse_blocks(&term.sin, &self.factors)
                    .with_context(|| format!("term {ti} sine blocks"))?;
                AlgElem::new(spec.clone(), sin_blocks)?
            };
            terms.push(TrigTerm {
                harmonic: term.harmonic,
                cos_coeff,
                sin_coeff,
            });
        }
        Ok(PeriodicSpec::new(pc.period, terms)?)
    }

    pub fn integrator_steps(&self) -> usize {
        self.periodic
            .as_ref()
            .and_then(|p| p.steps)
            .unwrap_or(1000)
            .max(100)
    }
}

fn parse_blocks(blocks: &[Matrix], factors: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    if blocks.len() != factors.len() {
        bail!("expected {} blocks, found {}", factors.len(), blocks.len());
    }
    blocks
        .iter()
        .zip(factors)
        .enumerate()
        .map(|(i, (rows, &n))| {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                bail!("block {i} is not {n}x{n}");
            }
            Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
        })
        .collect()
}
