//! The five analysis commands. Each writes `<out>/<command>.csv` and
//! `<out>/<command>.json`.

use anyhow::{anyhow, bail, Result};
use flagflow::{
    act, classify_limit, decay_verify, enumerate_components, monodromy, periodic_components,
    periodic_decay_verify, tol, unipotent_fixed, AlgElem, Chamber, DecayReport, DecaySettings,
    FlagType, FlowSpec, GroupElem, MorseComponent, Sign,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{Mode, ProblemConfig};
use crate::portrait;
use crate::report::{chamber_summary, fmt, profile_label, structure_label, OutputDir};

/// Marker for verification failures (exit code 3, as opposed to
/// precondition failures which exit 2).
#[derive(Debug)]
pub struct VerificationFailure(pub String);

impl std::fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailure {}

fn eps_cluster(config: &ProblemConfig) -> f64 {
    config.tolerances.eps_cluster.unwrap_or(tol::EPS_CLUSTER)
}

fn flow_spec(config: &ProblemConfig) -> Result<FlowSpec> {
    let eps = eps_cluster(config);
    match config.mode {
        Mode::Continuous => Ok(FlowSpec::continuous_with(config.alg_generator()?, eps)?),
        Mode::Discrete => Ok(FlowSpec::discrete_with(config.group_generator()?, eps)?),
        Mode::Periodic => bail!("this command expects continuous or discrete mode"),
    }
}

fn decay_settings(config: &ProblemConfig, fs_default_horizon: f64) -> DecaySettings {
    DecaySettings {
        samples: config.samples.unwrap_or(20),
        horizon: config.horizon.unwrap_or(fs_default_horizon),
        grid: config.grid.unwrap_or(50),
        eps_slope: config.tolerances.eps_slope,
        seed: config.seed.unwrap_or(0),
    }
}

fn matrix_rows(rows: &mut Vec<Vec<String>>, kind: &str, factor: usize, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            rows.push(vec![
                kind.to_string(),
                factor.to_string(),
                r.to_string(),
                c.to_string(),
                fmt(m[(r, c)]),
            ]);
        }
    }
}

#[derive(Serialize)]
struct DecomposeSummary {
    command: &'static str,
    mode: &'static str,
    mu: Option<f64>,
    eigenvalues: Vec<Vec<f64>>,
    multiplicities: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

pub fn cmd_decompose(config: &ProblemConfig, out: &OutputDir) -> Result<()> {
    let fs = flow_spec(config)?;
    let chamber = fs.chamber();
    let mut rows = Vec::new();
    match fs.jordan() {
        flagflow::dynamics::JordanData::Continuous(j) => {
            for f in 0..chamber.spec().num_factors() {
                matrix_rows(&mut rows, "elliptic", f, j.elliptic.block(f));
                matrix_rows(&mut rows, "hyperbolic", f, j.hyperbolic.block(f));
                matrix_rows(&mut rows, "nilpotent", f, j.nilpotent.block(f));
            }
        }
        flagflow::dynamics::JordanData::Discrete(j) => {
            for f in 0..chamber.spec().num_factors() {
                matrix_rows(&mut rows, "elliptic", f, j.elliptic.block(f));
                matrix_rows(&mut rows, "hyperbolic", f, j.hyperbolic.block(f));
                matrix_rows(&mut rows, "unipotent", f, j.unipotent.block(f));
                matrix_rows(&mut rows, "hyperbolic_log", f, j.hyperbolic_log.block(f));
                matrix_rows(&mut rows, "nilpotent_log", f, j.nilpotent_log.block(f));
            }
        }
    }
    for (f, cf) in chamber.factors().iter().enumerate() {
        for (g, (&lambda, &m)) in cf.eigenvalues.iter().zip(&cf.multiplicities).enumerate() {
            rows.push(vec![
                "eigenvalue".to_string(),
                f.to_string(),
                g.to_string(),
                m.to_string(),
                fmt(lambda),
            ]);
        }
    }
    let mut warnings = Vec::new();
    let mu = match fs.mu() {
        Ok(mu) => Some(mu),
        Err(flagflow::Error::NoPositiveRoot) => {
            warnings.push(
                "no positive restricted root: hyperbolic part vanishes; decay undefined"
                    .to_string(),
            );
            None
        }
        Err(e) => return Err(e.into()),
    };
    let cs = chamber_summary(chamber);
    out.write_csv(
        "decompose",
        &["kind", "factor", "row", "col", "value"],
        &rows,
    )?;
    out.write_json(
        "decompose",
        &DecomposeSummary {
            command: "decompose",
            mode: if fs.is_discrete() {
                "discrete"
            } else {
                "continuous"
            },
            mu,
            eigenvalues: cs.eigenvalues,
            multiplicities: cs.multiplicities,
            warnings,
        },
    )?;
    Ok(())
}

fn component_rows(comps: &[MorseComponent]) -> Vec<Vec<String>> {
    comps
        .iter()
        .enumerate()
        .map(|(id, c)| {
            vec![
                id.to_string(),
                profile_label(&c.profile),
                c.dim_fix.to_string(),
                c.dim_v_plus.to_string(),
                c.dim_v_minus.to_string(),
                structure_label(c),
                c.is_attractor().to_string(),
                c.is_repeller().to_string(),
            ]
        })
        .collect()
}

const COMPONENT_HEADER: [&str; 8] = [
    "component",
    "profile",
    "dim_fix",
    "n_w",
    "dim_v_minus",
    "factor_structure",
    "attractor",
    "repeller",
];

#[derive(Serialize)]
struct ComponentsSummary {
    command: &'static str,
    manifold_dim: usize,
    count: usize,
    attractor: Option<usize>,
    repeller: Option<usize>,
    mu: Option<f64>,
}

fn components_summary(
    comps: &[MorseComponent],
    t: &FlagType,
    mu: Option<f64>,
) -> ComponentsSummary {
    ComponentsSummary {
        command: "components",
        manifold_dim: t.manifold_dim(),
        count: comps.len(),
        attractor: comps.iter().position(|c| c.is_attractor()),
        repeller: comps.iter().position(|c| c.is_repeller()),
        mu,
    }
}

pub fn cmd_components(config: &ProblemConfig, out: &OutputDir) -> Result<()> {
    let fs = flow_spec(config)?;
    let t = config.flag_type_parsed()?;
    let comps = enumerate_components(fs.chamber(), &t);
    out.write_csv("components", &COMPONENT_HEADER, &component_rows(&comps))?;
    out.write_json("components", &components_summary(&comps, &t, fs.mu().ok()))?;
    Ok(())
}

#[derive(Serialize)]
struct DecayRunSummary {
    component: usize,
    sign: &'static str,
    mu: f64,
    eps_slope: f64,
    lambda_emp: Vec<f64>,
    log_c: Vec<f64>,
    final_slopes: Vec<f64>,
    all_pass: bool,
}

#[derive(Serialize)]
struct DecaySummary {
    command: &'static str,
    runs: Vec<DecayRunSummary>,
    all_pass: bool,
}

fn sign_name(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn decay_rows(rows: &mut Vec<Vec<String>>, component: usize, report: &DecayReport) {
    for (sid, s) in report.samples.iter().enumerate() {
        for (&t, &y) in s.t_grid.iter().zip(&s.log_norms) {
            rows.push(vec![
                component.to_string(),
                sign_name(report.sign).to_string(),
                sid.to_string(),
                fmt(t),
                fmt(y),
            ]);
        }
    }
}

fn run_summary(component: usize, report: &DecayReport) -> DecayRunSummary {
    DecayRunSummary {
        component,
        sign: sign_name(report.sign),
        mu: report.mu,
        eps_slope: report.eps_slope,
        lambda_emp: report.samples.iter().map(|s| -s.slope).collect(),
        log_c: report.samples.iter().map(|s| s.intercept).collect(),
        final_slopes: report.samples.iter().map(|s| s.final_slope).collect(),
        all_pass: report.all_pass(),
    }
}

pub fn cmd_decay(config: &ProblemConfig, out: &OutputDir) -> Result<()> {
    let fs = flow_spec(config)?;
    let t = config.flag_type_parsed()?;
    let comps = enumerate_components(fs.chamber(), &t);
    let settings = decay_settings(config, fs.default_horizon());
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (id, comp) in comps.iter().enumerate() {
        for sign in [Sign::Plus, Sign::Minus] {
            match decay_verify(&fs, comp, sign, &settings) {
                Ok(report) => {
                    decay_rows(&mut rows, id, &report);
                    runs.push(run_summary(id, &report));
                }
                Err(flagflow::Error::EmptyFiber) => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }
    let all_pass = runs.iter().all(|r| r.all_pass);
    out.write_csv(
        "decay",
        &["component", "sign", "sample", "t", "log_norm"],
        &rows,
    )?;
    out.write_json(
        "decay",
        &DecaySummary {
            command: "decay",
            runs,
            all_pass,
        },
    )?;
    if !all_pass {
        return Err(anyhow!(VerificationFailure(
            "a decay slope exceeded -mu + eps_slope".to_string()
        )));
    }
    Ok(())
}

/// Circle parameters of a component: eigenvalue groups of multiplicity two
/// whose induced type is a projective line.
fn circle_params(comp: &MorseComponent, chamber: &Chamber) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (f, groups) in comp.factor_structure.iter().enumerate() {
        for (g, dims) in groups.iter().enumerate() {
            if dims.as_slice() == [1] && chamber.factor(f).multiplicities[g] == 2 {
                out.push((f, g));
            }
        }
    }
    out
}

/// Group element rotating inside one eigenvalue group (an element of the
/// centralizer of H).
fn group_rotation(chamber: &Chamber, factor: usize, group: usize, theta: f64) -> GroupElem {
    let spec = chamber.spec().clone();
    let blocks: Vec<DMatrix<f64>> = (0..spec.num_factors())
        .map(|f| {
            let n = spec.factors()[f];
            if f != factor {
                return DMatrix::identity(n, n);
            }
            let cf = chamber.factor(f);
            let off = cf.group_offsets()[group];
            let mut rot = DMatrix::identity(n, n);
            rot[(off, off)] = theta.cos();
            rot[(off, off + 1)] = -theta.sin();
            rot[(off + 1, off)] = theta.sin();
            rot[(off + 1, off + 1)] = theta.cos();
            cf.conjugator() * rot * cf.conjugator_inv()
        })
        .collect();
    GroupElem::new(spec, blocks).expect("rotations conjugate to unimodular elements")
}

/// Angle of the kernel line of the nilpotent block on a circle parameter,
/// or None when the block vanishes (every point fixed).
fn recurrent_angle(
    nilpotent: &AlgElem,
    chamber: &Chamber,
    factor: usize,
    group: usize,
) -> Option<f64> {
    let cf = chamber.factor(factor);
    let n_ad = cf.conjugator_inv() * nilpotent.block(factor) * cf.conjugator();
    let off = cf.group_offsets()[group];
    let b = n_ad.view((off, off), (2, 2)).into_owned();
    if b.norm() <= 1e-10 * nilpotent.norm().max(1.0) {
        return None;
    }
    // Rank-one nilpotent 2x2: kernel direction (b12, -b11) (or the other
    // column pattern when the first row vanishes).
    let (kx, ky) = if b[(0, 0)].abs().max(b[(0, 1)].abs()) > 1e-12 {
        (b[(0, 1)], -b[(0, 0)])
    } else {
        (b[(1, 1)], -b[(1, 0)])
    };
    let mut theta = ky.atan2(kx);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta >= std::f64::consts::PI {
        theta -= std::f64::consts::PI;
    }
    Some(theta)
}

#[derive(Serialize)]
struct PortraitComponentSummary {
    component: usize,
    profile: String,
    attractor: bool,
    repeller: bool,
    recurrent: String,
}

#[derive(Serialize)]
struct PortraitSummary {
    command: &'static str,
    chart: &'static str,
    trajectories: usize,
    steps_per_trajectory: usize,
    components: Vec<PortraitComponentSummary>,
}

pub fn cmd_portrait(config: &ProblemConfig, out: &OutputDir) -> Result<()> {
    let fs = flow_spec(config)?;
    let t = config.flag_type_parsed()?;
    let chart = portrait::chart_for(&t)?;
    let comps = enumerate_components(fs.chamber(), &t);
    let trajectories = config.trajectories.unwrap_or(24);
    let horizon = config.horizon.unwrap_or(fs.default_horizon());
    let mut rows = Vec::new();

    // Trajectory polylines from a deterministic grid of starts, each
    // labeled with the component its limit classifies onto.
    let steps = if fs.is_discrete() {
        horizon.round().max(1.0) as usize
    } else {
        120
    };
    let classify_horizon = config.classify_horizon.unwrap_or(30.0);
    let dt = horizon / steps as f64;
    let step_elem = fs.transport(dt)?;
    for (id, start) in portrait::start_points(&chart, &t, trajectories)
        .into_iter()
        .enumerate()
    {
        let label = match classify_limit(&fs, &start, classify_horizon)? {
            Some(profile) => comps
                .iter()
                .position(|c| c.profile == profile)
                .map(|i| i.to_string())
                .unwrap_or_else(|| "unresolved".to_string()),
            None => "unresolved".to_string(),
        };
        let mut x = start;
        for j in 0..=steps {
            let (cx, cy) = portrait::coords(&chart, &x);
            rows.push(vec![
                "trajectory".to_string(),
                id.to_string(),
                fmt(dt * j as f64),
                fmt(cx),
                fmt(cy),
                label.clone(),
            ]);
            if j < steps {
                x = act(&step_elem, &x)?;
            }
        }
    }

    // Component loci and unipotent-fixed (recurrent) points.
    let mut component_summaries = Vec::new();
    for (id, comp) in comps.iter().enumerate() {
        let params = circle_params(comp, fs.chamber());
        let locus_grid = 64usize;
        match params.as_slice() {
            [] => {
                let (cx, cy) = portrait::coords(&chart, &comp.base_point);
                rows.push(vec![
                    "component".to_string(),
                    id.to_string(),
                    fmt(0.0),
                    fmt(cx),
                    fmt(cy),
                    id.to_string(),
                ]);
            }
            [(f, g)] => {
                for i in 0..locus_grid {
                    let theta = std::f64::consts::PI * i as f64 / locus_grid as f64;
                    let point = act(
                        &group_rotation(fs.chamber(), *f, *g, theta),
                        &comp.base_point,
                    )?;
                    let (cx, cy) = portrait::coords(&chart, &point);
                    rows.push(vec![
                        "component".to_string(),
                        id.to_string(),
                        fmt(theta),
                        fmt(cx),
                        fmt(cy),
                        id.to_string(),
                    ]);
                }
            }
            [(f1, g1), (f2, g2)] => {
                let side = 16usize;
                for i in 0..side {
                    for j in 0..side {
                        let a = std::f64::consts::PI * i as f64 / side as f64;
                        let b = std::f64::consts::PI * j as f64 / side as f64;
                        let point =
                            act(
                                &group_rotation(fs.chamber(), *f1, *g1, a)
                                    .compose(&group_rotation(fs.chamber(), *f2, *g2, b)),
                                &comp.base_point,
                            )?;
                        let (cx, cy) = portrait::coords(&chart, &point);
                        rows.push(vec![
                            "component".to_string(),
                            id.to_string(),
                            fmt(a),
                            fmt(cx),
                            fmt(cy),
                            id.to_string(),
                        ]);
                    }
                }
            }
            _ => bail!("component locus dimension exceeds the chart"),
        }

        // Recurrent points: kernel angles of the nilpotent blocks on each
        // circle parameter; a vanishing block fixes the entire circle.
        let nilpotent = fs.nilpotent_log();
        let mut recurrent = String::new();
        let mut angles = Vec::new();
        let mut whole_circle = false;
        for &(f, g) in &params {
            match recurrent_angle(nilpotent, fs.chamber(), f, g) {
                Some(theta) => angles.push((f, g, theta)),
                None => whole_circle = true,
            }
        }
        if params.is_empty() {
            if unipotent_fixed(&fs, &comp.base_point) {
                let (cx, cy) = portrait::coords(&chart, &comp.base_point);
                rows.push(vec![
                    "ufixed".to_string(),
                    id.to_string(),
                    fmt(0.0),
                    fmt(cx),
                    fmt(cy),
                    id.to_string(),
                ]);
                recurrent = "point".to_string();
            }
        } else if whole_circle && angles.is_empty() {
            recurrent = "whole-component".to_string();
        } else if angles.len() == params.len() {
            let mut point = comp.base_point.clone();
            for &(f, g, theta) in &angles {
                point = act(&group_rotation(fs.chamber(), f, g, theta), &point)?;
            }
            if unipotent_fixed(&fs, &point) {
                let (cx, cy) = portrait::coords(&chart, &point);
                rows.push(vec![
                    "ufixed".to_string(),
                    id.to_string(),
                    fmt(0.0),
                    fmt(cx),
                    fmt(cy),
                    id.to_string(),
                ]);
                recurrent = "one-per-circle".to_string();
            }
        } else {
            recurrent = "mixed".to_string();
        }

        component_summaries.push(PortraitComponentSummary {
            component: id,
            profile: profile_label(&comp.profile),
            attractor: comp.is_attractor(),
            repeller: comp.is_repeller(),
            recurrent,
        });
    }

    out.write_csv("portrait", &["kind", "id", "t", "x", "y", "label"], &rows)?;
    out.write_json(
        "portrait",
        &PortraitSummary {
            command: "portrait",
            chart: chart.id(),
            trajectories,
            steps_per_trajectory: steps,
            components: component_summaries,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct PeriodicSummary {
    command: &'static str,
    period: f64,
    integrator_steps: usize,
    monodromy: Vec<Vec<Vec<f64>>>,
    eigenvalues: Vec<Vec<f64>>,
    multiplicities: Vec<Vec<usize>>,
    mu_rate: Option<f64>,
    component_count: usize,
    suspended_dims: Vec<usize>,
    decay: Vec<DecayRunSummary>,
    all_pass: bool,
}

pub fn cmd_periodic(config: &ProblemConfig, out: &OutputDir) -> Result<()> {
    if config.mode != Mode::Periodic {
        bail!("periodic command requires periodic mode");
    }
    let ps = config.periodic_spec()?;
    let steps = config.integrator_steps();
    let mono = monodromy(&ps, steps)?;
    let t = config.flag_type_parsed()?;
    let comps = periodic_components(&mono, &t);

    let rows = component_rows(
        &comps
            .iter()
            .map(|pc| pc.component.clone())
            .collect::<Vec<_>>(),
    );

    let mut decay = Vec::new();
    let mut all_pass = true;
    if mono.mu_rate().is_ok() {
        let settings = decay_settings(config, 10.0 * mono.period());
        for (id, pc) in comps.iter().enumerate() {
            for sign in [Sign::Plus, Sign::Minus] {
                match periodic_decay_verify(&ps, &mono, &pc.component, sign, &settings) {
                    Ok(report) => {
                        all_pass &= report.all_pass();
                        decay.push(run_summary(id, &report));
                    }
                    Err(flagflow::Error::EmptyFiber) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    let monodromy_blocks: Vec<Vec<Vec<f64>>> = mono
        .monodromy
        .blocks()
        .iter()
        .map(|b| {
            (0..b.nrows())
                .map(|r| (0..b.ncols()).map(|c| b[(r, c)]).collect())
                .collect()
        })
        .collect();
    let cs = chamber_summary(&mono.chamber);
    out.write_csv("periodic", &COMPONENT_HEADER, &rows)?;
    out.write_json(
        "periodic",
        &PeriodicSummary {
            command: "periodic",
            period: mono.period(),
            integrator_steps: steps,
            monodromy: monodromy_blocks,
            eigenvalues: cs.eigenvalues,
            multiplicities: cs.multiplicities,
            mu_rate: mono.mu_rate().ok(),
            component_count: comps.len(),
            suspended_dims: comps.iter().map(|pc| pc.suspended_dim()).collect(),
            decay,
            all_pass,
        },
    )?;
    if !all_pass {
        return Err(anyhow!(VerificationFailure(
            "a periodic decay slope exceeded -mu + eps_slope".to_string()
        )));
    }
    Ok(())
}
