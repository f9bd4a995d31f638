//! Replicated SRSWOR simulation: empirical MSE and bias of every estimator
//! on shared samples, compared against the first-order theory.
//!
//! Replicate `r` draws its sample with seed [`replicate_seed`]`(seed, r)`.
//! Replicates are grouped into fixed-size chunks, reduced within a chunk in
//! index order and then across chunks in chunk order, so the report does not
//! depend on how many threads ran the chunks.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_from_moments, optimum_b_phi, theta_coefficient, CoefficientMode, EstimatorSpec, FormulaForm, RForms, Tuned,
};
use crate::mse_theory::{self, mse_m_forms, mse_s_family_form};
use crate::population::{srswor_indices, ParameterSet, Population, Sample};

/// Replicates per reduction chunk.
const CHUNK: usize = 1024;

/// Bound on regeneration attempts when a synthetic population lacks one
/// attribute class.
pub const MAX_GENERATION_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseShape {
    /// Standard normal noise.
    Symmetric,
    /// Centred unit exponential noise (excess kurtosis 6).
    RightSkewed,
}

/// Recipe for a synthetic population
/// `y = location + effect * phi + noise_scale * noise`, `phi ~ Bernoulli(P_target)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(rename = "N")]
    pub population_size: usize,
    #[serde(rename = "P_target")]
    pub p_target: f64,
    pub effect: f64,
    pub noise_scale: f64,
    pub base_shape: BaseShape,
    pub seed: u64,
    #[serde(default = "default_location")]
    pub location: f64,
}

fn default_location() -> f64 {
    5.0
}

impl Default for SynthConfig {
    /// `N = 10^5`, `P = 0.3`, right-skewed noise tuned so that
    /// `rho_pb` is about 0.7 and `lambda40` about 4.3.
    fn default() -> Self {
        Self {
            population_size: 100_000,
            p_target: 0.3,
            effect: 1.0,
            noise_scale: 0.47,
            base_shape: BaseShape::RightSkewed,
            seed: 20_140_601,
            location: default_location(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 50 {
            return Err(Error::InvalidConfig(format!(
                "N = {} must be at least 50",
                self.population_size
            )));
        }
        if !(self.p_target > 0.0 && self.p_target < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "P_target = {} must lie in (0, 1)",
                self.p_target
            )));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_scale = {} must be positive",
                self.noise_scale
            )));
        }
        if !self.effect.is_finite() || !self.location.is_finite() {
            return Err(Error::InvalidConfig("effect and location must be finite".into()));
        }
        Ok(())
    }
}

/// Generates the population described by `cfg`; deterministic in `cfg.seed`.
pub fn synth_population(cfg: &SynthConfig) -> Result<Population> {
    cfg.validate()?;
    let bernoulli = Bernoulli::new(cfg.p_target).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt as u64);
        let mut y = Vec::with_capacity(cfg.population_size);
        let mut phi = Vec::with_capacity(cfg.population_size);
        for _ in 0..cfg.population_size {
            let has = bernoulli.sample(&mut rng);
            let noise: f64 = match cfg.base_shape {
                BaseShape::Symmetric => rng.sample(StandardNormal),
                BaseShape::RightSkewed => rng.sample::<f64, _>(Exp1) - 1.0,
            };
            phi.push(u8::from(has));
            y.push(cfg.location + cfg.effect * f64::from(u8::from(has)) + cfg.noise_scale * noise);
        }
        let ones = phi.iter().filter(|&&v| v == 1).count();
        if ones > 0 && ones < phi.len() {
            return Population::new(y, phi);
        }
    }
    Err(Error::DegenerateGeneration {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// An estimator with the label it is reported under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSpec {
    pub name: String,
    pub spec: EstimatorSpec,
}

impl NamedSpec {
    pub fn new(name: impl Into<String>, spec: EstimatorSpec) -> Self {
        Self {
            name: name.into(),
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
    pub specs: Vec<NamedSpec>,
    pub coefficient_mode_override: Option<CoefficientMode>,
}

impl SimConfig {
    pub fn validate(&self, pop: &Population) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidConfig(format!(
                "replicates = {} must be at least 100",
                self.replicates
            )));
        }
        if self.n < 2 || self.n > pop.len() {
            return Err(Error::BadSampleSize {
                n: self.n,
                population: pop.len(),
            });
        }
        Ok(())
    }

    fn effective_specs(&self) -> Vec<NamedSpec> {
        self.specs
            .iter()
            .map(|s| NamedSpec {
                name: s.name.clone(),
                spec: self
                    .coefficient_mode_override
                    .map_or(s.spec, |mode| s.spec.with_mode(mode)),
            })
            .collect()
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate` under master seed `master`:
/// `splitmix64(master + replicate * 0x9E3779B97F4A7C15)` (wrapping).
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    splitmix64(master.wrapping_add(replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Order-sensitive hash of a replicate's drawn indices.
pub fn sample_checksum(replicate: u64, indices: &[usize]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(replicate), |h, &i| splitmix64(h ^ i as u64))
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    used: usize,
    failed: usize,
    sum_err: f64,
    sum_err2: f64,
    sum_err4: f64,
    checksum: u64,
}

impl Accumulator {
    fn push(&mut self, outcome: Option<f64>, target: f64, checksum: u64) {
        self.checksum ^= checksum;
        match outcome {
            Some(t) if t.is_finite() => {
                let e = t - target;
                let e2 = e * e;
                self.used += 1;
                self.sum_err += e;
                self.sum_err2 += e2;
                self.sum_err4 += e2 * e2;
            }
            _ => self.failed += 1,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.used += other.used;
        self.failed += other.failed;
        self.sum_err += other.sum_err;
        self.sum_err2 += other.sum_err2;
        self.sum_err4 += other.sum_err4;
        self.checksum ^= other.checksum;
    }

    fn mse(&self) -> Option<f64> {
        (self.used > 0).then(|| self.sum_err2 / self.used as f64)
    }

    fn bias(&self) -> Option<f64> {
        (self.used > 0).then(|| self.sum_err / self.used as f64)
    }

    /// Standard error of a sample mean with given first and second raw sums.
    fn std_error(&self, sum: f64, sum_sq: f64) -> Option<f64> {
        (self.used > 1).then(|| {
            let k = self.used as f64;
            let mean = sum / k;
            let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
            (var / k).sqrt()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub name: String,
    pub spec: EstimatorSpec,
    /// Mean of `(t - S_y2)^2` over used replicates.
    pub empirical_mse: Option<f64>,
    pub mse_std_error: Option<f64>,
    /// Mean of `t - S_y2` over used replicates.
    pub empirical_bias: Option<f64>,
    pub bias_std_error: Option<f64>,
    /// `100 * baseline_mse / empirical_mse`.
    pub pre_empirical: Option<f64>,
    pub theoretical_mse: Option<f64>,
    pub theoretical_pre: Option<f64>,
    /// `|empirical_mse - theoretical_mse| / theoretical_mse`.
    pub relative_gap: Option<f64>,
    pub replicate_count: usize,
    pub used_replicates: usize,
    pub failed_replicates: usize,
    /// XOR of the checksums of every sample this estimator was evaluated on.
    pub evaluated_checksum: String,
}

/// Result of one simulation run. Field names are stable JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub population_size: usize,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub coefficient_mode_override: Option<CoefficientMode>,
    /// Population `S_y2`, the estimation target.
    pub target: f64,
    /// Empirical MSE of the unbiased `s_y2` over all replicates.
    pub baseline_mse: f64,
    /// XOR of every replicate's [`sample_checksum`].
    pub sample_checksum: String,
    pub estimators: Vec<EstimatorResult>,
}

fn hex(x: u64) -> String {
    format!("{x:016x}")
}

fn simulate_chunk(
    pop: &Population,
    params: &ParameterSet,
    specs: &[NamedSpec],
    cfg: &SimConfig,
    range: std::ops::Range<usize>,
) -> (Accumulator, Vec<Accumulator>) {
    let target = params.s_y2;
    let mut baseline = Accumulator::default();
    let mut accs = vec![Accumulator::default(); specs.len()];
    for r in range {
        let seed = replicate_seed(cfg.seed, r as u64);
        let indices = srswor_indices(pop.len(), cfg.n, seed).expect("sample size validated");
        let checksum = sample_checksum(r as u64, &indices);
        let moments = Sample::from_distinct_indices(pop, indices).moments();
        baseline.push(Some(moments.s_y2), target, checksum);
        for (acc, named) in accs.iter_mut().zip(specs) {
            acc.push(
                estimate_from_moments(&named.spec, &moments, params).ok(),
                target,
                checksum,
            );
        }
    }
    (baseline, accs)
}

/// Runs `cfg.replicates` paired replicates on `pop`.
///
/// Estimator failures on a replicate (for example `s_phi2 = 0`) are counted
/// in `failed_replicates` and excluded from the moments.
pub fn run_simulation(pop: &Population, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate(pop)?;
    let params = ParameterSet::from_population(pop, cfg.n)?;
    let specs = cfg.effective_specs();

    let chunks: Vec<_> = (0..cfg.replicates.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            simulate_chunk(
                pop,
                &params,
                &specs,
                cfg,
                c * CHUNK..((c + 1) * CHUNK).min(cfg.replicates),
            )
        })
        .collect();

    let mut baseline = Accumulator::default();
    let mut accs = vec![Accumulator::default(); specs.len()];
    for (b, chunk) in &chunks {
        baseline.merge(b);
        for (acc, part) in accs.iter_mut().zip(chunk) {
            acc.merge(part);
        }
    }
    let baseline_mse = baseline.mse().expect("at least 100 replicates");

    let estimators = specs
        .iter()
        .zip(&accs)
        .map(|(named, acc)| {
            let empirical_mse = acc.mse();
            let theoretical_mse = mse_theory::theoretical_mse(&named.spec, &params).ok();
            EstimatorResult {
                name: named.name.clone(),
                spec: named.spec,
                empirical_mse,
                mse_std_error: acc.std_error(acc.sum_err2, acc.sum_err4),
                empirical_bias: acc.bias(),
                bias_std_error: acc.std_error(acc.sum_err, acc.sum_err2),
                pre_empirical: empirical_mse.map(|m| 100.0 * baseline_mse / m),
                theoretical_mse,
                theoretical_pre: theoretical_mse.map(|m| mse_theory::pre(m, &params)),
                relative_gap: empirical_mse.zip(theoretical_mse).map(|(e, t)| (e - t).abs() / t.abs()),
                replicate_count: cfg.replicates,
                used_replicates: acc.used,
                failed_replicates: acc.failed,
                evaluated_checksum: hex(acc.checksum),
            }
        })
        .collect();

    Ok(SimReport {
        population_size: pop.len(),
        n: cfg.n,
        replicates: cfg.replicates,
        seed: cfg.seed,
        coefficient_mode_override: cfg.coefficient_mode_override,
        target: params.s_y2,
        baseline_mse,
        sample_checksum: hex(baseline.checksum),
        estimators,
    })
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

impl SimReport {
    /// Markdown table, one row per estimator.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "N = {}, n = {}, replicates = {}, seed = {}, S_y2 = {:.6}, baseline MSE = {:.6e}, checksum = {}\n",
            self.population_size,
            self.n,
            self.replicates,
            self.seed,
            self.target,
            self.baseline_mse,
            self.sample_checksum
        );
        out.push_str("| estimator | empirical MSE | MSE s.e. | bias | PRE (emp) | theoretical MSE | PRE (theory) | gap | failed |\n");
        out.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for e in &self.estimators {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                e.name,
                e.empirical_mse.map_or("-".into(), |v| format!("{v:.6e}")),
                e.mse_std_error.map_or("-".into(), |v| format!("{v:.2e}")),
                e.empirical_bias.map_or("-".into(), |v| format!("{v:.3e}")),
                cell(e.pre_empirical, 2),
                e.theoretical_mse.map_or("-".into(), |v| format!("{v:.6e}")),
                cell(e.theoretical_pre, 2),
                cell(e.relative_gap, 4),
                e.failed_replicates,
            );
        }
        out
    }

    pub fn estimator(&self, name: &str) -> Option<&EstimatorResult> {
        self.estimators.iter().find(|e| e.name == name)
    }
}

/// Which disputed formula an adjudication run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaTag {
    /// Cross term of the t_S MSE.
    CrossTerm,
    /// Kurtosis factor in R2 of the t_M MSE.
    R2,
    /// Sign of `lambda22 - 1` in R3 of the t_M MSE.
    R3,
}

impl std::str::FromStr for FormulaTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq37" | "cross-term" => Ok(FormulaTag::CrossTerm),
            "r2" => Ok(FormulaTag::R2),
            "r3" => Ok(FormulaTag::R3),
            other => Err(Error::InvalidConfig(format!(
                "unknown formula tag {other:?} (expected eq37, r2 or r3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationConfig {
    pub replicates: usize,
    pub n: usize,
    pub seed: u64,
}

impl Default for AdjudicationConfig {
    fn default() -> Self {
        Self {
            replicates: 100_000,
            n: 100,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Tie,
}

/// Gap ratio below which two variants tie.
pub const TIE_GAP_RATIO: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub formula: FormulaTag,
    pub variant_a: FormulaForm,
    pub variant_b: FormulaForm,
    pub estimator: EstimatorSpec,
    pub theoretical_a: f64,
    pub theoretical_b: f64,
    pub empirical_mse: f64,
    pub mse_std_error: Option<f64>,
    pub failed_replicates: usize,
    /// `|theoretical - empirical| / empirical`
    pub gap_a: f64,
    pub gap_b: f64,
    /// Larger gap over smaller gap.
    pub gap_ratio: f64,
    pub winner: Winner,
}

impl Verdict {
    /// `"corrected"`, `"uncorrected"` or `"tie"`.
    pub fn label(&self) -> &'static str {
        let form = match self.winner {
            Winner::Tie => return "tie",
            Winner::A => self.variant_a,
            Winner::B => self.variant_b,
        };
        match form {
            FormulaForm::Corrected => "corrected",
            FormulaForm::Uncorrected => "uncorrected",
        }
    }
}

fn theory_for(formula: FormulaTag, form: FormulaForm, params: &ParameterSet, spec: &EstimatorSpec) -> Result<f64> {
    match (formula, *spec) {
        (FormulaTag::CrossTerm, EstimatorSpec::SFamily { n1, n2, .. }) => {
            mse_s_family_form(params, n1, n2, optimum_b_phi(params)?, form)
        }
        (
            FormulaTag::R2 | FormulaTag::R3,
            EstimatorSpec::MFamily {
                m: Tuned::Fixed((m1, m2)),
                gamma,
                delta,
                mu,
            },
        ) => {
            let theta = theta_coefficient(delta, mu, params.s_phi2)?;
            let forms = match formula {
                FormulaTag::R2 => RForms {
                    r2: form,
                    ..RForms::default()
                },
                _ => RForms {
                    r3: form,
                    ..RForms::default()
                },
            };
            mse_m_forms(params, m1, m2, gamma, theta, forms)
        }
        _ => unreachable!("adjudication estimator matches its formula"),
    }
}

/// The estimator whose empirical MSE decides `formula`.
///
/// `CrossTerm` uses t_S1 with the population-optimal `b`. `r2` and `r3` use t_M
/// (`gamma = 1`, `delta = 1`, `mu = 0`) held at the fixed point
/// `m = (1, -1/S_phi2)`, where the `m2` terms carry a large share of the
/// MSE; at the optimum `m2` is too small for R2 to be resolvable.
pub fn adjudication_estimator(formula: FormulaTag, params: &ParameterSet) -> EstimatorSpec {
    match formula {
        FormulaTag::CrossTerm => EstimatorSpec::SFamily {
            n1: 1.0,
            n2: 1.0,
            b_mode: CoefficientMode::TheoreticalOptimum,
        },
        FormulaTag::R2 | FormulaTag::R3 => EstimatorSpec::MFamily {
            m: Tuned::Fixed((1.0, -1.0 / params.s_phi2)),
            gamma: 1,
            delta: 1.0,
            mu: 0.0,
        },
    }
}

/// Decides which variant of `formula` better predicts the simulated MSE.
pub fn adjudicate(
    pop: &Population,
    cfg: &AdjudicationConfig,
    formula: FormulaTag,
    variant_a: FormulaForm,
    variant_b: FormulaForm,
) -> Result<Verdict> {
    let params = ParameterSet::from_population(pop, cfg.n)?;
    let spec = adjudication_estimator(formula, &params);
    let sim = SimConfig {
        replicates: cfg.replicates,
        n: cfg.n,
        seed: cfg.seed,
        specs: vec![NamedSpec::new("candidate", spec)],
        coefficient_mode_override: None,
    };
    let report = run_simulation(pop, &sim)?;
    let result = &report.estimators[0];
    let empirical_mse = result
        .empirical_mse
        .ok_or_else(|| Error::InvalidConfig("every replicate failed; cannot adjudicate".into()))?;

    let theoretical_a = theory_for(formula, variant_a, &params, &spec)?;
    let theoretical_b = theory_for(formula, variant_b, &params, &spec)?;
    let gap_a = (theoretical_a - empirical_mse).abs() / empirical_mse;
    let gap_b = (theoretical_b - empirical_mse).abs() / empirical_mse;
    let (small, large) = if gap_a <= gap_b { (gap_a, gap_b) } else { (gap_b, gap_a) };
    let gap_ratio = if large == 0.0 { 1.0 } else { large / small };
    let winner = if variant_a == variant_b || gap_ratio < TIE_GAP_RATIO {
        Winner::Tie
    } else if gap_a < gap_b {
        Winner::A
    } else {
        Winner::B
    };
    Ok(Verdict {
        formula,
        variant_a,
        variant_b,
        estimator: spec,
        theoretical_a,
        theoretical_b,
        empirical_mse,
        mse_std_error: result.mse_std_error,
        failed_replicates: result.failed_replicates,
        gap_a,
        gap_b,
        gap_ratio,
        winner,
    })
}

/// Corrected (`a`) against uncorrected (`b`) form of `formula`.
pub fn adjudicate_formula(pop: &Population, cfg: &AdjudicationConfig, formula: FormulaTag) -> Result<Verdict> {
    adjudicate(pop, cfg, formula, FormulaForm::Corrected, FormulaForm::Uncorrected)
}
