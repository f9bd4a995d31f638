//! First-order MSE approximations, optimum plug-ins, percent relative
//! efficiency and pairwise efficiency comparisons.
//!
//! Every formula consumes a [`ParameterSet`] only. The finite population
//! correction is ignored throughout, so all variances scale as `1/n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    self, a1_coefficient, a2_coefficient, omega_coefficient, optimum_b_phi, theta_coefficient, Coefficients,
    EstimatorSpec, FormulaForm, KcVariant, MomentInputs, RCoefficients, RForms, Tuned,
};
use crate::population::ParameterSet;

fn scale(params: &ParameterSet) -> f64 {
    params.s_y2 * params.s_y2 / params.n()
}

/// Variance of the unbiased `s_y2`: `S_y^4 (lambda40 - 1) / n`.
pub fn var_unbiased(params: &ParameterSet) -> f64 {
    scale(params) * (params.lambda40 - 1.0)
}

pub fn mse_t1(params: &ParameterSet) -> f64 {
    let p = params;
    p.s_y2 * p.s_y2 * ((p.lambda40 - 1.0) + (p.lambda04 - 1.0) - 2.0 * (p.lambda22 - 1.0)) / p.n()
}

/// Variance of the regression estimator for a fixed slope `b`.
pub fn var_t2(params: &ParameterSet, b: f64) -> f64 {
    let p = params;
    let sp2 = p.s_phi2;
    (p.s_y2 * p.s_y2 * (p.lambda40 - 1.0) + b * b * sp2 * sp2 * (p.lambda04 - 1.0)
        - 2.0 * b * p.s_y2 * sp2 * (p.lambda22 - 1.0))
        / p.n()
}

/// The regression bound `S_y^4/n [(lambda40 - 1) - (lambda22 - 1)^2 / (lambda04 - 1)]`.
pub fn min_var_t2(params: &ParameterSet) -> Result<f64> {
    let p = params;
    if p.lambda04 <= 1.0 {
        return Err(Error::DegenerateKurtosis(p.lambda04));
    }
    Ok(scale(p) * ((p.lambda40 - 1.0) - (p.lambda22 - 1.0).powi(2) / (p.lambda04 - 1.0)))
}

pub fn mse_t3(params: &ParameterSet) -> f64 {
    let p = params;
    scale(p) * ((p.lambda40 - 1.0) + (p.lambda04 - 1.0) / 4.0 - (p.lambda22 - 1.0))
}

fn mse_weighted_ratio(params: &ParameterSet, weight: f64) -> f64 {
    let p = params;
    scale(p) * ((p.lambda40 - 1.0) + weight * weight * (p.lambda04 - 1.0) - 2.0 * weight * (p.lambda22 - 1.0))
}

pub fn mse_kc(params: &ParameterSet, variant: KcVariant) -> Result<f64> {
    Ok(mse_weighted_ratio(params, omega_coefficient(variant, params)?))
}

/// t_S MSE with the `(lambda22 - 1)` factor on the cross term.
pub fn mse_s_family(params: &ParameterSet, n1: f64, n2: f64, b: f64) -> Result<f64> {
    mse_s_family_form(params, n1, n2, b, FormulaForm::Corrected)
}

/// t_S MSE in either form; `Uncorrected` drops `(lambda22 - 1)` from the
/// cross term.
pub fn mse_s_family_form(params: &ParameterSet, n1: f64, n2: f64, b: f64, form: FormulaForm) -> Result<f64> {
    let p = params;
    let a1 = a1_coefficient(n1, n2, p.s_phi2)?;
    let (sy2, sp2) = (p.s_y2, p.s_phi2);
    let cross_scale = match form {
        FormulaForm::Corrected => p.lambda22 - 1.0,
        FormulaForm::Uncorrected => 1.0,
    };
    Ok((sy2 * sy2 * (p.lambda40 - 1.0)
        + (p.lambda04 - 1.0) * (b * b * sp2 * sp2 + a1 * a1 * sy2 * sy2 + 2.0 * a1 * b * sy2 * sp2)
        - 2.0 * sy2 * cross_scale * (b * sp2 + a1 * sy2))
        / p.n())
}

pub fn mse_rs(params: &ParameterSet, alpha: f64, eta: f64, v: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(var_unbiased(params));
    }
    let a2 = a2_coefficient(eta, v, params.s_phi2)?;
    Ok(mse_weighted_ratio(params, a2 * alpha))
}

/// t_RS MSE at `alpha_opt`.
pub fn min_mse_rs(params: &ParameterSet, eta: f64, v: f64) -> Result<f64> {
    let a2 = a2_coefficient(eta, v, params.s_phi2)?;
    let alpha = estimators::alpha_opt(params, a2)?;
    mse_rs(params, alpha, eta, v)
}

pub fn mse_m(params: &ParameterSet, m1: f64, m2: f64, gamma: i32, theta: f64) -> Result<f64> {
    mse_m_forms(params, m1, m2, gamma, theta, RForms::default())
}

pub fn mse_m_forms(params: &ParameterSet, m1: f64, m2: f64, gamma: i32, theta: f64, forms: RForms) -> Result<f64> {
    let r = MomentInputs::from_params(params).r_coefficients(gamma, theta, forms)?;
    Ok(mse_m_from_r(params, &r, m1, m2))
}

/// `S_y^4 [1 + m1^2 R1 + m2^2 R2 + 2 m1 m2 R3 - 2 m1 R4 - 2 m2 R5]`.
pub fn mse_m_from_r(params: &ParameterSet, r: &RCoefficients, m1: f64, m2: f64) -> f64 {
    params.s_y2
        * params.s_y2
        * (1.0 + m1 * m1 * r.r1 + m2 * m2 * r.r2 + 2.0 * m1 * m2 * r.r3 - 2.0 * m1 * r.r4 - 2.0 * m2 * r.r5)
}

/// t_M MSE at `(m1_opt, m2_opt)`:
/// `S_y^4 [1 - (R2 R4^2 - 2 R3 R4 R5 + R1 R5^2) / (R1 R2 - R3^2)]`.
pub fn min_mse_m(params: &ParameterSet, gamma: i32, theta: f64) -> Result<f64> {
    min_mse_m_forms(params, gamma, theta, RForms::default())
}

pub fn min_mse_m_forms(params: &ParameterSet, gamma: i32, theta: f64, forms: RForms) -> Result<f64> {
    let r = MomentInputs::from_params(params).r_coefficients(gamma, theta, forms)?;
    r.m_opt()?;
    let det = r.determinant();
    let reduction = (r.r2 * r.r4 * r.r4 - 2.0 * r.r3 * r.r4 * r.r5 + r.r1 * r.r5 * r.r5) / det;
    Ok(params.s_y2 * params.s_y2 * (1.0 - reduction))
}

/// Percent relative efficiency against `s_y2`: `100 var_unbiased / mse`.
pub fn pre(mse: f64, params: &ParameterSet) -> f64 {
    100.0 * var_unbiased(params) / mse
}

/// First-order MSE of any estimator spec.
///
/// Optimum constants always take their population values here; a
/// sample-estimated optimum has the same first-order MSE.
pub fn theoretical_mse(spec: &EstimatorSpec, params: &ParameterSet) -> Result<f64> {
    match *spec {
        EstimatorSpec::Unbiased => Ok(var_unbiased(params)),
        EstimatorSpec::RatioT1 => Ok(mse_t1(params)),
        EstimatorSpec::RegressionT2 { .. } => min_var_t2(params),
        EstimatorSpec::ExpT3 => Ok(mse_t3(params)),
        EstimatorSpec::Kc { variant } => mse_kc(params, variant),
        EstimatorSpec::SFamily { n1, n2, .. } => mse_s_family(params, n1, n2, optimum_b_phi(params)?),
        EstimatorSpec::RsFamily {
            alpha: Tuned::Fixed(alpha),
            eta,
            v,
        } => mse_rs(params, alpha, eta, v),
        EstimatorSpec::RsFamily {
            alpha: Tuned::Optimal(_),
            eta,
            v,
        } => min_mse_rs(params, eta, v),
        EstimatorSpec::MFamily { m, gamma, delta, mu } => {
            let theta = theta_coefficient(delta, mu, params.s_phi2)?;
            match m {
                Tuned::Fixed((m1, m2)) => mse_m(params, m1, m2, gamma, theta),
                Tuned::Optimal(_) => min_mse_m(params, gamma, theta),
            }
        }
    }
}

/// Theoretical MSE, PRE and derived constants of one estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub spec: EstimatorSpec,
    pub mse: f64,
    pub pre: f64,
    pub coefficients: Coefficients,
}

pub fn mse_report(spec: &EstimatorSpec, params: &ParameterSet) -> Result<MseReport> {
    let mse = theoretical_mse(spec, params)?;
    Ok(MseReport {
        spec: *spec,
        mse,
        pre: pre(mse, params),
        coefficients: estimators::coefficients(spec, params)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub spec_a: EstimatorSpec,
    pub spec_b: EstimatorSpec,
    pub mse_a: f64,
    pub mse_b: f64,
    /// `mse_a - mse_b`
    pub difference: f64,
    pub dominant: Dominance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<ComparisonPair>,
}

/// Relative MSE difference below which two estimators tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub fn compare(params: &ParameterSet, spec_a: &EstimatorSpec, spec_b: &EstimatorSpec) -> Result<ComparisonPair> {
    let mse_a = theoretical_mse(spec_a, params)?;
    let mse_b = theoretical_mse(spec_b, params)?;
    let difference = mse_a - mse_b;
    let dominant = if difference.abs() <= TIE_TOLERANCE * mse_a.abs().max(mse_b.abs()) {
        Dominance::Tie
    } else if difference > 0.0 {
        Dominance::B
    } else {
        Dominance::A
    };
    Ok(ComparisonPair {
        spec_a: *spec_a,
        spec_b: *spec_b,
        mse_a,
        mse_b,
        difference,
        dominant,
    })
}

/// Compares each candidate (as `a`) against `reference` (as `b`), in the
/// order given.
pub fn comparison_report(
    params: &ParameterSet,
    reference: &EstimatorSpec,
    candidates: &[EstimatorSpec],
) -> Result<ComparisonReport> {
    let pairs = candidates
        .iter()
        .map(|c| compare(params, c, reference))
        .collect::<Result<_>>()?;
    Ok(ComparisonReport { pairs })
}
