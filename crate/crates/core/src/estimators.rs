//! Point estimators of `S_y^2` that borrow strength from a binary auxiliary
//! attribute with known population variance `S_phi^2`.
//!
//! Every estimator is evaluated literally from its defining expression.
//! Taylor expansions only appear in [`crate::mse_theory`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{ParameterSet, Sample, SampleMoments};

/// How an optimum constant is obtained when the estimator is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// Plug in the population optimum.
    TheoreticalOptimum,
    /// Plug in the same optimum formula evaluated on sample moments.
    SampleEstimated,
}

/// A free constant that is either fixed or set to its MSE-optimal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuned<T> {
    Fixed(T),
    Optimal(CoefficientMode),
}

/// The four shift/scale choices of the Kadilar-Cingi style ratio estimators,
/// `s_y2 (a S_phi2 + c) / (a s_phi2 + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum KcVariant {
    /// `a = 1`, `c = C_p`
    One,
    /// `a = 1`, `c = beta2_phi`
    Two,
    /// `a = beta2_phi`, `c = C_p`
    Three,
    /// `a = C_p`, `c = beta2_phi`
    Four,
}

impl KcVariant {
    pub const ALL: [KcVariant; 4] = [KcVariant::One, KcVariant::Two, KcVariant::Three, KcVariant::Four];

    pub fn index(self) -> u8 {
        match self {
            KcVariant::One => 1,
            KcVariant::Two => 2,
            KcVariant::Three => 3,
            KcVariant::Four => 4,
        }
    }

    /// `(scale, shift)` read from the parameter set.
    pub fn constants(self, params: &ParameterSet) -> (f64, f64) {
        match self {
            KcVariant::One => (1.0, params.c_p),
            KcVariant::Two => (1.0, params.beta2_phi),
            KcVariant::Three => (params.beta2_phi, params.c_p),
            KcVariant::Four => (params.c_p, params.beta2_phi),
        }
    }
}

impl TryFrom<u8> for KcVariant {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(KcVariant::One),
            2 => Ok(KcVariant::Two),
            3 => Ok(KcVariant::Three),
            4 => Ok(KcVariant::Four),
            _ => Err(Error::InvalidConfig(format!("KC variant must be 1..=4, got {v}"))),
        }
    }
}

impl From<KcVariant> for u8 {
    fn from(v: KcVariant) -> u8 {
        v.index()
    }
}

/// One estimator of `S_y^2`: its family plus the family's constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// `s_y2`
    Unbiased,
    /// `s_y2 S_phi2 / s_phi2`
    RatioT1,
    /// `s_y2 + b (S_phi2 - s_phi2)`
    RegressionT2 {
        b_mode: CoefficientMode,
    },
    /// `s_y2 exp[(S_phi2 - s_phi2) / (S_phi2 + s_phi2)]`
    ExpT3,
    Kc {
        variant: KcVariant,
    },
    /// `[s_y2 + b (S_phi2 - s_phi2)] (n1 S_phi2 + n2) / (n1 s_phi2 + n2)`
    SFamily {
        n1: f64,
        n2: f64,
        b_mode: CoefficientMode,
    },
    /// `s_y2 (eta S_phi2 - v) / [alpha (eta s_phi2 - v) + (1 - alpha)(eta S_phi2 - v)]`
    RsFamily {
        alpha: Tuned<f64>,
        eta: f64,
        v: f64,
    },
    /// `s_y2 [m1 + m2 (S_phi2 - s_phi2)] exp(gamma (a - b) / (a + b))` with
    /// `a = delta S_phi2 + mu`, `b = delta s_phi2 + mu`.
    MFamily {
        m: Tuned<(f64, f64)>,
        gamma: i32,
        delta: f64,
        mu: f64,
    },
}

impl EstimatorSpec {
    /// Whether the estimator divides by, or otherwise needs, a positive `s_phi2`.
    pub fn is_ratio_type(&self) -> bool {
        match self {
            EstimatorSpec::Unbiased | EstimatorSpec::RegressionT2 { .. } => false,
            EstimatorSpec::RsFamily {
                alpha: Tuned::Fixed(a), ..
            } => *a != 0.0,
            _ => true,
        }
    }

    /// Replaces every optimum-constant mode in the spec with `mode`.
    pub fn with_mode(self, mode: CoefficientMode) -> Self {
        match self {
            EstimatorSpec::RegressionT2 { .. } => EstimatorSpec::RegressionT2 { b_mode: mode },
            EstimatorSpec::SFamily { n1, n2, .. } => EstimatorSpec::SFamily { n1, n2, b_mode: mode },
            EstimatorSpec::RsFamily {
                alpha: Tuned::Optimal(_),
                eta,
                v,
            } => EstimatorSpec::RsFamily {
                alpha: Tuned::Optimal(mode),
                eta,
                v,
            },
            EstimatorSpec::MFamily {
                m: Tuned::Optimal(_),
                gamma,
                delta,
                mu,
            } => EstimatorSpec::MFamily {
                m: Tuned::Optimal(mode),
                gamma,
                delta,
                mu,
            },
            other => other,
        }
    }
}

/// Which of two readings of a formula to use.
///
/// `Corrected` is the form that follows from the first-order expansion;
/// `Uncorrected` keeps the alternative reading (R2 with `lambda40`, R3 with the
/// opposite sign on `lambda22 - 1`, the S-family cross term without
/// `lambda22 - 1`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaForm {
    #[default]
    Corrected,
    Uncorrected,
}

/// Form selection for the t_M coefficients R2 and R3.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RForms {
    pub r2: FormulaForm,
    pub r3: FormulaForm,
}

/// Moments that feed the optimum-constant formulas.
///
/// Built from the population ([`MomentInputs::from_params`]) or from a sample
/// ([`MomentInputs::from_sample`]) depending on [`CoefficientMode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentInputs {
    pub n: f64,
    pub s_y2: f64,
    pub s_phi2: f64,
    pub lambda40: f64,
    pub lambda04: f64,
    pub lambda22: f64,
}

impl MomentInputs {
    pub fn from_params(params: &ParameterSet) -> Self {
        Self {
            n: params.n(),
            s_y2: params.s_y2,
            s_phi2: params.s_phi2,
            lambda40: params.lambda40,
            lambda04: params.lambda04,
            lambda22: params.lambda22,
        }
    }

    pub fn from_sample(moments: &SampleMoments) -> Result<Self> {
        let l = moments
            .lambdas
            .ok_or(Error::DegenerateSample("sample moments need nonzero s_y2 and s_phi2"))?;
        Ok(Self {
            n: moments.n as f64,
            s_y2: moments.s_y2,
            s_phi2: moments.s_phi2,
            lambda40: l.lambda40,
            lambda04: l.lambda04,
            lambda22: l.lambda22,
        })
    }

    fn resolve(mode: CoefficientMode, params: &ParameterSet, sample: &SampleMoments) -> Result<Self> {
        match mode {
            CoefficientMode::TheoreticalOptimum => Ok(Self::from_params(params)),
            CoefficientMode::SampleEstimated => {
                let m = Self::from_sample(sample)?;
                if m.lambda04 <= 1.0 {
                    return Err(Error::DegenerateSample("sample lambda04 <= 1"));
                }
                Ok(m)
            }
        }
    }

    pub fn b_phi(&self) -> Result<f64> {
        if self.lambda04 <= 1.0 {
            return Err(Error::DegenerateKurtosis(self.lambda04));
        }
        Ok(self.s_y2 * (self.lambda22 - 1.0) / (self.s_phi2 * (self.lambda04 - 1.0)))
    }

    pub fn alpha_opt(&self, a2: f64) -> Result<f64> {
        if a2 == 0.0 {
            return Err(Error::SingularCoefficient("A2 = 0"));
        }
        if self.lambda04 <= 1.0 {
            return Err(Error::DegenerateKurtosis(self.lambda04));
        }
        Ok((self.lambda22 - 1.0) / (a2 * (self.lambda04 - 1.0)))
    }

    pub fn r_coefficients(&self, gamma: i32, theta: f64, forms: RForms) -> Result<RCoefficients> {
        let g = gamma_value(gamma)?;
        let n = self.n;
        let (l40, l04, l22) = (self.lambda40 - 1.0, self.lambda04 - 1.0, self.lambda22 - 1.0);
        let s2 = self.s_phi2;
        let curv = g * (1.0 + g / 2.0);
        let r1 =
            1.0 + (l40 + g * g * theta * theta * l04 + 2.0 * curv * theta * theta * l04 - 4.0 * g * theta * l22) / n;
        let r2 = match forms.r2 {
            FormulaForm::Corrected => s2 * s2 * l04 / n,
            FormulaForm::Uncorrected => s2 * s2 * l40 / n,
        };
        let r3 = match forms.r3 {
            FormulaForm::Corrected => 2.0 * s2 * (g * theta * l04 - l22) / n,
            FormulaForm::Uncorrected => s2 * (2.0 * l22 + 2.0 * g * theta * l04) / n,
        };
        let r4 = 1.0 + (curv * theta * theta * l04 - g * theta * l22) / n;
        let r5 = s2 * (g * theta * l04 - l22) / n;
        Ok(RCoefficients { r1, r2, r3, r4, r5 })
    }
}

/// The five coefficients of the t_M mean-square error quadratic in `(m1, m2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RCoefficients {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
}

impl RCoefficients {
    pub fn determinant(&self) -> f64 {
        self.r1 * self.r2 - self.r3 * self.r3
    }

    /// Whether the MSE quadratic in `(m1, m2)` is positive definite, so that
    /// its stationary point is a minimum.
    pub fn is_positive_definite(&self) -> bool {
        let det = self.determinant();
        self.r1 > 0.0 && det > f64::EPSILON * (self.r1 * self.r2).abs()
    }

    /// Minimizer `(m1, m2)` of the MSE quadratic.
    pub fn m_opt(&self) -> Result<(f64, f64)> {
        if !self.is_positive_definite() {
            return Err(Error::SingularCoefficient(
                "t_M MSE quadratic is not positive definite (R1 > 0, R1 R2 > R3^2)",
            ));
        }
        let det = self.determinant();
        Ok((
            (self.r2 * self.r4 - self.r3 * self.r5) / det,
            (self.r1 * self.r5 - self.r3 * self.r4) / det,
        ))
    }
}

/// Derived constants used by one estimator; fields not used by the family
/// are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<RCoefficients>,
}

fn gamma_value(gamma: i32) -> Result<f64> {
    match gamma {
        -1 | 1 => Ok(f64::from(gamma)),
        other => Err(Error::InvalidGamma(other)),
    }
}

/// `b_phi = S_y2 (lambda22 - 1) / (S_phi2 (lambda04 - 1))`.
pub fn optimum_b_phi(params: &ParameterSet) -> Result<f64> {
    MomentInputs::from_params(params).b_phi()
}

/// `A1 = n1 S_phi2 / (n1 S_phi2 + n2)`.
pub fn a1_coefficient(n1: f64, n2: f64, s_phi2: f64) -> Result<f64> {
    let den = n1 * s_phi2 + n2;
    if den == 0.0 {
        return Err(Error::SingularCoefficient("n1 S_phi2 + n2 = 0"));
    }
    Ok(n1 * s_phi2 / den)
}

/// `A2 = eta S_phi2 / (eta S_phi2 - v)`.
pub fn a2_coefficient(eta: f64, v: f64, s_phi2: f64) -> Result<f64> {
    let den = eta * s_phi2 - v;
    if den == 0.0 {
        return Err(Error::SingularCoefficient("eta S_phi2 - v = 0"));
    }
    Ok(eta * s_phi2 / den)
}

/// `theta = delta S_phi2 / (2 (delta S_phi2 + mu))`, the first-order slope of
/// the t_M exponent.
pub fn theta_coefficient(delta: f64, mu: f64, s_phi2: f64) -> Result<f64> {
    let shifted = delta * s_phi2 + mu;
    if shifted <= 0.0 {
        return Err(Error::SingularCoefficient("delta S_phi2 + mu must be positive"));
    }
    Ok(delta * s_phi2 / (2.0 * shifted))
}

/// `omega = a S_phi2 / (a S_phi2 + c)` for one KC variant.
pub fn omega_coefficient(variant: KcVariant, params: &ParameterSet) -> Result<f64> {
    let (a, c) = variant.constants(params);
    let den = a * params.s_phi2 + c;
    if den == 0.0 {
        return Err(Error::SingularCoefficient("a S_phi2 + c = 0"));
    }
    Ok(a * params.s_phi2 / den)
}

/// `alpha_opt = (lambda22 - 1) / (A2 (lambda04 - 1))`.
pub fn alpha_opt(params: &ParameterSet, a2: f64) -> Result<f64> {
    MomentInputs::from_params(params).alpha_opt(a2)
}

/// R1..R5 with the corrected R2 and R3.
pub fn r_coefficients(params: &ParameterSet, gamma: i32, theta: f64) -> Result<RCoefficients> {
    MomentInputs::from_params(params).r_coefficients(gamma, theta, RForms::default())
}

/// `(m1_opt, m2_opt)` for t_M.
pub fn m_opt(params: &ParameterSet, gamma: i32, theta: f64) -> Result<(f64, f64)> {
    r_coefficients(params, gamma, theta)?.m_opt()
}

/// Derived constants for `spec` at the population optimum.
pub fn coefficients(spec: &EstimatorSpec, params: &ParameterSet) -> Result<Coefficients> {
    let mut c = Coefficients::default();
    match *spec {
        EstimatorSpec::Unbiased | EstimatorSpec::RatioT1 | EstimatorSpec::ExpT3 => {}
        EstimatorSpec::RegressionT2 { .. } => c.b_phi = Some(optimum_b_phi(params)?),
        EstimatorSpec::Kc { .. } => {
            let mut omega = [0.0; 4];
            for (slot, variant) in omega.iter_mut().zip(KcVariant::ALL) {
                *slot = omega_coefficient(variant, params)?;
            }
            c.omega = Some(omega);
        }
        EstimatorSpec::SFamily { n1, n2, .. } => {
            c.b_phi = Some(optimum_b_phi(params)?);
            c.a1 = Some(a1_coefficient(n1, n2, params.s_phi2)?);
        }
        EstimatorSpec::RsFamily { alpha, eta, v } => {
            if alpha == Tuned::Fixed(0.0) {
                c.alpha = Some(0.0);
                return Ok(c);
            }
            let a2 = a2_coefficient(eta, v, params.s_phi2)?;
            let opt = alpha_opt(params, a2)?;
            c.a2 = Some(a2);
            c.alpha_opt = Some(opt);
            c.alpha = Some(match alpha {
                Tuned::Fixed(a) => a,
                Tuned::Optimal(_) => opt,
            });
        }
        EstimatorSpec::MFamily { gamma, delta, mu, .. } => {
            let theta = theta_coefficient(delta, mu, params.s_phi2)?;
            let r = r_coefficients(params, gamma, theta)?;
            let (m1, m2) = r.m_opt()?;
            c.theta = Some(theta);
            c.r = Some(r);
            c.m1_opt = Some(m1);
            c.m2_opt = Some(m2);
        }
    }
    Ok(c)
}

/// Evaluates `spec` on a drawn sample.
pub fn estimate(spec: &EstimatorSpec, sample: &Sample, params: &ParameterSet) -> Result<f64> {
    estimate_from_moments(spec, &sample.moments(), params)
}

/// Evaluates `spec` from precomputed sample moments.
///
/// Only `SampleEstimated` optimum constants need `sample.lambdas`.
pub fn estimate_from_moments(spec: &EstimatorSpec, sample: &SampleMoments, params: &ParameterSet) -> Result<f64> {
    let s_y2 = sample.s_y2;
    let s = sample.s_phi2;
    let big_s = params.s_phi2;
    if spec.is_ratio_type() && s <= 0.0 {
        return Err(Error::DegenerateSample("s_phi2 = 0"));
    }

    match *spec {
        EstimatorSpec::Unbiased => Ok(s_y2),
        EstimatorSpec::RatioT1 => Ok(s_y2 * (big_s / s)),
        EstimatorSpec::RegressionT2 { b_mode } => {
            let b = MomentInputs::resolve(b_mode, params, sample)?.b_phi()?;
            Ok(s_y2 + b * (big_s - s))
        }
        EstimatorSpec::ExpT3 => Ok(s_y2 * ((big_s - s) / (big_s + s)).exp()),
        EstimatorSpec::Kc { variant } => {
            let (a, c) = variant.constants(params);
            let num = a * big_s + c;
            let den = a * s + c;
            if num == 0.0 || den == 0.0 {
                return Err(Error::SingularCoefficient("a S_phi2 + c or a s_phi2 + c is zero"));
            }
            Ok(s_y2 * (num / den))
        }
        EstimatorSpec::SFamily { n1, n2, b_mode } => {
            let num = n1 * big_s + n2;
            if num == 0.0 {
                return Err(Error::SingularCoefficient("n1 S_phi2 + n2 = 0"));
            }
            let den = n1 * s + n2;
            if den == 0.0 {
                return Err(Error::SingularCoefficient("n1 s_phi2 + n2 = 0"));
            }
            let b = MomentInputs::resolve(b_mode, params, sample)?.b_phi()?;
            Ok((s_y2 + b * (big_s - s)) * (num / den))
        }
        EstimatorSpec::RsFamily { alpha, eta, v } => {
            if alpha == Tuned::Fixed(0.0) {
                return Ok(s_y2);
            }
            let known = eta * big_s - v;
            if known == 0.0 {
                return Err(Error::SingularCoefficient("eta S_phi2 - v = 0"));
            }
            let alpha = match alpha {
                Tuned::Fixed(a) => a,
                Tuned::Optimal(mode) => {
                    let a2 = eta * big_s / known;
                    MomentInputs::resolve(mode, params, sample)?.alpha_opt(a2)?
                }
            };
            let observed = eta * s - v;
            let den = if observed == known {
                known
            } else {
                alpha * observed + (1.0 - alpha) * known
            };
            if den == 0.0 {
                return Err(Error::SingularCoefficient("t_RS denominator is zero"));
            }
            Ok(s_y2 * (known / den))
        }
        EstimatorSpec::MFamily { m, gamma, delta, mu } => {
            let g = gamma_value(gamma)?;
            let known = delta * big_s + mu;
            if known <= 0.0 {
                return Err(Error::SingularCoefficient("delta S_phi2 + mu must be positive"));
            }
            let observed = delta * s + mu;
            let den = known + observed;
            if den == 0.0 {
                return Err(Error::SingularCoefficient("t_M exponent denominator is zero"));
            }
            let (m1, m2) = match m {
                Tuned::Fixed(pair) => pair,
                Tuned::Optimal(mode) => {
                    let theta = delta * big_s / (2.0 * known);
                    MomentInputs::resolve(mode, params, sample)?
                        .r_coefficients(gamma, theta, RForms::default())?
                        .m_opt()?
                }
            };
            Ok(s_y2 * (m1 + m2 * (big_s - s)) * (g * (known - observed) / den).exp())
        }
    }
}
