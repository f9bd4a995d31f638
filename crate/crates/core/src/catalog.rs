//! Named members of the estimator families and the symbolic constants they
//! are built from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CoefficientMode, EstimatorSpec, KcVariant, Tuned};
use crate::population::ParameterSet;

/// A constant that is either a literal number or a field of the parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParamExpr {
    Value(f64),
    PopulationSize,
    SampleSize,
    SamplingFraction,
    Complement,
    Cp,
    Cy,
    Beta2Phi,
    RhoPb,
    KPb,
}

impl ParamExpr {
    pub fn resolve(&self, params: &ParameterSet) -> f64 {
        match *self {
            ParamExpr::Value(v) => v,
            ParamExpr::PopulationSize => params.population_size as f64,
            ParamExpr::SampleSize => params.n(),
            ParamExpr::SamplingFraction => params.f,
            ParamExpr::Complement => params.g,
            ParamExpr::Cp => params.c_p,
            ParamExpr::Cy => params.c_y,
            ParamExpr::Beta2Phi => params.beta2_phi,
            ParamExpr::RhoPb => params.rho_pb,
            ParamExpr::KPb => params.k_pb,
        }
    }
}

impl FromStr for ParamExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "N" => ParamExpr::PopulationSize,
            "n" => ParamExpr::SampleSize,
            "f" => ParamExpr::SamplingFraction,
            "g" => ParamExpr::Complement,
            "C_p" => ParamExpr::Cp,
            "C_y" => ParamExpr::Cy,
            "beta2_phi" => ParamExpr::Beta2Phi,
            "rho_pb" => ParamExpr::RhoPb,
            "k_pb" => ParamExpr::KPb,
            other => ParamExpr::Value(
                other
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("unknown constant {other:?}")))?,
            ),
        })
    }
}

impl TryFrom<String> for ParamExpr {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParamExpr> for String {
    fn from(e: ParamExpr) -> String {
        e.to_string()
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamExpr::Value(v) => write!(f, "{v}"),
            ParamExpr::PopulationSize => f.write_str("N"),
            ParamExpr::SampleSize => f.write_str("n"),
            ParamExpr::SamplingFraction => f.write_str("f"),
            ParamExpr::Complement => f.write_str("g"),
            ParamExpr::Cp => f.write_str("C_p"),
            ParamExpr::Cy => f.write_str("C_y"),
            ParamExpr::Beta2Phi => f.write_str("beta2_phi"),
            ParamExpr::RhoPb => f.write_str("rho_pb"),
            ParamExpr::KPb => f.write_str("k_pb"),
        }
    }
}

use ParamExpr::{Beta2Phi, Cp, RhoPb, Value};

/// `(n1, n2)` for t_S1 .. t_S10.
const S_MEMBERS: [(ParamExpr, ParamExpr); 10] = [
    (Value(1.0), Value(1.0)),
    (Value(1.0), Beta2Phi),
    (Value(1.0), Cp),
    (Value(1.0), RhoPb),
    (Beta2Phi, Cp),
    (Cp, Beta2Phi),
    (Cp, RhoPb),
    (RhoPb, Cp),
    (Beta2Phi, RhoPb),
    (RhoPb, Beta2Phi),
];

/// `(alpha, eta, v)` for t_RS0 .. t_RS6; `v` of t_RS6 is `-beta2_phi`.
const RS_MEMBERS: [(f64, ParamExpr, ParamExpr, f64); 7] = [
    (0.0, Value(0.0), Value(0.0), 1.0),
    (1.0, Value(1.0), Value(0.0), 1.0),
    (1.0, Value(1.0), Cp, 1.0),
    (1.0, Value(1.0), Beta2Phi, 1.0),
    (1.0, Beta2Phi, Cp, 1.0),
    (1.0, Cp, Beta2Phi, 1.0),
    (1.0, Value(1.0), Beta2Phi, -1.0),
];

/// t_S member `index` (1..=10) with its `b` plugged in according to `mode`.
pub fn s_member(index: usize, params: &ParameterSet, mode: CoefficientMode) -> Result<EstimatorSpec> {
    let (n1, n2) = index
        .checked_sub(1)
        .and_then(|i| S_MEMBERS.get(i))
        .ok_or_else(|| Error::InvalidConfig(format!("t_S member must be 1..=10, got {index}")))?;
    Ok(EstimatorSpec::SFamily {
        n1: n1.resolve(params),
        n2: n2.resolve(params),
        b_mode: mode,
    })
}

/// t_RS member `index` (0..=6).
pub fn rs_member(index: usize, params: &ParameterSet) -> Result<EstimatorSpec> {
    let (alpha, eta, v, sign) = RS_MEMBERS
        .get(index)
        .ok_or_else(|| Error::InvalidConfig(format!("t_RS member must be 0..=6, got {index}")))?;
    Ok(EstimatorSpec::RsFamily {
        alpha: Tuned::Fixed(*alpha),
        eta: eta.resolve(params),
        v: sign * v.resolve(params),
    })
}

/// The t_M member with constants `(delta, mu)` and optimum `(m1, m2)`.
pub fn m_member(
    delta: ParamExpr,
    mu: ParamExpr,
    gamma: i32,
    params: &ParameterSet,
    mode: CoefficientMode,
) -> EstimatorSpec {
    EstimatorSpec::MFamily {
        m: Tuned::Optimal(mode),
        gamma,
        delta: delta.resolve(params),
        mu: mu.resolve(params),
    }
}

/// The regression-optimal t_RS with `eta = 1`, `v = 0`.
pub fn rs_optimal(mode: CoefficientMode) -> EstimatorSpec {
    EstimatorSpec::RsFamily {
        alpha: Tuned::Optimal(mode),
        eta: 1.0,
        v: 0.0,
    }
}

/// Resolves an estimator name.
///
/// Accepted: `unbiased`, `t1`, `t2`, `t3`, `kc1`..`kc4`, `s1`..`s10`,
/// `rs0`..`rs6`, `rs-opt`, `m` (`delta = 1`, `mu = 0`, `gamma = 1`) and
/// `m:<delta>:<mu>[:<gamma>]` where the constants are numbers or parameter
/// names such as `N`, `C_p`, `beta2_phi`.
pub fn parse_estimator(name: &str, params: &ParameterSet, mode: CoefficientMode) -> Result<EstimatorSpec> {
    let name = name.trim();
    let indexed = |prefix: &str| name.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok());
    let spec = match name {
        "unbiased" => EstimatorSpec::Unbiased,
        "t1" => EstimatorSpec::RatioT1,
        "t2" => EstimatorSpec::RegressionT2 { b_mode: mode },
        "t3" => EstimatorSpec::ExpT3,
        "rs-opt" => rs_optimal(mode),
        "m" => m_member(Value(1.0), Value(0.0), 1, params, mode),
        _ if name.starts_with("m:") => {
            let parts: Vec<&str> = name[2..].split(':').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(Error::InvalidConfig(format!(
                    "expected m:<delta>:<mu>[:<gamma>], got {name:?}"
                )));
            }
            let gamma = match parts.get(2) {
                Some(g) => g
                    .trim_start_matches('+')
                    .parse::<i32>()
                    .map_err(|_| Error::InvalidConfig(format!("bad gamma in {name:?}")))?,
                None => 1,
            };
            if gamma != 1 && gamma != -1 {
                return Err(Error::InvalidGamma(gamma));
            }
            m_member(parts[0].parse()?, parts[1].parse()?, gamma, params, mode)
        }
        _ => {
            if let Some(i) = indexed("kc") {
                let variant = u8::try_from(i).map_err(|_| Error::InvalidConfig(format!("bad KC variant {i}")))?;
                EstimatorSpec::Kc {
                    variant: KcVariant::try_from(variant)?,
                }
            } else if let Some(i) = indexed("rs") {
                rs_member(i, params)?
            } else if let Some(i) = indexed("s") {
                s_member(i, params, mode)?
            } else {
                return Err(Error::InvalidConfig(format!("unknown estimator {name:?}")));
            }
        }
    };
    Ok(spec)
}

/// Names of every family member in the efficiency-table order.
pub fn efficiency_table_names() -> Vec<String> {
    let mut names: Vec<String> = ["unbiased", "t1", "t2", "t3"].iter().map(|s| s.to_string()).collect();
    names.extend((1..=4).map(|i| format!("kc{i}")));
    names.extend((1..=10).map(|i| format!("s{i}")));
    names.extend((1..=6).map(|i| format!("rs{i}")));
    names.push("rs-opt".into());
    names
}
