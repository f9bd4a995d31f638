//! Efficiency tables for a parameter bundle, with deviations from the
//! registered reference values.

use serde::Serialize;

use crate::catalog::{self, ParamExpr};
use crate::error::Result;
use crate::estimators::CoefficientMode;
use crate::fixtures::ReferenceTables;
use crate::mse_theory::{pre, theoretical_mse};
use crate::population::ParameterSet;

/// Absolute PRE deviation above which an efficiency-table row is flagged.
pub const EFFICIENCY_FLAG_THRESHOLD: f64 = 0.1;

/// Relative PRE deviation above which a t_M table row is flagged.
pub const M_FLAG_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub estimator: String,
    pub pre: f64,
    pub reference: Option<f64>,
    /// `pre - reference`
    pub deviation: Option<f64>,
    pub flagged: bool,
}

/// PRE of every named family member, in table order.
pub fn efficiency_table(params: &ParameterSet, reference: &ReferenceTables) -> Result<Vec<EfficiencyRow>> {
    catalog::efficiency_table_names()
        .into_iter()
        .map(|name| {
            let spec = catalog::parse_estimator(&name, params, CoefficientMode::TheoreticalOptimum)?;
            let value = pre(theoretical_mse(&spec, params)?, params);
            let reference = reference.efficiency_reference(&name);
            let deviation = reference.map(|r| value - r);
            Ok(EfficiencyRow {
                estimator: name,
                pre: value,
                reference,
                deviation,
                flagged: deviation.is_some_and(|d| d.abs() > EFFICIENCY_FLAG_THRESHOLD),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MRow {
    pub delta: ParamExpr,
    pub mu: ParamExpr,
    pub delta_value: f64,
    pub mu_value: f64,
    pub gamma: i32,
    pub pre: f64,
    pub reference: Option<f64>,
    /// `pre / reference - 1`
    pub relative_deviation: Option<f64>,
    pub flagged: bool,
}

/// PRE of optimum t_M for each registered `(delta, mu)` choice.
///
/// Reference values exist only for `gamma = 1`.
pub fn m_table(params: &ParameterSet, gamma: i32, reference: &ReferenceTables) -> Result<Vec<MRow>> {
    reference
        .m_family
        .iter()
        .map(|row| {
            let spec = catalog::m_member(row.delta, row.mu, gamma, params, CoefficientMode::TheoreticalOptimum);
            let value = pre(theoretical_mse(&spec, params)?, params);
            let reference = (gamma == 1).then_some(row.pre);
            let relative_deviation = reference.map(|r| value / r - 1.0);
            Ok(MRow {
                delta: row.delta,
                mu: row.mu,
                delta_value: row.delta.resolve(params),
                mu_value: row.mu.resolve(params),
                gamma,
                pre: value,
                reference,
                relative_deviation,
                flagged: relative_deviation.is_some_and(|d| d.abs() > M_FLAG_THRESHOLD),
            })
        })
        .collect()
}
