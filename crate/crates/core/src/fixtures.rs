//! Checked-in parameter bundle and reference efficiency values.

use serde::Deserialize;

use crate::catalog::ParamExpr;
use crate::population::ParameterSet;

/// JSON text of the village-circle parameter bundle.
pub const VILLAGE_PARAMS_JSON: &str = include_str!("../fixtures/village_params.json");

/// JSON text of the reference PRE values for the two efficiency tables.
pub const REFERENCE_PRE_JSON: &str = include_str!("../fixtures/reference_pre.json");

/// The village-circle parameter bundle (N = 89, n = 23).
///
/// `P` and `Ybar` are not part of the published list; they are backed out of
/// `C_p = S_phi / P` and `C_y = S_y / Ybar`.
pub fn village_params() -> ParameterSet {
    serde_json::from_str(VILLAGE_PARAMS_JSON).expect("embedded parameter fixture is valid")
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceTables {
    pub efficiency: Vec<ReferenceRow>,
    pub m_family: Vec<ReferenceMRow>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceRow {
    pub estimator: String,
    pub pre: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceMRow {
    pub delta: ParamExpr,
    pub mu: ParamExpr,
    pub pre: f64,
}

pub fn reference_tables() -> ReferenceTables {
    serde_json::from_str(REFERENCE_PRE_JSON).expect("embedded reference fixture is valid")
}

impl ReferenceTables {
    pub fn efficiency_reference(&self, estimator: &str) -> Option<f64> {
        self.efficiency.iter().find(|r| r.estimator == estimator).map(|r| r.pre)
    }
}
