//! Finite populations of `(y, phi)` pairs, their mixed central moments, the
//! parameter bundle consumed by the MSE formulas, and SRSWOR draws.
//!
//! All moments use divisor `N - 1` (population) or `n - 1` (sample) and are
//! computed in two passes: means first, then powered deviations.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite population with a study variable `y` and a binary attribute `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    y: Vec<f64>,
    phi: Vec<u8>,
}

impl Population {
    pub fn new(y: Vec<f64>, phi: Vec<u8>) -> Result<Self> {
        if y.len() != phi.len() {
            return Err(Error::InvalidPopulation(format!(
                "y has {} values but phi has {}",
                y.len(),
                phi.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::InvalidPopulation(format!(
                "need at least 2 units, got {}",
                y.len()
            )));
        }
        if let Some(bad) = phi.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidPopulation(format!("attribute value {bad} is not 0 or 1")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPopulation("y contains a non-finite value".into()));
        }
        Ok(Self { y, phi })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn phi(&self) -> &[u8] {
        &self.phi
    }

    pub fn y_mean(&self) -> f64 {
        mean(&self.y)
    }

    /// Attribute proportion `P = sum(phi) / N`.
    pub fn proportion(&self) -> f64 {
        proportion(&self.phi)
    }
}

/// An SRSWOR sample: the drawn unit indices and their observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    indices: Vec<usize>,
    y: Vec<f64>,
    phi: Vec<u8>,
}

impl Sample {
    /// Sample at indices already known to be distinct and in range.
    pub(crate) fn from_distinct_indices(pop: &Population, indices: Vec<usize>) -> Self {
        let y = indices.iter().map(|&i| pop.y[i]).collect();
        let phi = indices.iter().map(|&i| pop.phi[i]).collect();
        Self { indices, y, phi }
    }

    /// Builds the sample of `pop` at the given distinct unit indices.
    pub fn from_indices(pop: &Population, indices: Vec<usize>) -> Result<Self> {
        let n = indices.len();
        if n < 2 || n > pop.len() {
            return Err(Error::BadSampleSize {
                n,
                population: pop.len(),
            });
        }
        let mut seen = vec![false; pop.len()];
        for &i in &indices {
            if i >= pop.len() || seen[i] {
                return Err(Error::InvalidPopulation(format!(
                    "sample index {i} is out of range or repeated"
                )));
            }
            seen[i] = true;
        }
        let y = indices.iter().map(|&i| pop.y[i]).collect();
        let phi = indices.iter().map(|&i| pop.phi[i]).collect();
        Ok(Self { indices, y, phi })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn phi(&self) -> &[u8] {
        &self.phi
    }

    /// Divisor `n - 1` variances `(s_y2, s_phi2)`.
    pub fn variances(&self) -> (f64, f64) {
        let y_mean = mean(&self.y);
        let p = proportion(&self.phi);
        (
            raw_moment(&self.y, &self.phi, y_mean, p, 2, 0),
            raw_moment(&self.y, &self.phi, y_mean, p, 0, 2),
        )
    }

    /// Sample variances plus sample analogues of the standardized moments.
    pub fn moments(&self) -> SampleMoments {
        let y_mean = mean(&self.y);
        let p = proportion(&self.phi);
        let m = |r, q| raw_moment(&self.y, &self.phi, y_mean, p, r, q);
        let s_y2 = m(2, 0);
        let s_phi2 = m(0, 2);
        let lambdas = (s_y2 > 0.0 && s_phi2 > 0.0).then(|| SampleLambdas {
            lambda40: m(4, 0) / (s_y2 * s_y2),
            lambda04: m(0, 4) / (s_phi2 * s_phi2),
            lambda22: m(2, 2) / (s_y2 * s_phi2),
        });
        SampleMoments {
            n: self.len(),
            s_y2,
            s_phi2,
            lambdas,
        }
    }
}

/// Sample-side summary consumed by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub n: usize,
    pub s_y2: f64,
    pub s_phi2: f64,
    /// `None` when either sample variance is zero.
    pub lambdas: Option<SampleLambdas>,
}

impl SampleMoments {
    /// Summary carrying only the two variances, for hand-specified cases.
    pub fn from_variances(n: usize, s_y2: f64, s_phi2: f64) -> Self {
        Self {
            n,
            s_y2,
            s_phi2,
            lambdas: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLambdas {
    pub lambda40: f64,
    pub lambda04: f64,
    pub lambda22: f64,
}

/// The moment and parameter bundle every theoretical formula consumes.
///
/// JSON keys are the flat names `N, n, S_y2, S_phi2, P, Ybar, C_y, C_p,
/// rho_pb, beta2_phi, k_pb, lambda40, lambda04, lambda22`; `f` and `g` are
/// derived and, if present in input, must agree with `n / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameterSet")]
pub struct ParameterSet {
    #[serde(rename = "N")]
    pub population_size: usize,
    #[serde(rename = "n")]
    pub sample_size: usize,
    #[serde(rename = "S_y2")]
    pub s_y2: f64,
    #[serde(rename = "S_phi2")]
    pub s_phi2: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Ybar")]
    pub y_mean: f64,
    #[serde(rename = "C_y")]
    pub c_y: f64,
    #[serde(rename = "C_p")]
    pub c_p: f64,
    pub rho_pb: f64,
    pub beta2_phi: f64,
    pub k_pb: f64,
    pub lambda40: f64,
    pub lambda04: f64,
    pub lambda22: f64,
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameterSet {
    #[serde(rename = "N")]
    population_size: usize,
    #[serde(rename = "n")]
    sample_size: usize,
    #[serde(rename = "S_y2")]
    s_y2: f64,
    #[serde(rename = "S_phi2")]
    s_phi2: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "Ybar")]
    y_mean: f64,
    #[serde(rename = "C_y")]
    c_y: f64,
    #[serde(rename = "C_p")]
    c_p: f64,
    rho_pb: f64,
    beta2_phi: f64,
    k_pb: f64,
    lambda40: f64,
    lambda04: f64,
    lambda22: f64,
    f: Option<f64>,
    g: Option<f64>,
}

impl TryFrom<RawParameterSet> for ParameterSet {
    type Error = Error;

    fn try_from(raw: RawParameterSet) -> Result<Self> {
        let params = ParameterSet::from_bundle(ParameterBundle {
            population_size: raw.population_size,
            sample_size: raw.sample_size,
            s_y2: raw.s_y2,
            s_phi2: raw.s_phi2,
            p: raw.p,
            y_mean: raw.y_mean,
            c_y: raw.c_y,
            c_p: raw.c_p,
            rho_pb: raw.rho_pb,
            beta2_phi: raw.beta2_phi,
            k_pb: raw.k_pb,
            lambda40: raw.lambda40,
            lambda04: raw.lambda04,
            lambda22: raw.lambda22,
        })?;
        for (name, supplied, derived) in [("f", raw.f, params.f), ("g", raw.g, params.g)] {
            if let Some(v) = supplied {
                if (v - derived).abs() > 1e-9 {
                    return Err(Error::InvalidParameters(format!(
                        "{name} = {v} is inconsistent with n/N (expected {derived})"
                    )));
                }
            }
        }
        Ok(params)
    }
}

/// Externally supplied parameters, before `f` and `g` are derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBundle {
    pub population_size: usize,
    pub sample_size: usize,
    pub s_y2: f64,
    pub s_phi2: f64,
    pub p: f64,
    pub y_mean: f64,
    pub c_y: f64,
    pub c_p: f64,
    pub rho_pb: f64,
    pub beta2_phi: f64,
    pub k_pb: f64,
    pub lambda40: f64,
    pub lambda04: f64,
    pub lambda22: f64,
}

impl ParameterSet {
    /// Builds and validates a parameter set from published or hand-entered
    /// values. `k_pb` is taken as given; see [`ParameterSet::k_pb_residual`].
    pub fn from_bundle(b: ParameterBundle) -> Result<Self> {
        let params = Self::assemble(b);
        params.validate()?;
        Ok(params)
    }

    fn assemble(b: ParameterBundle) -> Self {
        let f = b.sample_size as f64 / b.population_size as f64;
        Self {
            population_size: b.population_size,
            sample_size: b.sample_size,
            s_y2: b.s_y2,
            s_phi2: b.s_phi2,
            p: b.p,
            y_mean: b.y_mean,
            c_y: b.c_y,
            c_p: b.c_p,
            rho_pb: b.rho_pb,
            beta2_phi: b.beta2_phi,
            k_pb: b.k_pb,
            lambda40: b.lambda40,
            lambda04: b.lambda04,
            lambda22: b.lambda22,
            f,
            g: 1.0 - f,
        }
    }

    /// Extracts the full parameter set of `pop` for samples of size `n`.
    ///
    /// `beta2_phi` is the attribute's `lambda04`; `C_y = S_y / Ybar` and
    /// `C_p = S_phi / P`. The moment inequalities checked by
    /// [`ParameterSet::validate`] are not enforced here: with divisor
    /// `N - 1` they can fail by `O(1/N)` on legitimate populations.
    pub fn from_population(pop: &Population, n: usize) -> Result<Self> {
        let big_n = pop.len();
        if n < 2 || n > big_n {
            return Err(Error::BadSampleSize { n, population: big_n });
        }
        let y_mean = pop.y_mean();
        let p = pop.proportion();
        let m = |r, q| raw_moment(&pop.y, &pop.phi, y_mean, p, r, q);
        let mu20 = m(2, 0);
        let mu02 = m(0, 2);
        if mu20 <= 0.0 {
            return Err(Error::DegenerateVariable("study variable"));
        }
        if mu02 <= 0.0 {
            return Err(Error::DegenerateVariable("attribute"));
        }
        if y_mean == 0.0 {
            return Err(Error::DegenerateVariable("study variable mean (C_y undefined)"));
        }
        let lambda40 = m(4, 0) / (mu20 * mu20);
        let lambda04 = m(0, 4) / (mu02 * mu02);
        let lambda22 = m(2, 2) / (mu20 * mu02);
        let rho_pb = m(1, 1) / (mu20 * mu02).sqrt();
        let c_y = mu20.sqrt() / y_mean;
        let c_p = mu02.sqrt() / p;
        Ok(Self::assemble(ParameterBundle {
            population_size: big_n,
            sample_size: n,
            s_y2: mu20,
            s_phi2: mu02,
            p,
            y_mean,
            c_y,
            c_p,
            rho_pb,
            beta2_phi: lambda04,
            k_pb: rho_pb * c_y / c_p,
            lambda40,
            lambda04,
            lambda22,
        }))
    }

    /// Same population parameters for a different sample size.
    pub fn with_sample_size(&self, n: usize) -> Result<Self> {
        if n < 2 || n > self.population_size {
            return Err(Error::BadSampleSize {
                n,
                population: self.population_size,
            });
        }
        let f = n as f64 / self.population_size as f64;
        Ok(Self {
            sample_size: n,
            f,
            g: 1.0 - f,
            ..*self
        })
    }

    pub fn n(&self) -> f64 {
        self.sample_size as f64
    }

    /// Checks the structural and moment invariants of the bundle.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameters(msg));
        let reals = [
            ("S_y2", self.s_y2),
            ("S_phi2", self.s_phi2),
            ("P", self.p),
            ("Ybar", self.y_mean),
            ("C_y", self.c_y),
            ("C_p", self.c_p),
            ("rho_pb", self.rho_pb),
            ("beta2_phi", self.beta2_phi),
            ("k_pb", self.k_pb),
            ("lambda40", self.lambda40),
            ("lambda04", self.lambda04),
            ("lambda22", self.lambda22),
        ];
        if let Some((name, _)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return fail(format!("{name} is not finite"));
        }
        if self.population_size < 2 {
            return fail(format!("N = {} must be at least 2", self.population_size));
        }
        if self.sample_size < 2 || self.sample_size > self.population_size {
            return fail(format!(
                "n = {} must satisfy 2 <= n <= N = {}",
                self.sample_size, self.population_size
            ));
        }
        if self.s_y2 <= 0.0 || self.s_phi2 <= 0.0 {
            return fail("S_y2 and S_phi2 must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return fail(format!("P = {} is outside [0, 1]", self.p));
        }
        if !(-1.0..=1.0).contains(&self.rho_pb) {
            return fail(format!("rho_pb = {} is outside [-1, 1]", self.rho_pb));
        }
        if self.lambda40 < 1.0 || self.lambda04 < 1.0 {
            return fail(format!(
                "kurtosis bound violated: lambda40 = {}, lambda04 = {} (both must be >= 1)",
                self.lambda40, self.lambda04
            ));
        }
        if self.cauchy_schwarz_gap() < -1e-10 {
            return fail(format!(
                "Cauchy-Schwarz bound violated: (lambda22 - 1)^2 = {} exceeds (lambda40 - 1)(lambda04 - 1) = {}",
                (self.lambda22 - 1.0).powi(2),
                (self.lambda40 - 1.0) * (self.lambda04 - 1.0)
            ));
        }
        Ok(())
    }

    /// `(lambda40 - 1)(lambda04 - 1) - (lambda22 - 1)^2`, nonnegative for a
    /// valid bundle.
    pub fn cauchy_schwarz_gap(&self) -> f64 {
        (self.lambda40 - 1.0) * (self.lambda04 - 1.0) - (self.lambda22 - 1.0).powi(2)
    }

    /// Relative difference between the stored `k_pb` and `rho_pb * C_y / C_p`.
    pub fn k_pb_residual(&self) -> f64 {
        let implied = self.rho_pb * self.c_y / self.c_p;
        (self.k_pb - implied).abs() / implied.abs().max(f64::MIN_POSITIVE)
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn proportion(phi: &[u8]) -> f64 {
    phi.iter().map(|&v| f64::from(v)).sum::<f64>() / phi.len() as f64
}

fn raw_moment(y: &[f64], phi: &[u8], y_mean: f64, p: f64, r: u32, q: u32) -> f64 {
    let (r, q) = (r as i32, q as i32);
    let sum: f64 = y
        .iter()
        .zip(phi)
        .map(|(&yi, &pi)| (yi - y_mean).powi(r) * (f64::from(pi) - p).powi(q))
        .sum();
    sum / (y.len() - 1) as f64
}

/// Mixed central moment `mu_rq` with divisor `N - 1`.
pub fn central_moment(pop: &Population, r: u32, q: u32) -> f64 {
    raw_moment(&pop.y, &pop.phi, pop.y_mean(), pop.proportion(), r, q)
}

/// Standardized moment `lambda_rq = mu_rq / (mu20^(r/2) mu02^(q/2))`.
pub fn lambda_moment(pop: &Population, r: u32, q: u32) -> Result<f64> {
    let mut scale = 1.0;
    if r > 0 {
        let mu20 = central_moment(pop, 2, 0);
        if mu20 <= 0.0 {
            return Err(Error::DegenerateVariable("study variable"));
        }
        scale *= mu20.powf(f64::from(r) / 2.0);
    }
    if q > 0 {
        let mu02 = central_moment(pop, 0, 2);
        if mu02 <= 0.0 {
            return Err(Error::DegenerateVariable("attribute"));
        }
        scale *= mu02.powf(f64::from(q) / 2.0);
    }
    Ok(central_moment(pop, r, q) / scale)
}

/// Full parameter set of `pop` for samples of size `n`.
pub fn parameter_set(pop: &Population, n: usize) -> Result<ParameterSet> {
    ParameterSet::from_population(pop, n)
}

/// Draws `n` distinct units uniformly without replacement.
///
/// The draw is a pure function of `(pop, n, seed)`: a ChaCha8 stream seeded
/// with `seed` feeds Floyd/Fisher-Yates index selection.
pub fn draw_srswor(pop: &Population, n: usize, seed: u64) -> Result<Sample> {
    let indices = srswor_indices(pop.len(), n, seed)?;
    Ok(Sample::from_distinct_indices(pop, indices))
}

pub(crate) fn srswor_indices(population: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n < 2 || n > population {
        return Err(Error::BadSampleSize { n, population });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, population, n).into_vec())
}

/// `(s_y2, s_phi2)` with divisor `n - 1`.
pub fn sample_variances(s: &Sample) -> (f64, f64) {
    s.variances()
}

/// Reads a `y,phi` CSV (header required) into a population, in file order.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Population> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv(&text)
}

/// Parses CSV text in the `load_csv` format.
pub fn parse_csv(text: &str) -> Result<Population> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.len() != 2 || &header[0] != "y" || &header[1] != "phi" {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `y,phi`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut y = Vec::new();
    let mut phi = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let yi: f64 = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("y value {:?} is not a number", &record[0]),
        })?;
        if !yi.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("y value {:?} is not finite", &record[0]),
            });
        }
        let raw_phi = &record[1];
        let value: f64 = raw_phi.parse().map_err(|_| Error::Parse {
            line,
            message: format!("phi value {raw_phi:?} is not a number"),
        })?;
        let pi = if value == 0.0 {
            0
        } else if value == 1.0 {
            1
        } else {
            return Err(Error::AttributeDomain {
                line,
                value: raw_phi.to_string(),
            });
        };
        y.push(yi);
        phi.push(pi);
    }
    if y.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows after header".into(),
        });
    }
    if y.len() < 2 {
        return Err(Error::Parse {
            line: 2,
            message: "a population needs at least 2 rows".into(),
        });
    }
    Population::new(y, phi)
}
