//! Model-file ingestion: a small JSON document either lists the block
//! matrices directly or names a constructor, and parses into a validated
//! model. The fingerprint hashes the constructed model, so formatting and
//! key order never change it.

use rapflow_core::model::{
    BlockStructure, MePhase, RapFluidModel, Regime, RegimePhases, Routing, ZeroBlocks,
};
use rapflow_core::{Matrix, RowVector};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    structure: Option<StructureSpec>,
    /// Per-regime fluid rates. Only unit slopes are representable; any
    /// other magnitude is rejected and must be removed by rescaling time
    /// within the regime.
    rates: Option<RatesSpec>,
    #[serde(rename = "C_plus")]
    c_plus: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C_minus")]
    c_minus: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C_zero")]
    c_zero: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_plus_minus")]
    d_plus_minus: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_plus_zero")]
    d_plus_zero: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_minus_plus")]
    d_minus_plus: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_minus_zero")]
    d_minus_zero: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_zero_plus")]
    d_zero_plus: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D_zero_minus")]
    d_zero_minus: Option<Vec<Vec<f64>>>,
    constructor: Option<ConstructorSpec>,
    alpha: Option<Vec<f64>>,
    /// Free-form annotations; ignored by every computation and by the
    /// fingerprint.
    #[allow(dead_code)]
    labels: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureSpec {
    plus: Vec<usize>,
    minus: Vec<usize>,
    #[serde(default)]
    zero: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesSpec {
    plus: Option<f64>,
    minus: Option<f64>,
    zero: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "kind")]
enum ConstructorSpec {
    #[serde(rename = "mjp")]
    Mjp {
        generator: Vec<Vec<f64>>,
        regimes: Vec<String>,
        structure: Option<StructureSpec>,
    },
    #[serde(rename = "me_renewal")]
    MeRenewal { up: PhaseSpec, down: PhaseSpec },
    #[serde(rename = "markov_renewal_me")]
    MarkovRenewalMe {
        plus: Vec<PhaseSpec>,
        minus: Vec<PhaseSpec>,
        #[serde(default)]
        zero: Vec<PhaseSpec>,
        routing: RoutingSpec,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseSpec {
    alpha: Vec<f64>,
    #[serde(rename = "S")]
    s: Vec<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RoutingSpec {
    plus_plus: Option<Vec<Vec<f64>>>,
    plus_minus: Option<Vec<Vec<f64>>>,
    plus_zero: Option<Vec<Vec<f64>>>,
    minus_plus: Option<Vec<Vec<f64>>>,
    minus_minus: Option<Vec<Vec<f64>>>,
    minus_zero: Option<Vec<Vec<f64>>>,
    zero_plus: Option<Vec<Vec<f64>>>,
    zero_minus: Option<Vec<Vec<f64>>>,
    zero_zero: Option<Vec<Vec<f64>>>,
}

/// Parsed model plus the optional starting orbit from the file.
pub struct LoadedModel {
    pub model: RapFluidModel,
    pub alpha: Option<RowVector>,
    pub fingerprint: String,
}

pub fn parse_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Input(format!("cannot read model file {}: {e}", path.display()))
    })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "model file {} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    file.check_rates()?;
    let model = file.to_model()?;
    let alpha = file.alpha.as_ref().map(|a| RowVector::from_row_slice(a));
    let fingerprint = fingerprint(&model, alpha.as_ref());
    Ok(LoadedModel {
        model,
        alpha,
        fingerprint,
    })
}

impl ModelFile {
    fn check_rates(&self) -> Result<(), CliError> {
        let Some(r) = &self.rates else { return Ok(()) };
        for (name, rate, want) in [
            ("plus", r.plus, 1.0),
            ("minus", r.minus, 1.0),
            ("zero", r.zero, 0.0),
        ] {
            if let Some(v) = rate {
                if v != want {
                    return Err(CliError::Input(format!(
                        "general regime rates are not supported: the {name} rate must be \
                         {want}, got {v}; rescale time within each regime (the time-change \
                         t -> t/rate reduces any rate to a unit slope) and adjust the \
                         matrices instead"
                    )));
                }
            }
        }
        Ok(())
    }

    fn to_model(&self) -> Result<RapFluidModel, CliError> {
        if let Some(cons) = &self.constructor {
            let direct_fields = self.structure.is_some()
                || self.c_plus.is_some()
                || self.c_minus.is_some()
                || self.c_zero.is_some();
            if direct_fields {
                return Err(CliError::Input(
                    "give either a constructor section or direct matrices, not both".into(),
                ));
            }
            return cons.build();
        }

        let structure = self
            .structure
            .as_ref()
            .ok_or_else(|| CliError::Input("missing \"structure\" section".into()))?;
        let blocks = BlockStructure::new(
            structure.plus.clone(),
            structure.minus.clone(),
            structure.zero.clone(),
        )?;
        let has_zero = !structure.zero.is_empty();

        let c_plus = required_matrix(&self.c_plus, "C_plus")?;
        let c_minus = required_matrix(&self.c_minus, "C_minus")?;
        let d_plus_minus = required_matrix(&self.d_plus_minus, "D_plus_minus")?;
        let d_minus_plus = required_matrix(&self.d_minus_plus, "D_minus_plus")?;
        let zero = if has_zero {
            Some(ZeroBlocks {
                c_zero: required_matrix(&self.c_zero, "C_zero")?,
                d_plus_zero: required_matrix(&self.d_plus_zero, "D_plus_zero")?,
                d_zero_plus: required_matrix(&self.d_zero_plus, "D_zero_plus")?,
                d_minus_zero: required_matrix(&self.d_minus_zero, "D_minus_zero")?,
                d_zero_minus: required_matrix(&self.d_zero_minus, "D_zero_minus")?,
            })
        } else {
            for (present, name) in [
                (self.c_zero.is_some(), "C_zero"),
                (self.d_plus_zero.is_some(), "D_plus_zero"),
                (self.d_zero_plus.is_some(), "D_zero_plus"),
                (self.d_minus_zero.is_some(), "D_minus_zero"),
                (self.d_zero_minus.is_some(), "D_zero_minus"),
            ] {
                if present {
                    return Err(CliError::Input(format!(
                        "{name} given but the structure has no zero blocks"
                    )));
                }
            }
            None
        };
        Ok(RapFluidModel::new(
            blocks,
            c_plus,
            c_minus,
            d_plus_minus,
            d_minus_plus,
            zero,
        )?)
    }
}

impl ConstructorSpec {
    fn build(&self) -> Result<RapFluidModel, CliError> {
        match self {
            ConstructorSpec::Mjp {
                generator,
                regimes,
                structure,
            } => {
                let q = to_matrix(generator, "generator")?;
                let labels: Vec<Regime> = regimes
                    .iter()
                    .map(|s| parse_regime(s))
                    .collect::<Result<_, _>>()?;
                let blocks = match structure {
                    Some(s) => {
                        BlockStructure::new(s.plus.clone(), s.minus.clone(), s.zero.clone())?
                    }
                    // Default: one block per state, the plain Markov
                    // chain embedding.
                    None => {
                        let count =
                            |k: Regime| labels.iter().filter(|&&r| r == k).map(|_| 1).collect();
                        BlockStructure::new(
                            count(Regime::Plus),
                            count(Regime::Minus),
                            count(Regime::Zero),
                        )?
                    }
                };
                Ok(RapFluidModel::from_markov_jump(&q, &labels, &blocks)?)
            }
            ConstructorSpec::MeRenewal { up, down } => {
                let (ap, sp) = up.parts("up")?;
                let (am, sm) = down.parts("down")?;
                Ok(RapFluidModel::from_me_renewal(&ap, &sp, &am, &sm)?)
            }
            ConstructorSpec::MarkovRenewalMe {
                plus,
                minus,
                zero,
                routing,
            } => {
                let phase_list = |specs: &[PhaseSpec], regime: &str| {
                    specs
                        .iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let (a, s) = p.parts(&format!("{regime}[{i}]"))?;
                            Ok(MePhase::new(a, s)?)
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                };
                let phases = RegimePhases {
                    plus: phase_list(plus, "plus")?,
                    minus: phase_list(minus, "minus")?,
                    zero: phase_list(zero, "zero")?,
                };
                let mut route = Routing::default();
                for (pair, key) in [
                    (&routing.plus_plus, (Regime::Plus, Regime::Plus)),
                    (&routing.plus_minus, (Regime::Plus, Regime::Minus)),
                    (&routing.plus_zero, (Regime::Plus, Regime::Zero)),
                    (&routing.minus_plus, (Regime::Minus, Regime::Plus)),
                    (&routing.minus_minus, (Regime::Minus, Regime::Minus)),
                    (&routing.minus_zero, (Regime::Minus, Regime::Zero)),
                    (&routing.zero_plus, (Regime::Zero, Regime::Plus)),
                    (&routing.zero_minus, (Regime::Zero, Regime::Minus)),
                    (&routing.zero_zero, (Regime::Zero, Regime::Zero)),
                ] {
                    if let Some(rows) = pair {
                        route
                            .matrices
                            .insert(key, to_matrix(rows, "routing")?);
                    }
                }
                Ok(RapFluidModel::from_markov_renewal_me(&phases, &route)?)
            }
        }
    }
}

impl PhaseSpec {
    fn parts(&self, what: &str) -> Result<(RowVector, Matrix), CliError> {
        let s = to_matrix(&self.s, &format!("phase {what} S"))?;
        Ok((RowVector::from_row_slice(&self.alpha), s))
    }
}

fn parse_regime(s: &str) -> Result<Regime, CliError> {
    match s {
        "plus" | "+" => Ok(Regime::Plus),
        "minus" | "-" => Ok(Regime::Minus),
        "zero" | "0" => Ok(Regime::Zero),
        other => Err(CliError::Input(format!(
            "unknown regime label {other:?}; use \"plus\", \"minus\", or \"zero\""
        ))),
    }
}

fn required_matrix(field: &Option<Vec<Vec<f64>>>, name: &str) -> Result<Matrix, CliError> {
    match field {
        Some(rows) => to_matrix(rows, name),
        None => Err(CliError::Input(format!("missing matrix {name}"))),
    }
}

fn to_matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix, CliError> {
    if rows.is_empty() {
        return Err(CliError::Input(format!("matrix {name} has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(CliError::Input(format!("matrix {name} has empty rows")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(CliError::Input(format!(
                "matrix {name} row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Content hash of the constructed model (structure, matrices, starting
/// orbit): hex SHA-256 of a canonical rendering, so whitespace, key
/// order, and constructor-vs-direct choices wash out.
pub fn fingerprint(model: &RapFluidModel, alpha: Option<&RowVector>) -> String {
    let mut text = String::new();
    for k in Regime::ALL {
        text.push_str(&format!("structure {k}:"));
        for s in model.structure().sizes(k) {
            text.push_str(&format!(" {s}"));
        }
        text.push('\n');
    }
    for k in Regime::ALL {
        if let Some(c) = model.c(k) {
            push_matrix(&mut text, &format!("C_{k}"), c);
        }
        for l in Regime::ALL {
            if let Some(d) = model.d(k, l) {
                push_matrix(&mut text, &format!("D_{k}_{l}"), d);
            }
        }
    }
    if let Some(a) = alpha {
        text.push_str("alpha:");
        for v in a.iter() {
            text.push_str(&format!(" {}", canon(*v)));
        }
        text.push('\n');
    }
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn push_matrix(text: &mut String, name: &str, m: &Matrix) {
    text.push_str(&format!("{name} {}x{}:", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            text.push_str(&format!(" {}", canon(m[(i, j)])));
        }
    }
    text.push('\n');
}

fn canon(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
