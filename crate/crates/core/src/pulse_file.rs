//! JSON pulse files. Reals are written with 17 significant digits so a load
//! reproduces every amplitude and `Δt` bit for bit.

use std::io;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{GeckoError, Result};
use crate::operator::{CMatrix, PauliString};
use crate::pulse::{gate_target, ControlGenerator, DriftTerm, GateTarget, HamiltonianSpec, PulseParams, TargetName};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, serde::Serialize, Deserialize)]
pub struct QualityRecord {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, Deserialize)]
pub struct PulseMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tool_version: String,
}

impl PulseMetadata {
    pub fn new(fidelity: f64, seed: Option<u64>) -> Self {
        Self {
            fidelity: Some(fidelity),
            quality: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_quality(mut self, name: &str, value: f64) -> Self {
        self.quality = Some(QualityRecord { name: name.to_string(), value });
        self
    }
}

#[derive(Clone, Debug)]
pub struct PulseFile {
    pub spec: HamiltonianSpec,
    pub pulse: PulseParams,
    pub target: GateTarget,
    pub metadata: PulseMetadata,
}

#[derive(serde::Serialize, Deserialize)]
struct DriftRepr {
    pauli: String,
    g: f64,
}

#[derive(serde::Serialize, Deserialize)]
struct TermRepr {
    pauli: String,
    coeff: f64,
}

#[derive(serde::Serialize, Deserialize)]
struct TargetRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(serde::Serialize, Deserialize)]
struct FileRepr {
    format_version: String,
    n: usize,
    drift: Vec<DriftRepr>,
    controls: Vec<Vec<TermRepr>>,
    #[serde(rename = "L")]
    l: usize,
    dt: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    optimize_dt: bool,
    phi: Vec<Vec<f64>>,
    target: TargetRepr,
    #[serde(default)]
    metadata: PulseMetadata,
}

/// Pretty JSON with every float as `{:.16e}`.
struct PreciseFormatter(PrettyFormatter<'static>);

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

impl PulseFile {
    pub fn new(spec: HamiltonianSpec, pulse: PulseParams, target: GateTarget, metadata: PulseMetadata) -> Result<Self> {
        pulse.check_against(&spec)?;
        if target.dim() != spec.dim() {
            return Err(GeckoError::input("target dimension does not match the Hamiltonian"));
        }
        Ok(Self { spec, pulse, target, metadata })
    }

    pub fn to_json(&self) -> Result<String> {
        let target = match self.target.name() {
            TargetName::Custom => TargetRepr {
                name: None,
                matrix: Some(
                    self.target
                        .matrix()
                        .row_iter()
                        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                        .collect(),
                ),
            },
            named => TargetRepr { name: Some(named.as_str().to_string()), matrix: None },
        };
        let repr = FileRepr {
            format_version: FORMAT_VERSION.to_string(),
            n: self.spec.n_qubits(),
            drift: self
                .spec
                .drift()
                .iter()
                .map(|d| DriftRepr { pauli: d.pauli.label(), g: d.strength })
                .collect(),
            controls: self
                .spec
                .controls()
                .iter()
                .map(|c| c.terms().iter().map(|(p, w)| TermRepr { pauli: p.label(), coeff: *w }).collect())
                .collect(),
            l: self.pulse.n_segments(),
            dt: self.pulse.dt(),
            optimize_dt: self.pulse.optimize_dt(),
            phi: self.pulse.rows(),
            target,
            metadata: self.metadata.clone(),
        };
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
        repr.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version") {
            Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
            Some(other) => {
                return Err(GeckoError::format(format!(
                    "unsupported format_version {other}, expected \"{FORMAT_VERSION}\""
                )))
            }
            None => {
                return Err(GeckoError::format(format!(
                    "missing field `format_version` (expected \"{FORMAT_VERSION}\")"
                )))
            }
        }
        // parse the text again (not the value) so errors keep line/column
        let repr: FileRepr = serde_json::from_str(text)?;
        let bad = |msg: String| GeckoError::format(msg);

        let drift = repr
            .drift
            .iter()
            .map(|d| Ok(DriftTerm { pauli: PauliString::new(&d.pauli)?, strength: d.g }))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| bad(format!("drift: {e}")))?;
        let controls = repr
            .controls
            .iter()
            .enumerate()
            .map(|(k, terms)| {
                let terms = terms
                    .iter()
                    .map(|t| Ok((PauliString::new(&t.pauli)?, t.coeff)))
                    .collect::<Result<Vec<_>>>()?;
                ControlGenerator::new(terms).map_err(|e| bad(format!("controls[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = HamiltonianSpec::new(repr.n, drift, controls).map_err(|e| bad(e.to_string()))?;

        if repr.phi.len() != repr.l {
            return Err(bad(format!("phi has {} rows but L = {}", repr.phi.len(), repr.l)));
        }
        if let Some((l, row)) = repr.phi.iter().enumerate().find(|(_, r)| r.len() != spec.n_controls()) {
            return Err(bad(format!("phi[{l}] has {} entries, expected {}", row.len(), spec.n_controls())));
        }
        let pulse = PulseParams::new(repr.phi, repr.dt)
            .map_err(|e| bad(e.to_string()))?
            .with_optimize_dt(repr.optimize_dt);

        let target = match (repr.target.name.as_deref(), repr.target.matrix) {
            (_, Some(rows)) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(bad("target matrix is not square".into()));
                }
                let m = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                GateTarget::custom(m).map_err(|e| bad(e.to_string()))?
            }
            (Some(name), None) => gate_target(name).map_err(|e| bad(e.to_string()))?,
            (None, None) => return Err(bad("target needs a name or a matrix".into())),
        };
        PulseFile::new(spec, pulse, target, repr.metadata).map_err(|e| bad(e.to_string()))
    }
}

pub fn save_pulse(path: impl AsRef<Path>, file: &PulseFile) -> Result<()> {
    std::fs::write(path, file.to_json()?)?;
    Ok(())
}

pub fn load_pulse(path: impl AsRef<Path>) -> Result<PulseFile> {
    PulseFile::from_json(&std::fs::read_to_string(path)?)
}
