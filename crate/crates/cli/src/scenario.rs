//! Scenario files: JSON descriptions of a medium and the named inputs the
//! subcommands act on.

use std::collections::BTreeMap;
use std::path::Path;

use elastoray_core::amplitude::{BundleSpec, PacketSpec};
use elastoray_core::raytrace::BranchPolicy;
use elastoray_core::tomography::{Grid3, TensorField2};
use elastoray_core::{AnalyticField, ElasticMedium, Mode, Params, SideHint};
use elastoray_weinstein as wein;
use nalgebra::Vector3;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
}

/// Tolerances recognized by the checks, with their defaults.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("a_minus1_defect", 1e-4),
    ("b0_compat", 1e-4),
    ("characteristic", 1e-8),
    ("energy_flux", 1e-10),
    ("fio_phase", 1e-3),
    ("gauge", 1e-6),
    ("impedance", 1e-12),
    ("lens", 1e-8),
    ("order", 0.05),
    ("pde", 1e-10),
    ("route_agreement", 1e-6),
    ("snell", 1e-10),
    ("symbol_slope", -0.4),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("unknown tolerance {key}"))
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ScenarioError> {
        match self.0.get_mut(key) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(ScenarioError::Validation(format!("unknown tolerance key {key:?}"))),
        }
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

fn purely_transmitted() -> BranchPolicy {
    BranchPolicy::PurelyTransmitted
}

fn ten() -> f64 {
    10.0
}

fn one() -> C {
    C::new(1.0, 0.0)
}

/// A launch covector: position, direction and wave mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Launch {
    pub x: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub mode: Mode,
    #[serde(default = "purely_transmitted")]
    pub policy: BranchPolicy,
    #[serde(default = "ten")]
    pub max_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<SideHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDef {
    pub spec: BundleSpec,
    #[serde(default = "one")]
    pub b0_init: C,
    /// Initial a₋₁; the lower-order transport runs only when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_minus1_init: Option<C>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketDef {
    pub spec: PacketSpec,
    pub samples: Vec<usize>,
}

/// Boundary covectors on the leaf `κ = q` for lens and lenscheck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LensSweep {
    pub q: f64,
    pub mode: Mode,
    pub covectors: Vec<(Vector3<f64>, Vector3<f64>)>,
}

/// Flat interface with normal e_z between two homogeneous half-spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtSweep {
    pub incident: Params,
    pub transmitted: Params,
    /// 0 = P, 1 = SV, 2 = SH
    #[serde(default)]
    pub wave: usize,
    /// Incidence angles in radians.
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDef {
    pub distribution: wein::Distribution,
    pub packet: wein::WavePacket,
    /// Key into `packet_grids`.
    pub grid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<wein::Multiplier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fio: Option<wein::HalfWave>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback: Option<wein::Diffeo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_order: Option<f64>,
}

impl ProbeDef {
    pub fn ladder(&self) -> Vec<f64> {
        self.ladder.clone().unwrap_or_else(wein::default_ladder)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub medium: ElasticMedium,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub launches: BTreeMap<String, Launch>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bundles: BTreeMap<String, BundleDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub packets: BTreeMap<String, PacketDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tensors: BTreeMap<String, TensorField2>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, Grid3>,
    /// Second density for the density equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_tilde: Option<AnalyticField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lens: Option<LensSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt_sweep: Option<RtSweep>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub packet_grids: BTreeMap<String, wein::Grid>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub probes: BTreeMap<String, ProbeDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn new(medium: ElasticMedium) -> Self {
        Scenario {
            name: None,
            medium,
            launches: BTreeMap::new(),
            bundles: BTreeMap::new(),
            packets: BTreeMap::new(),
            tensors: BTreeMap::new(),
            grids: BTreeMap::new(),
            rho_tilde: None,
            lens: None,
            rt_sweep: None,
            packet_grids: BTreeMap::new(),
            probes: BTreeMap::new(),
            output_dir: None,
            seed: None,
            tolerances: BTreeMap::new(),
        }
    }

    /// Canonical text: pretty JSON with sorted maps and a trailing newline.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.emit().as_bytes()))
    }

    /// Defaults overlaid with the scenario's own tolerances.
    pub fn tolerances(&self) -> Result<Tolerances, ScenarioError> {
        let mut t = Tolerances(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        for (k, v) in &self.tolerances {
            t.set(k, *v)?;
        }
        Ok(t)
    }

    /// Checks medium invariants by sampling, then cross-references.
    pub fn validate(&self, seed: u64) -> Result<(), ScenarioError> {
        if let Some(v) = self.medium.validate(4096, seed).into_iter().next() {
            let at = v.point.map(|p| format!(" at sample x = {p:?}")).unwrap_or_default();
            return Err(ScenarioError::Validation(format!("{}{at}", v.message)));
        }
        self.tolerances()?;
        for (name, p) in &self.probes {
            if !self.packet_grids.contains_key(&p.grid) {
                return Err(ScenarioError::Validation(format!(
                    "probe {name:?} refers to missing packet grid {:?}",
                    p.grid
                )));
            }
        }
        for (name, l) in &self.launches {
            if l.direction.norm() == 0.0 || !(l.max_s > 0.0) {
                return Err(ScenarioError::Validation(format!(
                    "launch {name:?} needs a nonzero direction and positive max_s"
                )));
            }
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses without checking medium invariants.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

/// Reads, parses and validates.
pub fn load_scenario(path: &Path, seed: u64) -> Result<Scenario, ScenarioError> {
    let s = read_scenario(path)?;
    s.validate(seed)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "medium": {
    "regions": [
      {
        "lambda": {"constant": 1.0},
        "mu": {"constant": 1.0},
        "rho": {"constant": 1.0}
      }
    ]
  }
}"#;

    #[test]
    fn minimal_scenario_speeds() {
        let s = parse_scenario(MINIMAL).unwrap();
        s.validate(0).unwrap();
        let (cp, cs) = s.medium.wave_speeds(&Vector3::zeros(), None).unwrap();
        assert!((cp - 3f64.sqrt()).abs() < 1e-15 && (cs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_text_round_trips() {
        let s = parse_scenario(MINIMAL).unwrap();
        let canon = s.emit();
        assert_eq!(parse_scenario(&canon).unwrap().emit(), canon);
    }

    #[test]
    fn negative_shear_modulus_is_rejected() {
        let bad = MINIMAL.replace(r#""mu": {"constant": 1.0}"#, r#""mu": {"constant": -1.0}"#);
        let err = parse_scenario(&bad).unwrap().validate(0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("μ>0 and 3λ+2μ>0"), "{msg}");
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_scenario("{\n  \"medium\": {\n    \"regions\": [\n}").unwrap_err();
        match err {
            ScenarioError::Parse { line, column, .. } => assert!(line == 4 && column >= 1, "{line}:{column}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_tolerance_is_rejected() {
        let mut s = parse_scenario(MINIMAL).unwrap();
        s.tolerances.insert("nonsense".into(), 1.0);
        assert!(matches!(s.validate(0), Err(ScenarioError::Validation(_))));
    }
}
