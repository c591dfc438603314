//! Scenario files.
//!
//! A scenario is a TOML document with a `name`, a `kind`, an optional `seed`
//! and a `[parameters]` table whose schema depends on the kind. Angles in
//! scenario files are in degrees, lengths in millimetres.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Sweep,
    TorqueCurve,
    ScrewHome,
    SoftLimit,
    MomentArm,
    SlipStability,
    GradientCheck,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sweep => "sweep",
            Self::TorqueCurve => "torque_curve",
            Self::ScrewHome => "screw_home",
            Self::SoftLimit => "soft_limit",
            Self::MomentArm => "moment_arm",
            Self::SlipStability => "slip_stability",
            Self::GradientCheck => "gradient_check",
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    kind: ScenarioKind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    parameters: toml::Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub params: Parameters,
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self.params {
            Parameters::Sweep(_) => ScenarioKind::Sweep,
            Parameters::TorqueCurve(_) => ScenarioKind::TorqueCurve,
            Parameters::ScrewHome(_) => ScenarioKind::ScrewHome,
            Parameters::SoftLimit(_) => ScenarioKind::SoftLimit,
            Parameters::MomentArm(_) => ScenarioKind::MomentArm,
            Parameters::SlipStability(_) => ScenarioKind::SlipStability,
            Parameters::GradientCheck(_) => ScenarioKind::GradientCheck,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    Sweep(SweepParams),
    TorqueCurve(TorqueCurveParams),
    ScrewHome(ScrewHomeParams),
    SoftLimit(SoftLimitParams),
    MomentArm(MomentArmParams),
    SlipStability(SlipParams),
    GradientCheck(GradientCheckParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    XShear,
    YPull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SheetName {
    Parallel,
    Cross,
    ParallelCross,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub stiffness: f64,
    pub dead_band: f64,
    pub rail_separation_y: f64,
    pub rail_width_x: f64,
    pub n_wires: usize,
    pub axis: AxisName,
    pub max_displacement: f64,
    pub steps: usize,
}

/// Knee collateral sheets; geometry keys default to the built-in knee.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueCurveParams {
    pub stiffness: f64,
    pub dead_band: f64,
    pub pitch_deg: f64,
    pub yaw_min_deg: f64,
    pub yaw_max_deg: f64,
    pub steps: usize,
    #[serde(flatten)]
    pub geometry: GeometryParams,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScrewHomeParams {
    pub stiffness: f64,
    pub dead_band: f64,
    pub sheet: SheetName,
    pub trials: usize,
    pub yaw_spread_deg: f64,
    pub pitch_start_deg: f64,
    pub pitch_steps: usize,
    #[serde(flatten)]
    pub geometry: GeometryParams,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
pub struct GeometryParams {
    pub preload: Option<f64>,
    pub wires_per_rail: Option<usize>,
    pub lateral_offset: Option<f64>,
    pub half_height: Option<f64>,
    pub sheet_width: Option<f64>,
    pub sheet_offset_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftLimitParams {
    pub stiffness: f64,
    pub dead_band: f64,
    pub rest_angle_deg: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub steps: usize,
}

/// Patella geometry keys default to the built-in knee extensor.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentArmParams {
    pub flexion_min_deg: f64,
    pub flexion_max_deg: f64,
    pub steps: usize,
    pub quadriceps_anchor: Option<[f64; 2]>,
    pub tibial_anchor: Option<[f64; 2]>,
    pub patella_center: Option<[f64; 2]>,
    pub patella_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlipParams {
    pub anchor_a: [f64; 3],
    pub anchor_b: [f64; 3],
    pub center: [f64; 3],
    pub radius: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientCheckParams {
    pub stiffness: f64,
    pub dead_band: f64,
    pub configurations: usize,
    pub step: f64,
}

fn typed<T: DeserializeOwned>(kind: ScenarioKind, table: toml::Table) -> Result<T, CliError> {
    T::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(format!("[parameters] for {kind}: {}", e.message())))
}

/// Parses and schema-checks scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario =
        toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))?;
    let table = raw.parameters;
    let params = match raw.kind {
        ScenarioKind::Sweep => Parameters::Sweep(typed(raw.kind, table)?),
        ScenarioKind::TorqueCurve => {
            reject_unknown(raw.kind, &table, TORQUE_KEYS)?;
            Parameters::TorqueCurve(typed(raw.kind, table)?)
        }
        ScenarioKind::ScrewHome => {
            reject_unknown(raw.kind, &table, SCREW_KEYS)?;
            Parameters::ScrewHome(typed(raw.kind, table)?)
        }
        ScenarioKind::SoftLimit => Parameters::SoftLimit(typed(raw.kind, table)?),
        ScenarioKind::MomentArm => Parameters::MomentArm(typed(raw.kind, table)?),
        ScenarioKind::SlipStability => Parameters::SlipStability(typed(raw.kind, table)?),
        ScenarioKind::GradientCheck => Parameters::GradientCheck(typed(raw.kind, table)?),
    };
    Ok(Scenario {
        name: raw.name,
        seed: raw.seed,
        params,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

// serde cannot combine `flatten` with `deny_unknown_fields`, so the
// kinds with flattened geometry check their key set by hand.
const GEOMETRY_KEYS: &[&str] = &[
    "preload",
    "wires_per_rail",
    "lateral_offset",
    "half_height",
    "sheet_width",
    "sheet_offset_y",
];
const TORQUE_KEYS: &[&str] = &[
    "stiffness",
    "dead_band",
    "pitch_deg",
    "yaw_min_deg",
    "yaw_max_deg",
    "steps",
];
const SCREW_KEYS: &[&str] = &[
    "stiffness",
    "dead_band",
    "sheet",
    "trials",
    "yaw_spread_deg",
    "pitch_start_deg",
    "pitch_steps",
];

fn reject_unknown(kind: ScenarioKind, table: &toml::Table, keys: &[&str]) -> Result<(), CliError> {
    for key in table.keys() {
        if !keys.contains(&key.as_str()) && !GEOMETRY_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "[parameters] for {kind}: unknown field `{key}`"
            )));
        }
    }
    Ok(())
}

pub struct Bundled {
    pub name: &'static str,
    pub text: &'static str,
}

pub const BUNDLED: &[Bundled] = &[
    Bundled {
        name: "paper_sweep",
        text: include_str!("../scenarios/paper_sweep.toml"),
    },
    Bundled {
        name: "knee_compliance",
        text: include_str!("../scenarios/knee_compliance.toml"),
    },
    Bundled {
        name: "screw_home_10",
        text: include_str!("../scenarios/screw_home_10.toml"),
    },
    Bundled {
        name: "hip_soft_limit",
        text: include_str!("../scenarios/hip_soft_limit.toml"),
    },
    Bundled {
        name: "patella_moment_arm",
        text: include_str!("../scenarios/patella_moment_arm.toml"),
    },
    Bundled {
        name: "sphere_slip",
        text: include_str!("../scenarios/sphere_slip.toml"),
    },
    Bundled {
        name: "gradient_check",
        text: include_str!("../scenarios/gradient_check.toml"),
    },
];

pub fn bundled(name: &str) -> Option<&'static Bundled> {
    BUNDLED.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_parses() {
        for b in BUNDLED {
            let s = parse_scenario(b.text).unwrap_or_else(|e| panic!("{}: {e}", b.name));
            assert_eq!(s.name, b.name);
        }
    }

    #[test]
    fn missing_key_is_named() {
        let err = parse_scenario("name = \"x\"\nkind = \"sweep\"\n[parameters]\n").unwrap_err();
        assert!(err.to_string().contains("stiffness"), "{err}");
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let err = parse_scenario("name = \"x\"\nkind = \"sweep\"\nsed = 3\n").unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
    }

    #[test]
    fn flattened_kinds_reject_typos() {
        let text = include_str!("../scenarios/knee_compliance.toml").replace("preload", "preloda");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("preloda"), "{err}");
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(matches!(
            parse_scenario("name = \"x\"\nkind = \"warp\"\n"),
            Err(CliError::Config(_))
        ));
    }
}
