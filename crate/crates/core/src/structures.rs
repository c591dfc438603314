//! Traction topologies between a fixed and a moving rail.
//!
//! Two straight rails sit `rail_separation_y` apart along y, each carrying
//! `n_wires` anchors evenly spaced across `rail_width_x`. The moving rail
//! translates rigidly; every wire is built taut (natural length equals its
//! built length).

use std::fmt;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::table::Table;
use crate::wire::{Wire, WireParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttachmentLayout {
    pub rail_separation_y: f64,
    pub rail_width_x: f64,
    pub n_wires: usize,
}

impl AttachmentLayout {
    pub fn new(rail_separation_y: f64, rail_width_x: f64, n_wires: usize) -> Result<Self> {
        let layout = Self {
            rail_separation_y,
            rail_width_x,
            n_wires,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// 200 mm separation, 20 mm width, 4 wires.
    pub fn paper() -> Self {
        Self {
            rail_separation_y: 200.0,
            rail_width_x: 20.0,
            n_wires: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rail_separation_y.is_finite() && self.rail_separation_y > 0.0) {
            return Err(Error::config(format!(
                "rail_separation_y must be > 0, got {}",
                self.rail_separation_y
            )));
        }
        if !(self.rail_width_x.is_finite() && self.rail_width_x >= 0.0) {
            return Err(Error::config(format!(
                "rail_width_x must be >= 0, got {}",
                self.rail_width_x
            )));
        }
        if self.n_wires < 2 {
            return Err(Error::config(format!(
                "n_wires must be >= 2, got {}",
                self.n_wires
            )));
        }
        Ok(())
    }

    pub fn wire_pitch(&self) -> f64 {
        self.rail_width_x / (self.n_wires - 1) as f64
    }

    /// Anchor x positions shared by both rails.
    pub fn anchor_xs(&self) -> Vec<f64> {
        let pitch = self.wire_pitch();
        (0..self.n_wires).map(|i| i as f64 * pitch).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureKind {
    Parallel,
    Cross,
    ParallelCross,
}

impl StructureKind {
    pub const ALL: [StructureKind; 3] = [Self::Parallel, Self::Cross, Self::ParallelCross];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Parallel => "parallel",
            Self::Cross => "cross",
            Self::ParallelCross => "parallel_cross",
        }
    }

    /// Index pairs `(fixed, moving)` joined by a wire for `n` anchors per rail.
    ///
    /// Cross pairs anchor `i` with `n - 1 - i`; the middle anchor of an odd
    /// rail would pair with itself and is skipped.
    pub fn pairs(&self, n: usize) -> Vec<(usize, usize)> {
        let parallel = (0..n).map(|i| (i, i));
        let cross = (0..n).map(move |i| (i, n - 1 - i)).filter(|(i, j)| i != j);
        match self {
            Self::Parallel => parallel.collect(),
            Self::Cross => cross.collect(),
            Self::ParallelCross => parallel.chain(cross).collect(),
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(Self::Parallel),
            "cross" => Ok(Self::Cross),
            "parallel_cross" => Ok(Self::ParallelCross),
            other => Err(Error::config(format!("unknown structure kind `{other}`"))),
        }
    }
}

/// Wires strung between the fixed rail (y = 0) and the moving rail.
#[derive(Debug, Clone, PartialEq)]
pub struct WireNet {
    pub kind: StructureKind,
    pub wires: Vec<Wire>,
    pub fixed_rail_anchors: Vec<Vector3<f64>>,
    pub moving_rail_anchors: Vec<Vector3<f64>>,
    /// `(fixed index, moving index)` for each wire.
    pub pairing: Vec<(usize, usize)>,
}

impl WireNet {
    /// Total strain energy with the moving rail translated by `displacement`.
    pub fn total_energy(&self, displacement: &Vector3<f64>) -> Result<f64> {
        let mut energy = 0.0;
        for wire in &self.wires {
            let length = displaced_length(wire, displacement)?;
            energy += wire.params.energy_unchecked(length);
        }
        Ok(energy)
    }
}

fn displaced_length(wire: &Wire, displacement: &Vector3<f64>) -> Result<f64> {
    let length = (wire.anchor_b + displacement - wire.anchor_a).norm();
    if length > 0.0 && length.is_finite() {
        Ok(length)
    } else {
        Err(Error::degenerate(format!(
            "displacement {:?} collapses a wire",
            displacement.as_slice()
        )))
    }
}

pub fn build_structure(
    kind: StructureKind,
    layout: &AttachmentLayout,
    params: &WireParams,
) -> Result<WireNet> {
    layout.validate()?;
    let xs = layout.anchor_xs();
    let fixed: Vec<_> = xs.iter().map(|&x| Vector3::new(x, 0.0, 0.0)).collect();
    let moving: Vec<_> = xs
        .iter()
        .map(|&x| Vector3::new(x, layout.rail_separation_y, 0.0))
        .collect();
    let pairing = kind.pairs(layout.n_wires);
    let wires = pairing
        .iter()
        .map(|&(i, j)| {
            let built = (moving[j] - fixed[i]).norm();
            Wire::new(params.with_natural_length(built)?, fixed[i], moving[j])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WireNet {
        kind,
        wires,
        fixed_rail_anchors: fixed,
        moving_rail_anchors: moving,
        pairing,
    })
}

/// Restoring force on the moving rail: the sum of wire forces acting on it,
/// i.e. `-dE/d(displacement)`. It opposes the displacement.
pub fn net_restoring_force(net: &WireNet, displacement: &Vector3<f64>) -> Result<Vector3<f64>> {
    // Parallel and crossed members are summed separately so that the union
    // topology is bitwise the sum of its two halves.
    let mut parallel = Vector3::zeros();
    let mut crossed = Vector3::zeros();
    for (wire, (i, j)) in net.wires.iter().zip(&net.pairing) {
        let moving = wire.anchor_b + displacement;
        let length = displaced_length(wire, displacement)?;
        let t = wire.params.tension_unchecked(length);
        let f = (wire.anchor_a - moving) * (t / length);
        if i == j {
            parallel += f;
        } else {
            crossed += f;
        }
    }
    Ok(parallel + crossed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Shear across the rails.
    X,
    /// Pull along the wires.
    Y,
}

impl SweepAxis {
    pub fn unit(&self) -> Vector3<f64> {
        match self {
            Self::X => Vector3::x(),
            Self::Y => Vector3::y(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::X => "x_shear",
            Self::Y => "y_pull",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub displacement: f64,
    /// One entry per kind, in the order of [`SweepResult::kinds`].
    pub forces: Vec<f64>,
}

/// Force-displacement table.
///
/// Each cell is the force needed to hold the displacement along the sweep
/// axis, the negated axial component of [`net_restoring_force`]. It is
/// positive for a stiffening net under positive displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub kinds: Vec<StructureKind>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn column(&self, kind: StructureKind) -> Option<Vec<f64>> {
        let idx = self.kinds.iter().position(|&k| k == kind)?;
        Some(self.rows.iter().map(|r| r.forces[idx]).collect())
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.displacement).collect()
    }

    pub fn to_table(&self) -> Table {
        let mut columns = vec!["displacement_mm".to_string()];
        columns.extend(self.kinds.iter().map(|k| format!("{k}_force")));
        let rows = self
            .rows
            .iter()
            .map(|r| std::iter::once(r.displacement).chain(r.forces.iter().copied()).collect())
            .collect();
        Table::new(columns, rows)
    }
}

pub fn sweep_displacement(
    nets: &[WireNet],
    axis: SweepAxis,
    max_disp: f64,
    steps: usize,
) -> Result<SweepResult> {
    if !(max_disp.is_finite() && max_disp > 0.0) {
        return Err(Error::config(format!("max_disp must be > 0, got {max_disp}")));
    }
    if steps < 2 {
        return Err(Error::config(format!("steps must be >= 2, got {steps}")));
    }
    let unit = axis.unit();
    let rows = (0..steps)
        .map(|i| {
            let d = max_disp * i as f64 / (steps - 1) as f64;
            let displacement = unit * d;
            let forces = nets
                .iter()
                .map(|net| Ok(-net_restoring_force(net, &displacement)?.dot(&unit)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                displacement: d,
                forces,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis,
        kinds: nets.iter().map(|n| n.kind).collect(),
        rows,
    })
}

/// Builds all three topologies on the same layout and sweeps them together.
pub fn compare_structures(
    layout: &AttachmentLayout,
    params: &WireParams,
    axis: SweepAxis,
    max_disp: f64,
    steps: usize,
) -> Result<SweepResult> {
    let nets = StructureKind::ALL
        .iter()
        .map(|&k| build_structure(k, layout, params))
        .collect::<Result<Vec<_>>>()?;
    sweep_displacement(&nets, axis, max_disp, steps)
}
