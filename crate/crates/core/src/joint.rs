//! Ligament sheets spanning pseudo-spherical and hinge joints.
//!
//! A [`Joint2DOF`] rotates its distal body about the joint centre by pitch
//! (about x) followed by yaw (about the rotated z). Passive torques are the
//! negative energy gradient of the spanning wires, assembled analytically from
//! wire tensions and the anchor velocity Jacobians.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::solver::{minimize, Bounds, Coordinate, EnergyModel, EnergySystem, MinimizeOptions};
use crate::structures::StructureKind;
use crate::table::Table;
use crate::wire::WireParams;
use crate::wrapping::{wrapped_path_2d, CircleObstacle, WrapSide, WrappedPath2D};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    /// Flexion, rad.
    pub pitch: f64,
    /// Axial rotation, rad.
    pub yaw: f64,
}

impl JointState {
    pub fn new(pitch: f64, yaw: f64) -> Self {
        Self { pitch, yaw }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointBounds {
    pub pitch: Bounds,
    pub yaw: Bounds,
}

impl Default for JointBounds {
    /// Pitch in [0, 2.1] rad, yaw in [-0.35, 0.35] rad.
    fn default() -> Self {
        Self {
            pitch: Bounds { lo: 0.0, hi: 2.1 },
            yaw: Bounds { lo: -0.35, hi: 0.35 },
        }
    }
}

impl JointBounds {
    fn check(&self, state: &JointState) -> Result<()> {
        if !self.pitch.contains(state.pitch) {
            return Err(Error::domain(format!(
                "pitch {} outside [{}, {}]",
                state.pitch, self.pitch.lo, self.pitch.hi
            )));
        }
        if !self.yaw.contains(state.yaw) {
            return Err(Error::domain(format!(
                "yaw {} outside [{}, {}]",
                state.yaw, self.yaw.lo, self.yaw.hi
            )));
        }
        Ok(())
    }
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_x_d(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_z_d(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// One wire of a sheet: proximal anchor index, distal anchor index, law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetWire {
    pub proximal: usize,
    pub distal: usize,
    pub params: WireParams,
}

/// Two bodies joined at `center`, spanned by ligament wires.
///
/// Proximal anchors are in the fixed (thigh) frame, distal anchors in the
/// moving (shank) frame; both relative to the world origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint2DOF {
    pub center: Vector3<f64>,
    pub proximal_anchors: Vec<Vector3<f64>>,
    pub distal_anchors: Vec<Vector3<f64>>,
    pub wires: Vec<SheetWire>,
    pub sheet_kind: StructureKind,
    pub bounds: JointBounds,
}

/// Medial and lateral collateral sheets, mirrored across x = 0.
///
/// Each sheet is a pair of rails in the plane `x = +-lateral_offset`: the
/// proximal rail at `z = +half_height`, the distal rail at `z = -half_height`,
/// both spanning `y` in `[sheet_offset_y, sheet_offset_y + sheet_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollateralGeometry {
    pub lateral_offset: f64,
    pub half_height: f64,
    pub sheet_width: f64,
    pub sheet_offset_y: f64,
    pub wires_per_rail: usize,
    /// Built length minus natural length of every wire, mm.
    pub preload: f64,
    pub stiffness: f64,
    pub dead_band: f64,
}

impl Default for CollateralGeometry {
    fn default() -> Self {
        Self {
            lateral_offset: 25.0,
            half_height: 30.0,
            sheet_width: 20.0,
            sheet_offset_y: 0.0,
            wires_per_rail: 4,
            preload: 1.0,
            stiffness: 1.0,
            dead_band: 0.5,
        }
    }
}

impl Joint2DOF {
    pub fn collateral(kind: StructureKind, geometry: &CollateralGeometry) -> Result<Self> {
        let g = geometry;
        if g.wires_per_rail < 2 {
            return Err(Error::config("a collateral sheet needs at least 2 wires per rail"));
        }
        if !(g.lateral_offset > 0.0 && g.half_height > 0.0 && g.sheet_width >= 0.0) {
            return Err(Error::config("collateral geometry needs positive offsets"));
        }
        let n = g.wires_per_rail;
        let ys: Vec<f64> = (0..n)
            .map(|i| g.sheet_offset_y + g.sheet_width * i as f64 / (n - 1) as f64)
            .collect();
        let base = WireParams::new(g.stiffness, 1.0, g.dead_band)?;
        let mut proximal = Vec::new();
        let mut distal = Vec::new();
        let mut wires = Vec::new();
        for side in [1.0, -1.0] {
            let offset = proximal.len();
            for &y in &ys {
                proximal.push(Vector3::new(side * g.lateral_offset, y, g.half_height));
                distal.push(Vector3::new(side * g.lateral_offset, y, -g.half_height));
            }
            for (i, j) in kind.pairs(n) {
                let built = (distal[offset + j] - proximal[offset + i]).norm();
                let natural = built - g.preload;
                if natural <= 0.0 {
                    return Err(Error::config(format!(
                        "preload {} exceeds wire length {built}",
                        g.preload
                    )));
                }
                wires.push(SheetWire {
                    proximal: offset + i,
                    distal: offset + j,
                    params: base.with_natural_length(natural)?,
                });
            }
        }
        Ok(Self {
            center: Vector3::zeros(),
            proximal_anchors: proximal,
            distal_anchors: distal,
            wires,
            sheet_kind: kind,
            bounds: JointBounds::default(),
        })
    }

    fn rotation(state: &JointState) -> Matrix3<f64> {
        rot_x(state.pitch) * rot_z(state.yaw)
    }

    fn distal_world(&self, rotation: &Matrix3<f64>, index: usize) -> Vector3<f64> {
        self.center + rotation * (self.distal_anchors[index] - self.center)
    }

    /// Built (state-independent) anchor-to-anchor lengths at the identity pose.
    pub fn rest_lengths(&self) -> Vec<f64> {
        self.wires
            .iter()
            .map(|w| (self.distal_anchors[w.distal] - self.proximal_anchors[w.proximal]).norm())
            .collect()
    }

    pub fn ligament_lengths(&self, state: &JointState) -> Result<Vec<f64>> {
        self.bounds.check(state)?;
        let r = Self::rotation(state);
        Ok(self
            .wires
            .iter()
            .map(|w| (self.distal_world(&r, w.distal) - self.proximal_anchors[w.proximal]).norm())
            .collect())
    }

    /// Whether every wire is past its dead band at `state`.
    pub fn all_taut(&self, state: &JointState) -> Result<bool> {
        Ok(self
            .ligament_lengths(state)?
            .iter()
            .zip(&self.wires)
            .all(|(l, w)| *l > w.params.engagement_length()))
    }

    pub fn energy(&self, state: &JointState) -> Result<f64> {
        Ok(self
            .ligament_lengths(state)?
            .iter()
            .zip(&self.wires)
            .map(|(l, w)| w.params.normalized().energy_unchecked(*l))
            .sum())
    }

    /// `(dE/dpitch, dE/dyaw)`.
    fn energy_gradient(&self, state: &JointState) -> Result<(f64, f64)> {
        self.bounds.check(state)?;
        let r = Self::rotation(state);
        let dr_pitch = rot_x_d(state.pitch) * rot_z(state.yaw);
        let dr_yaw = rot_x(state.pitch) * rot_z_d(state.yaw);
        let mut grad = (0.0, 0.0);
        for w in &self.wires {
            let local = self.distal_anchors[w.distal] - self.center;
            let span = self.center + r * local - self.proximal_anchors[w.proximal];
            let length = span.norm();
            if length == 0.0 {
                return Err(Error::degenerate("ligament anchors coincide"));
            }
            let t = w.params.normalized().tension_unchecked(length);
            if t == 0.0 {
                continue;
            }
            let unit = span / length;
            grad.0 += t * unit.dot(&(dr_pitch * local));
            grad.1 += t * unit.dot(&(dr_yaw * local));
        }
        Ok(grad)
    }

    /// Passive `(torque_pitch, torque_yaw)` = `-dE/d(pitch, yaw)`.
    pub fn passive_torque(&self, state: &JointState) -> Result<(f64, f64)> {
        let (gp, gy) = self.energy_gradient(state)?;
        Ok((-gp, -gy))
    }
}

/// Yaw-only energy of a joint held at a fixed pitch.
pub struct YawAtPitch<'a> {
    pub joint: &'a Joint2DOF,
    pub pitch: f64,
}

impl EnergyModel for YawAtPitch<'_> {
    fn dim(&self) -> usize {
        1
    }
    fn energy(&self, q: &[f64]) -> Result<f64> {
        self.joint.energy(&JointState::new(self.pitch, q[0]))
    }
    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![self.joint.energy_gradient(&JointState::new(self.pitch, q[0]))?.1])
    }
    fn energy_noise(&self, q: &[f64]) -> Result<f64> {
        Ok(self
            .joint
            .ligament_lengths(&JointState::new(self.pitch, q[0]))?
            .iter()
            .zip(&self.joint.wires)
            .map(|(l, w)| w.params.normalized().energy_noise_unchecked(*l))
            .sum())
    }
}

impl<'a> YawAtPitch<'a> {
    pub fn system(joint: &'a Joint2DOF, pitch: f64) -> EnergySystem<Self> {
        EnergySystem {
            model: Self { joint, pitch },
            coords: vec![Coordinate {
                name: "yaw".into(),
                bounds: Some(joint.bounds.yaw),
            }],
        }
    }
}

/// Angle-vs-torque series.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueCurve {
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
    /// Held coordinates, e.g. `("pitch", 0.0)`.
    pub fixed: Vec<(String, f64)>,
}

impl TorqueCurve {
    pub fn to_table(&self) -> Table {
        Table::new(
            vec!["angle_rad".into(), "torque".into()],
            self.abscissa.iter().zip(&self.ordinate).map(|(a, t)| vec![*a, *t]).collect(),
        )
    }
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(hi > lo) {
        return Err(Error::config(format!(
            "need steps >= 2 and an increasing range, got {steps} over [{lo}, {hi}]"
        )));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Applied torque (`-torque_yaw`) needed to hold each yaw at a fixed pitch.
pub fn torque_vs_yaw_curve(
    joint: &Joint2DOF,
    pitch_fixed: f64,
    yaw_range: (f64, f64),
    steps: usize,
) -> Result<TorqueCurve> {
    let abscissa = linspace(yaw_range.0, yaw_range.1, steps)?;
    let ordinate = abscissa
        .iter()
        .map(|&yaw| Ok(-joint.passive_torque(&JointState::new(pitch_fixed, yaw))?.1))
        .collect::<Result<Vec<_>>>()?;
    Ok(TorqueCurve {
        abscissa,
        ordinate,
        fixed: vec![("pitch".into(), pitch_fixed)],
    })
}

/// One torque-vs-yaw curve per sheet topology on the same collateral geometry.
pub fn compare_sheet_kinds(
    geometry: &CollateralGeometry,
    pitch_fixed: f64,
    yaw_range: (f64, f64),
    steps: usize,
) -> Result<Vec<(StructureKind, TorqueCurve)>> {
    StructureKind::ALL
        .iter()
        .map(|&kind| {
            let joint = Joint2DOF::collateral(kind, geometry)?;
            Ok((kind, torque_vs_yaw_curve(&joint, pitch_fixed, yaw_range, steps)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewHomeRow {
    pub pitch: f64,
    pub yaw: f64,
    /// False when the yaw relaxation hit its iteration cap or stalled.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScrewHomeTrajectory {
    pub initial_yaw: f64,
    pub rows: Vec<ScrewHomeRow>,
}

impl ScrewHomeTrajectory {
    pub fn final_yaw(&self) -> f64 {
        self.rows.last().map_or(self.initial_yaw, |r| r.yaw)
    }

    /// Rows of several trials stacked with a leading trial column.
    pub fn stack(trials: &[ScrewHomeTrajectory]) -> Table {
        let rows = trials
            .iter()
            .enumerate()
            .flat_map(|(i, t)| {
                t.rows
                    .iter()
                    .map(move |r| vec![i as f64, r.pitch, r.yaw, f64::from(u8::from(r.converged))])
            })
            .collect();
        Table::new(
            ["trial", "pitch_rad", "yaw_rad", "converged"].map(String::from).to_vec(),
            rows,
        )
    }
}

/// Quasi-static knee extension: pitch steps from `pitch_start` down to 0 and
/// at each step yaw relaxes to its passive equilibrium, warm-started from the
/// previous step.
pub fn screw_home_sim(
    joint: &Joint2DOF,
    initial_yaw: f64,
    pitch_start: f64,
    pitch_steps: usize,
    opts: &MinimizeOptions,
) -> Result<ScrewHomeTrajectory> {
    if !(pitch_start > 0.0) {
        return Err(Error::config(format!("pitch_start must be > 0, got {pitch_start}")));
    }
    if pitch_steps == 0 {
        return Err(Error::config("pitch_steps must be >= 1"));
    }
    joint.bounds.check(&JointState::new(pitch_start, initial_yaw))?;
    let mut yaw = initial_yaw;
    let mut rows = Vec::with_capacity(pitch_steps + 1);
    for k in 0..=pitch_steps {
        let pitch = if k == pitch_steps {
            0.0
        } else {
            pitch_start * (1.0 - k as f64 / pitch_steps as f64)
        };
        let system = YawAtPitch::system(joint, pitch);
        let result = minimize(&system, &[yaw], opts)?;
        yaw = result.coords[0];
        rows.push(ScrewHomeRow {
            pitch,
            yaw,
            converged: result.converged,
        });
    }
    Ok(ScrewHomeTrajectory { initial_yaw, rows })
}

/// A 1-DOF hinge whose ligament wraps a circular head centred on the hinge.
///
/// Flexion is positive and rotates the distal anchor counter-clockwise,
/// toward the proximal anchor. In extension the ligament winds further
/// around the head, lengthens and eventually engages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HipLigament {
    pub proximal_anchor: Vector2<f64>,
    /// Distal anchor at zero flexion.
    pub distal_anchor: Vector2<f64>,
    pub head: CircleObstacle,
    pub side: WrapSide,
    pub params: WireParams,
}

impl HipLigament {
    /// Iliofemoral-style default: head radius 20 mm, anchors 50 mm out and
    /// 150 deg apart around the front of the head, natural length equal to
    /// the wrapped length at `rest_angle`.
    pub fn iliofemoral(stiffness: f64, dead_band: f64, rest_angle: f64) -> Result<Self> {
        let at = |deg: f64| Vector2::new(deg.to_radians().cos(), deg.to_radians().sin()) * 50.0;
        let mut hip = Self {
            proximal_anchor: at(165.0),
            distal_anchor: at(15.0),
            head: CircleObstacle::new(Vector2::zeros(), 20.0)?,
            side: WrapSide::Left,
            params: WireParams::new(stiffness, 1.0, dead_band)?,
        };
        let rest = hip.path(rest_angle)?.total_length;
        hip.params = hip.params.with_natural_length(rest)?;
        Ok(hip)
    }

    pub fn distal_at(&self, angle: f64) -> Vector2<f64> {
        let (s, c) = angle.sin_cos();
        let rel = self.distal_anchor - self.head.center;
        self.head.center + Vector2::new(c * rel.x - s * rel.y, s * rel.x + c * rel.y)
    }

    pub fn path(&self, angle: f64) -> Result<WrappedPath2D> {
        wrapped_path_2d(&self.proximal_anchor, &self.distal_at(angle), &self.head, self.side)
    }

    /// Passive torque about the hinge, `-T dL/dangle`.
    pub fn torque(&self, angle: f64) -> Result<f64> {
        let path = self.path(angle)?;
        let t = self.params.normalized().tension_unchecked(path.total_length);
        if t == 0.0 {
            return Ok(0.0);
        }
        let (from, to) = path.distal_segment();
        let dir = (to - from).normalize();
        let rel = to - self.head.center;
        let velocity = Vector2::new(-rel.y, rel.x);
        Ok(-t * dir.dot(&velocity))
    }
}

/// Hinge torque over `angle_range`, ascending.
pub fn soft_limit_curve(hip: &HipLigament, angle_range: (f64, f64), steps: usize) -> Result<TorqueCurve> {
    let abscissa = linspace(angle_range.0, angle_range.1, steps)?;
    if angle_range.1 - angle_range.0 >= 2.0 * PI {
        return Err(Error::config("hinge range must span less than a full turn"));
    }
    let ordinate = abscissa
        .iter()
        .map(|&a| hip.torque(a))
        .collect::<Result<Vec<_>>>()?;
    Ok(TorqueCurve {
        abscissa,
        ordinate,
        fixed: Vec::new(),
    })
}

/// Largest sampled angle (scanning down from flexion) whose torque magnitude
/// exceeds `threshold`, i.e. where the ligament first engages in extension.
pub fn engagement_angle(curve: &TorqueCurve, threshold: f64) -> Option<f64> {
    curve
        .abscissa
        .iter()
        .zip(&curve.ordinate)
        .rev()
        .find(|(_, t)| t.abs() > threshold)
        .map(|(a, _)| *a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn knee(kind: StructureKind) -> Joint2DOF {
        Joint2DOF::collateral(kind, &CollateralGeometry::default()).unwrap()
    }

    #[test]
    fn identity_lengths_are_rest_lengths() {
        let j = knee(StructureKind::ParallelCross);
        assert_eq!(j.ligament_lengths(&JointState::default()).unwrap(), j.rest_lengths());
        assert_eq!(j.wires.len(), 16);
    }

    #[test]
    fn yaw_flip_permutes_lengths() {
        let j = knee(StructureKind::ParallelCross);
        let mut plus = j.ligament_lengths(&JointState::new(0.4, 0.2)).unwrap();
        let mut minus = j.ligament_lengths(&JointState::new(0.4, -0.2)).unwrap();
        plus.sort_by(f64::total_cmp);
        minus.sort_by(f64::total_cmp);
        for (a, b) in plus.iter().zip(&minus) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn quarter_pitch_rotation_by_hand() {
        let mut j = knee(StructureKind::Parallel);
        j.bounds.pitch = Bounds { lo: 0.0, hi: PI };
        let lengths = j.ligament_lengths(&JointState::new(PI / 2.0, 0.0)).unwrap();
        // x-rotation by 90 deg maps (x, y, z) to (x, -z, y)
        for (w, l) in j.wires.iter().zip(&lengths) {
            let d = j.distal_anchors[w.distal];
            let rotated = Vector3::new(d.x, -d.z, d.y);
            let expected = (rotated - j.proximal_anchors[w.proximal]).norm();
            assert_relative_eq!(*l, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn out_of_bounds_state_rejected() {
        let j = knee(StructureKind::Parallel);
        assert!(matches!(j.ligament_lengths(&JointState::new(-0.1, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(j.passive_torque(&JointState::new(0.0, 0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn slack_sheet_produces_no_torque() {
        let j = knee(StructureKind::ParallelCross);
        assert_eq!(j.passive_torque(&JointState::new(1.9, 0.1)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn symmetric_sheet_has_no_yaw_torque_at_zero_yaw() {
        for kind in StructureKind::ALL {
            let (_, ty) = knee(kind).passive_torque(&JointState::new(0.0, 0.0)).unwrap();
            assert!(ty.abs() < 1e-9, "{kind}: {ty}");
        }
    }

    #[test]
    fn yaw_curve_is_odd_and_restoring() {
        let j = knee(StructureKind::ParallelCross);
        let c = torque_vs_yaw_curve(&j, 0.0, (-0.3, 0.3), 61).unwrap();
        assert!(c.ordinate[30].abs() < 1e-9);
        for i in 0..30 {
            assert_relative_eq!(c.ordinate[i], -c.ordinate[60 - i], max_relative = 1e-9, epsilon = 1e-9);
            // applied torque has the sign of the displacement
            assert!(c.ordinate[60 - i] > 0.0);
        }
    }

    #[test]
    fn stiffer_sheets_at_ten_degrees() {
        let ten = 10f64.to_radians();
        let curves = compare_sheet_kinds(&CollateralGeometry::default(), 0.0, (-ten, ten), 3).unwrap();
        let at: Vec<f64> = curves.iter().map(|(_, c)| c.ordinate[2].abs()).collect();
        // parallel, cross, parallel-cross
        assert!(at[2] > at[1] && at[1] > at[0], "{at:?}");
    }

    #[test]
    fn yaw_relaxes_to_zero_at_full_extension() {
        let j = knee(StructureKind::ParallelCross);
        let sys = YawAtPitch::system(&j, 0.0);
        let r = minimize(&sys, &[0.2], &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.coords[0].abs() < 1e-9);
    }

    #[test]
    fn yaw_relaxes_where_the_sheet_barely_engages() {
        // wires are ~0.01 mm past their dead band here, so the energy is a
        // tiny difference of millimetre lengths
        let j = knee(StructureKind::ParallelCross);
        let sys = YawAtPitch::system(&j, 0.2548);
        let r = minimize(&sys, &[0.0313], &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.is_descending());
    }

    #[test]
    fn screw_home_zero_yaw_stays_zero_and_mirrors() {
        let j = knee(StructureKind::ParallelCross);
        let opts = MinimizeOptions::default();
        let zero = screw_home_sim(&j, 0.0, 1.96, 50, &opts).unwrap();
        assert!(zero.rows.iter().all(|r| r.yaw.abs() < 1e-12));
        let plus = screw_home_sim(&j, 0.2, 1.96, 50, &opts).unwrap();
        let minus = screw_home_sim(&j, -0.2, 1.96, 50, &opts).unwrap();
        for (p, m) in plus.rows.iter().zip(&minus.rows) {
            assert_eq!(p.pitch, m.pitch);
            assert!((p.yaw + m.yaw).abs() < 1e-9, "{} vs {}", p.yaw, m.yaw);
        }
        assert!(plus.final_yaw().abs() < 0.5f64.to_radians());
        assert_eq!(plus.rows.len(), 51);
        assert!(plus.rows.windows(2).all(|w| w[1].pitch < w[0].pitch));
    }

    #[test]
    fn screw_home_rejects_bad_schedule() {
        let j = knee(StructureKind::ParallelCross);
        let opts = MinimizeOptions::default();
        assert!(screw_home_sim(&j, 0.0, 0.0, 10, &opts).is_err());
        assert!(screw_home_sim(&j, 0.0, 1.0, 0, &opts).is_err());
        assert!(screw_home_sim(&j, 0.5, 1.0, 10, &opts).is_err());
    }

    fn hip() -> HipLigament {
        HipLigament::iliofemoral(1.0, 0.5, 0.0).unwrap()
    }

    #[test]
    fn hip_is_slack_in_flexion() {
        let h = hip();
        for deg in [0.0, 10.0, 45.0, 90.0] {
            assert_eq!(h.torque(f64::to_radians(deg)).unwrap(), 0.0);
        }
    }

    #[test]
    fn hip_torque_resists_extension_with_head_moment_arm() {
        let h = hip();
        let a = -10f64.to_radians();
        let l = h.path(a).unwrap().total_length;
        let t = h.params.tension_unchecked(l);
        // wrapped on a hinge-centred head: moment arm is the head radius
        assert_relative_eq!(h.torque(a).unwrap(), t * 20.0, max_relative = 1e-12);
    }

    #[test]
    fn engagement_matches_slack_exhaustion() {
        let h = hip();
        let c = soft_limit_curve(&h, (-25f64.to_radians(), 90f64.to_radians()), 11_501).unwrap();
        let found = engagement_angle(&c, 1e-6).unwrap();
        // wrapped length grows by r per radian of extension
        let expected = -0.5 / 20.0;
        assert!((found - expected).abs() < 0.1f64.to_radians(), "{found} vs {expected}");
    }

    proptest! {
        #[test]
        fn torque_matches_energy_gradient(pitch in 0.0f64..0.6, yaw in -0.3f64..0.3) {
            let j = knee(StructureKind::ParallelCross);
            let s = JointState::new(pitch, yaw);
            let (tp, ty) = j.passive_torque(&s).unwrap();
            let h = 1e-6;
            let e = |p: f64, y: f64| j.energy(&JointState::new(p, y)).unwrap();
            let fd_y = -(e(pitch, yaw + h) - e(pitch, yaw - h)) / (2.0 * h);
            prop_assume!(ty.abs() > 1e-3);
            prop_assert!(((ty - fd_y) / ty).abs() < 1e-5, "{} vs {}", ty, fd_y);
            if pitch > h && tp.abs() > 1e-3 {
                let fd_p = -(e(pitch + h, yaw) - e(pitch - h, yaw)) / (2.0 * h);
                prop_assert!(((tp - fd_p) / tp).abs() < 1e-5, "{} vs {}", tp, fd_p);
            }
        }

        #[test]
        fn yaw_torque_restores(pitch in 0.0f64..0.15, yaw in 0.01f64..0.3, neg in any::<bool>()) {
            let j = knee(StructureKind::ParallelCross);
            let yaw = if neg { -yaw } else { yaw };
            let s = JointState::new(pitch, yaw);
            let (_, ty) = j.passive_torque(&s).unwrap();
            prop_assume!(ty != 0.0);
            prop_assert!(ty * yaw < 0.0);
        }
    }
}
