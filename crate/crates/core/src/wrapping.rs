//! Wire paths over circular and spherical obstacles.
//!
//! A path that would cut through a circle is replaced by the shortest
//! tangent-arc-tangent route on one side of it. Moment arms are read off the
//! straight segment that acts on the distal anchor. On a sphere, a linear
//! wire can roll its wrap plane about the anchor-anchor axis; the length
//! profile over that rotation tells whether the nominal route is stable.

use std::f64::consts::{PI, TAU};

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleObstacle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl CircleObstacle {
    pub fn new(center: Vector2<f64>, radius: f64) -> Result<Self> {
        if radius.is_finite() && radius > 0.0 {
            Ok(Self { center, radius })
        } else {
            Err(Error::config(format!("obstacle radius must be > 0, got {radius}")))
        }
    }
}

/// Side of the directed chord `a -> b` the path is pushed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WrapSide {
    /// Shorter of the two sides, ties go left.
    #[default]
    Auto,
    /// Into the half-plane left of `a -> b` (clockwise around the obstacle).
    Left,
    /// Into the half-plane right of `a -> b` (counter-clockwise).
    Right,
}

/// Contact portion of a wrapped path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc2D {
    pub entry: Vector2<f64>,
    pub exit: Vector2<f64>,
    /// Signed sweep from entry to exit, positive counter-clockwise.
    pub angle: f64,
    pub center: Vector2<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedPath2D {
    pub start: Vector2<f64>,
    pub end: Vector2<f64>,
    pub arc: Option<Arc2D>,
    pub total_length: f64,
}

impl WrappedPath2D {
    /// `(from, to)` of the straight segment reaching `end`.
    pub fn distal_segment(&self) -> (Vector2<f64>, Vector2<f64>) {
        match &self.arc {
            Some(arc) => (arc.exit, self.end),
            None => (self.start, self.end),
        }
    }

    /// `(from, to)` of the straight segment leaving `start`.
    pub fn proximal_segment(&self) -> (Vector2<f64>, Vector2<f64>) {
        match &self.arc {
            Some(arc) => (self.start, arc.entry),
            None => (self.start, self.end),
        }
    }

    /// Lengths of the straight-in, arc and straight-out parts.
    pub fn part_lengths(&self) -> [f64; 3] {
        match &self.arc {
            Some(arc) => [
                (arc.entry - self.start).norm(),
                arc.radius * arc.angle.abs(),
                (self.end - arc.exit).norm(),
            ],
            None => [(self.end - self.start).norm(), 0.0, 0.0],
        }
    }

    /// Tangent points as a one-row table (NaN when there is no arc).
    pub fn to_table(&self) -> Table {
        let (entry, exit, angle) = match &self.arc {
            Some(a) => (a.entry, a.exit, a.angle),
            None => (Vector2::repeat(f64::NAN), Vector2::repeat(f64::NAN), 0.0),
        };
        Table::new(
            ["length_mm", "entry_x", "entry_y", "exit_x", "exit_y", "arc_rad"]
                .map(String::from)
                .to_vec(),
            vec![vec![self.total_length, entry.x, entry.y, exit.x, exit.y, angle]],
        )
    }
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn polar(center: &Vector2<f64>, radius: f64, angle: f64) -> Vector2<f64> {
    center + Vector2::new(angle.cos(), angle.sin()) * radius
}

/// Distance from `p` to the segment `a`-`b`.
fn segment_distance(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

fn wrap_on_side(a: &Vector2<f64>, b: &Vector2<f64>, obstacle: &CircleObstacle, left: bool) -> WrappedPath2D {
    let c = obstacle.center;
    let r = obstacle.radius;
    let (da, db) = ((a - c).norm(), (b - c).norm());
    let theta_a = (a.y - c.y).atan2(a.x - c.x);
    let theta_b = (b.y - c.y).atan2(b.x - c.x);
    let (beta_a, beta_b) = ((r / da).acos(), (r / db).acos());
    let (entry_angle, exit_angle, angle) = if left {
        let entry = theta_a - beta_a;
        let exit = theta_b + beta_b;
        (entry, exit, -(entry - exit).rem_euclid(TAU))
    } else {
        let entry = theta_a + beta_a;
        let exit = theta_b - beta_b;
        (entry, exit, (exit - entry).rem_euclid(TAU))
    };
    let entry = polar(&c, r, entry_angle);
    let exit = polar(&c, r, exit_angle);
    let total_length = (da * da - r * r).sqrt() + r * angle.abs() + (db * db - r * r).sqrt();
    WrappedPath2D {
        start: *a,
        end: *b,
        arc: Some(Arc2D {
            entry,
            exit,
            angle,
            center: c,
            radius: r,
        }),
        total_length,
    }
}

/// Shortest path from `a` to `b` that does not cut through `obstacle`,
/// restricted to `side` when the straight segment is blocked.
pub fn wrapped_path_2d(
    a: &Vector2<f64>,
    b: &Vector2<f64>,
    obstacle: &CircleObstacle,
    side: WrapSide,
) -> Result<WrappedPath2D> {
    for (name, p) in [("start", a), ("end", b)] {
        if (p - obstacle.center).norm() <= obstacle.radius {
            return Err(Error::domain(format!(
                "{name} anchor ({}, {}) is not outside the obstacle",
                p.x, p.y
            )));
        }
    }
    if segment_distance(a, b, &obstacle.center) >= obstacle.radius {
        return Ok(WrappedPath2D {
            start: *a,
            end: *b,
            arc: None,
            total_length: (b - a).norm(),
        });
    }
    Ok(match side {
        WrapSide::Left => wrap_on_side(a, b, obstacle, true),
        WrapSide::Right => wrap_on_side(a, b, obstacle, false),
        WrapSide::Auto => {
            let left = wrap_on_side(a, b, obstacle, true);
            let right = wrap_on_side(a, b, obstacle, false);
            let tie = 1e-12 * left.total_length;
            if right.total_length < left.total_length - tie {
                right
            } else {
                left
            }
        }
    })
}

/// Perpendicular distance from `pivot` to the line of action on the distal anchor.
pub fn moment_arm(path: &WrappedPath2D, pivot: &Vector2<f64>) -> Result<f64> {
    let (from, to) = path.distal_segment();
    let dir = to - from;
    let len = dir.norm();
    if !(len > 1e-12 * (1.0 + to.norm())) {
        return Err(Error::degenerate("distal segment has zero length"));
    }
    Ok(cross(&dir, &(pivot - from)).abs() / len)
}

/// A knee-like extensor routed over a patella boss.
///
/// The femur pivot sits at the origin, +x anterior, +y proximal. The
/// quadriceps anchor is fixed on the thigh; the tibial anchor rotates with
/// the shank about the pivot (flexion positive, clockwise in this frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatellaScenario {
    pub pivot: Vector2<f64>,
    pub quadriceps_anchor: Vector2<f64>,
    pub tibial_anchor: Vector2<f64>,
    pub patella: CircleObstacle,
    /// Route around the boss. The default keeps the tendon anterior.
    pub side: WrapSide,
}

impl Default for PatellaScenario {
    fn default() -> Self {
        Self {
            pivot: Vector2::zeros(),
            quadriceps_anchor: Vector2::new(30.0, 150.0),
            tibial_anchor: Vector2::new(30.0, -60.0),
            patella: CircleObstacle {
                center: Vector2::new(25.0, 5.0),
                radius: 15.0,
            },
            side: WrapSide::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentArmComparison {
    pub with_obstacle: f64,
    pub without_obstacle: f64,
}

impl MomentArmComparison {
    /// Fractional loss of moment arm when the obstacle is removed.
    pub fn reduction_ratio(&self) -> f64 {
        1.0 - self.without_obstacle / self.with_obstacle
    }
}

impl PatellaScenario {
    pub fn tibial_anchor_at(&self, flexion: f64) -> Vector2<f64> {
        let rel = self.tibial_anchor - self.pivot;
        let (s, c) = (-flexion).sin_cos();
        self.pivot + Vector2::new(c * rel.x - s * rel.y, s * rel.x + c * rel.y)
    }

    pub fn path_at(&self, flexion: f64) -> Result<WrappedPath2D> {
        wrapped_path_2d(
            &self.quadriceps_anchor,
            &self.tibial_anchor_at(flexion),
            &self.patella,
            self.side,
        )
    }

    pub fn compare_at(&self, flexion: f64) -> Result<MomentArmComparison> {
        let with_obstacle = moment_arm(&self.path_at(flexion)?, &self.pivot)?;
        let bare = WrappedPath2D {
            start: self.quadriceps_anchor,
            end: self.tibial_anchor_at(flexion),
            arc: None,
            total_length: (self.tibial_anchor_at(flexion) - self.quadriceps_anchor).norm(),
        };
        let without_obstacle = moment_arm(&bare, &self.pivot)?;
        Ok(MomentArmComparison {
            with_obstacle,
            without_obstacle,
        })
    }

    /// `angle_rad, with_patella_mm, without_patella_mm` over a flexion range.
    pub fn moment_arm_curve(&self, start: f64, end: f64, steps: usize) -> Result<Table> {
        if steps < 2 || !(end > start) {
            return Err(Error::config("moment arm curve needs steps >= 2 and end > start"));
        }
        let rows = (0..steps)
            .map(|i| {
                let angle = start + (end - start) * i as f64 / (steps - 1) as f64;
                let cmp = self.compare_at(angle)?;
                Ok(vec![angle, cmp.with_obstacle, cmp.without_obstacle])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table::new(
            ["angle_rad", "with_patella_mm", "without_patella_mm"]
                .map(String::from)
                .to_vec(),
            rows,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereObstacle {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl SphereObstacle {
    pub fn new(center: Vector3<f64>, radius: f64) -> Result<Self> {
        if radius.is_finite() && radius > 0.0 {
            Ok(Self { center, radius })
        } else {
            Err(Error::config(format!("sphere radius must be > 0, got {radius}")))
        }
    }
}

/// Which great-circle route is the nominal (phi = 0) wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NominalWrap {
    /// Over the far side of the centre as seen from the chord.
    #[default]
    OverCenter,
    /// Around the side the chord already passes closest to.
    ChordSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlipStability {
    /// Nominal route is a strict local minimum of length.
    StableMin,
    /// Length does not change with the wrap plane.
    Neutral,
    /// Tilting the wrap plane shortens the path; the wire slides off.
    Unstable,
}

impl SlipStability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::StableMin => "stable_min",
            Self::Neutral => "neutral",
            Self::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereSlipReport {
    /// `(phi, path length)` over `[-pi, pi)`.
    pub length_profile: Vec<(f64, f64)>,
    pub stability: SlipStability,
    /// Second difference of length at phi = 0.
    pub margin: f64,
}

impl SphereSlipReport {
    pub fn to_table(&self) -> Table {
        Table::new(
            vec!["phi_rad".into(), "length_mm".into()],
            self.length_profile.iter().map(|&(p, l)| vec![p, l]).collect(),
        )
    }
}

/// Flatness threshold on the second difference.
pub const SLIP_NEUTRAL_TOL: f64 = 1e-9;

pub fn slip_stability_sphere(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    sphere: &SphereObstacle,
    samples: usize,
) -> Result<SphereSlipReport> {
    slip_stability_sphere_with(a, b, sphere, samples, NominalWrap::default())
}

/// Rolls the wrap plane by phi about the `a -> b` axis and wraps the wire
/// over the plane's section circle on the far side of the chord.
pub fn slip_stability_sphere_with(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    sphere: &SphereObstacle,
    samples: usize,
    nominal: NominalWrap,
) -> Result<SphereSlipReport> {
    if samples < 4 {
        return Err(Error::config(format!("need at least 4 samples, got {samples}")));
    }
    let r = sphere.radius;
    for (name, p) in [("a", a), ("b", b)] {
        if (p - sphere.center).norm() <= r {
            return Err(Error::domain(format!("anchor {name} is not outside the sphere")));
        }
    }
    let ab = b - a;
    let span = ab.norm();
    let axis = ab / span;
    let t_foot = (sphere.center - a).dot(&axis);
    let foot = a + axis * t_foot;
    let to_center = sphere.center - foot;
    let offset = to_center.norm();
    // anchors are outside, so the segment is blocked only if the foot lies between them
    if !(t_foot > 0.0 && t_foot < span && offset < r) {
        return Err(Error::domain("straight segment clears the sphere; no wrap to analyse"));
    }

    // phi = 0 wraps toward +e1; the profile only needs the centre's height
    // along e1 in each rolled plane, so the second in-plane axis stays implicit
    let e1 = if offset > 0.0 {
        match nominal {
            NominalWrap::OverCenter => to_center / offset,
            NominalWrap::ChordSide => -to_center / offset,
        }
    } else {
        any_perpendicular(&axis)
    };
    // signed height of the sphere centre along e1
    let h = to_center.dot(&e1);

    let length_at = |phi: f64| -> Result<f64> {
        let (s, c) = phi.sin_cos();
        let rho = (r * r - (h * s) * (h * s)).max(0.0).sqrt();
        let circle = CircleObstacle {
            center: Vector2::new(t_foot, h * c),
            radius: rho,
        };
        // in-plane frame: x along the axis from a, y along the rolled e1
        let path = wrapped_path_2d(&Vector2::zeros(), &Vector2::new(span, 0.0), &circle, WrapSide::Left)?;
        Ok(path.total_length)
    };

    let half = samples / 2;
    let delta = PI / half as f64;
    let length_profile = (0..2 * half)
        .map(|k| {
            let phi = (k as f64 - half as f64) * delta;
            Ok((phi, length_at(phi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let nominal_len = length_profile[half].1;
    let margin = length_profile[half + 1].1 + length_profile[half - 1].1 - 2.0 * nominal_len;
    let stability = if margin.abs() <= SLIP_NEUTRAL_TOL {
        SlipStability::Neutral
    } else if margin < 0.0 {
        SlipStability::Unstable
    } else {
        SlipStability::StableMin
    };
    Ok(SphereSlipReport {
        length_profile,
        stability,
        margin,
    })
}

fn any_perpendicular(axis: &Vector3<f64>) -> Vector3<f64> {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    axis.cross(&helper).normalize()
}
