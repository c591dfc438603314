use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tendonsim_core::joint::{
    compare_sheet_kinds, engagement_angle, screw_home_sim, soft_limit_curve, CollateralGeometry,
};
use tendonsim_core::solver::{finite_diff_gradient, EnergySystem};
use tendonsim_core::structures::{build_structure, compare_structures, net_restoring_force};
use tendonsim_core::wrapping::{slip_stability_sphere, PatellaScenario};
use tendonsim_core::{
    AttachmentLayout, CircleObstacle, EnergyModel, HipLigament, Joint2DOF, JointState,
    MinimizeOptions, ScrewHomeTrajectory, SphereObstacle, StructureKind, SweepAxis, Table,
    Vector2, Vector3, WireParams,
};

use crate::scenario::*;
use crate::CliError;

/// What a scenario produced: one CSV table, how to plot it, and a few
/// human-readable summary lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub plot: Plot,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Plot {
    /// Column 0 against every other column.
    fn from_table(table: &Table, y_label: &str) -> Self {
        let series = (1..table.columns.len())
            .map(|c| Series {
                name: table.columns[c].clone(),
                points: table.rows.iter().map(|r| (r[0], r[c])).collect(),
            })
            .collect();
        Self {
            x_label: table.columns[0].clone(),
            y_label: y_label.to_string(),
            series,
        }
    }
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

fn sheet(name: SheetName) -> StructureKind {
    match name {
        SheetName::Parallel => StructureKind::Parallel,
        SheetName::Cross => StructureKind::Cross,
        SheetName::ParallelCross => StructureKind::ParallelCross,
    }
}

fn geometry(stiffness: f64, dead_band: f64, g: &GeometryParams) -> CollateralGeometry {
    let d = CollateralGeometry::default();
    CollateralGeometry {
        lateral_offset: g.lateral_offset.unwrap_or(d.lateral_offset),
        half_height: g.half_height.unwrap_or(d.half_height),
        sheet_width: g.sheet_width.unwrap_or(d.sheet_width),
        sheet_offset_y: g.sheet_offset_y.unwrap_or(d.sheet_offset_y),
        wires_per_rail: g.wires_per_rail.unwrap_or(d.wires_per_rail),
        preload: g.preload.unwrap_or(d.preload),
        stiffness,
        dead_band,
    }
}

/// Runs a scenario. `seed` overrides the scenario's own seed.
pub fn run_scenario(scenario: &Scenario, seed: Option<u64>) -> Result<RunOutput, CliError> {
    let seed = seed.unwrap_or(scenario.seed);
    match &scenario.params {
        Parameters::Sweep(p) => sweep(p),
        Parameters::TorqueCurve(p) => torque_curve(p),
        Parameters::ScrewHome(p) => screw_home(p, seed),
        Parameters::SoftLimit(p) => soft_limit(p),
        Parameters::MomentArm(p) => moment_arm(p),
        Parameters::SlipStability(p) => slip(p),
        Parameters::GradientCheck(p) => gradient_check(p, seed),
    }
}

fn sweep(p: &SweepParams) -> Result<RunOutput, CliError> {
    let layout = AttachmentLayout::new(p.rail_separation_y, p.rail_width_x, p.n_wires)?;
    let params = WireParams::new(p.stiffness, 1.0, p.dead_band)?;
    let axis = match p.axis {
        AxisName::XShear => SweepAxis::X,
        AxisName::YPull => SweepAxis::Y,
    };
    let result = compare_structures(&layout, &params, axis, p.max_displacement, p.steps)?;
    let table = result.to_table();
    let last = result.rows.last().expect("sweep has at least two rows");
    let summary = result
        .kinds
        .iter()
        .zip(&last.forces)
        .map(|(k, f)| format!("{k} force at {} mm: {f:.6}", last.displacement))
        .collect();
    Ok(RunOutput {
        plot: Plot::from_table(&table, "force"),
        table,
        summary,
    })
}

fn torque_curve(p: &TorqueCurveParams) -> Result<RunOutput, CliError> {
    let g = geometry(p.stiffness, p.dead_band, &p.geometry);
    let curves = compare_sheet_kinds(
        &g,
        deg(p.pitch_deg),
        (deg(p.yaw_min_deg), deg(p.yaw_max_deg)),
        p.steps,
    )?;
    let mut columns = vec!["yaw_rad".to_string()];
    columns.extend(curves.iter().map(|(k, _)| format!("{k}_torque")));
    let abscissa = &curves[0].1.abscissa;
    let rows = abscissa
        .iter()
        .enumerate()
        .map(|(i, &yaw)| {
            std::iter::once(yaw)
                .chain(curves.iter().map(|(_, c)| c.ordinate[i]))
                .collect()
        })
        .collect();
    let table = Table::new(columns, rows);
    let summary = curves
        .iter()
        .map(|(k, c)| {
            let peak = c.ordinate.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            format!("{k}: peak |torque| {peak:.6} N mm")
        })
        .collect();
    Ok(RunOutput {
        plot: Plot::from_table(&table, "torque"),
        table,
        summary,
    })
}

/// Initial yaws drawn uniformly from `[-spread, spread]` by ChaCha8 seeded
/// with `seed`, so trials reproduce across platforms.
pub fn seeded_yaws(seed: u64, trials: usize, spread: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.gen_range(-spread..=spread)).collect()
}

fn screw_home(p: &ScrewHomeParams, seed: u64) -> Result<RunOutput, CliError> {
    if p.trials == 0 {
        return Err(CliError::Config("trials must be >= 1".into()));
    }
    let g = geometry(p.stiffness, p.dead_band, &p.geometry);
    let joint = Joint2DOF::collateral(sheet(p.sheet), &g)?;
    let opts = MinimizeOptions::default();
    let trials = seeded_yaws(seed, p.trials, deg(p.yaw_spread_deg))
        .into_iter()
        .map(|y0| screw_home_sim(&joint, y0, deg(p.pitch_start_deg), p.pitch_steps, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let table = ScrewHomeTrajectory::stack(&trials);
    let series = trials
        .iter()
        .enumerate()
        .map(|(i, t)| Series {
            name: format!("trial {i}"),
            points: t.rows.iter().map(|r| (r.pitch, r.yaw)).collect(),
        })
        .collect();
    let summary = trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            format!(
                "trial {i}: yaw {:.4} deg -> {:.6} deg",
                t.initial_yaw.to_degrees(),
                t.final_yaw().to_degrees()
            )
        })
        .collect();
    Ok(RunOutput {
        table,
        plot: Plot {
            x_label: "pitch_rad".into(),
            y_label: "yaw_rad".into(),
            series,
        },
        summary,
    })
}

fn soft_limit(p: &SoftLimitParams) -> Result<RunOutput, CliError> {
    let hip = HipLigament::iliofemoral(p.stiffness, p.dead_band, deg(p.rest_angle_deg))?;
    let curve = soft_limit_curve(&hip, (deg(p.angle_min_deg), deg(p.angle_max_deg)), p.steps)?;
    let table = curve.to_table();
    let summary = vec![match engagement_angle(&curve, 1e-9) {
        Some(a) => format!("engages below {:.4} deg", a.to_degrees()),
        None => "ligament never engages over the range".to_string(),
    }];
    Ok(RunOutput {
        plot: Plot::from_table(&table, "torque"),
        table,
        summary,
    })
}

fn moment_arm(p: &MomentArmParams) -> Result<RunOutput, CliError> {
    let d = PatellaScenario::default();
    let v = |a: Option<[f64; 2]>, fallback: Vector2<f64>| a.map_or(fallback, Vector2::from);
    let knee = PatellaScenario {
        pivot: d.pivot,
        quadriceps_anchor: v(p.quadriceps_anchor, d.quadriceps_anchor),
        tibial_anchor: v(p.tibial_anchor, d.tibial_anchor),
        patella: CircleObstacle::new(
            v(p.patella_center, d.patella.center),
            p.patella_radius.unwrap_or(d.patella.radius),
        )?,
        side: d.side,
    };
    let table = knee.moment_arm_curve(deg(p.flexion_min_deg), deg(p.flexion_max_deg), p.steps)?;
    let at = knee.compare_at(deg(p.flexion_min_deg))?;
    let summary = vec![format!(
        "at {} deg: {:.4} mm with patella, {:.4} mm without, reduction {:.1}%",
        p.flexion_min_deg,
        at.with_obstacle,
        at.without_obstacle,
        100.0 * at.reduction_ratio()
    )];
    Ok(RunOutput {
        plot: Plot::from_table(&table, "moment arm (mm)"),
        table,
        summary,
    })
}

fn slip(p: &SlipParams) -> Result<RunOutput, CliError> {
    let sphere = SphereObstacle::new(Vector3::from(p.center), p.radius)?;
    let report = slip_stability_sphere(
        &Vector3::from(p.anchor_a),
        &Vector3::from(p.anchor_b),
        &sphere,
        p.samples,
    )?;
    let table = report.to_table();
    let summary = vec![format!(
        "stability {} (second difference {:.3e})",
        report.stability.as_str(),
        report.margin
    )];
    Ok(RunOutput {
        plot: Plot::from_table(&table, "length_mm"),
        table,
        summary,
    })
}

/// `|a - n| / max(|a|, |n|)` over whole vectors; two exact zero vectors agree.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Seeded random rail nets and knee poses, analytic force/torque against
/// central differences of the energy.
fn gradient_check(p: &GradientCheckParams, seed: u64) -> Result<RunOutput, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * p.configurations);
    for i in 0..p.configurations {
        let (a, n) = engaged(|| random_net(&mut rng, p))?;
        rows.push(vec![i as f64, 0.0, a[0], a[1], n[0], n[1], relative_error(&a, &n)]);
        let (a, n) = engaged(|| random_joint(&mut rng, p))?;
        rows.push(vec![i as f64, 1.0, a[0], a[1], n[0], n[1], relative_error(&a, &n)]);
    }
    let worst = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    let table = Table::new(
        [
            "sample",
            "family",
            "analytic_0",
            "analytic_1",
            "numeric_0",
            "numeric_1",
            "rel_error",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    );
    let errors: Vec<(f64, f64)> = table.rows.iter().enumerate().map(|(i, r)| (i as f64, r[6])).collect();
    Ok(RunOutput {
        plot: Plot {
            x_label: "check".into(),
            y_label: "relative error".into(),
            series: vec![Series {
                name: "rel_error".into(),
                points: errors,
            }],
        },
        table,
        summary: vec![format!("worst relative error {worst:.3e}")],
    })
}

type Check = ([f64; 2], [f64; 2]);

/// Redraws until the analytic gradient is nonzero; a slack sample checks nothing.
fn engaged(mut draw: impl FnMut() -> Result<Check, CliError>) -> Result<Check, CliError> {
    for _ in 0..1000 {
        let (a, n) = draw()?;
        if a != [0.0, 0.0] {
            return Ok((a, n));
        }
    }
    Err(CliError::Model("could not draw an engaged configuration".into()))
}

/// Analytic restoring force and `-grad E` by central differences for a
/// random rail net under a random in-plane displacement.
fn random_net(rng: &mut ChaCha8Rng, p: &GradientCheckParams) -> Result<Check, CliError> {
    let n = rng.gen_range(2..=6);
    let layout = AttachmentLayout::new(rng.gen_range(50.0..250.0), rng.gen_range(5.0..40.0), n)?;
    let params = WireParams::new(p.stiffness, 1.0, p.dead_band)?;
    let kind = StructureKind::ALL[rng.gen_range(0..3)];
    let net = build_structure(kind, &layout, &params)?;
    let d = Vector3::new(rng.gen_range(-10.0..10.0), rng.gen_range(0.0..4.0), 0.0);
    let force = net_restoring_force(&net, &d)?;
    let fd = finite_diff_gradient(&EnergySystem::new(NetEnergy(&net)), &[d.x, d.y], p.step)?;
    Ok(([force.x, force.y], [-fd[0], -fd[1]]))
}

/// Same for a random collateral knee in a random pose.
fn random_joint(rng: &mut ChaCha8Rng, p: &GradientCheckParams) -> Result<Check, CliError> {
    let g = CollateralGeometry {
        lateral_offset: rng.gen_range(15.0..35.0),
        half_height: rng.gen_range(20.0..40.0),
        sheet_width: rng.gen_range(5.0..30.0),
        sheet_offset_y: rng.gen_range(-10.0..10.0),
        wires_per_rail: rng.gen_range(2..=6),
        preload: rng.gen_range(0.5..3.0),
        stiffness: p.stiffness,
        dead_band: p.dead_band,
    };
    let joint = Joint2DOF::collateral(StructureKind::ALL[rng.gen_range(0..3)], &g)?;
    let state = JointState::new(rng.gen_range(0.01..1.0), rng.gen_range(-0.3..0.3));
    let (tp, ty) = joint.passive_torque(&state)?;
    let fd = finite_diff_gradient(
        &EnergySystem::new(JointEnergy(&joint)),
        &[state.pitch, state.yaw],
        p.step,
    )?;
    Ok(([tp, ty], [-fd[0], -fd[1]]))
}

/// Net energy as a function of in-plane displacement `(x, y)`.
pub struct NetEnergy<'a>(pub &'a tendonsim_core::WireNet);

impl EnergyModel for NetEnergy<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, q: &[f64]) -> tendonsim_core::Result<f64> {
        self.0.total_energy(&Vector3::new(q[0], q[1], 0.0))
    }

    fn gradient(&self, q: &[f64]) -> tendonsim_core::Result<Vec<f64>> {
        let f = net_restoring_force(self.0, &Vector3::new(q[0], q[1], 0.0))?;
        Ok(vec![-f.x, -f.y])
    }
}

/// Joint energy as a function of `(pitch, yaw)`.
pub struct JointEnergy<'a>(pub &'a Joint2DOF);

impl EnergyModel for JointEnergy<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn energy(&self, q: &[f64]) -> tendonsim_core::Result<f64> {
        self.0.energy(&JointState::new(q[0], q[1]))
    }

    fn gradient(&self, q: &[f64]) -> tendonsim_core::Result<Vec<f64>> {
        let (tp, ty) = self.0.passive_torque(&JointState::new(q[0], q[1]))?;
        Ok(vec![-tp, -ty])
    }
}
