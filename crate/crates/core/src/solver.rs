//! Quasi-static equilibrium by energy minimization.
//!
//! The energy of a wire network is only C1 (the dead band leaves a kink in
//! the second derivative), so the minimizer is first order: projected
//! gradient descent with an Armijo backtracking line search.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::wire::WireParams;

/// Energy and analytic gradient over a flat coordinate vector.
pub trait EnergyModel {
    fn dim(&self) -> usize;
    fn energy(&self, coords: &[f64]) -> Result<f64>;
    fn gradient(&self, coords: &[f64]) -> Result<Vec<f64>>;

    /// Rounding floor of [`energy`](Self::energy) at `coords`, in units of
    /// `f64::EPSILON`: energy differences below `EPSILON * noise` carry no
    /// information. Defaults to `|E|`; models whose energy is a small
    /// difference of large terms should report the size of those terms.
    fn energy_noise(&self, coords: &[f64]) -> Result<f64> {
        Ok(self.energy(coords)?.abs())
    }
}

impl<M: EnergyModel + ?Sized> EnergyModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, coords: &[f64]) -> Result<f64> {
        (**self).energy(coords)
    }
    fn gradient(&self, coords: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(coords)
    }
    fn energy_noise(&self, coords: &[f64]) -> Result<f64> {
        (**self).energy_noise(coords)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::config(format!("empty interval [{lo}, {hi}]")))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub bounds: Option<Bounds>,
}

/// A model together with named, optionally bounded coordinates.
#[derive(Debug, Clone)]
pub struct EnergySystem<M> {
    pub model: M,
    pub coords: Vec<Coordinate>,
}

impl<M: EnergyModel> EnergySystem<M> {
    /// Unbounded coordinates named `q0`, `q1`, ...
    pub fn new(model: M) -> Self {
        let coords = (0..model.dim())
            .map(|i| Coordinate {
                name: format!("q{i}"),
                bounds: None,
            })
            .collect();
        Self { model, coords }
    }

    pub fn with_coordinates(model: M, coords: Vec<Coordinate>) -> Result<Self> {
        if coords.len() != model.dim() {
            return Err(Error::config(format!(
                "model has {} coordinates, {} described",
                model.dim(),
                coords.len()
            )));
        }
        Ok(Self { model, coords })
    }

    pub fn with_bounds(mut self, index: usize, bounds: Bounds) -> Self {
        self.coords[index].bounds = Some(bounds);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        for (c, &v) in self.coords.iter().zip(x) {
            if !v.is_finite() {
                return Err(Error::domain(format!("coordinate `{}` is not finite", c.name)));
            }
            if let Some(b) = c.bounds {
                if !b.contains(v) {
                    return Err(Error::domain(format!(
                        "coordinate `{}` = {v} outside [{}, {}]",
                        c.name, b.lo, b.hi
                    )));
                }
            }
        }
        Ok(())
    }

    fn project(&self, x: &mut [f64]) {
        for (c, v) in self.coords.iter().zip(x.iter_mut()) {
            if let Some(b) = c.bounds {
                *v = b.clamp(*v);
            }
        }
    }

    /// Norm of the gradient with components that push against an active bound removed.
    fn projected_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        self.coords
            .iter()
            .zip(x.iter().zip(g))
            .map(|(c, (&xi, &gi))| match c.bounds {
                Some(b) if xi <= b.lo && gi > 0.0 => 0.0,
                Some(b) if xi >= b.hi && gi < 0.0 => 0.0,
                _ => gi * gi,
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let e = self.model.energy(x)?;
        if e.is_finite() {
            Ok(e)
        } else {
            Err(Error::Numeric(format!("energy evaluated to {e}")))
        }
    }
}

/// Analytic gradient of the system energy at `coords`.
pub fn system_gradient<M: EnergyModel>(system: &EnergySystem<M>, coords: &[f64]) -> Result<Vec<f64>> {
    system.check(coords)?;
    let g = system.model.gradient(coords)?;
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::Numeric("non-finite gradient".into()))
    }
}

/// Central-difference gradient estimate. Verification only.
pub fn finite_diff_gradient<M: EnergyModel>(
    system: &EnergySystem<M>,
    coords: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be > 0, got {h}")));
    }
    system.check(coords)?;
    let mut probe = coords.to_vec();
    (0..coords.len())
        .map(|i| {
            probe[i] = coords[i] + h;
            let plus = system.energy(&probe)?;
            probe[i] = coords[i] - h;
            let minus = system.energy(&probe)?;
            probe[i] = coords[i];
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    /// Stop once the projected gradient norm is at or below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    /// Backtracking contraction factor.
    pub backtrack: f64,
    pub initial_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 10_000,
            sufficient_decrease: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub coords: Vec<f64>,
    pub energy: f64,
    /// Projected gradient norm at `coords`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy at the start point followed by every accepted iterate.
    pub energy_trace: Vec<f64>,
    /// Rounding floor of each traced energy, absolute.
    pub noise_trace: Vec<f64>,
}

impl EquilibriumResult {
    /// Every accepted step kept the energy from rising by more than its rounding noise.
    pub fn is_descending(&self) -> bool {
        self.energy_trace
            .windows(2)
            .zip(&self.noise_trace)
            .all(|(w, noise)| w[1] <= w[0] + noise)
    }
}

// Backtracking gives up once the trial step has shrunk by this much.
const MAX_BACKTRACKS: usize = 80;
// Energy changes smaller than this many ulps of the model's noise scale
// cannot be trusted.
pub const ROUNDOFF_ULPS: f64 = 64.0;

/// Projected gradient descent with Armijo backtracking.
///
/// Steps start at twice the last accepted step length (the first at
/// `initial_step`) and contract by `backtrack` until the sufficient-decrease
/// test passes. Once the predicted decrease drops below the rounding noise of
/// the energy itself (see [`EnergyModel::energy_noise`]), energy comparisons
/// are meaningless; such a trial is accepted only if the projected gradient
/// shrinks and the energy stays within the noise band.
pub fn minimize<M: EnergyModel>(
    system: &EnergySystem<M>,
    initial: &[f64],
    opts: &MinimizeOptions,
) -> Result<EquilibriumResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::config(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let mut x = initial.to_vec();
    let mut e = system.energy(&x)?;
    let mut g = system_gradient(system, &x)?;
    let mut residual = system.projected_norm(&x, &g);
    let noise_at = |x: &[f64]| -> Result<f64> {
        Ok(ROUNDOFF_ULPS * f64::EPSILON * system.model.energy_noise(x)?.max(f64::MIN_POSITIVE))
    };
    let mut noise = noise_at(&x)?;
    let mut trace = vec![e];
    let mut noise_trace = vec![noise];
    let mut step = opts.initial_step;
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iters {
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            system.project(&mut trial);
            system.check(&trial)?;
            let e_trial = system.model.energy(&trial)?;
            if e_trial.is_nan() {
                return Err(Error::Numeric("energy evaluated to NaN".into()));
            }
            if e_trial == f64::INFINITY {
                // overflowed the exponential law; the step is simply too long
                t *= opts.backtrack;
                continue;
            }
            let predicted: f64 = g.iter().zip(x.iter().zip(&trial)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if predicted > noise {
                if e_trial <= e - opts.sufficient_decrease * predicted {
                    accepted = Some((trial, e_trial, None));
                    break;
                }
            } else if e_trial <= e + noise {
                // an energy "decrease" this small is a rounding coin flip
                let g_trial = system_gradient(system, &trial)?;
                if system.projected_norm(&trial, &g_trial) < residual {
                    accepted = Some((trial, e_trial, Some(g_trial)));
                    break;
                }
            }
            t *= opts.backtrack;
        }
        let Some((trial, e_trial, g_trial)) = accepted else {
            break;
        };
        x = trial;
        e = e_trial;
        g = match g_trial {
            Some(g) => g,
            None => system_gradient(system, &x)?,
        };
        residual = system.projected_norm(&x, &g);
        noise = noise_at(&x)?;
        trace.push(e);
        noise_trace.push(noise);
        iterations += 1;
        step = 2.0 * t;
    }

    Ok(EquilibriumResult {
        coords: x,
        energy: e,
        residual_norm: residual,
        iterations,
        converged: residual <= opts.tol,
        energy_trace: trace,
        noise_trace,
    })
}

/// Energy given by plain closures, for analytic test functions.
pub struct ClosureModel<E, G> {
    dim: usize,
    energy: E,
    gradient: G,
}

impl<E, G> ClosureModel<E, G>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, energy: E, gradient: G) -> Self {
        Self {
            dim,
            energy,
            gradient,
        }
    }
}

impl<E, G> EnergyModel for ClosureModel<E, G>
where
    E: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn energy(&self, coords: &[f64]) -> Result<f64> {
        Ok((self.energy)(coords))
    }
    fn gradient(&self, coords: &[f64]) -> Result<Vec<f64>> {
        Ok((self.gradient)(coords))
    }
}

/// Endpoint of a wire in a [`NodeNetwork`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    Fixed(Vector3<f64>),
    /// Index into [`NodeNetwork::nodes`].
    Node(usize),
}

/// A node whose position is `base` plus the coordinates of its free axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeNode {
    pub base: Vector3<f64>,
    /// Coordinate index driving each of x, y, z, if free.
    pub axes: [Option<usize>; 3],
}

/// Wires between fixed anchors and free nodes, with a constant external load
/// per coordinate (the load does work `load . q`).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeNetwork {
    pub nodes: Vec<FreeNode>,
    pub wires: Vec<(WireParams, Endpoint, Endpoint)>,
    pub load: Vec<f64>,
}

impl NodeNetwork {
    /// One node at `base` with the first `free_axes` axes free, no wires yet.
    pub fn single_node(base: Vector3<f64>, free_axes: usize) -> Self {
        let mut axes = [None; 3];
        for (i, a) in axes.iter_mut().enumerate().take(free_axes) {
            *a = Some(i);
        }
        Self {
            nodes: vec![FreeNode { base, axes }],
            wires: Vec::new(),
            load: vec![0.0; free_axes],
        }
    }

    pub fn add_wire(&mut self, params: WireParams, a: Endpoint, b: Endpoint) -> &mut Self {
        self.wires.push((params.normalized(), a, b));
        self
    }

    fn position(&self, end: &Endpoint, q: &[f64]) -> Vector3<f64> {
        match *end {
            Endpoint::Fixed(p) => p,
            Endpoint::Node(n) => {
                let node = &self.nodes[n];
                let mut p = node.base;
                for (axis, c) in node.axes.iter().enumerate() {
                    if let Some(c) = c {
                        p[axis] += q[*c];
                    }
                }
                p
            }
        }
    }

    fn scatter(&self, end: &Endpoint, force: &Vector3<f64>, grad: &mut [f64]) {
        if let Endpoint::Node(n) = *end {
            for (axis, c) in self.nodes[n].axes.iter().enumerate() {
                if let Some(c) = c {
                    grad[*c] += force[axis];
                }
            }
        }
    }

    fn span(&self, a: &Endpoint, b: &Endpoint, q: &[f64]) -> Result<(Vector3<f64>, f64)> {
        let d = self.position(b, q) - self.position(a, q);
        let length = d.norm();
        if length > 0.0 {
            Ok((d, length))
        } else {
            Err(Error::degenerate("wire endpoints coincide"))
        }
    }
}

impl EnergyModel for NodeNetwork {
    fn dim(&self) -> usize {
        self.load.len()
    }

    fn energy(&self, q: &[f64]) -> Result<f64> {
        let mut e = 0.0;
        for (params, a, b) in &self.wires {
            let (_, length) = self.span(a, b, q)?;
            e += params.energy_unchecked(length);
        }
        let work: f64 = self.load.iter().zip(q).map(|(f, x)| f * x).sum();
        Ok(e - work)
    }

    fn energy_noise(&self, q: &[f64]) -> Result<f64> {
        let mut noise: f64 = self.load.iter().zip(q).map(|(f, x)| (f * x).abs()).sum();
        for (params, a, b) in &self.wires {
            let (_, length) = self.span(a, b, q)?;
            noise += params.energy_noise_unchecked(length);
        }
        Ok(noise)
    }

    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut grad: Vec<f64> = self.load.iter().map(|f| -f).collect();
        for (params, a, b) in &self.wires {
            let (d, length) = self.span(a, b, q)?;
            // dE/d(end b) = T * unit(a -> b); end a gets the opposite
            let pull = d * (params.tension_unchecked(length) / length);
            self.scatter(b, &pull, &mut grad);
            self.scatter(a, &(-pull), &mut grad);
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic(a: f64, b: f64) -> EnergySystem<ClosureModel<impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vec<f64>>> {
        EnergySystem::new(ClosureModel::new(
            2,
            move |x: &[f64]| a * (x[0] - 1.0).powi(2) + b * (x[1] + 2.0).powi(2),
            move |x: &[f64]| vec![2.0 * a * (x[0] - 1.0), 2.0 * b * (x[1] + 2.0)],
        ))
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let sys = quadratic(1.0, 3.0);
        let r = minimize(&sys, &[1.0, -2.0], &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.coords, vec![1.0, -2.0]);
    }

    #[test]
    fn converges_on_ill_conditioned_quadratic() {
        let sys = quadratic(1.0, 50.0);
        let r = minimize(&sys, &[10.0, 10.0], &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.residual_norm <= 1e-9);
        assert_relative_eq!(r.coords[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.coords[1], -2.0, epsilon = 1e-9);
        assert!(r.is_descending());
    }

    #[test]
    fn bounds_are_respected() {
        let sys = quadratic(1.0, 1.0).with_bounds(0, Bounds::new(2.0, 5.0).unwrap());
        let r = minimize(&sys, &[4.0, 0.0], &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.coords[0], 2.0);
        assert!(sys.energy(&[1.5, 0.0]).is_err());
        assert!(matches!(system_gradient(&sys, &[6.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let sys = quadratic(1.0, 50.0);
        let opts = MinimizeOptions {
            max_iters: 3,
            ..Default::default()
        };
        let r = minimize(&sys, &[10.0, 10.0], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn nan_energy_is_a_numeric_error() {
        let sys = EnergySystem::new(ClosureModel::new(1, |_: &[f64]| f64::NAN, |_: &[f64]| vec![1.0]));
        assert!(matches!(
            minimize(&sys, &[0.0], &MinimizeOptions::default()),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn finite_difference_of_simple_functions() {
        let constant = EnergySystem::new(ClosureModel::new(2, |_: &[f64]| 4.0, |_: &[f64]| vec![0.0, 0.0]));
        assert_eq!(finite_diff_gradient(&constant, &[1.0, 2.0], 1e-3).unwrap(), vec![0.0, 0.0]);

        let linear = EnergySystem::new(ClosureModel::new(
            2,
            |x: &[f64]| 3.0 * x[0] - 0.5 * x[1],
            |_: &[f64]| vec![3.0, -0.5],
        ));
        let g = finite_diff_gradient(&linear, &[1.0, 2.0], 0.25).unwrap();
        assert_relative_eq!(g[0], 3.0, max_relative = 1e-15);
        assert_relative_eq!(g[1], -0.5, max_relative = 1e-15);

        let bounded = linear.with_bounds(0, Bounds::new(0.0, 1.0).unwrap());
        assert!(finite_diff_gradient(&bounded, &[1.0, 2.0], 0.25).is_err());
    }

    fn stretched_pair() -> NodeNetwork {
        // node between two anchors 100 mm apart, both wires pre-stretched
        let params = WireParams::new(1.0, 48.0, 0.5).unwrap();
        let mut net = NodeNetwork::single_node(Vector3::new(50.0, 0.0, 0.0), 1);
        net.add_wire(params, Endpoint::Fixed(Vector3::zeros()), Endpoint::Node(0));
        net.add_wire(params, Endpoint::Node(0), Endpoint::Fixed(Vector3::new(100.0, 0.0, 0.0)));
        net
    }

    #[test]
    fn slack_wires_have_zero_gradient() {
        let params = WireParams::new(1.0, 100.0, 0.5).unwrap();
        let mut net = NodeNetwork::single_node(Vector3::new(10.0, 0.0, 0.0), 2);
        net.add_wire(params, Endpoint::Fixed(Vector3::zeros()), Endpoint::Node(0));
        let sys = EnergySystem::new(net);
        assert_eq!(system_gradient(&sys, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_wire_gradient_is_its_tension() {
        let params = WireParams::new(1.0, 100.0, 0.5).unwrap();
        let mut net = NodeNetwork::single_node(Vector3::new(101.5, 0.0, 0.0), 1);
        net.add_wire(params, Endpoint::Fixed(Vector3::zeros()), Endpoint::Node(0));
        let g = system_gradient(&EnergySystem::new(net), &[0.0]).unwrap();
        assert_relative_eq!(g[0], 1.0f64.exp() - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn symmetric_pair_relaxes_to_midpoint() {
        let sys = EnergySystem::new(stretched_pair());
        let r = minimize(&sys, &[7.0], &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.coords[0].abs() < 1e-9);
        assert!(r.is_descending());
    }

    #[test]
    fn loaded_wire_settles_just_past_slack_boundary() {
        // a small outward load balances the wire right at the edge of the dead band
        let params = WireParams::new(1.0, 100.0, 0.5).unwrap();
        let mut net = NodeNetwork::single_node(Vector3::new(100.0, 0.0, 0.0), 1);
        net.add_wire(params, Endpoint::Fixed(Vector3::zeros()), Endpoint::Node(0));
        net.load[0] = 1e-3;
        let sys = EnergySystem::new(net).with_bounds(0, Bounds::new(-10.0, 10.0).unwrap());
        let r = minimize(&sys, &[3.5], &MinimizeOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.residual_norm <= 1e-9);

        // grid oracle over the bounded range
        let n = 10_001;
        let step = 20.0 / (n - 1) as f64;
        let (best_i, _) = (0..n)
            .map(|i| (i, sys.energy(&[-10.0 + step * i as f64]).unwrap()))
            .fold((0, f64::INFINITY), |acc, (i, e)| if e < acc.1 { (i, e) } else { acc });
        let grid_best = -10.0 + step * best_i as f64;
        assert!((r.coords[0] - grid_best).abs() <= step, "{} vs {grid_best}", r.coords[0]);
        assert!((r.coords[0] - (0.5 + 1e-3f64.ln_1p())).abs() < 1e-9);
    }

    #[test]
    fn deterministic_iterates() {
        let sys = EnergySystem::new(stretched_pair());
        let a = minimize(&sys, &[9.0], &MinimizeOptions::default()).unwrap();
        let b = minimize(&sys, &[9.0], &MinimizeOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
