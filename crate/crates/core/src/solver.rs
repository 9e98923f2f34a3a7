//! Newmark-β time integration of `M ẍ + C ẋ + K x = −M ι ẍ_g`.
//!
//! The effective stiffness is factored once per system and the per-step
//! update collapsed into a single gain matrix acting on the stacked state
//! `[x; v; a]`, so a step costs one dense `n × 3n` product.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_motion::GroundMotionRecord;
use crate::model::CoupledSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for NewmarkParams {
    /// Constant average acceleration.
    fn default() -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
        }
    }
}

impl NewmarkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(Error::invalid(format!("beta must lie in (0, 0.5], got {}", self.beta)));
        }
        if !(0.5..=1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0.5, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Generic linear second-order system.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub influence: DVector<f64>,
}

impl LinearSystem {
    pub fn n_dof(&self) -> usize {
        self.mass.nrows()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_dof();
        if n == 0
            || self.mass.shape() != (n, n)
            || self.damping.shape() != (n, n)
            || self.stiffness.shape() != (n, n)
            || self.influence.len() != n
        {
            return Err(Error::invalid("system matrices have inconsistent shapes"));
        }
        Ok(())
    }
}

impl From<&CoupledSystem> for LinearSystem {
    fn from(sys: &CoupledSystem) -> Self {
        Self {
            mass: sys.mass.clone(),
            damping: sys.total_damping(),
            stiffness: sys.total_stiffness(),
            influence: sys.influence.clone(),
        }
    }
}

/// Receives the state after every step, including step 0.
pub trait StepObserver {
    fn observe(&mut self, disp: &[f64], vel: &[f64], acc: &[f64], ground_acc: f64);
}

#[derive(Debug, Clone)]
pub struct NewmarkIntegrator {
    n: usize,
    dt: f64,
    params: NewmarkParams,
    /// Column-major `n × 3n` map from `[x; v; a]` to the next displacement.
    gain: Vec<f64>,
    /// Next-displacement response to a unit ground acceleration.
    load: Vec<f64>,
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    influence: DVector<f64>,
}

impl NewmarkIntegrator {
    pub fn new(system: &LinearSystem, dt: f64, params: NewmarkParams) -> Result<Self> {
        system.validate()?;
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        let n = system.n_dof();
        let NewmarkParams { beta, gamma } = params;
        let c0 = 1.0 / (beta * dt * dt);
        let c1 = gamma / (beta * dt);
        let c2 = 1.0 / (beta * dt);
        let c3 = 1.0 / (2.0 * beta) - 1.0;
        let c4 = gamma / beta - 1.0;
        let c5 = dt / 2.0 * (gamma / beta - 2.0);

        let (m, c, k) = (&system.mass, &system.damping, &system.stiffness);
        let k_eff = k + m * c0 + c * c1;
        let chol = k_eff.cholesky().ok_or_else(|| {
            Error::Numerical("effective stiffness is not positive definite".into())
        })?;

        let mut rhs = DMatrix::zeros(n, 3 * n);
        rhs.view_mut((0, 0), (n, n)).copy_from(&(m * c0 + c * c1));
        rhs.view_mut((0, n), (n, n)).copy_from(&(m * c2 + c * c4));
        rhs.view_mut((0, 2 * n), (n, n)).copy_from(&(m * c3 + c * c5));
        let gain = chol.solve(&rhs);
        let load = chol.solve(&(-(m * &system.influence)));

        Ok(Self {
            n,
            dt,
            params,
            gain: gain.as_slice().to_vec(),
            load: load.as_slice().to_vec(),
            mass: m.clone(),
            damping: c.clone(),
            stiffness: k.clone(),
            influence: system.influence.clone(),
        })
    }

    pub fn n_dof(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn initial_acceleration(&self, x0: &[f64], v0: &[f64], ground0: f64) -> Result<Vec<f64>> {
        let x0 = DVector::from_column_slice(x0);
        let v0 = DVector::from_column_slice(v0);
        let rhs = -(&self.mass * &self.influence) * ground0 - &self.damping * v0 - &self.stiffness * x0;
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
        Ok(chol.solve(&rhs).as_slice().to_vec())
    }

    /// Steps through `ground` (one sample per step) starting from `x0`, `v0`.
    pub fn run<O: StepObserver>(
        &self,
        ground: &[f64],
        x0: &[f64],
        v0: &[f64],
        observer: &mut O,
    ) -> Result<()> {
        let n = self.n;
        if x0.len() != n || v0.len() != n {
            return Err(Error::invalid(format!(
                "initial conditions must have length {n}, got {} and {}",
                x0.len(),
                v0.len()
            )));
        }
        let Some(&g0) = ground.first() else {
            return Ok(());
        };
        let NewmarkParams { beta, gamma } = self.params;
        let dt = self.dt;
        let c0 = 1.0 / (beta * dt * dt);
        let c2 = 1.0 / (beta * dt);
        let c3 = 1.0 / (2.0 * beta) - 1.0;
        let c6 = dt * (1.0 - gamma);
        let c7 = gamma * dt;

        // state = [x; v; a]
        let mut state = vec![0.0; 3 * n];
        state[..n].copy_from_slice(x0);
        state[n..2 * n].copy_from_slice(v0);
        let a0 = self.initial_acceleration(x0, v0, g0)?;
        state[2 * n..].copy_from_slice(&a0);
        observer.observe(&state[..n], &state[n..2 * n], &state[2 * n..], g0);

        let mut next = vec![0.0; n];
        for &g in &ground[1..] {
            for (dst, l) in next.iter_mut().zip(&self.load) {
                *dst = l * g;
            }
            for (col, s) in self.gain.chunks_exact(n).zip(&state) {
                if *s != 0.0 {
                    for (dst, gij) in next.iter_mut().zip(col) {
                        *dst += gij * s;
                    }
                }
            }
            let (x, rest) = state.split_at_mut(n);
            let (v, a) = rest.split_at_mut(n);
            for i in 0..n {
                let a_new = c0 * (next[i] - x[i]) - c2 * v[i] - c3 * a[i];
                v[i] += c6 * a[i] + c7 * a_new;
                a[i] = a_new;
                x[i] = next[i];
            }
            observer.observe(x, v, a, g);
        }
        Ok(())
    }
}

/// Full time histories, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseHistory {
    pub dt: f64,
    pub rel_disp: DMatrix<f64>,
    pub rel_vel: DMatrix<f64>,
    pub rel_acc: DMatrix<f64>,
    /// Relative plus ground acceleration.
    pub abs_acc: DMatrix<f64>,
}

impl ResponseHistory {
    pub fn steps(&self) -> usize {
        self.rel_disp.nrows()
    }

    pub fn n_dof(&self) -> usize {
        self.rel_disp.ncols()
    }

    /// Writes `t, x_1, .., x_n` for one of the stored quantities.
    pub fn write_csv<W: std::io::Write>(&self, quantity: &DMatrix<f64>, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for j in 1..=quantity.ncols() {
            write!(out, ",x_{j}")?;
        }
        writeln!(out)?;
        for (i, row) in quantity.row_iter().enumerate() {
            write!(out, "{:?}", i as f64 * self.dt)?;
            for v in row.iter() {
                write!(out, ",{v:?}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Recorder {
    n: usize,
    disp: Vec<f64>,
    vel: Vec<f64>,
    acc: Vec<f64>,
    abs_acc: Vec<f64>,
}

impl StepObserver for Recorder {
    fn observe(&mut self, disp: &[f64], vel: &[f64], acc: &[f64], ground_acc: f64) {
        self.disp.extend_from_slice(disp);
        self.vel.extend_from_slice(vel);
        self.acc.extend_from_slice(acc);
        self.abs_acc.extend(acc.iter().map(|a| a + ground_acc));
    }
}

impl Recorder {
    fn finish(self, dt: f64) -> ResponseHistory {
        let n = self.n;
        let rows = self.disp.len() / n;
        let mk = |v: Vec<f64>| DMatrix::from_row_slice(rows, n, &v);
        ResponseHistory {
            dt,
            rel_disp: mk(self.disp),
            rel_vel: mk(self.vel),
            rel_acc: mk(self.acc),
            abs_acc: mk(self.abs_acc),
        }
    }
}

/// Integrates the system over the whole record at the record's time step.
pub fn newmark_solve(
    system: &LinearSystem,
    gm: &GroundMotionRecord,
    params: NewmarkParams,
    x0: &[f64],
    v0: &[f64],
) -> Result<ResponseHistory> {
    let integrator = NewmarkIntegrator::new(system, gm.dt(), params)?;
    let n = system.n_dof();
    let mut rec = Recorder {
        n,
        ..Recorder::default()
    };
    let cap = gm.len() * n;
    rec.disp.reserve(cap);
    rec.vel.reserve(cap);
    rec.acc.reserve(cap);
    rec.abs_acc.reserve(cap);
    integrator.run(gm.accel(), x0, v0, &mut rec)?;
    Ok(rec.finish(gm.dt()))
}

/// [`newmark_solve`] from rest.
pub fn newmark_solve_at_rest(
    system: &LinearSystem,
    gm: &GroundMotionRecord,
    params: NewmarkParams,
) -> Result<ResponseHistory> {
    let zeros = vec![0.0; system.n_dof()];
    newmark_solve(system, gm, params, &zeros, &zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BuildingParams, DamperParams, ModelOptions, StructureModel};
    use std::f64::consts::PI;

    fn sdof(m: f64, c: f64, k: f64) -> LinearSystem {
        LinearSystem {
            mass: DMatrix::from_element(1, 1, m),
            damping: DMatrix::from_element(1, 1, c),
            stiffness: DMatrix::from_element(1, 1, k),
            influence: DVector::from_element(1, 1.0),
        }
    }

    fn quiet(n: usize, dt: f64) -> GroundMotionRecord {
        GroundMotionRecord::new("quiet", dt, vec![0.0; n]).unwrap()
    }

    #[test]
    fn at_rest_stays_at_rest() {
        let model = StructureModel::new(
            BuildingParams::default(),
            DamperParams::default(),
            ModelOptions::default(),
        )
        .unwrap();
        let sys = LinearSystem::from(&model.system(&"2-9".parse().unwrap()).unwrap());
        let h = newmark_solve_at_rest(&sys, &quiet(200, 0.02), NewmarkParams::default()).unwrap();
        assert_eq!(h.steps(), 200);
        for m in [&h.rel_disp, &h.rel_vel, &h.rel_acc, &h.abs_acc] {
            assert!(m.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn parameter_and_shape_errors() {
        let sys = sdof(1.0, 0.0, 1.0);
        let gm = quiet(4, 0.1);
        let bad = NewmarkParams { beta: 0.0, gamma: 0.5 };
        assert!(newmark_solve_at_rest(&sys, &gm, bad).is_err());
        let bad = NewmarkParams { beta: 0.25, gamma: 0.4 };
        assert!(newmark_solve_at_rest(&sys, &gm, bad).is_err());
        assert!(newmark_solve(&sys, &gm, NewmarkParams::default(), &[0.0, 0.0], &[0.0]).is_err());
        let singular = sdof(0.0, 0.0, 0.0);
        assert!(matches!(
            newmark_solve_at_rest(&singular, &gm, NewmarkParams::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn initial_conditions_are_row_zero() {
        let sys = sdof(2.0, 0.3, 5.0);
        let h = newmark_solve(&sys, &quiet(10, 0.01), NewmarkParams::default(), &[0.7], &[-0.2])
            .unwrap();
        assert_eq!(h.rel_disp[(0, 0)], 0.7);
        assert_eq!(h.rel_vel[(0, 0)], -0.2);
        // m a0 = -c v0 - k x0
        assert!((h.rel_acc[(0, 0)] - (0.3 * 0.2 - 5.0 * 0.7) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn undamped_sdof_free_vibration() {
        let k = 4.0 * PI * PI;
        let dt = 0.002;
        let steps = 10 * 500;
        let h = newmark_solve(&sdof(1.0, 0.0, k), &quiet(steps + 1, dt), NewmarkParams::default(), &[1.0], &[0.0])
            .unwrap();
        let x: Vec<f64> = h.rel_disp.column(0).iter().copied().collect();
        // amplitude
        let peak = x[steps - 50..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.005, "peak {peak}");
        // period from interpolated downward zero crossings
        let crossings: Vec<f64> = (1..x.len())
            .filter(|&i| x[i - 1] > 0.0 && x[i] <= 0.0)
            .map(|i| (i - 1) as f64 * dt + dt * x[i - 1] / (x[i - 1] - x[i]))
            .collect();
        let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        assert!((period - 1.0).abs() < 0.005, "period {period}");
    }

    #[test]
    fn average_acceleration_conserves_energy() {
        let model = StructureModel::new(
            BuildingParams {
                damping_ratio: 0.0,
                ..BuildingParams::default()
            },
            DamperParams {
                c_d: 0.0,
                ..DamperParams::default()
            },
            ModelOptions::default(),
        )
        .unwrap();
        let sys = LinearSystem::from(&model.system(&"2-6-13".parse().unwrap()).unwrap());
        let n = sys.n_dof();
        let x0: Vec<f64> = (0..n).map(|i| 1e-3 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let v0 = vec![0.0; n];
        let h = newmark_solve(&sys, &quiet(3001, 0.02), NewmarkParams::default(), &x0, &v0).unwrap();
        let energy = |i: usize| {
            let x = h.rel_disp.row(i).transpose();
            let v = h.rel_vel.row(i).transpose();
            0.5 * (v.dot(&(&sys.mass * &v)) + x.dot(&(&sys.stiffness * &x)))
        };
        let e0 = energy(0);
        for i in (1000..=3000).step_by(1000) {
            let drift = (energy(i) - energy(i - 1000)).abs() / e0;
            assert!(drift < 1e-3, "energy drift {drift} at step {i}");
        }
    }

    #[test]
    fn identical_buildings_respond_identically_without_dampers() {
        let model = StructureModel::new(
            BuildingParams::default(),
            DamperParams::default(),
            ModelOptions::default(),
        )
        .unwrap();
        let sys = LinearSystem::from(&model.system(&crate::model::DamperConfiguration::empty()).unwrap());
        let gm = crate::ground_motion::SyntheticMotion::default().generate().unwrap();
        let h = newmark_solve_at_rest(&sys, &gm, NewmarkParams::default()).unwrap();
        let nf = 6;
        for m in [&h.rel_disp, &h.rel_vel, &h.rel_acc, &h.abs_acc] {
            for f in 0..nf {
                assert_eq!(m.column(f), m.column(f + nf));
            }
        }
    }

    #[test]
    fn history_csv_layout() {
        let h = newmark_solve(&sdof(1.0, 0.0, 1.0), &quiet(3, 0.5), NewmarkParams::default(), &[1.0], &[0.0])
            .unwrap();
        let mut buf = Vec::new();
        h.write_csv(&h.rel_disp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x_1");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0,1.0"));
    }
}
