//! Reductions of a response history to peak quantities, and the evaluation
//! context that maps a damper configuration to an objective vector.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_motion::GroundMotionRecord;
use crate::model::{BuildingParams, DamperConfiguration, StructureModel};
use crate::solver::{LinearSystem, NewmarkIntegrator, NewmarkParams, ResponseHistory, StepObserver};

/// Which pair of peak quantities forms the objective vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveSet {
    /// Peak top-floor displacement of the left and right building.
    LrDisp,
    /// Peak interstorey drift and peak floor acceleration.
    DriftAcc,
    /// Peak top-floor displacement and peak base shear.
    DispShear,
}

impl ObjectiveSet {
    pub const ALL: [ObjectiveSet; 3] = [Self::LrDisp, Self::DriftAcc, Self::DispShear];

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Self::LrDisp => ("x_L (m)", "x_R (m)"),
            Self::DriftAcc => ("drift_max (m)", "a_max (m/s^2)"),
            Self::DispShear => ("x_max (m)", "V_B_max (N)"),
        }
    }
}

impl fmt::Display for ObjectiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LrDisp => "lr-disp",
            Self::DriftAcc => "drift-acc",
            Self::DispShear => "disp-shear",
        })
    }
}

impl FromStr for ObjectiveSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lr-disp" => Ok(Self::LrDisp),
            "drift-acc" => Ok(Self::DriftAcc),
            "disp-shear" => Ok(Self::DispShear),
            other => Err(Error::invalid(format!("unknown objective set '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
    pub set: ObjectiveSet,
}

impl ObjectiveVector {
    pub fn pair(&self) -> (f64, f64) {
        (self.f1, self.f2)
    }
}

/// Whether floor accelerations include the ground acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccelerationKind {
    #[default]
    Absolute,
    Relative,
}

fn column_peak(h: &ResponseHistory, col: usize) -> f64 {
    h.rel_disp.column(col).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Peak |displacement| of the top floor of each building.
pub fn top_floor_displacements(h: &ResponseHistory, n_floors: usize) -> (f64, f64) {
    (column_peak(h, n_floors - 1), column_peak(h, 2 * n_floors - 1))
}

pub fn max_top_displacement(h: &ResponseHistory, n_floors: usize) -> f64 {
    let (l, r) = top_floor_displacements(h, n_floors);
    l.max(r)
}

pub fn max_acceleration(h: &ResponseHistory, kind: AccelerationKind) -> f64 {
    let m = match kind {
        AccelerationKind::Absolute => &h.abs_acc,
        AccelerationKind::Relative => &h.rel_acc,
    };
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Peak relative displacement between consecutive floors of either
/// building, the ground counting as floor 0.
pub fn max_interstorey_drift(h: &ResponseHistory, n_floors: usize) -> f64 {
    let mut peak = 0.0_f64;
    for row in h.rel_disp.row_iter() {
        for b in 0..2 {
            let off = b * n_floors;
            let mut below = 0.0;
            for f in 0..n_floors {
                let x = row[off + f];
                peak = peak.max((x - below).abs());
                below = x;
            }
        }
    }
    peak
}

/// Peak ground-storey spring force over both buildings.
pub fn max_base_shear(h: &ResponseHistory, params: &BuildingParams) -> f64 {
    let n = params.n_floors;
    column_peak(h, 0).max(column_peak(h, n)) * params.storey_stiffness
}

/// Every peak quantity an objective set can ask for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub top_left: f64,
    pub top_right: f64,
    pub max_drift: f64,
    pub max_abs_acc: f64,
    pub max_rel_acc: f64,
    pub max_base_shear: f64,
}

impl ResponseSummary {
    pub fn from_history(h: &ResponseHistory, params: &BuildingParams) -> Self {
        let (top_left, top_right) = top_floor_displacements(h, params.n_floors);
        Self {
            top_left,
            top_right,
            max_drift: max_interstorey_drift(h, params.n_floors),
            max_abs_acc: max_acceleration(h, AccelerationKind::Absolute),
            max_rel_acc: max_acceleration(h, AccelerationKind::Relative),
            max_base_shear: max_base_shear(h, params),
        }
    }

    pub fn max_top_displacement(&self) -> f64 {
        self.top_left.max(self.top_right)
    }

    /// Same peaks with the two buildings exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            top_left: self.top_right,
            top_right: self.top_left,
            ..*self
        }
    }

    pub fn objectives(&self, set: ObjectiveSet, accel: AccelerationKind) -> ObjectiveVector {
        let (f1, f2) = match set {
            ObjectiveSet::LrDisp => (self.top_left, self.top_right),
            ObjectiveSet::DriftAcc => (
                self.max_drift,
                match accel {
                    AccelerationKind::Absolute => self.max_abs_acc,
                    AccelerationKind::Relative => self.max_rel_acc,
                },
            ),
            ObjectiveSet::DispShear => (self.max_top_displacement(), self.max_base_shear),
        };
        ObjectiveVector { f1, f2, set }
    }
}

/// Streaming counterpart of the history reductions; produces the same
/// numbers as [`ResponseSummary::from_history`] without storing the history.
#[derive(Debug, Clone)]
pub struct PeakTracker {
    n_floors: usize,
    storey_stiffness: f64,
    top: [f64; 2],
    base: [f64; 2],
    drift: f64,
    abs_acc: f64,
    rel_acc: f64,
}

impl PeakTracker {
    pub fn new(params: &BuildingParams) -> Self {
        Self {
            n_floors: params.n_floors,
            storey_stiffness: params.storey_stiffness,
            top: [0.0; 2],
            base: [0.0; 2],
            drift: 0.0,
            abs_acc: 0.0,
            rel_acc: 0.0,
        }
    }

    pub fn summary(&self) -> ResponseSummary {
        ResponseSummary {
            top_left: self.top[0],
            top_right: self.top[1],
            max_drift: self.drift,
            max_abs_acc: self.abs_acc,
            max_rel_acc: self.rel_acc,
            max_base_shear: self.base[0].max(self.base[1]) * self.storey_stiffness,
        }
    }
}

impl StepObserver for PeakTracker {
    fn observe(&mut self, disp: &[f64], _vel: &[f64], acc: &[f64], ground_acc: f64) {
        let n = self.n_floors;
        for b in 0..2 {
            let floors = &disp[b * n..(b + 1) * n];
            self.top[b] = self.top[b].max(floors[n - 1].abs());
            self.base[b] = self.base[b].max(floors[0].abs());
            let mut below = 0.0;
            for &x in floors {
                self.drift = self.drift.max((x - below).abs());
                below = x;
            }
        }
        for &a in acc {
            self.rel_acc = self.rel_acc.max(a.abs());
            self.abs_acc = self.abs_acc.max((a + ground_acc).abs());
        }
    }
}

/// Everything needed to turn a damper configuration into peak responses:
/// the structure, the excitation, integrator settings, and a memo table.
#[derive(Debug, Clone)]
pub struct Evaluator {
    model: Arc<StructureModel>,
    record: Arc<GroundMotionRecord>,
    newmark: NewmarkParams,
    accel: AccelerationKind,
    cache: Arc<DashMap<DamperConfiguration, ResponseSummary>>,
}

impl Evaluator {
    pub fn new(
        model: StructureModel,
        record: GroundMotionRecord,
        newmark: NewmarkParams,
        accel: AccelerationKind,
    ) -> Result<Self> {
        newmark.validate()?;
        Ok(Self {
            model: Arc::new(model),
            record: Arc::new(record),
            newmark,
            accel,
            cache: Arc::new(DashMap::new()),
        })
    }

    pub fn model(&self) -> &StructureModel {
        &self.model
    }

    pub fn record(&self) -> &GroundMotionRecord {
        &self.record
    }

    pub fn newmark(&self) -> NewmarkParams {
        self.newmark
    }

    pub fn acceleration_kind(&self) -> AccelerationKind {
        self.accel
    }

    pub fn n_floors(&self) -> usize {
        self.model.building().n_floors
    }

    pub fn n_positions(&self) -> usize {
        self.model.n_positions()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    pub fn linear_system(&self, config: &DamperConfiguration) -> Result<LinearSystem> {
        Ok(LinearSystem::from(&self.model.system(config)?))
    }

    /// Full response history for one configuration, from rest.
    pub fn history(&self, config: &DamperConfiguration) -> Result<ResponseHistory> {
        crate::solver::newmark_solve_at_rest(&self.linear_system(config)?, &self.record, self.newmark)
    }

    /// Integrates the equations of motion for exactly this configuration.
    pub fn solve(&self, config: &DamperConfiguration) -> Result<ResponseSummary> {
        let wrap = |e: Error| Error::Evaluation {
            config: config.to_string(),
            source: Box::new(e),
        };
        let sys = self.linear_system(config).map_err(wrap)?;
        let integrator = NewmarkIntegrator::new(&sys, self.record.dt(), self.newmark).map_err(wrap)?;
        let zeros = vec![0.0; sys.n_dof()];
        let mut tracker = PeakTracker::new(self.model.building());
        integrator
            .run(self.record.accel(), &zeros, &zeros, &mut tracker)
            .map_err(wrap)?;
        Ok(tracker.summary())
    }

    /// The smaller of a configuration and its mirror image. Both have the
    /// same response up to exchanging the buildings.
    pub fn canonical(&self, config: &DamperConfiguration) -> DamperConfiguration {
        let m = config.mirrored(self.n_floors());
        if m < *config {
            m
        } else {
            config.clone()
        }
    }

    /// Solves the canonical twin and swaps the buildings back if needed, so
    /// mirror images get bitwise mirrored summaries. Bypasses the memo table.
    pub fn summary_uncached(&self, config: &DamperConfiguration) -> Result<ResponseSummary> {
        let canon = self.canonical(config);
        let s = self.solve(&canon)?;
        Ok(if canon == *config { s } else { s.mirrored() })
    }

    pub fn summary(&self, config: &DamperConfiguration) -> Result<ResponseSummary> {
        let canon = self.canonical(config);
        let s = match self.cache.get(&canon) {
            Some(s) => *s,
            None => {
                let s = self.solve(&canon)?;
                self.cache.insert(canon.clone(), s);
                s
            }
        };
        Ok(if canon == *config { s } else { s.mirrored() })
    }

    /// Seeds the memo table, e.g. from an exhaustive enumeration.
    pub fn prime(&self, config: DamperConfiguration, summary: ResponseSummary) {
        let canon = self.canonical(&config);
        let summary = if canon == config { summary } else { summary.mirrored() };
        self.cache.insert(canon, summary);
    }

    pub fn evaluate_objectives(
        &self,
        config: &DamperConfiguration,
        set: ObjectiveSet,
    ) -> Result<ObjectiveVector> {
        Ok(self.summary(config)?.objectives(set, self.accel))
    }
}
