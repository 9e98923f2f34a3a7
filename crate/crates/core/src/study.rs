//! Study configuration file and the four pipeline commands built on it.
//!
//! A study is described by one TOML file; every section is optional and
//! falls back to the defaults of the corresponding library type.
//!
//! ```toml
//! [building]
//! n_floors = 6
//!
//! [ground_motion]
//! path = "elcentro.at2"   # omit for the synthetic record
//! format = "peer-at2"
//!
//! [objectives]
//! set = "drift-acc"
//! n_dampers = 3
//!
//! [moea]
//! algorithm = "mopso2"
//! population = 40
//! iterations = 200
//!
//! [[benchmark.rows]]
//! algorithm = "nsga2"
//! p_mut = 0.05
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchmarkReport, Contender, Oracle, ProblemContext};
use crate::enumeration::{self, read_front_csv, write_front_csv, ParetoFront};
use crate::error::{Error, Result};
use crate::ground_motion::{parse_record, GroundMotionRecord, RecordFormat, SyntheticMotion};
use crate::metrics::{AccelerationKind, Evaluator, ObjectiveSet};
use crate::model::{BuildingParams, DamperConfiguration, DamperParams, ModelOptions, StructureModel};
use crate::moea::{self, Algorithm, MoeaConfig, PlacementProblem, RunResult};
use crate::solver::NewmarkParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundMotionSettings {
    /// Record file; the synthetic record is used when absent.
    pub path: Option<PathBuf>,
    /// Inferred from the file extension when absent (`.at2` or CSV).
    pub format: Option<RecordFormat>,
    pub scale: Option<f64>,
    pub synthetic: SyntheticMotion,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    /// Resample the record to this step before integrating.
    pub dt: Option<f64>,
}

impl SolverSettings {
    pub fn newmark(&self) -> NewmarkParams {
        let d = NewmarkParams::default();
        NewmarkParams {
            beta: self.beta.unwrap_or(d.beta),
            gamma: self.gamma.unwrap_or(d.gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSettings {
    pub set: ObjectiveSet,
    pub n_dampers: usize,
    pub acceleration: AccelerationKind,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        Self {
            set: ObjectiveSet::LrDisp,
            n_dampers: 3,
            acceleration: AccelerationKind::Absolute,
        }
    }
}

/// One benchmark row; unset fields come from `[moea]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkRow {
    pub algorithm: Option<Algorithm>,
    pub population: Option<usize>,
    pub iterations: Option<usize>,
    pub p_mut: Option<f64>,
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSettings {
    pub runs: usize,
    pub base_seed: u64,
    /// Front file written by `enumerate`, reused instead of enumerating.
    pub oracle: Option<PathBuf>,
    /// Allow computing the oracle when no front file is given.
    pub enumerate: bool,
    /// Append the exhaustive search as a self-test row.
    pub exhaustive_row: bool,
    pub rows: Vec<BenchmarkRow>,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            runs: 10,
            base_seed: 0,
            oracle: None,
            enumerate: true,
            exhaustive_row: true,
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    /// Damper positions for the controlled run, e.g. `[2, 4, 7]`.
    pub configuration: Option<DamperConfiguration>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub building: BuildingParams,
    pub damper: DamperParams,
    pub model: ModelOptions,
    pub ground_motion: GroundMotionSettings,
    pub solver: SolverSettings,
    pub objectives: ObjectiveSettings,
    pub moea: MoeaConfig,
    pub benchmark: BenchmarkSettings,
    pub simulate: SimulateSettings,
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.ground_motion.path);
        resolve(&mut cfg.benchmark.oracle);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |section: &str, e: Error| Error::config(format!("[{section}] {e}"));
        self.building.validate().map_err(|e| ctx("building", e))?;
        self.damper.validate().map_err(|e| ctx("damper", e))?;
        self.solver.newmark().validate().map_err(|e| ctx("solver", e))?;
        if let Some(dt) = self.solver.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config(format!("[solver] dt must be positive, got {dt}")));
            }
        }
        if let Some(s) = self.ground_motion.scale {
            if !s.is_finite() {
                return Err(Error::config("[ground_motion] scale must be finite"));
            }
        }
        let p = crate::model::position_count(self.building.n_floors);
        if self.objectives.n_dampers == 0 || self.objectives.n_dampers > p {
            return Err(Error::config(format!(
                "[objectives] n_dampers must lie in 1..={p}, got {}",
                self.objectives.n_dampers
            )));
        }
        self.moea.validate().map_err(|e| ctx("moea", e))?;
        for (i, row) in self.benchmark.rows.iter().enumerate() {
            self.row_config(row)
                .validate()
                .map_err(|e| ctx(&format!("benchmark.rows[{i}]"), e))?;
        }
        if let Some(c) = &self.simulate.configuration {
            c.check_range(p).map_err(|e| ctx("simulate", e))?;
        }
        Ok(())
    }

    pub fn problem_context(&self) -> ProblemContext {
        ProblemContext {
            n_floors: self.building.n_floors,
            n_dampers: self.objectives.n_dampers,
            set: self.objectives.set,
        }
    }

    pub fn row_config(&self, row: &BenchmarkRow) -> MoeaConfig {
        let m = &self.moea;
        MoeaConfig {
            algorithm: row.algorithm.unwrap_or(m.algorithm),
            population: row.population.unwrap_or(m.population),
            iterations: row.iterations.unwrap_or(m.iterations),
            p_mut: row.p_mut.or(m.p_mut),
            ..m.clone()
        }
    }

    pub fn load_record(&self) -> Result<GroundMotionRecord> {
        let gm = &self.ground_motion;
        let record = match &gm.path {
            None => gm.synthetic.generate()?,
            Some(path) => {
                let format = gm.format.unwrap_or_else(|| {
                    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
                        Some(e) if e == "at2" => RecordFormat::PeerAt2,
                        _ => RecordFormat::TwoColumnCsv,
                    }
                });
                let file = File::open(path).map_err(|e| {
                    Error::config(format!("[ground_motion] cannot open {}: {e}", path.display()))
                })?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("record");
                parse_record(BufReader::new(file), format, name)
                    .map_err(|e| Error::config(format!("{}: {e}", path.display())))?
            }
        };
        let record = match gm.scale {
            Some(f) => record.scaled(f)?,
            None => record,
        };
        match self.solver.dt {
            Some(dt) => record.resample(dt),
            None => Ok(record),
        }
    }

    pub fn evaluator(&self) -> Result<Evaluator> {
        let model = StructureModel::new(self.building.clone(), self.damper.clone(), self.model.clone())?;
        Evaluator::new(model, self.load_record()?, self.solver.newmark(), self.objectives.acceleration)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_effective_config(cfg: &StudyConfig, out: &Path) -> Result<PathBuf> {
    let path = out.join("effective-config.toml");
    write_text(&path, &cfg.to_toml()?)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub configuration: String,
    pub top_left: f64,
    pub top_right: f64,
    pub max_drift: f64,
    pub max_acceleration: f64,
    pub max_base_shear: f64,
}

/// Top-floor histories without dampers and, if configured, with them.
/// Writes `simulate.csv` and `peaks.json`.
pub fn simulate(cfg: &StudyConfig, out: &Path) -> Result<Vec<PeakReport>> {
    let evaluator = cfg.evaluator()?;
    let n = cfg.building.n_floors;
    let mut cases = vec![DamperConfiguration::empty()];
    cases.extend(cfg.simulate.configuration.clone());
    let mut columns = Vec::new();
    let mut peaks = Vec::new();
    for config in &cases {
        let h = evaluator.history(config)?;
        let s = crate::metrics::ResponseSummary::from_history(&h, &cfg.building);
        let label = if config.is_empty() { "none".to_string() } else { config.to_string() };
        peaks.push(PeakReport {
            configuration: label.clone(),
            top_left: s.top_left,
            top_right: s.top_right,
            max_drift: s.max_drift,
            max_acceleration: match cfg.objectives.acceleration {
                AccelerationKind::Absolute => s.max_abs_acc,
                AccelerationKind::Relative => s.max_rel_acc,
            },
            max_base_shear: s.max_base_shear,
        });
        columns.push((label, h.dt, h.rel_disp.column(n - 1).clone_owned(), h.rel_disp.column(2 * n - 1).clone_owned()));
    }
    let mut w = create(&out.join("simulate.csv"))?;
    write!(w, "t")?;
    for (label, ..) in &columns {
        write!(w, ",x_left[{label}],x_right[{label}]")?;
    }
    writeln!(w)?;
    let steps = columns[0].2.len();
    for i in 0..steps {
        write!(w, "{:?}", i as f64 * columns[0].1)?;
        for (_, _, l, r) in &columns {
            write!(w, ",{:?},{:?}", l[i], r[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    write_text(
        &out.join("peaks.json"),
        &serde_json::to_string_pretty(&peaks).map_err(|e| Error::config(e.to_string()))?,
    )?;
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationTiming {
    pub configurations: usize,
    pub elapsed_seconds: f64,
    pub mean_ms_per_evaluation: f64,
}

/// Exhaustive search for the configured objective set. Writes
/// `scatter.csv`, `front.csv` and `timing.json`.
pub fn enumerate(cfg: &StudyConfig, out: &Path) -> Result<(ParetoFront<DamperConfiguration>, EnumerationTiming)> {
    let evaluator = cfg.evaluator()?;
    let (space, front, summaries) =
        enumeration::exhaustive_front(&evaluator, cfg.objectives.set, cfg.objectives.n_dampers)?;
    let mut w = create(&out.join("scatter.csv"))?;
    space.write_scatter_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("front.csv"))?;
    write_front_csv(&front, &mut w)?;
    w.flush()?;
    let timing = EnumerationTiming {
        configurations: summaries.len(),
        elapsed_seconds: summaries.elapsed.as_secs_f64(),
        mean_ms_per_evaluation: summaries.mean_evaluation_time().as_secs_f64() * 1e3,
    };
    write_text(
        &out.join("timing.json"),
        &serde_json::to_string_pretty(&timing).map_err(|e| Error::config(e.to_string()))?,
    )?;
    Ok((front, timing))
}

/// One seeded run of `[moea]`; writes `runs/<algorithm>-seed<seed>.json`.
pub fn optimize(cfg: &StudyConfig, out: &Path) -> Result<(RunResult, PathBuf)> {
    let evaluator = cfg.evaluator()?;
    let problem = PlacementProblem {
        evaluator: &evaluator,
        set: cfg.objectives.set,
        n_dampers: cfg.objectives.n_dampers,
    };
    let result = moea::run(&cfg.moea, &problem)?;
    let name = format!("{}-seed{}.json", format!("{:?}", cfg.moea.algorithm).to_lowercase(), cfg.moea.seed);
    let path = out.join("runs").join(name);
    write_text(&path, &result.to_json()?)?;
    Ok((result, path))
}

/// Loads a front file and checks it against the configured problem by
/// re-evaluating every configuration it lists.
pub fn load_oracle(cfg: &StudyConfig, evaluator: &Evaluator, path: &Path) -> Result<Oracle> {
    let file = File::open(path)
        .map_err(|e| Error::config(format!("cannot open oracle {}: {e}", path.display())))?;
    let front = read_front_csv(BufReader::new(file), cfg.objectives.set)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    let p = evaluator.n_positions();
    for point in &front.points {
        for c in &point.payloads {
            let mismatch = |why: String| {
                Error::config(format!(
                    "oracle {} does not belong to the configured problem: {why}",
                    path.display()
                ))
            };
            if c.len() != cfg.objectives.n_dampers || c.check_range(p).is_err() {
                return Err(mismatch(format!("configuration {c} is not a placement of {} dampers on {p} positions", cfg.objectives.n_dampers)));
            }
            let got = evaluator.evaluate_objectives(c, cfg.objectives.set)?.pair();
            if bench::hit_vector(&[point.objectives.pair()], &[got]) != [true] {
                return Err(mismatch(format!(
                    "{c} evaluates to ({:e}, {:e}), file says ({:e}, {:e})",
                    got.0, got.1, point.objectives.f1, point.objectives.f2
                )));
            }
        }
    }
    Oracle::new(cfg.problem_context(), front)
}

/// Oracle plus success-rate table for every configured row. Writes
/// `benchmark.csv`, `benchmark.txt`, `hits.json` and, when the oracle was
/// computed here, `front.csv`.
pub fn benchmark(cfg: &StudyConfig, out: &Path) -> Result<Vec<BenchmarkReport>> {
    let evaluator = cfg.evaluator()?;
    let ctx = cfg.problem_context();
    let oracle = match &cfg.benchmark.oracle {
        Some(path) => load_oracle(cfg, &evaluator, path)?,
        None if cfg.benchmark.enumerate => {
            let summaries = enumeration::enumerate_summaries(&evaluator, ctx.n_dampers)?;
            let space = summaries.solution_space(ctx.set, cfg.objectives.acceleration);
            let front = space.front()?;
            for (c, s) in summaries.entries {
                evaluator.prime(c, s);
            }
            let mut w = create(&out.join("front.csv"))?;
            write_front_csv(&front, &mut w)?;
            w.flush()?;
            Oracle::new(ctx, front)?
        }
        None => {
            return Err(Error::config(
                "no oracle: set [benchmark] oracle to a front.csv written by `enumerate`, \
                 or set [benchmark] enumerate = true",
            ))
        }
    };
    let problem = PlacementProblem {
        evaluator: &evaluator,
        set: ctx.set,
        n_dampers: ctx.n_dampers,
    };
    let rows = if cfg.benchmark.rows.is_empty() {
        vec![BenchmarkRow::default()]
    } else {
        cfg.benchmark.rows.clone()
    };
    let mut reports = Vec::new();
    for row in &rows {
        let runs = row.runs.unwrap_or(cfg.benchmark.runs);
        let contender = Contender::Moea(cfg.row_config(row));
        reports.push(bench::run_benchmark(&contender, runs, cfg.benchmark.base_seed, &oracle, &ctx, &problem)?);
    }
    if cfg.benchmark.exhaustive_row {
        reports.push(bench::run_benchmark(
            &Contender::Exhaustive,
            cfg.benchmark.runs,
            cfg.benchmark.base_seed,
            &oracle,
            &ctx,
            &problem,
        )?);
    }
    let table = bench::compare_table(&reports)?;
    write_text(&out.join("benchmark.csv"), &table.csv)?;
    write_text(&out.join("benchmark.txt"), &table.text)?;
    write_text(&out.join("hits.json"), &bench::reports_to_json(&reports)?)?;
    Ok(reports)
}
