//! Parameter scans, replicated ensembles and differential-evolution
//! optimization.
//!
//! Runs are share-nothing: each task builds its own model from a parameter
//! setting and a derived seed, and results are merged by task index, so the
//! worker count never changes the output.

use rayon::prelude::*;

use crate::collect::{self, AgentCollector, CollectError, DataTable, ModelCollector};
use crate::model::{Model, StepFunctions};
use crate::rng::{mix64, Rng};
use crate::space::Space;
use crate::{AgentData, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("run failed for setting #{index} ({setting}), replicate {replicate}: {message}")]
    RunFailed {
        index: usize,
        setting: String,
        replicate: usize,
        message: String,
    },
    #[error("invalid optimizer settings: {0}")]
    InvalidOptimizer(String),
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

/// A parameter grid: every combination of the value lists, in order, with
/// the last parameter varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub params: Vec<(String, Vec<Value>)>,
    pub replicates: usize,
    pub base_seed: u64,
}

/// One point of the grid.
pub type Setting = Vec<(String, Value)>;

fn describe(setting: &Setting) -> String {
    setting
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl ScanSpec {
    pub fn new(base_seed: u64, replicates: usize) -> Self {
        ScanSpec { params: Vec::new(), replicates, base_seed }
    }

    pub fn param<I: IntoIterator<Item = V>, V: Into<Value>>(mut self, name: impl Into<String>, values: I) -> Self {
        self.params.push((name.into(), values.into_iter().map(Into::into).collect()));
        self
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.replicates == 0 {
            return Err(EnsembleError::InvalidScan("replicates must be at least 1".into()));
        }
        for (name, values) in &self.params {
            if values.is_empty() {
                return Err(EnsembleError::InvalidScan(format!("parameter `{name}` has no values")));
            }
        }
        Ok(())
    }

    pub fn setting_count(&self) -> usize {
        self.params.iter().map(|(_, v)| v.len()).product()
    }

    pub fn run_count(&self) -> usize {
        self.setting_count() * self.replicates
    }

    /// The `index`-th setting in canonical (row-major) order.
    pub fn setting(&self, mut index: usize) -> Setting {
        let mut out: Setting = Vec::with_capacity(self.params.len());
        for (name, values) in self.params.iter().rev() {
            out.push((name.clone(), values[index % values.len()].clone()));
            index /= values.len();
        }
        out.reverse();
        out
    }

    pub fn settings(&self) -> impl Iterator<Item = Setting> + '_ {
        (0..self.setting_count()).map(|i| self.setting(i))
    }
}

/// Seed for replicate `replicate` of setting `setting`:
/// `mix64(mix64(mix64(base) ^ setting) ^ replicate) >> 1`, where `mix64` is
/// one splitmix64 output. The shift keeps seeds representable as signed
/// 64-bit integers in output tables.
pub fn run_seed(base_seed: u64, setting: usize, replicate: usize) -> u64 {
    mix64(mix64(mix64(base_seed) ^ setting as u64) ^ replicate as u64) >> 1
}

/// Merged output of a scan: agent and model tables with tag columns
/// (parameters, `replicate`, `seed`) prepended.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutput {
    pub agent: DataTable,
    pub model: DataTable,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, EnsembleError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EnsembleError::Pool(e.to_string()))
}

/// Runs `run(setting, seed)` for every (setting, replicate) of the scan on
/// `workers` threads and merges the returned tables in canonical order.
pub fn paramscan<F>(scan: &ScanSpec, workers: usize, run: F) -> Result<ScanOutput, EnsembleError>
where
    F: Fn(&Setting, u64) -> Result<(DataTable, DataTable), String> + Sync,
{
    scan.validate()?;
    let tasks: Vec<(usize, usize)> = (0..scan.setting_count())
        .flat_map(|s| (0..scan.replicates).map(move |r| (s, r)))
        .collect();
    let results: Vec<Result<(DataTable, DataTable), EnsembleError>> = pool(workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(s, r)| {
                let setting = scan.setting(s);
                let seed = run_seed(scan.base_seed, s, r);
                let (a, m) = run(&setting, seed).map_err(|message| EnsembleError::RunFailed {
                    index: s,
                    setting: describe(&setting),
                    replicate: r,
                    message,
                })?;
                let mut tags: Vec<(String, Value)> = setting;
                tags.push(("replicate".into(), Value::Int(r as i64)));
                tags.push(("seed".into(), Value::Int(seed as i64)));
                Ok((a.with_tags(&tags), m.with_tags(&tags)))
            })
            .collect()
    });

    let mut merged: Option<ScanOutput> = None;
    for res in results {
        let (a, m) = res?;
        match &mut merged {
            None => merged = Some(ScanOutput { agent: a, model: m }),
            Some(out) => {
                out.agent.append(&a);
                out.model.append(&m);
            }
        }
    }
    Ok(merged.expect("a valid scan has at least one run"))
}

/// [`paramscan`] for a model built by `factory(setting, seed)` and run for
/// `steps` steps with the given collectors, collecting every step.
#[allow(clippy::too_many_arguments)]
pub fn scan_model<A, S, X, F>(
    scan: &ScanSpec,
    workers: usize,
    factory: F,
    fns: &StepFunctions<A, S, X>,
    adata: &[AgentCollector<A, S::Pos>],
    mdata: &[ModelCollector<Model<A, S, X>>],
    steps: u64,
) -> Result<ScanOutput, EnsembleError>
where
    A: AgentData,
    S: Space,
    F: Fn(&Setting, u64) -> Result<Model<A, S, X>, String> + Sync,
    StepFunctions<A, S, X>: Sync,
    AgentCollector<A, S::Pos>: Sync,
    ModelCollector<Model<A, S, X>>: Sync,
{
    paramscan(scan, workers, |setting, seed| {
        let mut model = factory(setting, seed)?;
        collect::run(&mut model, fns, steps, adata, mdata, 1).map_err(|e: CollectError| e.to_string())
    })
}

/// Differential evolution (rand/1/bin) settings.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeSpec {
    /// `(name, lower, upper)` per dimension.
    pub bounds: Vec<(String, f64, f64)>,
    pub population: usize,
    /// Differential weight, in (0, 2).
    pub f: f64,
    /// Crossover rate, in [0, 1].
    pub cr: f64,
    /// Total candidate evaluations, including the initial population.
    pub budget: usize,
    /// Cost is averaged over this many replicate seeds per candidate.
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
}

impl OptimizeSpec {
    pub fn new(bounds: Vec<(String, f64, f64)>) -> Self {
        OptimizeSpec {
            bounds,
            population: 20,
            f: 0.8,
            cr: 0.9,
            budget: 2000,
            replicates: 1,
            seed: 0,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: &str| Err(EnsembleError::InvalidOptimizer(m.to_string()));
        if self.bounds.is_empty() {
            return bad("no parameters");
        }
        for (name, lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(&format!("degenerate bounds for `{name}`"));
            }
        }
        if self.population < 4 {
            return bad("population must be at least 4");
        }
        if !(self.f > 0.0 && self.f < 2.0) {
            return bad("F must lie in (0, 2)");
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad("CR must lie in [0, 1]");
        }
        if self.budget < self.population {
            return bad("budget must cover the initial population");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub evaluations: usize,
    pub best_cost: f64,
    pub best: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeResult {
    pub names: Vec<String>,
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: usize,
    pub log: Vec<GenerationLog>,
}

impl OptimizeResult {
    /// Columns `generation, evaluations, best_cost`, then one per parameter.
    pub fn log_table(&self) -> DataTable {
        let mut names = vec!["generation".to_string(), "evaluations".into(), "best_cost".into()];
        names.extend(self.names.iter().cloned());
        let mut t = DataTable::new(names);
        for g in &self.log {
            let mut row = vec![
                Some(Value::Int(g.generation as i64)),
                Some(Value::Int(g.evaluations as i64)),
                Some(Value::Real(g.best_cost)),
            ];
            row.extend(g.best.iter().map(|x| Some(Value::Real(*x))));
            t.push_row(row);
        }
        t
    }
}

/// Minimizes `cost(params, seed)` with differential evolution.
///
/// Replicate seeds are shared by all candidates, so candidates are compared
/// under common random numbers. Non-finite costs count as `+inf`.
pub fn optimize<C>(spec: &OptimizeSpec, cost: C) -> Result<OptimizeResult, EnsembleError>
where
    C: Fn(&[f64], u64) -> f64 + Sync,
{
    spec.validate()?;
    let dims = spec.bounds.len();
    let np = spec.population;
    let mut rng = Rng::seed_from_u64(spec.seed);
    let seeds: Vec<u64> = (0..spec.replicates).map(|r| run_seed(spec.seed, 0, r)).collect();
    let pool = pool(spec.workers)?;

    let evaluate = |cands: &[Vec<f64>]| -> Vec<f64> {
        pool.install(|| {
            cands
                .par_iter()
                .map(|x| {
                    let total: f64 = seeds.iter().map(|s| cost(x, *s)).sum();
                    let c = total / seeds.len() as f64;
                    if c.is_finite() {
                        c
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| spec.bounds.iter().map(|(_, lo, hi)| rng.uniform(*lo, *hi)).collect())
        .collect();
    let mut costs = evaluate(&pop);
    let mut evaluations = np;

    let best_of = |costs: &[f64]| {
        (0..costs.len())
            .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
            .expect("population is non-empty")
    };
    let mut log = Vec::new();
    let b = best_of(&costs);
    log.push(GenerationLog { generation: 0, evaluations, best_cost: costs[b], best: pop[b].clone() });

    let mut generation = 0;
    while evaluations < spec.budget {
        generation += 1;
        let n_trials = np.min(spec.budget - evaluations);
        let trials: Vec<Vec<f64>> = (0..n_trials)
            .map(|i| {
                let pick = |rng: &mut Rng, taken: &[usize]| loop {
                    let k = rng.index(np);
                    if !taken.contains(&k) {
                        break k;
                    }
                };
                let a = pick(&mut rng, &[i]);
                let bb = pick(&mut rng, &[i, a]);
                let c = pick(&mut rng, &[i, a, bb]);
                let forced = rng.index(dims);
                (0..dims)
                    .map(|j| {
                        let (_, lo, hi) = spec.bounds[j];
                        if j == forced || rng.chance(spec.cr) {
                            (pop[a][j] + spec.f * (pop[bb][j] - pop[c][j])).clamp(lo, hi)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_costs = evaluate(&trials);
        evaluations += n_trials;
        for (i, (x, c)) in trials.into_iter().zip(trial_costs).enumerate() {
            if c <= costs[i] {
                pop[i] = x;
                costs[i] = c;
            }
        }
        let b = best_of(&costs);
        log.push(GenerationLog { generation, evaluations, best_cost: costs[b], best: pop[b].clone() });
    }

    let b = best_of(&costs);
    Ok(OptimizeResult {
        names: spec.bounds.iter().map(|(n, _, _)| n.clone()).collect(),
        best: pop[b].clone(),
        best_cost: costs[b],
        evaluations,
        log,
    })
}
