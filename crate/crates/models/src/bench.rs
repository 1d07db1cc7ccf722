//! Timing harness for the benchmark configurations, plus line counts of the
//! model sources.

use std::time::Instant;

use abm::Value;
use serde::Serialize;

use crate::registry;

/// A pinned benchmark run.
#[derive(Clone, Debug)]
pub struct Case {
    pub model: &'static str,
    pub config: Vec<(String, Value)>,
    /// `None` runs until the model reports it is finished.
    pub steps: Option<u64>,
    /// Target wall time of the stepping phase, in milliseconds.
    pub budget_ms: f64,
}

pub fn cases() -> Vec<Case> {
    vec![
        Case { model: "schelling", config: Vec::new(), steps: Some(100), budget_ms: 50.0 },
        Case { model: "flocking", config: Vec::new(), steps: Some(100), budget_ms: 200.0 },
        Case { model: "wolfsheep", config: Vec::new(), steps: Some(500), budget_ms: 1000.0 },
        Case { model: "forestfire", config: Vec::new(), steps: None, budget_ms: 100.0 },
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub model: String,
    pub steps: u64,
    /// Median stepping time over the repetitions.
    pub median_ms: f64,
    pub min_ms: f64,
    pub budget_ms: f64,
    pub loc: usize,
}

impl Timing {
    pub fn within(&self, slack: f64) -> bool {
        self.median_ms < self.budget_ms * slack
    }
}

/// Runs `case` `reps` times with seeds `seed, seed + 1, …`. Model
/// construction is not timed.
pub fn run(case: &Case, reps: usize, seed: u64) -> Result<Timing, registry::RegistryError> {
    let mut times = Vec::with_capacity(reps.max(1));
    let mut steps = 0;
    for r in 0..reps.max(1) as u64 {
        let mut sim = registry::build(case.model, &case.config, seed.wrapping_add(r))?;
        let start = Instant::now();
        steps = match case.steps {
            Some(n) => {
                sim.step(n);
                n
            }
            None => sim.step_until_finished(u64::MAX),
        };
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    Ok(Timing {
        model: case.model.into(),
        steps,
        median_ms: times[times.len() / 2],
        min_ms: times[0],
        budget_ms: case.budget_ms,
        loc: source(case.model).map_or(0, count_loc),
    })
}

pub fn source(model: &str) -> Option<&'static str> {
    Some(match model {
        "schelling" => include_str!("schelling.rs"),
        "flocking" => include_str!("flocking.rs"),
        "wolfsheep" => include_str!("wolfsheep.rs"),
        "forestfire" => include_str!("forestfire.rs"),
        "fishery" => include_str!("fishery.rs"),
        _ => return None,
    })
}

/// Non-blank, non-comment lines, skipping `#[cfg(test)]` items.
pub fn count_loc(src: &str) -> usize {
    let mut count = 0;
    let mut in_block = false;
    let mut skip_depth: Option<i64> = None;
    let mut depth = 0i64;
    let mut pending_test = false;
    for raw in src.lines() {
        let line = raw.trim();
        if in_block {
            if line.contains("*/") {
                in_block = false;
            }
            continue;
        }
        if line.starts_with("/*") {
            in_block = !line.contains("*/");
            continue;
        }
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        if line.starts_with("#[cfg(test)]") {
            pending_test = true;
            continue;
        }
        let opens = line.matches('{').count() as i64;
        let closes = line.matches('}').count() as i64;
        if pending_test && skip_depth.is_none() {
            pending_test = false;
            skip_depth = Some(depth);
        }
        depth += opens - closes;
        if let Some(d) = skip_depth {
            if depth <= d && (opens > 0 || closes > 0 || line.ends_with(';')) {
                skip_depth = None;
            }
            continue;
        }
        count += 1;
    }
    count
}
