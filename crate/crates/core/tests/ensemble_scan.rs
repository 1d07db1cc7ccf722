mod common;

use abm::collect;
use abm::ensemble::{paramscan, run_seed, scan_model, ScanSpec, Setting};
use abm::{AgentCollector, Aggregator, GridSpace, Model, ModelCollector, Properties, Scheduler, StepFunctions, Value};
use common::Walker;

type M = Model<Walker, GridSpace<2>>;

fn factory(setting: &Setting, seed: u64) -> Result<M, String> {
    let mut props = Properties::new();
    for (k, v) in setting {
        props.set(k.clone(), v.clone());
    }
    let n = props.get("n").and_then(Value::as_i64).unwrap_or(10);
    if n < 0 {
        return Err("negative population".into());
    }
    let mut m = M::new(GridSpace::new([8, 8], true), ())
        .with_seed(seed)
        .with_scheduler(Scheduler::Random)
        .with_properties(props);
    for i in 0..n {
        m.add_agent_single(Walker::new(4.0, i % 2)).map_err(|e| e.to_string())?;
    }
    Ok(m)
}

fn fns() -> StepFunctions<Walker, GridSpace<2>, ()> {
    StepFunctions::new().agent(|id, m: &mut M| {
        let drift = m.properties.get("drift").and_then(Value::as_f64).unwrap_or(0.0);
        m[id].energy += m.rng.uniform(-1.0, 1.0) + drift;
        m.move_agent_single(id);
    })
}

fn adata() -> Vec<AgentCollector<Walker, [usize; 2]>> {
    vec![AgentCollector::field("energy").aggregate(Aggregator::Mean)]
}

fn mdata() -> Vec<ModelCollector<M>> {
    vec![ModelCollector::func("agents", |m: &M| Value::Int(m.len() as i64))]
}

#[test]
fn worker_count_does_not_change_output() {
    let scan = ScanSpec::new(99, 3).param("n", [5, 10, 20]).param("drift", [-0.1, 0.0, 0.1]);
    let serial = scan_model(&scan, 1, factory, &fns(), &adata(), &mdata(), 15).unwrap();
    let parallel = scan_model(&scan, 8, factory, &fns(), &adata(), &mdata(), 15).unwrap();
    assert_eq!(serial.agent.to_csv_string(), parallel.agent.to_csv_string());
    assert_eq!(serial.model.to_csv_string(), parallel.model.to_csv_string());
    assert_eq!(serial.agent.len(), 27 * 16);
    assert_eq!(serial.agent.names(), &["n", "drift", "replicate", "seed", "step", "mean_energy"]);
}

#[test]
fn single_setting_equals_tagged_single_run() {
    let scan = ScanSpec::new(5, 1).param("n", [7]);
    let out = scan_model(&scan, 2, factory, &fns(), &adata(), &mdata(), 6).unwrap();
    let seed = run_seed(5, 0, 0);
    let mut m = factory(&scan.setting(0), seed).unwrap();
    let (a, _) = collect::run(&mut m, &fns(), 6, &adata(), &mdata(), 1).unwrap();
    let tags = vec![
        ("n".to_string(), Value::Int(7)),
        ("replicate".to_string(), Value::Int(0)),
        ("seed".to_string(), Value::Int(seed as i64)),
    ];
    assert_eq!(out.agent, a.with_tags(&tags));
}

#[test]
fn product_size_and_seed_tags() {
    let scan = ScanSpec::new(0, 2).param("a", [1, 2, 3]).param("b", [10, 20]);
    let out = paramscan(&scan, 4, |_, _| {
        let mut t = abm::DataTable::new(["step"]);
        t.push_row(vec![Some(Value::Int(0))]);
        Ok((t.clone(), t))
    })
    .unwrap();
    assert_eq!(out.model.len(), 12);
    let seeds = out.model.column("seed").unwrap();
    for s in 0..6 {
        for r in 0..2 {
            assert_eq!(seeds[s * 2 + r], Some(Value::Int(run_seed(0, s, r) as i64)));
        }
    }
}

#[test]
fn factory_failure_aborts_with_setting() {
    let scan = ScanSpec::new(0, 1).param("n", [3, -1, 4]);
    let err = scan_model(&scan, 3, factory, &fns(), &adata(), &mdata(), 2).unwrap_err();
    assert!(err.to_string().contains("n=-1"), "{err}");
}
