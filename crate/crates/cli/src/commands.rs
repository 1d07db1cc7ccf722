use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use abm::ensemble::{self, OptimizeSpec, ScanSpec};
use abm::{DataTable, Value};
use abm_models::registry::{self, RegistryError};
use abm_models::{bench as timing, Entry, ParamError, Simulation};

use crate::{BenchArgs, Collect, Failure, OptimizeArgs, ResumeArgs, RunArgs, ScanArgs, ServeArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn find(name: &str) -> Result<Entry, Failure> {
    abm_models::find(name).ok_or_else(|| {
        Failure::Usage(format!("unknown model `{name}` (available: {})", registry::names().join(", ")))
    })
}

fn param_failure(e: ParamError) -> Failure {
    match e {
        ParamError::Unknown(_) => Failure::Usage(e.to_string()),
        _ => Failure::Model(e.to_string()),
    }
}

fn registry_failure(e: RegistryError) -> Failure {
    match e {
        RegistryError::Param(p) => param_failure(p),
        other => Failure::Model(other.to_string()),
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn random_seed() -> u64 {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
    abm::rng::mix64(nanos ^ std::process::id() as u64) >> 1
}

fn workers(n: Option<usize>) -> usize {
    n.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
}

fn assignments(items: &[String]) -> Result<Vec<(String, Value)>, Failure> {
    registry::parse_assignments(items).map_err(|e| Failure::Usage(e.to_string()))
}

/// Rejects collector names the model does not offer.
fn check_collectors(entry: &Entry, c: &Collect) -> Result<(), Failure> {
    let agent = (entry.agent_collectors)();
    if let Some(bad) = c.adata.iter().find(|n| !agent.contains(n)) {
        return Err(Failure::Usage(format!(
            "unknown agent collector `{bad}` for {} (available: {})",
            entry.name,
            agent.join(", ")
        )));
    }
    let mut model = (entry.model_collectors)();
    model.extend((entry.params)().into_iter().map(|p| p.name));
    if let Some(bad) = c.mdata.iter().find(|n| !model.contains(n)) {
        return Err(Failure::Usage(format!(
            "unknown model collector `{bad}` for {} (available: {})",
            entry.name,
            model.join(", ")
        )));
    }
    if c.when == 0 {
        return Err(Failure::Usage("--when must be at least 1".into()));
    }
    Ok(())
}

fn collect_flags(c: &Collect) -> String {
    let mut s = format!("--steps {} --when {}", c.steps, c.when);
    if !c.adata.is_empty() {
        s += &format!(" --adata {}", c.adata.join(","));
    }
    if !c.mdata.is_empty() {
        s += &format!(" --mdata {}", c.mdata.join(","));
    }
    s
}

fn provenance(command: &str) -> String {
    format!("# abm-version {VERSION}; command: {command}")
}

fn suffixed(out: &Path, suffix: &str) -> PathBuf {
    let mut name = OsString::from(out.as_os_str());
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes the requested tables, each preceded by the provenance line.
fn emit(out: Option<&Path>, prov: &str, tables: &[(&str, &DataTable)]) -> Result<(), Failure> {
    let render = |t: &DataTable| format!("{prov}\n{}", t.to_csv_string());
    match out {
        Some(out) => {
            for (suffix, table) in tables {
                let path = suffixed(out, suffix);
                fs::write(&path, render(table)).map_err(|e| io_failure(&path, e))?;
            }
        }
        None => {
            let text: Vec<String> = tables.iter().map(|(_, t)| render(t)).collect();
            std::io::stdout()
                .write_all(text.join("\n").as_bytes())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn requested<'a>(c: &Collect, agent: &'a DataTable, model: &'a DataTable) -> Vec<(&'static str, &'a DataTable)> {
    let mut tables = Vec::new();
    if !c.adata.is_empty() {
        tables.push(("_agents.csv", agent));
    }
    if !c.mdata.is_empty() {
        tables.push(("_model.csv", model));
    }
    tables
}

fn advance(sim: &mut dyn Simulation, c: &Collect, prov: &str) -> Result<(), Failure> {
    if c.adata.is_empty() && c.mdata.is_empty() {
        sim.step(c.steps);
        return Ok(());
    }
    let (a, m) = sim
        .run_collect(c.steps, &c.adata, &c.mdata, c.when)
        .map_err(|e| Failure::Model(e.to_string()))?;
    emit(c.out.as_deref(), prov, &requested(c, &a, &m))
}

fn save(sim: &dyn Simulation, path: &Path) -> Result<(), Failure> {
    let text = sim.checkpoint().map_err(|e| Failure::Model(e.to_string()))?;
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let entry = find(&args.model)?;
    check_collectors(&entry, &args.collect)?;
    if args.collect.adata.is_empty() && args.collect.mdata.is_empty() && args.checkpoint.is_none() {
        return Err(Failure::Usage("nothing to record: pass --adata, --mdata or --checkpoint".into()));
    }
    let overrides = assignments(&args.config)?;
    let props = entry.config(&overrides).map_err(param_failure)?;
    let seed = args.seed.unwrap_or_else(random_seed);
    let mut sim = entry.build_from(&props, seed).map_err(param_failure)?;
    let config: Vec<String> = props.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let prov = provenance(&format!(
        "abm run {} --seed {seed} {} {}",
        entry.name,
        collect_flags(&args.collect),
        config.join(" ")
    ));
    advance(sim.as_mut(), &args.collect, &prov)?;
    if let Some(path) = &args.checkpoint {
        save(sim.as_ref(), path)?;
    }
    Ok(())
}

pub fn resume(args: ResumeArgs) -> Result<(), Failure> {
    let path = &args.checkpoint;
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut sim = registry::resume(&text).map_err(registry_failure)?;
    let entry = find(sim.name())?;
    check_collectors(&entry, &args.collect)?;
    let prov = provenance(&format!("abm resume {} {}", path.display(), collect_flags(&args.collect)));
    advance(sim.as_mut(), &args.collect, &prov)?;
    if let Some(out) = &args.save {
        save(sim.as_ref(), out)?;
    }
    Ok(())
}

/// Parses one scan argument into the values it stands for.
fn axis(item: &str) -> Result<(String, Vec<Value>), Failure> {
    let bad = || Failure::Usage(format!("cannot read scan axis `{item}`"));
    let (name, spec) = item.split_once('=').filter(|(k, _)| !k.is_empty()).ok_or_else(bad)?;
    let values = if let Some((lo, rest)) = spec.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, Some(step)),
            None => (rest, None),
        };
        match (lo.parse::<i64>(), hi.parse::<i64>(), step) {
            (Ok(lo), Ok(hi), None) if lo <= hi => (lo..=hi).map(Value::Int).collect(),
            _ => {
                let lo: f64 = lo.parse().map_err(|_| bad())?;
                let hi: f64 = hi.parse().map_err(|_| bad())?;
                let step: f64 = step.ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if !(step > 0.0 && hi >= lo) {
                    return Err(bad());
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| Value::Real(((lo + i as f64 * step) * 1e12).round() / 1e12)).collect()
            }
        }
    } else {
        spec.split(',').map(Value::parse_literal).collect()
    };
    Ok((name.to_string(), values))
}

pub fn scan(args: ScanArgs) -> Result<(), Failure> {
    let entry = find(&args.model)?;
    check_collectors(&entry, &args.collect)?;
    if args.collect.adata.is_empty() && args.collect.mdata.is_empty() {
        return Err(Failure::Usage("nothing to record: pass --adata or --mdata".into()));
    }
    let mut fixed = Vec::new();
    let mut spec = ScanSpec::new(args.seed, args.replicates);
    for item in &args.params {
        let (name, values) = axis(item)?;
        for v in &values {
            entry.config(&[(name.clone(), v.clone())]).map_err(param_failure)?;
        }
        if values.len() == 1 {
            fixed.push((name, values[0].clone()));
        } else {
            spec.params.push((name, values));
        }
    }
    if spec.params.is_empty() {
        return Err(Failure::Usage("a scan needs at least one axis with several values".into()));
    }
    let props = entry.config(&fixed).map_err(param_failure)?;
    let scanned: Vec<&str> = spec.params.iter().map(|(n, _)| n.as_str()).collect();
    let held: Vec<(String, Value)> =
        props.iter().filter(|(k, _)| !scanned.contains(k)).map(|(k, v)| (k.to_string(), v.clone())).collect();
    let c = &args.collect;
    let out = ensemble::paramscan(&spec, workers(args.workers), |setting, seed| {
        let mut overrides = held.clone();
        overrides.extend(setting.iter().cloned());
        let mut sim = entry.build(&overrides, seed).map_err(|e| e.to_string())?;
        sim.run_collect(c.steps, &c.adata, &c.mdata, c.when).map_err(|e| e.to_string())
    })
    .map_err(|e| Failure::Model(e.to_string()))?;

    let axes: Vec<String> = args.params.iter().filter(|p| axis(p).is_ok_and(|(_, v)| v.len() > 1)).cloned().collect();
    let held_text: Vec<String> = held.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let prov = provenance(&format!(
        "abm scan {} {} --replicates {} --seed {} {} {}",
        entry.name,
        axes.join(" "),
        args.replicates,
        args.seed,
        collect_flags(c),
        held_text.join(" ")
    ));
    emit(c.out.as_deref(), &prov, &requested(c, &out.agent, &out.model))
}

pub fn bench(args: BenchArgs) -> Result<(), Failure> {
    let cases: Vec<_> = timing::cases()
        .into_iter()
        .filter(|c| args.models.is_empty() || args.models.iter().any(|m| m == c.model))
        .collect();
    if let Some(bad) = args.models.iter().find(|m| !cases.iter().any(|c| &c.model == m)) {
        let all: Vec<_> = timing::cases().iter().map(|c| c.model).collect();
        return Err(Failure::Usage(format!("no benchmark for `{bad}` (available: {})", all.join(", "))));
    }
    let mut text = provenance(&format!("abm bench --reps {} --seed {}", args.reps, args.seed)) + "\n";
    text += "model,steps,median_ms,min_ms,steps_per_sec,budget_ms,loc,within_slack\n";
    let mut over = Vec::new();
    for case in &cases {
        let t = timing::run(case, args.reps, args.seed).map_err(registry_failure)?;
        let sps = t.steps as f64 / (t.median_ms / 1e3).max(1e-9);
        let ok = t.within(args.slack);
        text += &format!(
            "{},{},{:.3},{:.3},{:.1},{},{},{}\n",
            t.model, t.steps, t.median_ms, t.min_ms, sps, t.budget_ms, t.loc, ok
        );
        if !ok {
            over.push(format!("{} took {:.1} ms (limit {:.1} ms)", t.model, t.median_ms, t.budget_ms * args.slack));
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &text).map_err(|e| io_failure(path, e))?,
        None => print!("{text}"),
    }
    if args.check && !over.is_empty() {
        return Err(Failure::Check(over.join("; ")));
    }
    Ok(())
}

fn bound(item: &str) -> Result<(String, f64, f64), Failure> {
    let bad = || Failure::Usage(format!("expected name=lo..hi, got `{item}`"));
    let (name, spec) = item.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = spec.split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(bad());
    }
    Ok((name.to_string(), lo, hi))
}

pub fn optimize(args: OptimizeArgs) -> Result<(), Failure> {
    let entry = find(&args.model)?;
    let objectives = (entry.objectives)();
    let objective = match &args.objective {
        Some(o) if objectives.contains(&o.as_str()) => o.clone(),
        Some(o) => {
            return Err(Failure::Usage(format!(
                "unknown objective `{o}` for {} (available: {})",
                entry.name,
                objectives.join(", ")
            )))
        }
        None => objectives
            .first()
            .ok_or_else(|| Failure::Usage(format!("{} has no objectives", entry.name)))?
            .to_string(),
    };
    let fixed = assignments(&args.config)?;
    let props = entry.config(&fixed).map_err(param_failure)?;
    let bounds = args.params.iter().map(|p| bound(p)).collect::<Result<Vec<_>, _>>()?;
    let specs = (entry.params)();
    let integer: Vec<bool> = bounds
        .iter()
        .map(|(n, _, _)| specs.iter().find(|s| &s.name == n).is_some_and(|s| matches!(s.default, Value::Int(_))))
        .collect();
    let to_value = |x: f64, int: bool| if int { Value::Int(x.round() as i64) } else { Value::Real(x) };
    for ((name, lo, hi), &int) in bounds.iter().zip(&integer) {
        for x in [*lo, *hi] {
            entry.config(&[(name.clone(), to_value(x, int))]).map_err(param_failure)?;
        }
    }
    let base: Vec<(String, Value)> = props.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    let spec = OptimizeSpec {
        population: args.population,
        budget: args.budget,
        replicates: args.replicates,
        seed: args.seed,
        workers: workers(args.workers),
        ..OptimizeSpec::new(bounds.clone())
    };
    let result = ensemble::optimize(&spec, |x, seed| {
        let mut overrides = base.clone();
        overrides.extend(bounds.iter().zip(&integer).zip(x).map(|(((n, _, _), &int), &xi)| (n.clone(), to_value(xi, int))));
        match entry.build(&overrides, seed) {
            Ok(mut sim) => sim.objective(&objective, args.steps).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    })
    .map_err(|e| Failure::Model(e.to_string()))?;

    let flags: Vec<String> = args.params.iter().map(|p| format!("--param {p}")).collect();
    let held: Vec<String> = base.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let prov = provenance(&format!(
        "abm optimize {} --objective {objective} {} --steps {} --budget {} --population {} --replicates {} --seed {} {}",
        entry.name,
        flags.join(" "),
        args.steps,
        args.budget,
        args.population,
        args.replicates,
        args.seed,
        held.join(" ")
    ));
    println!("{prov}");
    println!("objective={objective}");
    for ((name, _, _), (&x, &int)) in bounds.iter().zip(result.best.iter().zip(&integer)) {
        println!("{name}={}", to_value(x, int));
    }
    println!("cost={}", result.best_cost);
    println!("evaluations={}", result.evaluations);
    if let Some(path) = &args.out {
        let text = format!("{prov}\n{}", result.log_table().to_csv_string());
        fs::write(path, text).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<(), Failure> {
    let addr: std::net::SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| Failure::Usage(format!("bad address: {e}")))?;
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let config = abm_serve::ServerConfig {
        grace: std::time::Duration::from_secs(args.grace),
        ..abm_serve::ServerConfig::default()
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(abm_serve::serve(addr, config)).map_err(|e| Failure::Io(format!("{addr}: {e}")))
}

pub fn list(model: Option<&str>) -> Result<(), Failure> {
    let Some(name) = model else {
        for e in abm_models::models() {
            println!("{:<12} {}", e.name, e.description);
        }
        return Ok(());
    };
    let entry = find(name)?;
    println!("{}: {}", entry.name, entry.description);
    println!("parameters:");
    for p in (entry.params)() {
        let range = match &p.range {
            abm_models::ParamRange::Values { values } => {
                values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            }
            abm_models::ParamRange::Interval { min, max, step } => format!("{min}..{max} step {step}"),
        };
        let when = if p.live { "live" } else { "on reset" };
        println!("  {:<18} default {:<10} range {range} ({when})", p.name, p.default.to_string());
    }
    println!("agent collectors: {}", (entry.agent_collectors)().join(", "));
    println!("model collectors: {}", (entry.model_collectors)().join(", "));
    println!("objectives: {}", (entry.objectives)().join(", "));
    Ok(())
}
