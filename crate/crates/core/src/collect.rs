//! Declarative data collection.
//!
//! Agent collectors read a named field or a function of each agent, either
//! raw (one row per agent per collection) or reduced by an aggregator,
//! optionally over a filtered subset. Model collectors read a named property
//! or a function of the whole model. [`run`] steps a model exactly like
//! [`Model::step`] while filling two [`DataTable`]s.
//!
//! Column naming: raw columns use the source name; aggregated columns are
//! `<aggregator>_<source>` with `_<filter>` appended when filtered, so
//! summing `mood` gives `sum_mood`.

use std::io;
use std::sync::Arc;

use crate::agent::{Agent, AgentData};
use crate::model::{Model, StepFunctions, Stop};
use crate::space::Space;
use crate::value::Value;

#[derive(Debug, thiserror::Error)]
pub enum CollectError {
    #[error("cannot resolve collector `{0}`")]
    Resolution(String),
    #[error("agent collectors must be either all raw or all aggregated")]
    MixedCollectors,
    #[error("collector `{0}` has a filter but no aggregator")]
    FilterWithoutAggregator(String),
    #[error("collection interval must be at least 1")]
    ZeroInterval,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

pub type AggregateFn = Arc<dyn Fn(&[Value]) -> Option<Value> + Send + Sync>;

/// Reduction over the values gathered from (filtered) agents in one step.
///
/// Empty inputs give `0` for `Sum` and `Count` and a missing cell for the
/// others. `Count` counts `true` booleans and every non-boolean value.
#[derive(Clone)]
pub enum Aggregator {
    Sum,
    Count,
    Mean,
    Minimum,
    Maximum,
    /// Sample standard deviation (n − 1); missing below two values.
    Std,
    Custom { name: String, f: AggregateFn },
}

impl Aggregator {
    pub fn custom(name: impl Into<String>, f: impl Fn(&[Value]) -> Option<Value> + Send + Sync + 'static) -> Self {
        Aggregator::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        match self {
            Aggregator::Sum => "sum",
            Aggregator::Count => "count",
            Aggregator::Mean => "mean",
            Aggregator::Minimum => "minimum",
            Aggregator::Maximum => "maximum",
            Aggregator::Std => "std",
            Aggregator::Custom { name, .. } => name,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sum" => Aggregator::Sum,
            "count" => Aggregator::Count,
            "mean" => Aggregator::Mean,
            "minimum" | "min" => Aggregator::Minimum,
            "maximum" | "max" => Aggregator::Maximum,
            "std" => Aggregator::Std,
            _ => return None,
        })
    }

    pub fn apply(&self, values: &[Value]) -> Option<Value> {
        match self {
            Aggregator::Sum => {
                if values.iter().all(|v| matches!(v, Value::Int(_) | Value::Bool(_))) {
                    Some(Value::Int(values.iter().map(|v| v.as_i64().unwrap()).sum()))
                } else {
                    let mut s = 0.0;
                    for v in values {
                        s += v.as_f64()?;
                    }
                    Some(Value::Real(s))
                }
            }
            Aggregator::Count => Some(Value::Int(
                values
                    .iter()
                    .filter(|v| !matches!(v, Value::Bool(false)))
                    .count() as i64,
            )),
            Aggregator::Mean => {
                if values.is_empty() {
                    return None;
                }
                let mut s = 0.0;
                for v in values {
                    s += v.as_f64()?;
                }
                Some(Value::Real(s / values.len() as f64))
            }
            Aggregator::Minimum => values.iter().min_by(|a, b| a.total_cmp(b)).cloned(),
            Aggregator::Maximum => values.iter().max_by(|a, b| a.total_cmp(b)).cloned(),
            Aggregator::Std => {
                if values.len() < 2 {
                    return None;
                }
                let xs: Option<Vec<f64>> = values.iter().map(Value::as_f64).collect();
                let xs = xs?;
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
                Some(Value::Real(var.sqrt()))
            }
            Aggregator::Custom { f, .. } => f(values),
        }
    }
}

/// Where a collected value comes from.
pub enum Source<T: ?Sized> {
    Field(String),
    Func {
        name: String,
        f: Arc<dyn Fn(&T) -> Value + Send + Sync>,
    },
}

impl<T: ?Sized> Clone for Source<T> {
    fn clone(&self) -> Self {
        match self {
            Source::Field(n) => Source::Field(n.clone()),
            Source::Func { name, f } => Source::Func { name: name.clone(), f: f.clone() },
        }
    }
}

impl<T: ?Sized> Source<T> {
    pub fn name(&self) -> &str {
        match self {
            Source::Field(n) => n,
            Source::Func { name, .. } => name,
        }
    }
}

pub type AgentFilter<A, P> = Arc<dyn Fn(&Agent<A, P>) -> bool + Send + Sync>;

/// One entry of `adata`.
pub struct AgentCollector<A, P> {
    pub source: Source<Agent<A, P>>,
    pub aggregator: Option<Aggregator>,
    pub filter: Option<(String, AgentFilter<A, P>)>,
}

impl<A, P> Clone for AgentCollector<A, P> {
    fn clone(&self) -> Self {
        AgentCollector {
            source: self.source.clone(),
            aggregator: self.aggregator.clone(),
            filter: self.filter.clone(),
        }
    }
}

impl<A: AgentData, P> AgentCollector<A, P> {
    pub fn field(name: impl Into<String>) -> Self {
        AgentCollector {
            source: Source::Field(name.into()),
            aggregator: None,
            filter: None,
        }
    }

    pub fn func(name: impl Into<String>, f: impl Fn(&Agent<A, P>) -> Value + Send + Sync + 'static) -> Self {
        AgentCollector {
            source: Source::Func { name: name.into(), f: Arc::new(f) },
            aggregator: None,
            filter: None,
        }
    }

    pub fn aggregate(mut self, aggregator: Aggregator) -> Self {
        self.aggregator = Some(aggregator);
        self
    }

    /// Restricts an aggregated collector to agents passing `pred`.
    pub fn filtered(
        mut self,
        name: impl Into<String>,
        pred: impl Fn(&Agent<A, P>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.filter = Some((name.into(), Arc::new(pred)));
        self
    }

    pub fn column_name(&self) -> String {
        match &self.aggregator {
            None => self.source.name().to_string(),
            Some(agg) => {
                let mut name = format!("{}_{}", agg.name(), self.source.name());
                if let Some((f, _)) = &self.filter {
                    name.push('_');
                    name.push_str(f);
                }
                name
            }
        }
    }

    fn value(&self, agent: &Agent<A, P>) -> Option<Value> {
        match &self.source {
            Source::Field(n) => agent.get(n),
            Source::Func { f, .. } => Some(f(agent)),
        }
    }

    /// The aggregated value over the model's current agents.
    pub fn aggregate_over<'a, I>(&self, agents: I) -> Option<Value>
    where
        I: Iterator<Item = &'a Agent<A, P>>,
        A: 'a,
        P: 'a,
    {
        let agg = self.aggregator.as_ref().expect("collector is not aggregated");
        let values: Vec<Value> = agents
            .filter(|a| self.filter.as_ref().map_or(true, |(_, f)| f(a)))
            .filter_map(|a| self.value(a))
            .collect();
        agg.apply(&values)
    }
}

/// One entry of `mdata`.
pub struct ModelCollector<M: ?Sized> {
    pub source: Source<M>,
}

impl<M: ?Sized> Clone for ModelCollector<M> {
    fn clone(&self) -> Self {
        ModelCollector { source: self.source.clone() }
    }
}

impl<M> ModelCollector<M> {
    pub fn property(name: impl Into<String>) -> Self {
        ModelCollector { source: Source::Field(name.into()) }
    }

    pub fn func(name: impl Into<String>, f: impl Fn(&M) -> Value + Send + Sync + 'static) -> Self {
        ModelCollector {
            source: Source::Func { name: name.into(), f: Arc::new(f) },
        }
    }

    pub fn column_name(&self) -> &str {
        self.source.name()
    }
}

impl<A: AgentData, S: Space, X> ModelCollector<Model<A, S, X>> {
    pub fn value(&self, model: &Model<A, S, X>) -> Option<Value> {
        match &self.source {
            Source::Field(n) => model.properties.get(n).cloned(),
            Source::Func { f, .. } => Some(f(model)),
        }
    }
}

pub type Cell = Option<Value>;

/// Named columns of equal length; `step` always comes first.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn new<I: IntoIterator<Item = T>, T: Into<String>>(names: I) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        DataTable { names, columns }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.names.len(), "row width does not match table");
        for (col, cell) in self.columns.iter_mut().zip(row) {
            col.push(cell);
        }
    }

    pub fn column(&self, name: &str) -> Option<&[Cell]> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&self.columns[i])
    }

    pub fn row(&self, i: usize) -> Vec<Cell> {
        self.columns.iter().map(|c| c[i].clone()).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<Cell>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Numeric view of a column; missing cells become NaN.
    pub fn f64_column(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .iter()
                .map(|c| c.as_ref().and_then(Value::as_f64).unwrap_or(f64::NAN))
                .collect(),
        )
    }

    /// New table with `tags` prepended as constant columns.
    pub fn with_tags(&self, tags: &[(String, Value)]) -> DataTable {
        let mut names: Vec<String> = tags.iter().map(|(n, _)| n.clone()).collect();
        names.extend(self.names.iter().cloned());
        let mut columns: Vec<Vec<Cell>> = tags
            .iter()
            .map(|(_, v)| vec![Some(v.clone()); self.len()])
            .collect();
        columns.extend(self.columns.iter().cloned());
        DataTable { names, columns }
    }

    /// Appends the rows of `other`, which must have identical column names.
    pub fn append(&mut self, other: &DataTable) {
        assert_eq!(self.names, other.names, "cannot append tables with different columns");
        for (dst, src) in self.columns.iter_mut().zip(&other.columns) {
            dst.extend(src.iter().cloned());
        }
    }

    /// RFC 4180 CSV with a header row; missing cells are empty fields and
    /// reals use shortest round-trip formatting.
    pub fn write_csv<W: io::Write>(&self, sink: W) -> Result<(), CsvError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.names)?;
        for i in 0..self.len() {
            w.write_record(
                self.columns
                    .iter()
                    .map(|c| c[i].as_ref().map(Value::to_string).unwrap_or_default()),
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses CSV written by [`write_csv`](Self::write_csv). Lines starting
    /// with `#` are comments.
    pub fn read_csv<R: io::Read>(source: R) -> Result<DataTable, CsvError> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(source);
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut table = DataTable::new(names);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != table.width() {
                return Err(CsvError::Malformed(format!(
                    "row has {} fields, header has {}",
                    rec.len(),
                    table.width()
                )));
            }
            table.push_row(
                rec.iter()
                    .map(|f| if f.is_empty() { None } else { Some(Value::parse_literal(f)) })
                    .collect(),
            );
        }
        Ok(table)
    }
}

/// Validated collector set plus the empty output tables.
struct Plan<'c, A, S: Space, X> {
    adata: &'c [AgentCollector<A, S::Pos>],
    mdata: &'c [ModelCollector<Model<A, S, X>>],
    raw: bool,
}

impl<'c, A: AgentData, S: Space, X> Plan<'c, A, S, X> {
    fn new(
        model: &Model<A, S, X>,
        adata: &'c [AgentCollector<A, S::Pos>],
        mdata: &'c [ModelCollector<Model<A, S, X>>],
    ) -> Result<Self, CollectError> {
        let raw_count = adata.iter().filter(|c| c.aggregator.is_none()).count();
        if raw_count != 0 && raw_count != adata.len() {
            return Err(CollectError::MixedCollectors);
        }
        for c in adata {
            if c.filter.is_some() && c.aggregator.is_none() {
                return Err(CollectError::FilterWithoutAggregator(c.column_name()));
            }
            if let Source::Field(name) = &c.source {
                // One representative per agent kind present at run start.
                let mut seen: Vec<&'static str> = Vec::new();
                for a in model.agents() {
                    if seen.contains(&a.kind()) {
                        continue;
                    }
                    seen.push(a.kind());
                    if a.get(name).is_none() {
                        return Err(CollectError::Resolution(format!(
                            "agent field `{name}` on kind `{}`",
                            a.kind()
                        )));
                    }
                }
            }
        }
        for c in mdata {
            if let Source::Field(name) = &c.source {
                if !model.properties.contains(name) {
                    return Err(CollectError::Resolution(format!("model property `{name}`")));
                }
            }
        }
        Ok(Plan {
            adata,
            mdata,
            raw: raw_count > 0,
        })
    }

    fn tables(&self) -> (DataTable, DataTable) {
        let mut anames = vec!["step".to_string()];
        if self.raw {
            anames.push("id".to_string());
        }
        anames.extend(self.adata.iter().map(|c| c.column_name()));
        let mut mnames = vec!["step".to_string()];
        mnames.extend(self.mdata.iter().map(|c| c.column_name().to_string()));
        (DataTable::new(anames), DataTable::new(mnames))
    }

    fn collect(&self, model: &Model<A, S, X>, agent_table: &mut DataTable, model_table: &mut DataTable) {
        if !self.adata.is_empty() {
            for row in agent_rows(model, self.adata) {
                agent_table.push_row(row);
            }
        }
        if !self.mdata.is_empty() {
            model_table.push_row(model_row(model, self.mdata));
        }
    }
}

/// Rows contributed by the agent collectors at the model's current step:
/// one per agent (ascending id) for raw collectors, a single row otherwise.
pub fn agent_rows<A: AgentData, S: Space, X>(
    model: &Model<A, S, X>,
    collectors: &[AgentCollector<A, S::Pos>],
) -> Vec<Vec<Cell>> {
    let step = Some(Value::Int(model.step_count() as i64));
    if collectors.iter().all(|c| c.aggregator.is_none()) {
        model
            .agents()
            .map(|a| {
                let mut row = vec![step.clone(), Some(Value::Int(a.id().0 as i64))];
                row.extend(collectors.iter().map(|c| c.value(a)));
                row
            })
            .collect()
    } else {
        let mut row = vec![step];
        row.extend(collectors.iter().map(|c| c.aggregate_over(model.agents())));
        vec![row]
    }
}

pub fn model_row<A: AgentData, S: Space, X>(
    model: &Model<A, S, X>,
    collectors: &[ModelCollector<Model<A, S, X>>],
) -> Vec<Cell> {
    let mut row = vec![Some(Value::Int(model.step_count() as i64))];
    row.extend(collectors.iter().map(|c| c.value(model)));
    row
}

/// Steps the model like [`Model::step`], collecting the pre-run state and
/// then the state after every `when`-th step.
pub fn run<'a, A, S, X>(
    model: &mut Model<A, S, X>,
    fns: &StepFunctions<A, S, X>,
    stop: impl Into<Stop<'a, Model<A, S, X>>>,
    adata: &[AgentCollector<A, S::Pos>],
    mdata: &[ModelCollector<Model<A, S, X>>],
    when: u64,
) -> Result<(DataTable, DataTable), CollectError>
where
    A: AgentData + 'a,
    S: Space + 'a,
    X: 'a,
{
    if when == 0 {
        return Err(CollectError::ZeroInterval);
    }
    let stop = stop.into();
    let plan = Plan::new(model, adata, mdata)?;
    let (mut atable, mut mtable) = plan.tables();
    plan.collect(model, &mut atable, &mut mtable);
    let mut taken = 0;
    while !stop.done(model, taken) {
        model.step_once(fns);
        taken += 1;
        if taken % when == 0 {
            plan.collect(model, &mut atable, &mut mtable);
        }
    }
    Ok((atable, mtable))
}
