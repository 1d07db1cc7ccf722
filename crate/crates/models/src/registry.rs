//! Lookup of the reference models by their stable names.

use abm::persist::{self, PersistError};
use abm::{Properties, Value};

use crate::fishery::Fishery;
use crate::flocking::Flocking;
use crate::forestfire::ForestFire;
use crate::schelling::Schelling;
use crate::sim::{self, ModelDef, ParamError, ParamSpec, Runner, Simulation};
use crate::wolfsheep::WolfSheep;

type BuildFn = fn(&Properties, u64) -> Result<Box<dyn Simulation>, ParamError>;
type ResumeFn = fn(&str) -> Result<Box<dyn Simulation>, PersistError>;

/// A registered model.
#[derive(Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub description: &'static str,
    pub params: fn() -> Vec<ParamSpec>,
    pub agent_collectors: fn() -> Vec<String>,
    pub model_collectors: fn() -> Vec<String>,
    pub objectives: fn() -> Vec<&'static str>,
    /// Labels of the per-step series shown by interactive front ends.
    pub series: fn() -> Vec<&'static str>,
    build: BuildFn,
    resume: ResumeFn,
}

impl std::fmt::Debug for Entry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Entry").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Entry {
    fn of<D: ModelDef>() -> Self {
        Entry {
            name: D::NAME,
            description: D::DESCRIPTION,
            params: D::params,
            agent_collectors: sim::agent_collector_names::<D>,
            model_collectors: sim::model_collector_names::<D>,
            objectives: || D::objectives().iter().map(|o| o.name).collect(),
            series: || D::series().iter().map(|s| s.label).collect(),
            build: |props, seed| Ok(Box::new(Runner::<D>::build(props, seed)?)),
            resume: |text| {
                let restored = persist::from_str::<D::Agent, D::Space, D::State>(text, None)?;
                Ok(Box::new(Runner::<D>::new(restored.model)))
            },
        }
    }

    /// Defaults overridden by `overrides`, validated.
    pub fn config(&self, overrides: &[(String, Value)]) -> Result<Properties, ParamError> {
        sim::resolve_config(&(self.params)(), overrides)
    }

    pub fn build(&self, overrides: &[(String, Value)], seed: u64) -> Result<Box<dyn Simulation>, ParamError> {
        self.build_from(&self.config(overrides)?, seed)
    }

    /// Builds from a complete property set, e.g. one taken from a running
    /// simulation.
    pub fn build_from(&self, props: &Properties, seed: u64) -> Result<Box<dyn Simulation>, ParamError> {
        (self.build)(props, seed)
    }

    pub fn resume(&self, text: &str) -> Result<Box<dyn Simulation>, PersistError> {
        let found = persist::model_name(text)?;
        if found != self.name {
            return Err(PersistError::WrongModel { expected: self.name.into(), found });
        }
        (self.resume)(text)
    }
}

pub fn models() -> Vec<Entry> {
    vec![
        Entry::of::<Schelling>(),
        Entry::of::<Flocking>(),
        Entry::of::<WolfSheep>(),
        Entry::of::<ForestFire>(),
        Entry::of::<Fishery>(),
    ]
}

pub fn names() -> Vec<&'static str> {
    models().iter().map(|e| e.name).collect()
}

pub fn find(name: &str) -> Option<Entry> {
    models().into_iter().find(|e| e.name == name)
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown model `{name}` (available: {})", names().join(", "))]
    UnknownModel { name: String },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

pub fn build(name: &str, overrides: &[(String, Value)], seed: u64) -> Result<Box<dyn Simulation>, RegistryError> {
    let entry = find(name).ok_or_else(|| RegistryError::UnknownModel { name: name.into() })?;
    Ok(entry.build(overrides, seed)?)
}

/// Restores any registered model from checkpoint text.
pub fn resume(text: &str) -> Result<Box<dyn Simulation>, RegistryError> {
    let name = persist::model_name(text)?;
    let entry = find(&name).ok_or(RegistryError::UnknownModel { name })?;
    Ok(entry.resume(text)?)
}

/// Parses `key=value` pairs; values are read as literals.
pub fn parse_assignments<S: AsRef<str>>(items: &[S]) -> Result<Vec<(String, Value)>, ParamError> {
    items
        .iter()
        .map(|item| {
            let item = item.as_ref();
            match item.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), Value::parse_literal(v))),
                _ => Err(ParamError::Invalid(format!("expected key=value, got `{item}`"))),
            }
        })
        .collect()
}
