//! Reference models built on the `abm` engine, plus a registry so they can
//! be run by name and a small benchmark harness.

use std::collections::BTreeMap;

use abm::Value;

pub mod bench;
pub mod fishery;
pub mod flocking;
pub mod forestfire;
pub mod registry;
pub mod schelling;
pub mod sim;
pub mod wolfsheep;

pub use registry::{build, find, models, resume, Entry};
pub use sim::{ParamError, ParamRange, ParamSpec, Simulation, Snapshot};

fn prop<'a>(props: &'a BTreeMap<String, Value>, name: &str) -> Result<&'a Value, String> {
    props.get(name).ok_or_else(|| format!("missing field `{name}`"))
}

pub(crate) fn prop_f64(props: &BTreeMap<String, Value>, name: &str) -> Result<f64, String> {
    prop(props, name)?
        .as_f64()
        .ok_or_else(|| format!("field `{name}` is not a number"))
}

pub(crate) fn prop_i64(props: &BTreeMap<String, Value>, name: &str) -> Result<i64, String> {
    prop(props, name)?
        .as_i64()
        .ok_or_else(|| format!("field `{name}` is not an integer"))
}

pub(crate) fn prop_bool(props: &BTreeMap<String, Value>, name: &str) -> Result<bool, String> {
    prop(props, name)?
        .as_bool()
        .ok_or_else(|| format!("field `{name}` is not a bool"))
}
