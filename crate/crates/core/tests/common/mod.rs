#![allow(dead_code)]

use std::collections::BTreeMap;

use abm::{AgentData, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct Walker {
    pub energy: f64,
    pub group: i64,
    pub visits: i64,
}

impl Walker {
    pub fn new(energy: f64, group: i64) -> Self {
        Walker { energy, group, visits: 0 }
    }
}

impl AgentData for Walker {
    fn kind(&self) -> &'static str {
        "walker"
    }

    fn props(&self) -> Vec<(&'static str, Value)> {
        vec![
            ("energy", Value::Real(self.energy)),
            ("group", Value::Int(self.group)),
            ("visits", Value::Int(self.visits)),
        ]
    }

    fn from_props(_kind: &str, p: &BTreeMap<String, Value>) -> Result<Self, String> {
        let get = |k: &str| p.get(k).cloned().ok_or(format!("missing `{k}`"));
        Ok(Walker {
            energy: get("energy")?.as_f64().ok_or("energy")?,
            group: get("group")?.as_i64().ok_or("group")?,
            visits: get("visits")?.as_i64().ok_or("visits")?,
        })
    }
}
