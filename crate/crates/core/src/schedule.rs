//! Activation-order policies, evaluated afresh at the start of every step.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentData, AgentId};
use crate::model::Model;
use crate::space::Space;

pub type AgentPredicate<A, P> = Arc<dyn Fn(&Agent<A, P>) -> bool + Send + Sync>;
pub type CustomOrder<A, S, X> = Arc<dyn Fn(&mut Model<A, S, X>) -> Vec<AgentId> + Send + Sync>;

/// How agents are ordered for activation.
pub enum Scheduler<A, S: Space, X> {
    /// Ascending id, which is insertion order.
    Fastest,
    /// Fisher–Yates shuffle of ascending ids with the model rng.
    Random,
    /// Stable sort on a named field; ties keep ascending id.
    ByProperty { field: String, ascending: bool },
    /// Kinds in the listed order, then any unlisted kinds by name. Ids within
    /// a kind ascend, or are shuffled when `shuffle_within`.
    ByKind { order: Vec<String>, shuffle_within: bool },
    /// `base` order with agents failing the predicate removed.
    Filtered {
        predicate: AgentPredicate<A, S::Pos>,
        base: Box<Scheduler<A, S, X>>,
    },
    /// Arbitrary order; must name alive agents at most once.
    Custom(CustomOrder<A, S, X>),
}

impl<A, S: Space, X> Clone for Scheduler<A, S, X> {
    fn clone(&self) -> Self {
        match self {
            Scheduler::Fastest => Scheduler::Fastest,
            Scheduler::Random => Scheduler::Random,
            Scheduler::ByProperty { field, ascending } => Scheduler::ByProperty {
                field: field.clone(),
                ascending: *ascending,
            },
            Scheduler::ByKind { order, shuffle_within } => Scheduler::ByKind {
                order: order.clone(),
                shuffle_within: *shuffle_within,
            },
            Scheduler::Filtered { predicate, base } => Scheduler::Filtered {
                predicate: predicate.clone(),
                base: base.clone(),
            },
            Scheduler::Custom(f) => Scheduler::Custom(f.clone()),
        }
    }
}

impl<A, S: Space, X> Default for Scheduler<A, S, X> {
    fn default() -> Self {
        Scheduler::Fastest
    }
}

impl<A, S: Space, X> fmt::Display for Scheduler<A, S, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheduler::Fastest => f.write_str("fastest"),
            Scheduler::Random => f.write_str("randomly"),
            Scheduler::ByProperty { field, ascending } => {
                write!(f, "by_property({field}, {})", if *ascending { "ascending" } else { "descending" })
            }
            Scheduler::ByKind { order, shuffle_within } => {
                write!(f, "by_kind([{}], shuffle={shuffle_within})", order.join(", "))
            }
            Scheduler::Filtered { base, .. } => write!(f, "filtered({base})"),
            Scheduler::Custom(_) => f.write_str("custom"),
        }
    }
}

impl<A, S: Space, X> fmt::Debug for Scheduler<A, S, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Serializable description of a scheduler. Closure-based schedulers are
/// recorded by name only and must be supplied again when restoring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerSpec {
    Fastest,
    Random,
    ByProperty { field: String, ascending: bool },
    ByKind { order: Vec<String>, shuffle_within: bool },
    Filtered,
    Custom,
}

impl<A, S: Space, X> Scheduler<A, S, X> {
    pub fn spec(&self) -> SchedulerSpec {
        match self {
            Scheduler::Fastest => SchedulerSpec::Fastest,
            Scheduler::Random => SchedulerSpec::Random,
            Scheduler::ByProperty { field, ascending } => SchedulerSpec::ByProperty {
                field: field.clone(),
                ascending: *ascending,
            },
            Scheduler::ByKind { order, shuffle_within } => SchedulerSpec::ByKind {
                order: order.clone(),
                shuffle_within: *shuffle_within,
            },
            Scheduler::Filtered { .. } => SchedulerSpec::Filtered,
            Scheduler::Custom(_) => SchedulerSpec::Custom,
        }
    }

    /// Rebuilds a data-only scheduler; `None` for filtered/custom.
    pub fn from_spec(spec: &SchedulerSpec) -> Option<Self> {
        Some(match spec {
            SchedulerSpec::Fastest => Scheduler::Fastest,
            SchedulerSpec::Random => Scheduler::Random,
            SchedulerSpec::ByProperty { field, ascending } => Scheduler::ByProperty {
                field: field.clone(),
                ascending: *ascending,
            },
            SchedulerSpec::ByKind { order, shuffle_within } => Scheduler::ByKind {
                order: order.clone(),
                shuffle_within: *shuffle_within,
            },
            SchedulerSpec::Filtered | SchedulerSpec::Custom => return None,
        })
    }

    pub fn by_property(field: impl Into<String>, ascending: bool) -> Self {
        Scheduler::ByProperty { field: field.into(), ascending }
    }

    pub fn by_kind<I: IntoIterator<Item = T>, T: Into<String>>(order: I, shuffle_within: bool) -> Self {
        Scheduler::ByKind {
            order: order.into_iter().map(Into::into).collect(),
            shuffle_within,
        }
    }

    pub fn filtered(
        predicate: impl Fn(&Agent<A, S::Pos>) -> bool + Send + Sync + 'static,
        base: Self,
    ) -> Self {
        Scheduler::Filtered {
            predicate: Arc::new(predicate),
            base: Box::new(base),
        }
    }

    pub fn custom(f: impl Fn(&mut Model<A, S, X>) -> Vec<AgentId> + Send + Sync + 'static) -> Self {
        Scheduler::Custom(Arc::new(f))
    }
}

impl<A: AgentData, S: Space, X> Scheduler<A, S, X> {
    /// Activation order over the agents alive right now.
    pub fn order(&self, model: &mut Model<A, S, X>) -> Vec<AgentId> {
        match self {
            Scheduler::Fastest => model.ids().collect(),
            Scheduler::Random => {
                let mut ids: Vec<AgentId> = model.ids().collect();
                model.rng.shuffle(&mut ids);
                ids
            }
            Scheduler::ByProperty { field, ascending } => {
                let mut keyed: Vec<_> = model
                    .agents()
                    .map(|a| {
                        let v = a
                            .get(field)
                            .unwrap_or_else(|| panic!("agent {} has no field `{field}`", a.id()));
                        (v, a.id())
                    })
                    .collect();
                keyed.sort_by(|(va, ia), (vb, ib)| {
                    let ord = va.total_cmp(vb);
                    let ord = if *ascending { ord } else { ord.reverse() };
                    ord.then(ia.cmp(ib))
                });
                keyed.into_iter().map(|(_, id)| id).collect()
            }
            Scheduler::ByKind { order, shuffle_within } => {
                let rank = |k: &str| order.iter().position(|o| o == k).unwrap_or(order.len());
                let mut keyed: Vec<(usize, &'static str, AgentId)> = model
                    .agents()
                    .map(|a| (rank(a.kind()), a.kind(), a.id()))
                    .collect();
                keyed.sort();
                let mut ids: Vec<AgentId> = Vec::with_capacity(keyed.len());
                let mut start = 0;
                while start < keyed.len() {
                    let mut end = start;
                    while end < keyed.len() && keyed[end].1 == keyed[start].1 {
                        end += 1;
                    }
                    let block_start = ids.len();
                    ids.extend(keyed[start..end].iter().map(|k| k.2));
                    if *shuffle_within {
                        model.rng.shuffle(&mut ids[block_start..]);
                    }
                    start = end;
                }
                ids
            }
            Scheduler::Filtered { predicate, base } => {
                let ids = base.order(model);
                ids.into_iter()
                    .filter(|id| predicate(&model[*id]))
                    .collect()
            }
            Scheduler::Custom(f) => {
                let ids = f(model);
                #[cfg(debug_assertions)]
                {
                    let mut seen = std::collections::HashSet::new();
                    for id in &ids {
                        assert!(model.contains(*id), "custom scheduler returned dead id {id}");
                        assert!(seen.insert(*id), "custom scheduler returned {id} twice");
                    }
                }
                ids
            }
        }
    }
}
