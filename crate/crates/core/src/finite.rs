//! Finite-state automata described by tables: a label-valued state
//! variable, per-state constant outputs and explicit transitions.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{ActionKind, Hioaw, Role, Rule, Signature};
use crate::value::{Valuation, Value, VarName, VarType};
use crate::world::{FieldKind, FieldSlice, FieldValue, SpaceGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiniteError {
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("undeclared action {0}")]
    UnknownAction(String),
    #[error("undeclared variable {0}")]
    UnknownVar(String),
    #[error("value {value} does not fit variable {var}")]
    BadValue { var: String, value: String },
    #[error("no states declared")]
    NoStates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: String,
    pub action: String,
    pub to: String,
    /// Required input values.
    pub when: Vec<(String, Value)>,
    pub urgent: bool,
    pub priority: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpec {
    pub name: String,
    pub state_var: String,
    pub states: Vec<String>,
    pub start: Vec<String>,
    pub inputs: Vec<(String, VarType)>,
    pub outputs: Vec<(String, Role, VarType)>,
    /// Output values per state; unlisted outputs take their identity.
    /// World outputs take a scalar and become uniform fields.
    pub emit: BTreeMap<String, BTreeMap<String, Value>>,
    pub actions: Vec<(String, ActionKind)>,
    pub transitions: Vec<Transition>,
    pub menus: BTreeMap<String, Vec<Value>>,
}

impl FiniteSpec {
    /// States as listed; the first one is the start state.
    pub fn new(name: &str, state_var: &str, states: &[&str]) -> Self {
        FiniteSpec {
            name: name.into(),
            state_var: state_var.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
            start: states.first().map(|s| vec![s.to_string()]).unwrap_or_default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            emit: BTreeMap::new(),
            actions: Vec::new(),
            transitions: Vec::new(),
            menus: BTreeMap::new(),
        }
    }

    pub fn start(mut self, states: &[&str]) -> Self {
        self.start = states.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn input(mut self, name: &str, ty: VarType) -> Self {
        self.inputs.push((name.into(), ty));
        self
    }

    pub fn output(mut self, name: &str, ty: VarType) -> Self {
        self.outputs.push((name.into(), Role::AutoOut, ty));
        self
    }

    pub fn world_output(mut self, name: &str, grid: SpaceGrid) -> Self {
        self.outputs.push((name.into(), Role::WorldOut, VarType::Field { kind: FieldKind::Real, grid }));
        self
    }

    pub fn emit(mut self, state: &str, var: &str, value: impl Into<Value>) -> Self {
        self.emit.entry(state.into()).or_default().insert(var.into(), value.into());
        self
    }

    pub fn action(mut self, name: &str, kind: ActionKind) -> Self {
        self.actions.push((name.into(), kind));
        self
    }

    pub fn menu(mut self, var: &str, values: Vec<Value>) -> Self {
        self.menus.insert(var.into(), values);
        self
    }

    pub fn transition(self, from: &str, action: &str, to: &str) -> Self {
        self.push(from, action, to, Vec::new(), false)
    }

    pub fn urgent_transition(self, from: &str, action: &str, to: &str) -> Self {
        self.push(from, action, to, Vec::new(), true)
    }

    pub fn transition_when(self, from: &str, action: &str, to: &str, var: &str, value: impl Into<Value>) -> Self {
        self.push(from, action, to, vec![(var.into(), value.into())], false)
    }

    fn push(mut self, from: &str, action: &str, to: &str, when: Vec<(String, Value)>, urgent: bool) -> Self {
        self.transitions.push(Transition {
            from: from.into(),
            action: action.into(),
            to: to.into(),
            when,
            urgent,
            priority: None,
        });
        self
    }

    /// Renames the state variable, so that two copies of one table can be composed.
    pub fn with_state_var(mut self, state_var: &str) -> Self {
        self.state_var = state_var.into();
        self
    }

    pub fn build(&self) -> Result<Hioaw, FiniteError> {
        if self.states.is_empty() {
            return Err(FiniteError::NoStates);
        }
        let known = |s: &str| {
            if self.states.iter().any(|x| x == s) {
                Ok(())
            } else {
                Err(FiniteError::UnknownState(s.to_string()))
            }
        };
        let mut sig = Signature::new().var(&self.state_var, Role::AutoInternal, VarType::Label);
        for (n, ty) in &self.inputs {
            sig.declare(n, Role::AutoIn, *ty);
        }
        for (n, role, ty) in &self.outputs {
            sig.declare(n, *role, *ty);
        }
        for (a, kind) in &self.actions {
            sig.declare_action(a, *kind);
        }
        for s in &self.start {
            known(s)?;
        }

        let mut table: BTreeMap<String, Valuation> = BTreeMap::new();
        for s in &self.states {
            let mut out = Valuation::new();
            for (n, _, ty) in &self.outputs {
                let given = self.emit.get(s).and_then(|m| m.get(n));
                let v = match (given, ty) {
                    (None, t) => t.identity(),
                    (Some(Value::Scalar(x)), VarType::Field { kind: FieldKind::Real, grid }) => {
                        Value::Field(FieldSlice::constant(*grid, FieldValue::Real(*x)))
                    }
                    (Some(v), t) if v.has_type(t) => v.clone(),
                    (Some(v), _) => return Err(FiniteError::BadValue { var: n.clone(), value: v.to_string() }),
                };
                out.insert(n.as_str(), v);
            }
            table.insert(s.clone(), out);
        }
        for (s, m) in &self.emit {
            known(s)?;
            if let Some(n) = m.keys().find(|n| !self.outputs.iter().any(|(o, _, _)| o == *n)) {
                return Err(FiniteError::UnknownVar(n.clone()));
            }
        }

        let state_var = VarName::new(self.state_var.as_str());
        let mut rules = Vec::new();
        for t in &self.transitions {
            known(&t.from)?;
            known(&t.to)?;
            if sig.action_kind(&t.action).is_none() {
                return Err(FiniteError::UnknownAction(t.action.clone()));
            }
            for (v, val) in &t.when {
                match sig.type_of(v) {
                    Some(ty) if sig.inputs().contains(v.as_str()) && val.has_type(ty) => {}
                    Some(_) => return Err(FiniteError::BadValue { var: v.clone(), value: val.to_string() }),
                    None => return Err(FiniteError::UnknownVar(v.clone())),
                }
            }
            let (sv, from, when) = (state_var.clone(), t.from.clone(), t.when.clone());
            let (sv2, to) = (state_var.clone(), t.to.clone());
            let mut rule = Rule::new(
                &t.action,
                move |s| s.label(sv.as_str()) == Some(from.as_str()) && when.iter().all(|(v, x)| s.get(v) == Some(x)),
                move |_| Valuation::from_iter([(sv2.clone(), Value::Label(to.clone()))]),
            );
            rule.urgent = t.urgent;
            rule.priority = t.priority;
            rules.push(rule);
        }

        let states = self.states.clone();
        let sv = state_var.clone();
        let dynamics = crate::automaton::FnDynamics {
            outputs: move |x: &Valuation| x.label(sv.as_str()).and_then(|l| table.get(l)).cloned().unwrap_or_default(),
            advance: {
                let sv = state_var.clone();
                move |s: &Valuation, _: f64| {
                    Valuation::from_iter([(
                        sv.clone(),
                        s.get(sv.as_str()).cloned().unwrap_or(Value::Label(String::new())),
                    )])
                }
            },
        };
        let sv = state_var.clone();
        let mut a = Hioaw::new(&self.name, sig, Arc::new(dynamics))
            .with_states(move |x| x.label(sv.as_str()).is_some_and(|l| states.iter().any(|s| s == l)))
            .with_start(
                self.start
                    .iter()
                    .map(|s| Valuation::from_iter([(state_var.clone(), Value::Label(s.clone()))]))
                    .collect(),
            )
            .with_rules(rules);
        for (v, menu) in &self.menus {
            a = a.with_input_menu(v, menu.clone());
        }
        Ok(a)
    }

    /// The state valuation for label `s`.
    pub fn state(&self, s: &str) -> Valuation {
        Valuation::from_pairs([(self.state_var.as_str(), Value::Label(s.into()))])
    }
}
