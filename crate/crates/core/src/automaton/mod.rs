//! The automaton structure: typed variable and action signatures, guarded
//! discrete transitions and state-driven continuous dynamics.

mod exec;
mod sequence;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::trajectory::TrajectoryError;
use crate::value::{ActionName, ActionSet, Valuation, Value, VarName, VarSet, VarType};

pub use exec::{
    ClosedWorld, ConstantEnv, Environment, IdentityEnv, Route, RouteMode, Scheduler, TrajectoryEnv, ZENO_LIMIT,
};
pub use sequence::{AvSequence, Event, ExecutionFragment, PaddedExecution, SequenceError, Trace};

/// Where a variable sits in the signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    WorldIn,
    WorldInternal,
    WorldOut,
    AutoIn,
    AutoInternal,
    AutoOut,
}

impl Role {
    pub fn is_world(self) -> bool {
        matches!(self, Role::WorldIn | Role::WorldInternal | Role::WorldOut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Input,
    Hidden,
    Output,
}

/// Variable and action signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub world_in: VarSet,
    pub world_internal: VarSet,
    pub world_out: VarSet,
    pub auto_in: VarSet,
    pub auto_internal: VarSet,
    pub auto_out: VarSet,
    pub actions_in: ActionSet,
    pub actions_hidden: ActionSet,
    pub actions_out: ActionSet,
    pub types: BTreeMap<VarName, VarType>,
}

fn union(a: &VarSet, b: &VarSet) -> VarSet {
    a.union(b).cloned().collect()
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(mut self, name: &str, role: Role, ty: VarType) -> Self {
        self.declare(name, role, ty);
        self
    }

    pub fn action(mut self, name: &str, kind: ActionKind) -> Self {
        self.declare_action(name, kind);
        self
    }

    pub fn declare(&mut self, name: &str, role: Role, ty: VarType) {
        let n = VarName::new(name);
        self.set_mut(role).insert(n.clone());
        self.types.insert(n, ty);
    }

    pub fn declare_action(&mut self, name: &str, kind: ActionKind) {
        let a = ActionName::new(name);
        match kind {
            ActionKind::Input => self.actions_in.insert(a),
            ActionKind::Hidden => self.actions_hidden.insert(a),
            ActionKind::Output => self.actions_out.insert(a),
        };
    }

    fn set_mut(&mut self, role: Role) -> &mut VarSet {
        match role {
            Role::WorldIn => &mut self.world_in,
            Role::WorldInternal => &mut self.world_internal,
            Role::WorldOut => &mut self.world_out,
            Role::AutoIn => &mut self.auto_in,
            Role::AutoInternal => &mut self.auto_internal,
            Role::AutoOut => &mut self.auto_out,
        }
    }

    pub fn set(&self, role: Role) -> &VarSet {
        match role {
            Role::WorldIn => &self.world_in,
            Role::WorldInternal => &self.world_internal,
            Role::WorldOut => &self.world_out,
            Role::AutoIn => &self.auto_in,
            Role::AutoInternal => &self.auto_internal,
            Role::AutoOut => &self.auto_out,
        }
    }

    pub fn roles(&self, name: &str) -> Vec<Role> {
        ROLES.iter().copied().filter(|r| self.set(*r).contains(name)).collect()
    }

    /// Input variables `U`.
    pub fn inputs(&self) -> VarSet {
        union(&self.world_in, &self.auto_in)
    }

    /// Internal (state) variables `X`.
    pub fn internals(&self) -> VarSet {
        union(&self.world_internal, &self.auto_internal)
    }

    /// Output variables `Y`.
    pub fn outputs(&self) -> VarSet {
        union(&self.world_out, &self.auto_out)
    }

    /// External variables `Z = U ∪ Y`.
    pub fn external_vars(&self) -> VarSet {
        union(&self.inputs(), &self.outputs())
    }

    /// All variables `V`.
    pub fn all_vars(&self) -> VarSet {
        union(&self.external_vars(), &self.internals())
    }

    pub fn world_vars(&self) -> VarSet {
        union(&union(&self.world_in, &self.world_internal), &self.world_out)
    }

    pub fn automaton_vars(&self) -> VarSet {
        union(&union(&self.auto_in, &self.auto_internal), &self.auto_out)
    }

    pub fn all_actions(&self) -> ActionSet {
        let mut a = self.external_actions();
        a.extend(self.actions_hidden.iter().cloned());
        a
    }

    /// External actions `E = I ∪ O`.
    pub fn external_actions(&self) -> ActionSet {
        self.actions_in.union(&self.actions_out).cloned().collect()
    }

    pub fn action_kind(&self, a: &str) -> Option<ActionKind> {
        if self.actions_in.contains(a) {
            Some(ActionKind::Input)
        } else if self.actions_hidden.contains(a) {
            Some(ActionKind::Hidden)
        } else if self.actions_out.contains(a) {
            Some(ActionKind::Output)
        } else {
            None
        }
    }

    pub fn type_of(&self, name: &str) -> Option<&VarType> {
        self.types.get(name)
    }

    /// Valuation over `vars` holding the identity value of each type.
    pub fn identity_valuation(&self, vars: &VarSet) -> Valuation {
        vars.iter().filter_map(|v| self.types.get(v).map(|t| (v.clone(), t.identity()))).collect()
    }
}

const ROLES: [Role; 6] =
    [Role::WorldIn, Role::WorldInternal, Role::WorldOut, Role::AutoIn, Role::AutoInternal, Role::AutoOut];

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &VarSet| {
            s.iter()
                .map(|v| match self.types.get(v) {
                    Some(t) => format!("{v}: {t}"),
                    None => v.to_string(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let acts = |s: &ActionSet| s.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", ");
        writeln!(f, "world input:     {}", list(&self.world_in))?;
        writeln!(f, "world internal:  {}", list(&self.world_internal))?;
        writeln!(f, "world output:    {}", list(&self.world_out))?;
        writeln!(f, "input:           {}", list(&self.auto_in))?;
        writeln!(f, "internal:        {}", list(&self.auto_internal))?;
        writeln!(f, "output:          {}", list(&self.auto_out))?;
        writeln!(f, "input actions:   {}", acts(&self.actions_in))?;
        writeln!(f, "hidden actions:  {}", acts(&self.actions_hidden))?;
        write!(f, "output actions:  {}", acts(&self.actions_out))
    }
}

pub type Guard = Arc<dyn Fn(&Valuation) -> bool + Send + Sync>;
pub type Effect = Arc<dyn Fn(&Valuation) -> Valuation + Send + Sync>;
pub type StatePredicate = Arc<dyn Fn(&Valuation) -> bool + Send + Sync>;

/// A guarded update. The guard reads a full sample (state, inputs and
/// outputs); the effect returns the state variables it changes.
#[derive(Clone)]
pub struct Rule {
    pub action: ActionName,
    pub guard: Guard,
    pub effect: Effect,
    pub urgent: bool,
    pub priority: Option<u32>,
}

impl Rule {
    pub fn new(
        action: &str,
        guard: impl Fn(&Valuation) -> bool + Send + Sync + 'static,
        effect: impl Fn(&Valuation) -> Valuation + Send + Sync + 'static,
    ) -> Self {
        Rule {
            action: ActionName::new(action),
            guard: Arc::new(guard),
            effect: Arc::new(effect),
            urgent: false,
            priority: None,
        }
    }

    pub fn urgent(mut self) -> Self {
        self.urgent = true;
        self
    }

    pub fn with_priority(mut self, p: u32) -> Self {
        self.priority = Some(p);
        self
    }

    pub fn enabled(&self, sample: &Valuation) -> bool {
        (self.guard)(sample)
    }

    fn rank(&self) -> u32 {
        self.priority.unwrap_or(u32::MAX)
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule")
            .field("action", &self.action)
            .field("urgent", &self.urgent)
            .field("priority", &self.priority)
            .finish_non_exhaustive()
    }
}

/// Continuous behaviour: outputs as a function of the state, and one
/// sampling step of the state given the full current sample.
pub trait Dynamics: Send + Sync {
    fn outputs(&self, state: &Valuation) -> Valuation;
    fn advance(&self, sample: &Valuation, dt: f64) -> Valuation;
}

/// Dynamics given by a pair of closures.
pub struct FnDynamics<O, A> {
    pub outputs: O,
    pub advance: A,
}

impl<O, A> Dynamics for FnDynamics<O, A>
where
    O: Fn(&Valuation) -> Valuation + Send + Sync,
    A: Fn(&Valuation, f64) -> Valuation + Send + Sync,
{
    fn outputs(&self, state: &Valuation) -> Valuation {
        (self.outputs)(state)
    }

    fn advance(&self, sample: &Valuation, dt: f64) -> Valuation {
        (self.advance)(sample, dt)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("action {0} is not enabled")]
    ActionNotEnabled(ActionName),
    #[error("action {0} has several enabled rules with different effects and no priority")]
    NondeterministicUnresolved(ActionName),
    #[error("scheduler deadlock at t={time}: urgent action {action} cannot be resolved")]
    SchedulerDeadlock { time: f64, action: ActionName },
    #[error("more than {limit} actions at t={time} without time passing")]
    Zeno { time: f64, limit: usize },
    #[error("input trajectory covers {have} steps, {need} needed")]
    InputDomainTooShort { have: usize, need: usize },
    #[error("unknown action {0}")]
    UnknownAction(ActionName),
    #[error("state leaves the state set after {0}")]
    LeftStates(String),
    #[error("start state is not in the start set")]
    NotAStartState,
    #[error("step {index}: {reason}")]
    InvalidFragment { index: usize, reason: String },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// A finding reported by [`Hioaw::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    NonDisjointVars(VarSet),
    NonDisjointActions(ActionSet),
    EmptyStart,
    StartOutsideStates(usize),
    StartMissingVars(usize),
    TransitionLeavesStates { action: ActionName, from: String },
    WorldVarNotField(VarName),
    AutomatonVarIsField(VarName),
    MissingType(VarName),
    RuleForUnknownAction(ActionName),
    Warning(String),
}

impl Finding {
    pub fn is_warning(&self) -> bool {
        matches!(self, Finding::Warning(_))
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |s: &mut dyn Iterator<Item = String>| s.collect::<Vec<_>>().join(", ");
        match self {
            Finding::NonDisjointVars(v) => {
                write!(f, "non-disjoint variable sets: {}", names(&mut v.iter().map(|x| x.to_string())))
            }
            Finding::NonDisjointActions(a) => {
                write!(f, "non-disjoint action sets: {}", names(&mut a.iter().map(|x| x.to_string())))
            }
            Finding::EmptyStart => write!(f, "empty start set"),
            Finding::StartOutsideStates(i) => write!(f, "start state {i} is not a state"),
            Finding::StartMissingVars(i) => write!(f, "start state {i} does not value every internal variable"),
            Finding::TransitionLeavesStates { action, from } => {
                write!(f, "transition {action} from {from} leaves the state set")
            }
            Finding::WorldVarNotField(v) => write!(f, "world variable {v} is not a field"),
            Finding::AutomatonVarIsField(v) => write!(f, "automaton variable {v} is a field"),
            Finding::MissingType(v) => write!(f, "variable {v} has no type"),
            Finding::RuleForUnknownAction(a) => write!(f, "rule for undeclared action {a}"),
            Finding::Warning(w) => write!(f, "warning: {w}"),
        }
    }
}

/// A hybrid I/O automaton with world variables.
#[derive(Clone)]
pub struct Hioaw {
    name: String,
    sig: Signature,
    states: StatePredicate,
    start: Vec<Valuation>,
    rules: Vec<Rule>,
    dynamics: Arc<dyn Dynamics>,
    input_menus: BTreeMap<VarName, Vec<Value>>,
    warnings: Vec<String>,
    pub(crate) parts: Option<Arc<crate::composition::Parts>>,
}

impl fmt::Debug for Hioaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hioaw")
            .field("name", &self.name)
            .field("sig", &self.sig)
            .field("start", &self.start)
            .field("rules", &self.rules)
            .finish_non_exhaustive()
    }
}

impl Hioaw {
    pub fn new(name: &str, sig: Signature, dynamics: Arc<dyn Dynamics>) -> Self {
        Hioaw {
            name: name.to_string(),
            sig,
            states: Arc::new(|_| true),
            start: Vec::new(),
            rules: Vec::new(),
            dynamics,
            input_menus: BTreeMap::new(),
            warnings: Vec::new(),
            parts: None,
        }
    }

    pub fn with_states(mut self, q: impl Fn(&Valuation) -> bool + Send + Sync + 'static) -> Self {
        self.states = Arc::new(q);
        self
    }

    pub(crate) fn with_state_predicate(mut self, q: StatePredicate) -> Self {
        self.states = q;
        self
    }

    pub fn with_start(mut self, start: Vec<Valuation>) -> Self {
        self.start = start;
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn with_rules(mut self, rules: impl IntoIterator<Item = Rule>) -> Self {
        self.rules.extend(rules);
        self
    }

    pub fn with_input_menu(mut self, var: &str, values: Vec<Value>) -> Self {
        self.input_menus.insert(VarName::new(var), values);
        self
    }

    pub(crate) fn with_input_menus(mut self, menus: BTreeMap<VarName, Vec<Value>>) -> Self {
        self.input_menus = menus;
        self
    }

    pub fn with_warning(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn start_states(&self) -> &[Valuation] {
        &self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn input_menus(&self) -> &BTreeMap<VarName, Vec<Value>> {
        &self.input_menus
    }

    pub fn state_predicate(&self) -> &StatePredicate {
        &self.states
    }

    pub fn is_state(&self, x: &Valuation) -> bool {
        x.has_vars(&self.sig.internals()) && (self.states)(x)
    }

    pub fn outputs(&self, state: &Valuation) -> Valuation {
        self.dynamics.outputs(state)
    }

    /// The full valuation over `V` at one instant.
    pub fn sample(&self, state: &Valuation, inputs: &Valuation) -> Valuation {
        let mut s = state.clone();
        s.extend_from(inputs);
        s.extend_from(&self.dynamics.outputs(state));
        s
    }

    pub fn state_of(&self, sample: &Valuation) -> Valuation {
        sample.project(&self.sig.internals())
    }

    /// Enabled rules in declaration order.
    pub fn enabled<'a>(&'a self, sample: &'a Valuation) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.enabled(sample))
    }

    pub fn urgent_enabled(&self, sample: &Valuation) -> Option<&Rule> {
        self.rules.iter().find(|r| r.urgent && r.enabled(sample))
    }

    pub(crate) fn apply(&self, rule: &Rule, sample: &Valuation) -> Valuation {
        let mut x = self.state_of(sample);
        x.extend_from(&(rule.effect)(sample));
        x
    }

    /// All post-states of `act` from `sample`, without duplicates, in rule order.
    pub fn successors(&self, sample: &Valuation, act: &str) -> Vec<Valuation> {
        let mut out: Vec<Valuation> = Vec::new();
        for r in self.rules.iter().filter(|r| r.action.as_str() == act && r.enabled(sample)) {
            let x = self.apply(r, sample);
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// Fires `act` from `sample`, resolving competing rules by priority.
    pub fn step_discrete(&self, sample: &Valuation, act: &str) -> Result<Valuation, ExecError> {
        let name = ActionName::new(act);
        if self.sig.action_kind(act).is_none() {
            return Err(ExecError::UnknownAction(name));
        }
        let candidates: Vec<&Rule> =
            self.rules.iter().filter(|r| r.action.as_str() == act && r.enabled(sample)).collect();
        let best = candidates.iter().map(|r| r.rank()).min().ok_or(ExecError::ActionNotEnabled(name.clone()))?;
        let mut post: Option<Valuation> = None;
        for r in candidates.into_iter().filter(|r| r.rank() == best) {
            let x = self.apply(r, sample);
            match &post {
                None => post = Some(x),
                Some(p) if *p == x => {}
                Some(_) => return Err(ExecError::NondeterministicUnresolved(name)),
            }
        }
        let x = post.expect("at least one candidate");
        if !(self.states)(&x) {
            return Err(ExecError::LeftStates(act.to_string()));
        }
        Ok(x)
    }

    /// Structural well-formedness plus a bounded reachability sweep for
    /// transitions that leave the state set.
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        let sig = &self.sig;
        let mut seen = VarSet::new();
        let mut dup = VarSet::new();
        for role in ROLES {
            for v in sig.set(role) {
                if !seen.insert(v.clone()) {
                    dup.insert(v.clone());
                }
            }
        }
        if !dup.is_empty() {
            findings.push(Finding::NonDisjointVars(dup));
        }
        let mut aseen = ActionSet::new();
        let mut adup = ActionSet::new();
        for set in [&sig.actions_in, &sig.actions_hidden, &sig.actions_out] {
            for a in set {
                if !aseen.insert(a.clone()) {
                    adup.insert(a.clone());
                }
            }
        }
        if !adup.is_empty() {
            findings.push(Finding::NonDisjointActions(adup));
        }
        for v in &seen {
            match sig.types.get(v) {
                None => findings.push(Finding::MissingType(v.clone())),
                Some(t) => {
                    let world = sig.world_vars().contains(v);
                    if world && !t.is_field() {
                        findings.push(Finding::WorldVarNotField(v.clone()));
                    }
                    if !world && t.is_field() {
                        findings.push(Finding::AutomatonVarIsField(v.clone()));
                    }
                }
            }
        }
        let acts = sig.all_actions();
        let unknown: BTreeSet<ActionName> =
            self.rules.iter().filter(|r| !acts.contains(&r.action)).map(|r| r.action.clone()).collect();
        findings.extend(unknown.into_iter().map(Finding::RuleForUnknownAction));

        if self.start.is_empty() {
            findings.push(Finding::EmptyStart);
        }
        let x_vars = sig.internals();
        for (i, x) in self.start.iter().enumerate() {
            if !x.has_vars(&x_vars) {
                findings.push(Finding::StartMissingVars(i));
            } else if !(self.states)(x) {
                findings.push(Finding::StartOutsideStates(i));
            }
        }
        if !findings.is_empty() {
            return findings;
        }
        findings.extend(self.sweep_transitions(VALIDATE_SWEEP));
        findings.extend(self.warnings.iter().cloned().map(Finding::Warning));
        findings
    }

    /// Input valuations to try: the product of declared menus, identity elsewhere.
    pub fn input_choices(&self) -> Vec<Valuation> {
        let mut out = vec![Valuation::new()];
        for v in self.sig.inputs() {
            let menu = match self.input_menus.get(&v) {
                Some(m) if !m.is_empty() => m.clone(),
                _ => match self.sig.types.get(&v) {
                    Some(VarType::Bool) => vec![Value::Boolean(false), Value::Boolean(true)],
                    Some(t) => vec![t.identity()],
                    None => continue,
                },
            };
            let mut next = Vec::with_capacity(out.len() * menu.len());
            for base in &out {
                for val in &menu {
                    let mut b = base.clone();
                    b.insert(v.clone(), val.clone());
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    fn sweep_transitions(&self, budget: usize) -> Vec<Finding> {
        let mut findings = Vec::new();
        let inputs = self.input_choices();
        let mut seen: BTreeSet<Valuation> = BTreeSet::new();
        let mut queue: VecDeque<Valuation> = self.start.iter().cloned().collect();
        while let Some(x) = queue.pop_front() {
            if seen.len() >= budget {
                break;
            }
            if !seen.insert(x.clone()) {
                continue;
            }
            for u in &inputs {
                let s = self.sample(&x, u);
                for r in self.enabled(&s) {
                    let post = self.apply(r, &s);
                    if !(self.states)(&post) {
                        let f = Finding::TransitionLeavesStates { action: r.action.clone(), from: x.to_string() };
                        if !findings.contains(&f) {
                            findings.push(f);
                        }
                    } else if !seen.contains(&post) {
                        queue.push_back(post);
                    }
                }
            }
        }
        findings
    }
}

const VALIDATE_SWEEP: usize = 256;
