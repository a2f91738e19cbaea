//! Parallel composition. Shared actions synchronize; world outputs written
//! by both components are summed pointwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{AvSequence, Dynamics, Event, ExecError, Hioaw, Rule, SequenceError, Signature, Trace};
use crate::trajectory::Trajectory;
use crate::value::{ActionSet, Valuation, Value, VarName, VarSet};

/// One of the five compatibility conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub number: usize,
    pub description: &'static str,
    pub offending: BTreeSet<String>,
}

impl Clause {
    pub fn holds(&self) -> bool {
        self.offending.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatReport {
    pub clauses: Vec<Clause>,
    /// Names declared by both sides with different types.
    pub type_conflicts: BTreeSet<VarName>,
}

impl CompatReport {
    pub fn compatible(&self) -> bool {
        self.clauses.iter().all(Clause::holds)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.holds())
    }
}

impl fmt::Display for CompatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let verdict = if c.holds() {
                "ok".to_string()
            } else {
                format!("FAILS on {}", c.offending.iter().cloned().collect::<Vec<_>>().join(", "))
            };
            writeln!(f, "clause {} ({}): {}", c.number, c.description, verdict)?;
        }
        if !self.type_conflicts.is_empty() {
            let names: Vec<_> = self.type_conflicts.iter().map(|v| v.to_string()).collect();
            writeln!(f, "type conflicts: {}", names.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("automata are incompatible:\n{0}")]
    Incompatible(CompatReport),
    #[error("shared variables with different types: {0:?}")]
    TypeMismatch(BTreeSet<VarName>),
    #[error("not a composite of the expected shape")]
    NotAComposite,
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

fn names<'a, T: fmt::Display + 'a>(it: impl IntoIterator<Item = &'a T>) -> BTreeSet<String> {
    it.into_iter().map(|x| x.to_string()).collect()
}

fn inter(a: &VarSet, b: &VarSet) -> VarSet {
    a.intersection(b).cloned().collect()
}

fn ainter(a: &ActionSet, b: &ActionSet) -> ActionSet {
    a.intersection(b).cloned().collect()
}

/// Evaluates the compatibility conditions. Shared world outputs are the
/// summation channel and are not counted against the output clause.
pub fn check_compatible(a1: &Hioaw, a2: &Hioaw) -> CompatReport {
    let (s1, s2) = (a1.sig(), a2.sig());
    let world_in: VarSet = s1.world_in.union(&s2.world_in).cloned().collect();
    let world_out: VarSet = s1.world_out.union(&s2.world_out).cloned().collect();
    let c1 = names(&inter(&world_in, &world_out));
    let mut c2 = names(&ainter(&s1.actions_hidden, &s2.all_actions()));
    c2.extend(names(&ainter(&s2.actions_hidden, &s1.all_actions())));
    let mut c3 = names(&inter(&s1.internals(), &s2.all_vars()));
    c3.extend(names(&inter(&s2.internals(), &s1.all_vars())));
    let c4 = names(&ainter(&s1.actions_out, &s2.actions_out));
    let c5 = names(&inter(&s1.auto_out, &s2.auto_out));
    let clause = |number, description, offending| Clause { number, description, offending };
    let type_conflicts =
        s1.types.iter().filter(|(v, t)| s2.types.get(*v).is_some_and(|u| u != *t)).map(|(v, _)| v.clone()).collect();
    CompatReport {
        clauses: vec![
            clause(1, "world inputs disjoint from world outputs", c1),
            clause(2, "hidden actions private", c2),
            clause(3, "internal variables private", c3),
            clause(4, "output actions disjoint", c4),
            clause(5, "automaton outputs disjoint", c5),
        ],
        type_conflicts,
    }
}

/// The two components of a composite and their shared world outputs.
pub struct Parts {
    pub first: Hioaw,
    pub second: Hioaw,
    pub shared: VarSet,
    rest: [VarSet; 2],
    internals: [VarSet; 2],
}

impl Parts {
    pub fn component(&self, i: usize) -> &Hioaw {
        if i == 0 {
            &self.first
        } else {
            &self.second
        }
    }

    /// Component `i`'s own view of a composite sample: everything it can
    /// see, with shared world outputs replaced by its own contribution.
    pub fn view(&self, i: usize, sample: &Valuation) -> Valuation {
        let mut v = sample.project(&self.rest[i]);
        if !self.shared.is_empty() {
            let own = self.component(i).outputs(&sample.project(&self.internals[i]));
            v.extend_from(&own.project(&self.shared));
        }
        v
    }

    pub fn state(&self, i: usize, x: &Valuation) -> Valuation {
        x.project(&self.internals[i])
    }
}

struct ComposedDynamics(Arc<Parts>);

fn sum_outputs(a: Valuation, b: &Valuation) -> Valuation {
    let mut out = a;
    for (name, v) in b {
        let merged = match out.get(name.as_str()) {
            Some(w) => w.try_add(v).expect("shared outputs have summable types"),
            None => v.clone(),
        };
        out.insert(name.clone(), merged);
    }
    out
}

impl Dynamics for ComposedDynamics {
    fn outputs(&self, state: &Valuation) -> Valuation {
        let p = &self.0;
        let o1 = p.first.outputs(&p.state(0, state));
        let o2 = p.second.outputs(&p.state(1, state));
        sum_outputs(o1, &o2)
    }

    fn advance(&self, sample: &Valuation, dt: f64) -> Valuation {
        let p = &self.0;
        let mut x = p.first.dynamics().advance(&p.view(0, sample), dt);
        x.extend_from(&p.second.dynamics().advance(&p.view(1, sample), dt));
        x
    }
}

fn composite_signature(s1: &Signature, s2: &Signature) -> Signature {
    let u = |a: &VarSet, b: &VarSet| -> VarSet { a.union(b).cloned().collect() };
    let au = |a: &ActionSet, b: &ActionSet| -> ActionSet { a.union(b).cloned().collect() };
    let auto_out = u(&s1.auto_out, &s2.auto_out);
    let actions_out = au(&s1.actions_out, &s2.actions_out);
    let mut types = s1.types.clone();
    types.extend(s2.types.iter().map(|(k, v)| (k.clone(), *v)));
    Signature {
        world_in: u(&s1.world_in, &s2.world_in),
        world_internal: u(&s1.world_internal, &s2.world_internal),
        world_out: u(&s1.world_out, &s2.world_out),
        auto_in: u(&s1.auto_in, &s2.auto_in).difference(&auto_out).cloned().collect(),
        auto_internal: u(&s1.auto_internal, &s2.auto_internal),
        auto_out,
        actions_in: au(&s1.actions_in, &s2.actions_in).difference(&actions_out).cloned().collect(),
        actions_hidden: au(&s1.actions_hidden, &s2.actions_hidden),
        actions_out,
        types,
    }
}

fn lift(parts: &Arc<Parts>, i: usize, r: &Rule) -> Rule {
    let (pg, pe) = (parts.clone(), parts.clone());
    let (g, e) = (r.guard.clone(), r.effect.clone());
    Rule {
        action: r.action.clone(),
        guard: Arc::new(move |s| g(&pg.view(i, s))),
        effect: Arc::new(move |s| e(&pe.view(i, s))),
        urgent: r.urgent,
        priority: r.priority,
    }
}

fn product(parts: &Arc<Parts>, r1: &Rule, r2: &Rule) -> Rule {
    let (pg, pe) = (parts.clone(), parts.clone());
    let (g1, g2, e1, e2) = (r1.guard.clone(), r2.guard.clone(), r1.effect.clone(), r2.effect.clone());
    let priority = match (r1.priority, r2.priority) {
        (None, None) => None,
        (p1, p2) => {
            Some(p1.unwrap_or(u16::MAX.into()).saturating_mul(1 << 16).saturating_add(p2.unwrap_or(u16::MAX.into())))
        }
    };
    Rule {
        action: r1.action.clone(),
        guard: Arc::new(move |s| g1(&pg.view(0, s)) && g2(&pg.view(1, s))),
        effect: Arc::new(move |s| {
            let mut x = e1(&pe.view(0, s));
            x.extend_from(&e2(&pe.view(1, s)));
            x
        }),
        urgent: r1.urgent || r2.urgent,
        priority,
    }
}

/// `a1 ‖ a2`.
pub fn compose(a1: &Hioaw, a2: &Hioaw) -> Result<Hioaw, ComposeError> {
    let report = check_compatible(a1, a2);
    if !report.compatible() {
        return Err(ComposeError::Incompatible(report));
    }
    if !report.type_conflicts.is_empty() {
        return Err(ComposeError::TypeMismatch(report.type_conflicts));
    }
    let (s1, s2) = (a1.sig(), a2.sig());
    let shared = inter(&s1.world_out, &s2.world_out);
    let rest = |s: &Signature| s.all_vars().difference(&shared).cloned().collect::<VarSet>();
    let parts = Arc::new(Parts {
        first: a1.clone(),
        second: a2.clone(),
        rest: [rest(s1), rest(s2)],
        internals: [s1.internals(), s2.internals()],
        shared,
    });
    let sig = composite_signature(s1, s2);

    let (acts1, acts2) = (s1.all_actions(), s2.all_actions());
    let mut rules = Vec::new();
    for r1 in a1.rules() {
        if acts2.contains(&r1.action) {
            for r2 in a2.rules().iter().filter(|r| r.action == r1.action) {
                rules.push(product(&parts, r1, r2));
            }
        } else {
            rules.push(lift(&parts, 0, r1));
        }
    }
    for r2 in a2.rules().iter().filter(|r| !acts1.contains(&r.action)) {
        rules.push(lift(&parts, 1, r2));
    }

    let mut start = Vec::new();
    for x1 in a1.start_states() {
        for x2 in a2.start_states() {
            start.push(x1.merged(x2));
        }
    }
    let (q1, q2) = (a1.state_predicate().clone(), a2.state_predicate().clone());
    let pq = parts.clone();
    let inputs = sig.inputs();
    let mut menus: BTreeMap<VarName, Vec<Value>> = BTreeMap::new();
    for (k, v) in a1.input_menus().iter().chain(a2.input_menus()) {
        if inputs.contains(k) {
            menus.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    let mut out = Hioaw::new(&format!("{}||{}", a1.name(), a2.name()), sig, Arc::new(ComposedDynamics(parts.clone())))
        .with_state_predicate(Arc::new(move |x| q1(&pq.state(0, x)) && q2(&pq.state(1, x))))
        .with_start(start)
        .with_rules(rules)
        .with_input_menus(menus);
    for a in [a1, a2] {
        for f in a.validate().into_iter().filter(|f| f.is_warning()) {
            if let crate::automaton::Finding::Warning(w) = f {
                out = out.with_warning(w);
            }
        }
    }
    out.parts = Some(parts);
    Ok(out)
}

/// The automaton with no variables and no actions.
pub fn null_automaton() -> Hioaw {
    let dynamics = crate::automaton::FnDynamics {
        outputs: |_: &Valuation| Valuation::new(),
        advance: |_: &Valuation, _: f64| Valuation::new(),
    };
    Hioaw::new("null", Signature::new(), Arc::new(dynamics)).with_start(vec![Valuation::new()])
}

impl Hioaw {
    pub fn parts(&self) -> Option<&Parts> {
        self.parts.as_deref()
    }

    /// World outputs summed between the two components; empty for
    /// non-composites.
    pub fn shared_outputs(&self) -> VarSet {
        self.parts.as_ref().map(|p| p.shared.clone()).unwrap_or_default()
    }
}

/// Component fragments whose combination yields `alpha`: each component's
/// trajectory is read off the composite samples, foreign actions become ε
/// and are then removed.
pub fn decompose_execution(composite: &Hioaw, alpha: &AvSequence) -> Result<(AvSequence, AvSequence), ComposeError> {
    let parts = composite.parts().ok_or(ComposeError::NotAComposite)?;
    if alpha.vars() != &composite.sig().all_vars() {
        return Err(ComposeError::NotAComposite);
    }
    let one = |i: usize| -> Result<AvSequence, ComposeError> {
        let c = parts.component(i);
        let vars = c.sig().all_vars();
        let own = c.sig().all_actions();
        let trajs = alpha
            .trajectories()
            .iter()
            .map(|t| {
                let samples = t.samples().iter().map(|s| parts.view(i, s)).collect();
                Trajectory::new(vars.clone(), t.dt(), samples, t.is_closed())
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(SequenceError::from)?;
        let events = alpha
            .events()
            .iter()
            .map(|e| match e {
                Event::Action(a) if own.contains(a) => e.clone(),
                _ => Event::Epsilon,
            })
            .collect();
        Ok(merge_quiet(trajs, events)?)
    };
    Ok((one(0)?, one(1)?))
}

/// Drops each ε whose two sides agree on every variable. An ε where only
/// inputs jump stays: the sample before it is the one the dynamics read.
fn merge_quiet(trajs: Vec<Trajectory>, events: Vec<Event>) -> Result<AvSequence, SequenceError> {
    let mut pieces = trajs.into_iter();
    let mut cur = pieces.next().expect("at least one trajectory");
    let (mut out_t, mut out_e) = (Vec::new(), Vec::new());
    for (next, e) in pieces.zip(events) {
        if e == Event::Epsilon && cur.last_sample() == next.fval() {
            cur = Trajectory::concat([&cur, &next])?;
        } else {
            out_t.push(std::mem::replace(&mut cur, next));
            out_e.push(e);
        }
    }
    out_t.push(cur);
    AvSequence::new(out_t, out_e)
}

/// Component `i`'s trace from a decomposition of `alpha`, with the shared
/// outputs of the composite trace as an action-free sequence.
pub fn project_trace(composite: &Hioaw, alpha: &AvSequence, i: usize) -> Result<(Trace, AvSequence), ComposeError> {
    let (a1, a2) = decompose_execution(composite, alpha)?;
    let parts = composite.parts().ok_or(ComposeError::NotAComposite)?;
    let alpha_i = if i == 0 { a1 } else { a2 };
    let beta_i = alpha_i.trace(parts.component(i).sig());
    let residual = alpha.trace(composite.sig()).restrict(&ActionSet::new(), &parts.shared);
    Ok((beta_i, residual))
}

/// Checks the three decomposition equalities for `alpha`: exact outside
/// the shared outputs, `tol` per cell on them.
pub fn verify_decomposition(composite: &Hioaw, alpha: &AvSequence, tol: f64) -> Result<(), String> {
    let parts = composite.parts().ok_or("not a composite")?;
    let (a1, a2) = decompose_execution(composite, alpha).map_err(|e| e.to_string())?;
    for (i, ai) in [&a1, &a2].into_iter().enumerate() {
        let c = parts.component(i);
        c.check_fragment(ai, false).map_err(|e| format!("component {i}: {e}"))?;
        let acts = c.sig().all_actions();
        let rest: VarSet = c.sig().all_vars().difference(&parts.shared).cloned().collect();
        if alpha.restrict(&acts, &rest) != ai.restrict(&acts, &rest) {
            return Err(format!("component {i} disagrees off the shared outputs"));
        }
    }
    let none = ActionSet::new();
    let whole = alpha.restrict(&none, &parts.shared);
    let summed = AvSequence::sum(&a1.restrict(&none, &parts.shared), &a2.restrict(&none, &parts.shared))
        .map_err(|e| e.to_string())?;
    if !whole.approx_eq(&summed, tol) {
        return Err("shared outputs are not the sum of the components".into());
    }
    Ok(())
}
