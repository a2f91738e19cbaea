//! Bounded refinement checks on finite instances: trace inclusion and
//! simulation relations, with replayable counterexamples.
//!
//! Executions of the implementation are enumerated move by move. A move is
//! either one enabled transition or a stretch of time of a few steps under
//! a constant input. The specification side is tracked as the set of its
//! samples consistent with the trace seen so far.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automaton::{AvSequence, Event, Hioaw};
use crate::trajectory::{TimeStep, Trajectory};
use crate::value::{ActionName, Valuation, VarSet};

/// Slack on real field cells when comparing traces.
pub const FIELD_TOL: f64 = 1e-9;
pub const DEFAULT_STATE_BUDGET: usize = 10_000;
pub const DEFAULT_DEPTH: usize = 6;
const NODE_BUDGET: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefinementError {
    #[error("automata are not comparable: {0}")]
    NotComparable(String),
    #[error("bound exceeded: more than {limit} {what}")]
    BoundExceeded { what: &'static str, limit: usize },
}

/// An automaton with the finite menus used to enumerate its behaviour.
#[derive(Clone, Debug)]
pub struct FiniteInstance {
    pub automaton: Hioaw,
    pub dt: TimeStep,
    /// Lengths, in steps, of the stretches of time tried at each move.
    pub durations: Vec<usize>,
    pub state_budget: usize,
}

impl FiniteInstance {
    pub fn new(automaton: Hioaw, dt: TimeStep) -> Self {
        FiniteInstance { automaton, dt, durations: vec![1, 2, 4], state_budget: DEFAULT_STATE_BUDGET }
    }

    pub fn with_durations(mut self, durations: Vec<usize>) -> Self {
        self.durations = durations;
        self
    }

    pub fn with_state_budget(mut self, budget: usize) -> Self {
        self.state_budget = budget;
        self
    }
}

/// Why a check failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub reason: String,
    /// Simulation condition (1, 2 or 3) that failed.
    pub condition: Option<u8>,
    pub pair: Option<(Valuation, Valuation)>,
    /// An execution fragment of the implementation with no match.
    pub execution: Option<AvSequence>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Fails(Box<Failure>),
    Inconclusive(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "pass",
            Verdict::Fails(_) => "fail",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "pass"),
            Verdict::Fails(x) => write!(f, "fail: {}", x.reason),
            Verdict::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

/// Same external variables (with types) and external actions.
pub fn comparable(a: &Hioaw, b: &Hioaw) -> bool {
    comparability(a, b).is_ok()
}

fn comparability(a: &Hioaw, b: &Hioaw) -> Result<(), RefinementError> {
    let (sa, sb) = (a.sig(), b.sig());
    let mut diffs = Vec::new();
    for (what, x, y) in [
        ("world inputs", &sa.world_in, &sb.world_in),
        ("world outputs", &sa.world_out, &sb.world_out),
        ("inputs", &sa.auto_in, &sb.auto_in),
        ("outputs", &sa.auto_out, &sb.auto_out),
    ] {
        if x != y {
            diffs.push(what.to_string());
        }
    }
    if sa.external_actions() != sb.external_actions() {
        diffs.push("external actions".into());
    }
    if diffs.is_empty() {
        for v in sa.external_vars() {
            if sa.type_of(v.as_str()) != sb.type_of(v.as_str()) {
                diffs.push(format!("type of {v}"));
            }
        }
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(RefinementError::NotComparable(diffs.join(", ")))
    }
}

/// What one move of the implementation adds to its trace.
#[derive(Debug, Clone)]
enum Piece {
    Nothing,
    Samples(Vec<Valuation>),
    Event(ActionName, Valuation),
}

/// Samples of the specification consistent with a trace.
struct Tracker<'a> {
    b: &'a Hioaw,
    dt: f64,
    z: VarSet,
    u: VarSet,
    x: VarSet,
    hidden: Vec<ActionName>,
    cap: usize,
    seen: BTreeSet<Valuation>,
    budget: usize,
}

type Frontier = BTreeSet<Valuation>;

impl<'a> Tracker<'a> {
    fn new(inst: &'a FiniteInstance, cap: usize) -> Self {
        let b = &inst.automaton;
        Tracker {
            b,
            dt: inst.dt.seconds(),
            z: b.sig().external_vars(),
            u: b.sig().inputs(),
            x: b.sig().internals(),
            hidden: b.sig().actions_hidden.iter().cloned().collect(),
            cap,
            seen: BTreeSet::new(),
            budget: inst.state_budget,
        }
    }

    fn note(&mut self, s: &Valuation) -> Result<(), RefinementError> {
        if self.seen.insert(s.project(&self.x)) && self.seen.len() > self.budget {
            return Err(RefinementError::BoundExceeded { what: "specification states", limit: self.budget });
        }
        Ok(())
    }

    fn matches(&self, s: &Valuation, z: &Valuation) -> bool {
        s.project(&self.z).approx_eq(z, FIELD_TOL)
    }

    /// Closure under hidden actions, at most `cap` in a row. The flag tells
    /// whether the cap cut off unexplored samples.
    fn close(&mut self, front: Frontier) -> Result<(Frontier, bool), RefinementError> {
        let mut all = front.clone();
        let mut layer: Vec<Valuation> = front.into_iter().collect();
        let mut capped = false;
        let hidden = self.hidden.clone();
        for depth in 0..=self.cap {
            let mut next = Vec::new();
            for s in &layer {
                for h in &hidden {
                    for x in self.b.successors(s, h.as_str()) {
                        let t = self.b.sample(&x, &s.project(&self.u));
                        if !all.contains(&t) {
                            if depth == self.cap {
                                capped = true;
                            } else {
                                self.note(&t)?;
                                all.insert(t.clone());
                                next.push(t);
                            }
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        Ok((all, capped))
    }

    fn start(&mut self, z0: &Valuation) -> Result<(Frontier, bool), RefinementError> {
        let u0 = z0.project(&self.u);
        let mut front = Frontier::new();
        for x in self.b.start_states() {
            let s = self.b.sample(x, &u0);
            if self.matches(&s, z0) {
                self.note(&s)?;
                front.insert(s);
            }
        }
        self.close(front)
    }

    fn seed_states(&mut self, xs: &[Valuation], z0: &Valuation) -> Result<(Frontier, bool), RefinementError> {
        let u0 = z0.project(&self.u);
        let front = xs.iter().map(|x| self.b.sample(x, &u0)).filter(|s| self.matches(s, z0)).collect();
        self.close(front)
    }

    fn extend(&mut self, front: &Frontier, piece: &Piece) -> Result<(Frontier, bool), RefinementError> {
        match piece {
            Piece::Nothing => Ok((front.clone(), false)),
            Piece::Samples(zs) => {
                let mut cur = front.clone();
                let mut capped = false;
                for z in zs {
                    let u = z.project(&self.u);
                    let mut next = Frontier::new();
                    for s in &cur {
                        if self.b.urgent_enabled(s).is_some() {
                            continue;
                        }
                        let x = self.b.dynamics().advance(s, self.dt);
                        let t = self.b.sample(&x, &u);
                        if self.matches(&t, z) {
                            self.note(&t)?;
                            next.insert(t);
                        }
                    }
                    let (closed, c) = self.close(next)?;
                    capped |= c;
                    cur = closed;
                    if cur.is_empty() {
                        break;
                    }
                }
                Ok((cur, capped))
            }
            Piece::Event(a, z) => {
                let u = z.project(&self.u);
                let mut next = Frontier::new();
                for s in front {
                    for x in self.b.successors(s, a.as_str()) {
                        let t = self.b.sample(&x, &u);
                        if self.matches(&t, z) {
                            self.note(&t)?;
                            next.insert(t);
                        }
                    }
                }
                self.close(next)
            }
        }
    }
}

/// A partial execution of the implementation.
#[derive(Clone)]
struct Run {
    pieces: Vec<Vec<Valuation>>,
    events: Vec<Event>,
}

impl Run {
    fn new(s: Valuation) -> Self {
        Run { pieces: vec![vec![s]], events: Vec::new() }
    }

    fn current(&self) -> &Valuation {
        self.pieces.last().and_then(|p| p.last()).expect("nonempty")
    }

    fn to_sequence(&self, a: &Hioaw, dt: TimeStep) -> AvSequence {
        let vars = a.sig().all_vars();
        let trajs = self
            .pieces
            .iter()
            .map(|p| Trajectory::new(vars.clone(), dt, p.clone(), true).expect("samples cover the signature"))
            .collect();
        AvSequence::new(trajs, self.events.clone()).expect("alternating by construction")
    }
}

/// One move of the implementation from its current sample.
#[derive(Clone)]
struct Move {
    run_extension: MoveKind,
    piece: Piece,
}

#[derive(Clone)]
enum MoveKind {
    Jump(ActionName, Valuation),
    Flow(Vec<Valuation>),
}

fn moves(inst: &FiniteInstance, s: &Valuation, inputs: &[Valuation]) -> Vec<Move> {
    let a = &inst.automaton;
    let sig = a.sig();
    let (z, u) = (sig.external_vars(), sig.inputs());
    let external = sig.external_actions();
    let mut out = Vec::new();
    for act in sig.all_actions() {
        for x in a.successors(s, act.as_str()) {
            let t = a.sample(&x, &s.project(&u));
            let piece = if external.contains(&act) { Piece::Event(act.clone(), t.project(&z)) } else { Piece::Nothing };
            out.push(Move { run_extension: MoveKind::Jump(act.clone(), t), piece });
        }
    }
    if a.urgent_enabled(s).is_some() {
        return out;
    }
    let mut steps: Vec<usize> = inst.durations.clone();
    steps.sort_unstable();
    steps.dedup();
    let longest = steps.last().copied().unwrap_or(0);
    for inp in inputs {
        let mut samples = Vec::with_capacity(longest);
        let mut cur = s.clone();
        for k in 1..=longest {
            if k > 1 && a.urgent_enabled(&cur).is_some() {
                break;
            }
            let x = a.dynamics().advance(&cur, inst.dt.seconds());
            cur = a.sample(&x, inp);
            samples.push(cur.clone());
            if steps.contains(&k) {
                let flow = samples.clone();
                let zs = flow.iter().map(|v| v.project(&z)).collect();
                out.push(Move { run_extension: MoveKind::Flow(flow), piece: Piece::Samples(zs) });
            }
        }
    }
    out
}

fn apply_move(run: &Run, m: &Move) -> Run {
    let mut r = run.clone();
    match &m.run_extension {
        MoveKind::Jump(a, t) => {
            r.events.push(Event::Action(a.clone()));
            r.pieces.push(vec![t.clone()]);
        }
        MoveKind::Flow(samples) => r.pieces.last_mut().expect("nonempty").extend(samples.iter().cloned()),
    }
    r
}

struct Inclusion<'a> {
    a: &'a FiniteInstance,
    inputs: Vec<Valuation>,
    tracker: Tracker<'a>,
    memo: BTreeMap<(Valuation, Frontier), usize>,
    nodes: usize,
    seen_a: BTreeSet<Valuation>,
    inconclusive: Option<String>,
}

impl Inclusion<'_> {
    fn explore(
        &mut self,
        run: &Run,
        front: &Frontier,
        capped: bool,
        depth: usize,
    ) -> Result<Option<Run>, RefinementError> {
        if front.is_empty() {
            if capped {
                self.inconclusive.get_or_insert_with(|| "hidden-action cap reached while matching".into());
                return Ok(None);
            }
            return Ok(Some(run.clone()));
        }
        if depth == 0 {
            return Ok(None);
        }
        let s = run.current().clone();
        let key = (s.clone(), front.clone());
        if self.memo.get(&key).is_some_and(|&d| d >= depth) {
            return Ok(None);
        }
        self.memo.insert(key, depth);
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            return Err(RefinementError::BoundExceeded { what: "search nodes", limit: NODE_BUDGET });
        }
        let xa = s.project(&self.a.automaton.sig().internals());
        if self.seen_a.insert(xa) && self.seen_a.len() > self.a.state_budget {
            return Err(RefinementError::BoundExceeded { what: "implementation states", limit: self.a.state_budget });
        }
        for m in moves(self.a, &s, &self.inputs) {
            let (next, c) = self.tracker.extend(front, &m.piece)?;
            let r = apply_move(run, &m);
            if let Some(cex) = self.explore(&r, &next, capped || c, depth - 1)? {
                return Ok(Some(cex));
            }
        }
        Ok(None)
    }
}

/// Checks that every trace of `a` reachable in at most `depth` moves is a
/// trace of `b`.
pub fn check_trace_inclusion(a: &FiniteInstance, b: &FiniteInstance, depth: usize) -> Result<Verdict, RefinementError> {
    comparability(&a.automaton, &b.automaton)?;
    let aut = &a.automaton;
    let z = aut.sig().external_vars();
    let mut search = Inclusion {
        a,
        inputs: aut.input_choices(),
        tracker: Tracker::new(b, depth),
        memo: BTreeMap::new(),
        nodes: 0,
        seen_a: BTreeSet::new(),
        inconclusive: None,
    };
    for x0 in aut.start_states() {
        for u in &search.inputs.clone() {
            let s0 = aut.sample(x0, u);
            let (front, capped) = search.tracker.start(&s0.project(&z))?;
            let run = Run::new(s0);
            if let Some(cex) = search.explore(&run, &front, capped, depth)? {
                let execution = cex.to_sequence(aut, a.dt);
                return Ok(Verdict::Fails(Box::new(Failure {
                    reason: format!("trace of {} has no match in {}", aut.name(), b.automaton.name()),
                    condition: None,
                    pair: None,
                    execution: Some(execution),
                })));
            }
        }
    }
    Ok(match search.inconclusive {
        Some(why) => Verdict::Inconclusive(why),
        None => Verdict::Holds,
    })
}

/// Whether `b` has no execution with the trace of `execution`, which must
/// itself be an execution of `a`.
pub fn confirm_counterexample(
    a: &FiniteInstance,
    b: &FiniteInstance,
    execution: &AvSequence,
    depth: usize,
) -> Result<bool, String> {
    a.automaton.check_fragment(execution, true).map_err(|e| e.to_string())?;
    let trace = execution.trace(a.automaton.sig());
    let mut tracker = Tracker::new(b, depth);
    let pieces = trace_pieces(&trace);
    let (mut front, mut capped) = tracker.start(&pieces.0).map_err(|e| e.to_string())?;
    for p in &pieces.1 {
        let (f, c) = tracker.extend(&front, p).map_err(|e| e.to_string())?;
        front = f;
        capped |= c;
    }
    if capped && front.is_empty() {
        return Err("hidden-action cap reached; divergence not confirmed".into());
    }
    Ok(front.is_empty())
}

fn trace_pieces(trace: &AvSequence) -> (Valuation, Vec<Piece>) {
    let first = trace.first().fval().clone();
    let mut pieces = Vec::new();
    for (i, t) in trace.trajectories().iter().enumerate() {
        if i > 0 {
            let a = trace.events()[i - 1].action().expect("traces carry actions only").clone();
            pieces.push(Piece::Event(a, t.fval().clone()));
        }
        if t.steps() > 0 {
            pieces.push(Piece::Samples(t.samples()[1..].to_vec()));
        }
    }
    (first, pieces)
}

/// A candidate relation between states of two automata.
pub type Relation = Vec<(Valuation, Valuation)>;

fn related(r: &Relation, xa: &Valuation, xb: &Valuation) -> bool {
    r.iter().any(|(p, q)| p == xa && q == xb)
}

/// Checks the three simulation conditions for `r`. `depth` caps the number
/// of hidden actions the specification may use to match one step.
pub fn check_simulation(
    a: &FiniteInstance,
    b: &FiniteInstance,
    r: &Relation,
    depth: usize,
) -> Result<Verdict, RefinementError> {
    comparability(&a.automaton, &b.automaton)?;
    let (aa, bb) = (&a.automaton, &b.automaton);
    let fail = |condition: u8, pair: Option<(Valuation, Valuation)>, execution: Option<AvSequence>, reason: String| {
        Ok(Verdict::Fails(Box::new(Failure { reason, condition: Some(condition), pair, execution })))
    };
    for x in aa.start_states() {
        if !bb.start_states().iter().any(|y| related(r, x, y)) {
            return fail(1, None, None, format!("start state {x} is related to no start state"));
        }
    }
    let z = aa.sig().external_vars();
    let xb_vars = bb.sig().internals();
    let inputs = aa.input_choices();
    let mut tracker = Tracker::new(b, depth);
    let mut inconclusive = None;
    for (xa, xb) in r {
        if !aa.is_state(xa) || !bb.is_state(xb) {
            return fail(2, Some((xa.clone(), xb.clone())), None, "relation pairs a non-state".into());
        }
        for u in &inputs {
            let s = aa.sample(xa, u);
            let (front0, c0) = tracker.seed_states(std::slice::from_ref(xb), &s.project(&z))?;
            let point = |v: &Valuation| Trajectory::point(v.clone(), a.dt);
            for m in moves(a, &s, std::slice::from_ref(u)) {
                let (condition, last, execution) = match &m.run_extension {
                    MoveKind::Jump(act, t) => {
                        let exec = AvSequence::new(vec![point(&s), point(t)], vec![Event::Action(act.clone())])
                            .expect("two points and one action");
                        (2u8, t.clone(), exec)
                    }
                    MoveKind::Flow(samples) => {
                        let mut all = vec![s.clone()];
                        all.extend(samples.iter().cloned());
                        let t = Trajectory::new(aa.sig().all_vars(), a.dt, all, true).expect("covers V");
                        (3u8, samples.last().expect("nonempty").clone(), AvSequence::single(t))
                    }
                };
                let (front, c) = tracker.extend(&front0, &m.piece)?;
                let xa2 = aa.state_of(&last);
                if front.iter().any(|t| related(r, &xa2, &t.project(&xb_vars))) {
                    continue;
                }
                if c0 || c {
                    inconclusive.get_or_insert_with(|| "hidden-action cap reached while matching".to_string());
                    continue;
                }
                return fail(
                    condition,
                    Some((xa.clone(), xb.clone())),
                    Some(execution),
                    format!("condition {condition}: step from related pair has no related match"),
                );
            }
        }
    }
    Ok(match inconclusive {
        Some(why) => Verdict::Inconclusive(why),
        None => Verdict::Holds,
    })
}

/// Both verdicts of a simulation check and the inclusion it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub simulation: Verdict,
    /// Only run when the simulation holds.
    pub inclusion: Option<Verdict>,
}

pub fn simulation_implies_inclusion(
    a: &FiniteInstance,
    b: &FiniteInstance,
    r: &Relation,
    depth: usize,
) -> Result<SimulationReport, RefinementError> {
    let simulation = check_simulation(a, b, r, depth)?;
    let inclusion = if simulation.holds() { Some(check_trace_inclusion(a, b, depth)?) } else { None };
    Ok(SimulationReport { simulation, inclusion })
}

/// States reachable from the start states under every menu input.
pub fn reachable_states(inst: &FiniteInstance) -> Result<Vec<Valuation>, RefinementError> {
    let a = &inst.automaton;
    let inputs = a.input_choices();
    let xv = a.sig().internals();
    let mut seen: BTreeSet<Valuation> = BTreeSet::new();
    let mut queue: VecDeque<Valuation> = a.start_states().iter().cloned().collect();
    let mut order = Vec::new();
    while let Some(x) = queue.pop_front() {
        if !seen.insert(x.clone()) {
            continue;
        }
        if seen.len() > inst.state_budget {
            return Err(RefinementError::BoundExceeded { what: "reachable states", limit: inst.state_budget });
        }
        order.push(x.clone());
        for u in &inputs {
            let s = a.sample(&x, u);
            for m in moves(inst, &s, std::slice::from_ref(u)) {
                let t = match &m.run_extension {
                    MoveKind::Jump(_, t) => t.clone(),
                    MoveKind::Flow(samples) => samples.last().expect("nonempty").clone(),
                };
                let y = t.project(&xv);
                if !seen.contains(&y) {
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(order)
}

/// `{(x, x)}` over the reachable states.
pub fn identity_relation(inst: &FiniteInstance) -> Result<Relation, RefinementError> {
    Ok(reachable_states(inst)?.into_iter().map(|x| (x.clone(), x)).collect())
}

/// Lifts `r` to composites with a common context: `(x1 ∪ y, x2 ∪ y)` for
/// every related pair and every context state `y`.
pub fn product_relation(r: &Relation, context: &[Valuation]) -> Relation {
    let mut out = Vec::with_capacity(r.len() * context.len());
    for (x1, x2) in r {
        for y in context {
            out.push((x1.merged(y), x2.merged(y)));
        }
    }
    out
}
