//! Alternating sequences of trajectories and actions: execution fragments,
//! their paddings with ε, restrictions and traces.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::Signature;
use crate::trajectory::{TimeStep, Trajectory, TrajectoryError};
use crate::value::{ActionName, ActionSet, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    Action(ActionName),
    Epsilon,
}

impl Event {
    pub fn action(&self) -> Option<&ActionName> {
        match self {
            Event::Action(a) => Some(a),
            Event::Epsilon => None,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Action(a) => write!(f, "{a}"),
            Event::Epsilon => write!(f, "ε"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("{trajs} trajectories cannot alternate with {events} events")]
    Shape { trajs: usize, events: usize },
    #[error("cut at t={t} does not fall strictly inside a trajectory")]
    GridMisaligned { t: f64 },
    #[error("ε at position {index} joins different states")]
    MalformedPadding { index: usize },
    #[error("runs last {first} and {other} steps")]
    DurationMismatch { first: usize, other: usize },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// `τ₀ e₁ τ₁ e₂ … τₙ` with every trajectory over the same variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AvSequence {
    trajs: Vec<Trajectory>,
    events: Vec<Event>,
}

pub type ExecutionFragment = AvSequence;
pub type PaddedExecution = AvSequence;
pub type Trace = AvSequence;

impl AvSequence {
    pub fn new(trajs: Vec<Trajectory>, events: Vec<Event>) -> Result<Self, SequenceError> {
        if trajs.len() != events.len() + 1 {
            return Err(SequenceError::Shape { trajs: trajs.len(), events: events.len() });
        }
        let first = &trajs[0];
        for (i, t) in trajs.iter().enumerate() {
            if t.vars() != first.vars() {
                return Err(TrajectoryError::VarSetMismatch.into());
            }
            if t.dt() != first.dt() {
                return Err(TrajectoryError::TimeStepMismatch.into());
            }
            if !t.is_closed() && i + 1 < trajs.len() {
                return Err(TrajectoryError::OpenNonFinalPart { index: i }.into());
            }
        }
        Ok(AvSequence { trajs, events })
    }

    pub fn single(t: Trajectory) -> Self {
        AvSequence { trajs: vec![t], events: Vec::new() }
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajs
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn vars(&self) -> &VarSet {
        self.trajs[0].vars()
    }

    pub fn dt(&self) -> TimeStep {
        self.trajs[0].dt()
    }

    pub fn first(&self) -> &Trajectory {
        &self.trajs[0]
    }

    pub fn last(&self) -> &Trajectory {
        self.trajs.last().expect("nonempty")
    }

    /// Total duration in steps.
    pub fn steps(&self) -> usize {
        self.trajs.iter().map(Trajectory::steps).sum()
    }

    pub fn ltime(&self) -> f64 {
        self.dt().time(self.steps())
    }

    /// Absolute step of each event.
    pub fn event_steps(&self) -> Vec<usize> {
        let mut at = 0;
        self.trajs[..self.trajs.len() - 1]
            .iter()
            .map(|t| {
                at += t.steps();
                at
            })
            .collect()
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionName> {
        self.events.iter().filter_map(Event::action)
    }

    /// Erases events outside `keep` (ε always), joins the flanking
    /// trajectories and projects onto `vars`.
    pub fn restrict(&self, keep: &ActionSet, vars: &VarSet) -> AvSequence {
        let mut trajs = Vec::new();
        let mut events = Vec::new();
        let mut run = vec![self.trajs[0].project(vars)];
        for (e, t) in self.events.iter().zip(&self.trajs[1..]) {
            let kept = matches!(e, Event::Action(a) if keep.contains(a));
            if kept {
                trajs.push(join(&run));
                events.push(e.clone());
                run.clear();
            }
            run.push(t.project(vars));
        }
        trajs.push(join(&run));
        AvSequence { trajs, events }
    }

    /// The restriction to external actions and external variables.
    pub fn trace(&self, sig: &Signature) -> Trace {
        self.restrict(&sig.external_actions(), &sig.external_vars())
    }

    /// Splits trajectories with ε at each absolute time in `cuts`.
    pub fn pad(&self, cuts: &[f64]) -> Result<PaddedExecution, SequenceError> {
        let dt = self.dt();
        let steps = cuts
            .iter()
            .map(|&t| dt.steps(t).map_err(|_| SequenceError::GridMisaligned { t }))
            .collect::<Result<Vec<_>, _>>()?;
        self.pad_steps(&steps)
    }

    pub fn pad_steps(&self, cuts: &[usize]) -> Result<PaddedExecution, SequenceError> {
        let mut cuts = cuts.to_vec();
        cuts.sort_unstable();
        cuts.dedup();
        let dt = self.dt();
        let mut trajs = Vec::new();
        let mut events = Vec::new();
        let mut start = 0;
        let mut next = cuts.iter().peekable();
        for (i, t) in self.trajs.iter().enumerate() {
            let end = start + t.steps();
            let mut from = 0;
            while let Some(&&c) = next.peek() {
                if c <= start {
                    return Err(SequenceError::GridMisaligned { t: dt.time(c) });
                }
                if c >= end {
                    break;
                }
                trajs.push(t.sub_steps(from, c - start));
                events.push(Event::Epsilon);
                from = c - start;
                next.next();
            }
            let tail = t.suffix_steps(from);
            trajs.push(tail);
            if let Some(e) = self.events.get(i) {
                events.push(e.clone());
            }
            start = end;
        }
        if let Some(&c) = next.next() {
            return Err(SequenceError::GridMisaligned { t: dt.time(c) });
        }
        Ok(AvSequence { trajs, events })
    }

    /// Removes every ε, checking that it joins equal states over `state_vars`.
    /// Returns the underlying sequence and the absolute steps of the removed ε.
    pub fn unpad(&self, state_vars: &VarSet) -> Result<(ExecutionFragment, Vec<usize>), SequenceError> {
        let times = self.event_steps();
        let mut cuts = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            if *e == Event::Epsilon {
                let before = self.trajs[i].last_sample().project(state_vars);
                let after = self.trajs[i + 1].fval().project(state_vars);
                if before != after {
                    return Err(SequenceError::MalformedPadding { index: i });
                }
                cuts.push(times[i]);
            }
        }
        let keep: ActionSet = self.actions().cloned().collect();
        Ok((self.restrict(&keep, self.vars()), cuts))
    }

    /// Pads every run so that all have the same number of trajectories with
    /// equal lengths index by index.
    pub fn align(runs: &[AvSequence]) -> Result<Vec<PaddedExecution>, SequenceError> {
        let Some(first) = runs.first() else { return Ok(Vec::new()) };
        let total = first.steps();
        for r in runs {
            if r.steps() != total {
                return Err(SequenceError::DurationMismatch { first: total, other: r.steps() });
            }
        }
        let counts: Vec<BTreeMap<usize, usize>> = runs
            .iter()
            .map(|r| {
                let mut m = BTreeMap::new();
                for t in r.event_steps() {
                    *m.entry(t).or_insert(0) += 1;
                }
                m
            })
            .collect();
        let mut needed: BTreeMap<usize, usize> = BTreeMap::new();
        for m in &counts {
            for (&t, &n) in m {
                let e = needed.entry(t).or_insert(0);
                *e = (*e).max(n);
            }
        }
        Ok(runs.iter().zip(&counts).map(|(r, own)| r.align_to(&needed, own, total)).collect())
    }

    fn align_to(&self, needed: &BTreeMap<usize, usize>, own: &BTreeMap<usize, usize>, total: usize) -> AvSequence {
        let mut trajs = Vec::new();
        let mut events = Vec::new();
        let mut own_events = self.events.iter();
        let (mut piece, mut offset, mut now) = (0, 0, 0);
        for (&t, &m) in needed {
            trajs.push(self.trajs[piece].sub_steps(offset, offset + t - now));
            offset += t - now;
            now = t;
            let mine = own.get(&t).copied().unwrap_or(0);
            for j in 0..m {
                if j < mine {
                    debug_assert_eq!(offset, self.trajs[piece].steps());
                    events.push(own_events.next().expect("event count matches").clone());
                    piece += 1;
                    offset = 0;
                } else {
                    events.push(Event::Epsilon);
                }
                if j + 1 < m {
                    trajs.push(self.trajs[piece].sub_steps(offset, offset));
                }
            }
        }
        let last = &self.trajs[piece];
        let tail = last.sub_steps(offset, offset + total - now).with_closed(last.is_closed());
        trajs.push(tail);
        AvSequence { trajs, events }
    }

    /// The prefix ending `steps` into trajectory `piece`.
    pub fn prefix(&self, piece: usize, steps: usize) -> AvSequence {
        let mut trajs = self.trajs[..piece].to_vec();
        trajs.push(self.trajs[piece].prefix_steps(steps));
        AvSequence { trajs, events: self.events[..piece].to_vec() }
    }

    /// Whether `self` is `other` cut short inside one of its trajectories.
    pub fn is_prefix_of(&self, other: &AvSequence) -> bool {
        let n = self.trajs.len();
        n <= other.trajs.len()
            && self.events[..] == other.events[..n - 1]
            && self.trajs[..n - 1] == other.trajs[..n - 1]
            && self.trajs[n - 1].is_prefix_of(&other.trajs[n - 1])
    }

    /// Same events, trajectories equal up to `tol` on real field cells.
    pub fn approx_eq(&self, other: &AvSequence, tol: f64) -> bool {
        self.events == other.events
            && self.trajs.len() == other.trajs.len()
            && self.trajs.iter().zip(&other.trajs).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Pointwise sum of two action-free sequences.
    pub fn sum(a: &AvSequence, b: &AvSequence) -> Result<AvSequence, SequenceError> {
        if !a.events.is_empty() || !b.events.is_empty() {
            return Err(SequenceError::Shape { trajs: a.trajs.len().max(b.trajs.len()), events: 0 });
        }
        Ok(AvSequence::single(Trajectory::sum(&a.trajs[0], &b.trajs[0])?))
    }
}

fn join(parts: &[Trajectory]) -> Trajectory {
    Trajectory::concat(parts).expect("pieces of one sequence share variables and step")
}
