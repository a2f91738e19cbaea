//! Running an automaton: input providers, schedulers, trajectory generation
//! and execution fragments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AvSequence, Event, ExecError, Hioaw};
use crate::trajectory::{TimeStep, Trajectory};
use crate::value::{Valuation, Value, VarName};
use crate::world::{FieldCells, FieldSlice};

/// Upper bound on consecutive actions at one instant.
pub const ZENO_LIMIT: usize = 1000;

/// Supplies input values at each sample step.
pub trait Environment {
    /// Inputs at `step`, given the outputs the automaton shows at that step.
    /// Repeated calls with the same step must be consistent.
    fn inputs(&mut self, step: usize, outputs: &Valuation) -> Valuation;
}

/// Every input held at the identity of its type.
#[derive(Debug, Clone)]
pub struct IdentityEnv(Valuation);

impl IdentityEnv {
    pub fn for_automaton(a: &Hioaw) -> Self {
        IdentityEnv(a.sig().identity_valuation(&a.sig().inputs()))
    }
}

impl Environment for IdentityEnv {
    fn inputs(&mut self, _step: usize, _outputs: &Valuation) -> Valuation {
        self.0.clone()
    }
}

#[derive(Debug, Clone)]
pub struct ConstantEnv(pub Valuation);

impl Environment for ConstantEnv {
    fn inputs(&mut self, _step: usize, _outputs: &Valuation) -> Valuation {
        self.0.clone()
    }
}

/// Replays a recorded input trajectory; holds its last sample afterwards.
#[derive(Debug, Clone)]
pub struct TrajectoryEnv {
    traj: Trajectory,
    offset: usize,
}

impl TrajectoryEnv {
    pub fn new(traj: Trajectory) -> Self {
        TrajectoryEnv { traj, offset: 0 }
    }

    /// Step `k` of the run reads sample `k - offset`.
    pub fn starting_at(traj: Trajectory, offset: usize) -> Self {
        TrajectoryEnv { traj, offset }
    }
}

impl Environment for TrajectoryEnv {
    fn inputs(&mut self, step: usize, _outputs: &Valuation) -> Valuation {
        let k = step.saturating_sub(self.offset).min(self.traj.steps());
        self.traj.samples()[k].clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouteMode {
    Copy,
    /// The input cell becomes true once the output cell exceeds the
    /// threshold, and stays true.
    Latch {
        threshold: f64,
    },
}

/// Feeds one world output back into one world input.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub input: VarName,
    pub output: VarName,
    pub mode: RouteMode,
}

impl Route {
    pub fn copy(input: &str, output: &str) -> Self {
        Route { input: input.into(), output: output.into(), mode: RouteMode::Copy }
    }

    pub fn latch(input: &str, output: &str, threshold: f64) -> Self {
        Route { input: input.into(), output: output.into(), mode: RouteMode::Latch { threshold } }
    }
}

/// Closes a system over its own world outputs.
#[derive(Debug, Clone)]
pub struct ClosedWorld {
    routes: Vec<Route>,
    base: Valuation,
    committed: Vec<Option<FieldSlice>>,
    current: Vec<Option<FieldSlice>>,
    step: Option<usize>,
}

impl ClosedWorld {
    /// Inputs without a route stay at their identity.
    pub fn new(a: &Hioaw, routes: Vec<Route>) -> Self {
        let n = routes.len();
        ClosedWorld {
            routes,
            base: a.sig().identity_valuation(&a.sig().inputs()),
            committed: vec![None; n],
            current: vec![None; n],
            step: None,
        }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }
}

fn exceeds(f: &FieldSlice, threshold: f64) -> Vec<bool> {
    match f.cells() {
        FieldCells::Real(v) => v.iter().map(|x| *x > threshold).collect(),
        FieldCells::Count(v) => v.iter().map(|x| f64::from(*x) > threshold).collect(),
        FieldCells::Bool(v) => v.clone(),
    }
}

impl Environment for ClosedWorld {
    fn inputs(&mut self, step: usize, outputs: &Valuation) -> Valuation {
        if self.step != Some(step) {
            if self.step.is_some() {
                self.committed = std::mem::take(&mut self.current);
            }
            self.step = Some(step);
        }
        self.current = vec![None; self.routes.len()];
        let mut out = self.base.clone();
        for (i, r) in self.routes.iter().enumerate() {
            let Some(src) = outputs.field(r.output.as_str()) else { continue };
            let val = match r.mode {
                RouteMode::Copy => src.clone(),
                RouteMode::Latch { threshold } => {
                    let mut cells = exceeds(src, threshold);
                    if let Some(prev) = &self.committed[i] {
                        if let FieldCells::Bool(p) = prev.cells() {
                            for (c, q) in cells.iter_mut().zip(p) {
                                *c |= *q;
                            }
                        }
                    }
                    let slice = FieldSlice::new(*src.grid(), FieldCells::Bool(cells))
                        .expect("cell count matches the source grid");
                    self.current[i] = Some(slice.clone());
                    slice
                }
            };
            out.insert(r.input.clone(), Value::Field(val));
        }
        for (c, p) in self.current.iter_mut().zip(&self.committed) {
            if c.is_none() {
                *c = p.clone();
            }
        }
        out
    }
}

/// When enabled actions fire.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheduler {
    /// Urgent rules fire as soon as enabled, in declaration order; other
    /// rules never fire.
    Urgent,
    /// Urgent rules as above; at each sample time one enabled non-urgent
    /// rule fires with the given probability.
    Random { seed: u64, fire_probability: f64 },
}

impl Hioaw {
    fn sample_at(&self, state: &Valuation, env: &mut dyn Environment, step: usize) -> Valuation {
        let out = self.outputs(state);
        let mut s = state.clone();
        s.extend_from(&env.inputs(step, &out));
        s.extend_from(&out);
        s
    }

    /// The raw flow from `x` over `steps` steps, ignoring urgency. The run
    /// is taken to start at absolute step `start_step`.
    pub fn generate(
        &self,
        x: &Valuation,
        env: &mut dyn Environment,
        dt: TimeStep,
        start_step: usize,
        steps: usize,
    ) -> Result<Trajectory, ExecError> {
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(self.sample_at(x, env, start_step));
        for k in 1..=steps {
            let next = self.dynamics().advance(samples.last().expect("nonempty"), dt.seconds());
            samples.push(self.sample_at(&next, env, start_step + k));
        }
        Ok(Trajectory::new(self.sig().all_vars(), dt, samples, true)?)
    }

    /// Flow from `x` driven by `inputs` for `dur`, cut short at the first
    /// sample where an urgent rule is enabled.
    pub fn evolve(&self, x: &Valuation, inputs: &Trajectory, dur: f64) -> Result<Trajectory, ExecError> {
        let dt = inputs.dt();
        let steps = dt.steps(dur)?;
        if inputs.steps() < steps {
            return Err(ExecError::InputDomainTooShort { have: inputs.steps(), need: steps });
        }
        let mut env = TrajectoryEnv::new(inputs.clone());
        let mut samples = vec![self.sample_at(x, &mut env, 0)];
        for k in 1..=steps {
            let last = samples.last().expect("nonempty");
            if self.urgent_enabled(last).is_some() {
                break;
            }
            let next = self.dynamics().advance(last, dt.seconds());
            samples.push(self.sample_at(&next, &mut env, k));
        }
        Ok(Trajectory::new(self.sig().all_vars(), dt, samples, true)?)
    }

    /// Runs from `x0` for `horizon` steps under `sched`.
    pub fn execute(
        &self,
        x0: &Valuation,
        env: &mut dyn Environment,
        dt: TimeStep,
        horizon: usize,
        sched: &Scheduler,
    ) -> Result<AvSequence, ExecError> {
        let vars = self.sig().all_vars();
        let mut rng = match sched {
            Scheduler::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            Scheduler::Urgent => None,
        };
        let mut step = 0;
        let mut cur = vec![self.sample_at(x0, env, 0)];
        let mut trajs = Vec::new();
        let mut events = Vec::new();
        let mut burst = 0;
        let mut drawn_at = None;
        loop {
            let s = cur.last().expect("nonempty");
            let mut fired = None;
            if let Some(rule) = self.urgent_enabled(s) {
                let act = rule.action.clone();
                let x = self.step_discrete(s, act.as_str()).map_err(|e| match e {
                    ExecError::NondeterministicUnresolved(action) => {
                        ExecError::SchedulerDeadlock { time: dt.time(step), action }
                    }
                    other => other,
                })?;
                fired = Some((act, x));
            } else if let (Some(rng), Scheduler::Random { fire_probability, .. }) = (rng.as_mut(), sched) {
                if drawn_at != Some(step) {
                    drawn_at = Some(step);
                    if rng.gen_bool(fire_probability.clamp(0.0, 1.0)) {
                        let enabled: Vec<_> = self.enabled(s).filter(|r| !r.urgent).collect();
                        if !enabled.is_empty() {
                            let rule = enabled[rng.gen_range(0..enabled.len())];
                            let x = self.apply(rule, s);
                            if !self.is_state(&x) {
                                return Err(ExecError::LeftStates(rule.action.to_string()));
                            }
                            fired = Some((rule.action.clone(), x));
                        }
                    }
                }
            }
            if let Some((act, x)) = fired {
                burst += 1;
                if burst > ZENO_LIMIT {
                    return Err(ExecError::Zeno { time: dt.time(step), limit: ZENO_LIMIT });
                }
                let done = std::mem::replace(&mut cur, vec![self.sample_at(&x, env, step)]);
                trajs.push(Trajectory::new(vars.clone(), dt, done, true)?);
                events.push(Event::Action(act));
                continue;
            }
            if step == horizon {
                break;
            }
            let next = self.dynamics().advance(s, dt.seconds());
            step += 1;
            cur.push(self.sample_at(&next, env, step));
            burst = 0;
        }
        trajs.push(Trajectory::new(vars, dt, cur, true)?);
        Ok(AvSequence::new(trajs, events).expect("well-formed by construction"))
    }

    /// Checks that `frag` is an execution fragment: every trajectory follows
    /// the dynamics without passing an enabled urgent rule, and every junction
    /// is a transition (or, for ε, leaves the state unchanged).
    pub fn check_fragment(&self, frag: &AvSequence, from_start: bool) -> Result<(), ExecError> {
        let xv = self.sig().internals();
        let yv = self.sig().outputs();
        let bad = |index: usize, reason: String| ExecError::InvalidFragment { index, reason };
        if from_start {
            let x0 = frag.trajectories()[0].fval().project(&xv);
            if !self.start_states().contains(&x0) {
                return Err(ExecError::NotAStartState);
            }
        }
        for (i, t) in frag.trajectories().iter().enumerate() {
            if t.vars() != &self.sig().all_vars() {
                return Err(bad(i, "variable set differs from the signature".into()));
            }
            let samples = t.samples();
            for (k, s) in samples.iter().enumerate() {
                let x = s.project(&xv);
                if !self.is_state(&x) {
                    return Err(bad(i, format!("sample {k} is not a state")));
                }
                if s.project(&yv) != self.outputs(&x).project(&yv) {
                    return Err(bad(i, format!("sample {k} outputs disagree with the state")));
                }
                if k + 1 < samples.len() {
                    if self.urgent_enabled(s).is_some() {
                        return Err(bad(i, format!("time passes at sample {k} with an urgent rule enabled")));
                    }
                    let next = self.dynamics().advance(s, t.dt().seconds());
                    if next != samples[k + 1].project(&xv) {
                        return Err(bad(i, format!("sample {} does not follow the dynamics", k + 1)));
                    }
                }
            }
        }
        for (i, e) in frag.events().iter().enumerate() {
            let before = frag.trajectories()[i].last_sample();
            let after = frag.trajectories()[i + 1].fval().project(&xv);
            match e {
                Event::Epsilon => {
                    if before.project(&xv) != after {
                        return Err(bad(i + 1, "ε changes the state".into()));
                    }
                }
                Event::Action(a) => {
                    if !self.successors(before, a.as_str()).contains(&after) {
                        return Err(bad(i + 1, format!("{a} is not a transition here")));
                    }
                }
            }
        }
        Ok(())
    }
}
