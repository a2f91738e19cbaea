//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use hioaw::automaton::{
    ActionKind, ClosedWorld, ConstantEnv, FnDynamics, IdentityEnv, Role, Route, Rule, TrajectoryEnv,
};
use hioaw::cars::{build_car, build_two_car_world, pose_of, supervisor_oracle, world_routes, CarParams, CarPose};
use hioaw::composition::compose;
use hioaw::finite::FiniteSpec;
use hioaw::refinement::FiniteInstance;
use hioaw::world::{FieldCells, FieldKind, FieldSlice, FieldValue, SpaceGrid};
use hioaw::{AvSequence, Hioaw, Scheduler, Signature, TimeStep, Trajectory, Valuation, Value, VarSet, VarType};
use rand::seq::SliceRandom;
use rand::Rng;

pub const TOL: f64 = 1e-9;

pub fn dt() -> TimeStep {
    TimeStep::new(0.1).unwrap()
}

pub fn small_grid() -> SpaceGrid {
    SpaceGrid::new(3, 2, 0.5).unwrap()
}

pub fn var_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn random_field(rng: &mut impl Rng, grid: SpaceGrid) -> FieldSlice {
    let cells = (0..grid.cell_count()).map(|_| rng.gen_range(-4..=4) as f64 * 0.25).collect();
    FieldSlice::new(grid, FieldCells::Real(cells)).unwrap()
}

/// A value whose type depends on the variable's index: real, bool, label,
/// then a real field.
pub fn random_value(rng: &mut impl Rng, index: usize) -> Value {
    match index % 4 {
        0 => Value::Scalar(rng.gen_range(-100..100) as f64 / 8.0),
        1 => Value::Boolean(rng.gen()),
        2 => Value::Label(["a", "b", "c"][rng.gen_range(0..3)].to_string()),
        _ => Value::Field(random_field(rng, small_grid())),
    }
}

pub fn random_trajectory(rng: &mut impl Rng, nvars: usize, steps: usize, closed: bool) -> Trajectory {
    let names = var_names(nvars);
    let samples = (0..=steps)
        .map(|_| names.iter().enumerate().map(|(i, n)| (n.as_str(), random_value(rng, i))).collect::<Vec<_>>())
        .map(Valuation::from_pairs)
        .collect();
    let vars = names.iter().map(|n| n.as_str().into()).collect();
    Trajectory::new(vars, dt(), samples, closed).unwrap()
}

pub fn random_subset(rng: &mut impl Rng, vars: &VarSet) -> VarSet {
    vars.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

// ---- oracles working on raw samples ----

/// Keeps the named entries of one sample, by walking its pairs.
pub fn oracle_keep(s: &Valuation, keep: &VarSet) -> Valuation {
    let mut out = Valuation::new();
    for (n, v) in s.iter() {
        if keep.iter().any(|k| k == n) {
            out.insert(n.clone(), v.clone());
        }
    }
    out
}

pub fn oracle_window(t: &Trajectory, a: usize, b: usize) -> Vec<Valuation> {
    (a..=b).map(|k| t.samples()[k].clone()).collect()
}

pub fn oracle_project(samples: &[Valuation], keep: &VarSet) -> Vec<Valuation> {
    samples.iter().map(|s| oracle_keep(s, keep)).collect()
}

/// Concatenation by explicit index arithmetic: sample k of the result comes
/// from the part covering step k, the earlier part winning at junctions.
pub fn oracle_concat(parts: &[Trajectory]) -> Vec<Valuation> {
    let total: usize = parts.iter().map(|p| p.steps()).sum();
    (0..=total)
        .map(|k| {
            let mut base = 0;
            for p in parts {
                if k <= base + p.steps() {
                    return p.samples()[k - base].clone();
                }
                base += p.steps();
            }
            unreachable!()
        })
        .collect()
}

pub fn cell_values(f: &FieldSlice) -> Vec<FieldValue> {
    let g = *f.grid();
    g.cells().map(|c| f.get(c)).collect()
}

// ---- random hybrid automata ----

/// Parameters of a random hybrid automaton: a mode label and a clock-like
/// real `x` growing at a mode-dependent rate, reset by an urgent `wrap`.
#[derive(Debug, Clone)]
pub struct HybridShape {
    pub tag: String,
    pub modes: usize,
    pub rates: Vec<f64>,
    pub wrap_at: f64,
    /// (from, to, action, kind, reset)
    pub edges: Vec<(usize, usize, String, ActionKind, bool)>,
    pub world_out: bool,
    pub reads: Option<String>,
}

pub fn random_shape(rng: &mut impl Rng, tag: &str, shared_out: Option<&str>, shared_in: Option<&str>) -> HybridShape {
    let modes = rng.gen_range(2..=3);
    let rates = (0..modes).map(|_| [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)]).collect();
    let mut edges = Vec::new();
    for k in 0..rng.gen_range(1..=4) {
        let kind = if rng.gen_bool(0.5) { ActionKind::Output } else { ActionKind::Hidden };
        let name = match kind {
            ActionKind::Output => format!("o{k}_{tag}"),
            _ => format!("h{k}_{tag}"),
        };
        edges.push((rng.gen_range(0..modes), rng.gen_range(0..modes), name, kind, rng.gen_bool(0.3)));
    }
    if let Some(a) = shared_out {
        edges.push((rng.gen_range(0..modes), rng.gen_range(0..modes), a.to_string(), ActionKind::Output, false));
    }
    if let Some(a) = shared_in {
        // input actions are enabled in every mode
        for m in 0..modes {
            edges.push((m, rng.gen_range(0..modes), a.to_string(), ActionKind::Input, false));
        }
    }
    HybridShape {
        tag: tag.to_string(),
        modes,
        rates,
        wrap_at: [0.4, 0.8, 1.0][rng.gen_range(0..3)],
        edges,
        world_out: rng.gen_bool(0.7),
        reads: None,
    }
}

pub fn build_hybrid(shape: &HybridShape) -> Hioaw {
    let tag = &shape.tag;
    let (mode, x, y) = (format!("mode_{tag}"), format!("x_{tag}"), format!("y_{tag}"));
    let grid = small_grid();
    let mut sig = Signature::new()
        .var(&mode, Role::AutoInternal, VarType::Label)
        .var(&x, Role::AutoInternal, VarType::Real)
        .var(&y, Role::AutoOut, VarType::Real);
    if shape.world_out {
        sig.declare("w", Role::WorldOut, VarType::Field { kind: FieldKind::Real, grid });
    }
    if let Some(r) = &shape.reads {
        sig.declare(r, Role::AutoIn, VarType::Real);
    }
    let wrap = format!("wrap_{tag}");
    sig.declare_action(&wrap, ActionKind::Hidden);
    for (_, _, a, kind, _) in &shape.edges {
        sig.declare_action(a, *kind);
    }

    let label = |m: usize| Value::Label(format!("m{m}"));
    let rates = shape.rates.clone();
    let (mo, xo, yo, wo) = (mode.clone(), x.clone(), y.clone(), shape.world_out);
    let (ma, xa) = (mode.clone(), x.clone());
    let reads = shape.reads.clone();
    let dynamics = FnDynamics {
        outputs: move |s: &Valuation| {
            let xv = s.f64(&xo).unwrap_or(0.0);
            let mut out = Valuation::from_pairs([(yo.as_str(), Value::Scalar(xv))]);
            if wo {
                let m = s.label(&mo).map(|l| l[1..].parse::<f64>().unwrap_or(0.0)).unwrap_or(0.0);
                let cells = (0..grid.cell_count()).map(|i| xv * (i as f64 + 1.0) + m).collect();
                out.insert("w", Value::Field(FieldSlice::new(grid, FieldCells::Real(cells)).unwrap()));
            }
            out
        },
        advance: move |s: &Valuation, dt: f64| {
            let m: usize = s.label(&ma).and_then(|l| l[1..].parse().ok()).unwrap_or(0);
            let extra = reads.as_ref().and_then(|r| s.f64(r)).map(|v| if v > 0.5 { 0.5 } else { 0.0 }).unwrap_or(0.0);
            let xv = s.f64(&xa).unwrap_or(0.0) + (rates[m] + extra) * dt;
            Valuation::from_pairs([(ma.as_str(), s.get(&ma).cloned().unwrap()), (xa.as_str(), Value::Scalar(xv))])
        },
    };
    let mut rules = Vec::new();
    {
        let (xg, xe, limit) = (x.clone(), x.clone(), shape.wrap_at);
        rules.push(
            Rule::new(
                &wrap,
                move |s| s.f64(&xg).unwrap_or(0.0) >= limit - 1e-9,
                move |_| Valuation::from_pairs([(xe.as_str(), Value::Scalar(0.0))]),
            )
            .urgent(),
        );
    }
    for (from, to, a, _, reset) in &shape.edges {
        let (mg, me, xe) = (mode.clone(), mode.clone(), x.clone());
        let (from, to, reset) = (label(*from), label(*to), *reset);
        rules.push(Rule::new(
            a,
            move |s| s.get(&mg) == Some(&from),
            move |_| {
                let mut v = Valuation::from_pairs([(me.as_str(), to.clone())]);
                if reset {
                    v.insert(xe.as_str(), Value::Scalar(0.0));
                }
                v
            },
        ));
    }
    let start = Valuation::from_pairs([(mode.as_str(), label(0)), (x.as_str(), Value::Scalar(0.0))]);
    let mut a = Hioaw::new(&format!("hyb_{tag}"), sig, Arc::new(dynamics)).with_start(vec![start]).with_rules(rules);
    if let Some(r) = &shape.reads {
        a = a.with_input_menu(r, vec![Value::Scalar(0.0), Value::Scalar(1.0)]);
    }
    a
}

/// A compatible pair of random hybrid automata. They may share the world
/// output `w`, one may read the other's output, and they may synchronise
/// on an action.
pub fn random_pair(rng: &mut impl Rng, seed: u64) -> (Hioaw, Hioaw) {
    let t1 = format!("a{seed}");
    let t2 = format!("b{seed}");
    let sync = rng.gen_bool(0.5).then(|| format!("sync{seed}"));
    let s1 = random_shape(rng, &t1, sync.as_deref(), None);
    let mut s2 = random_shape(rng, &t2, None, sync.as_deref());
    if rng.gen_bool(0.5) {
        s2.reads = Some(format!("y_{t1}"));
    }
    (build_hybrid(&s1), build_hybrid(&s2))
}

pub fn random_scheduler(rng: &mut impl Rng) -> Scheduler {
    Scheduler::Random { seed: rng.gen(), fire_probability: rng.gen_range(0.1..0.6) }
}

/// A run of `a` from its first start state with identity inputs.
pub fn random_run(rng: &mut impl Rng, a: &Hioaw, steps: usize) -> AvSequence {
    let x0 = a.start_states()[0].clone();
    let mut env = IdentityEnv::for_automaton(a);
    a.execute(&x0, &mut env, dt(), steps, &random_scheduler(rng)).unwrap()
}

/// Random cut steps strictly inside trajectories of `alpha`.
pub fn random_cuts(rng: &mut impl Rng, alpha: &AvSequence) -> Vec<usize> {
    let events: BTreeSet<usize> = alpha.event_steps().into_iter().collect();
    let inside: Vec<usize> = (1..alpha.steps()).filter(|k| !events.contains(k)).collect();
    let n = rng.gen_range(0..=inside.len().min(5));
    let mut cuts: Vec<usize> = inside.choose_multiple(rng, n).cloned().collect();
    cuts.sort_unstable();
    cuts
}

/// The component's own generator replayed over the inputs recorded in a
/// composite trajectory `tau`.
pub fn regenerate(composite: &Hioaw, tau: &Trajectory, i: usize) -> Trajectory {
    let parts = composite.parts().unwrap();
    let c = parts.component(i);
    let x0 = parts.state(i, tau.fval());
    let inputs = tau.project(&c.sig().inputs());
    let mut env = TrajectoryEnv::new(inputs);
    c.generate(&x0, &mut env, tau.dt(), 0, tau.steps()).unwrap()
}

/// Whether `tau` is reproduced by the component generators: equal off the
/// shared outputs, and the sum of the two contributions on them.
pub fn reproduced(composite: &Hioaw, tau: &Trajectory) -> Result<(), String> {
    let shared = composite.shared_outputs();
    let mut own = Vec::new();
    for i in 0..2 {
        let ti = regenerate(composite, tau, i);
        let keep: VarSet = ti.vars().difference(&shared).cloned().collect();
        if tau.project(&keep) != ti.project(&keep) {
            return Err(format!("component {i} differs off the shared outputs"));
        }
        own.push(ti.project(&shared));
    }
    if !shared.is_empty() {
        let sum = Trajectory::sum(&own[0], &own[1]).map_err(|e| e.to_string())?;
        if !tau.project(&shared).approx_eq(&sum, TOL) {
            return Err("shared outputs are not the sum".into());
        }
    }
    Ok(())
}

pub fn composite_pair(rng: &mut impl Rng, seed: u64) -> Hioaw {
    let (a, b) = random_pair(rng, seed);
    compose(&a, &b).unwrap()
}

// ---- finite instances with known refinement verdicts ----

pub fn instance(spec: &FiniteSpec) -> FiniteInstance {
    FiniteInstance::new(spec.build().unwrap(), dt())
}

/// Observable: output action `tick`, output `lvl` in {0, 1}, input `go`.
pub fn base(name: &str, state_var: &str, states: &[&str]) -> FiniteSpec {
    FiniteSpec::new(name, state_var, states)
        .input("go", VarType::Bool)
        .output("lvl", VarType::Real)
        .action("tick", ActionKind::Output)
        .action("tau", ActionKind::Hidden)
}

pub struct KnownPair {
    pub label: &'static str,
    pub a: FiniteSpec,
    pub b: FiniteSpec,
    /// Label pairs for the simulation check.
    pub relation: Vec<(&'static str, &'static str)>,
    pub simulation: bool,
    pub inclusion: bool,
}

pub fn relation_of(p: &KnownPair) -> Vec<(Valuation, Valuation)> {
    p.relation.iter().map(|(x, y)| (p.a.state(x), p.b.state(y))).collect()
}

/// Hand-built pairs with verdicts worked out by hand.
pub fn known_pairs() -> Vec<KnownPair> {
    let two = || base("a", "q", &["s0", "s1"]).emit("s1", "lvl", 1.0);
    vec![
        KnownPair {
            label: "identical",
            a: two().transition("s0", "tick", "s1"),
            b: two().transition("s0", "tick", "s1").with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "fewer behaviours",
            a: two(),
            b: two().transition("s0", "tick", "s1").with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "more behaviours",
            a: two().transition("s0", "tick", "s1"),
            b: two().with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: false,
            inclusion: false,
        },
        KnownPair {
            label: "guarded below unguarded",
            a: two().transition_when("s0", "tick", "s1", "go", true),
            b: two().transition("s0", "tick", "s1").with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "unguarded above guarded",
            a: two().transition("s0", "tick", "s1"),
            b: two().transition_when("s0", "tick", "s1", "go", true).with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: false,
            inclusion: false,
        },
        KnownPair {
            label: "hidden step matched by nothing",
            a: two().transition("s0", "tau", "s0"),
            b: two().with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "hidden detour before output",
            a: two().transition("s0", "tick", "s1"),
            b: base("b", "p", &["t0", "t1", "t2"])
                .emit("t2", "lvl", 1.0)
                .transition("t0", "tau", "t1")
                .transition("t1", "tick", "t2"),
            relation: vec![("s0", "t0"), ("s1", "t2")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "wrong level after tick",
            a: two().transition("s0", "tick", "s1"),
            b: base("b", "p", &["s0", "s1"]).transition("s0", "tick", "s1"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: false,
            inclusion: false,
        },
        KnownPair {
            label: "bad relation, good inclusion",
            a: two().transition("s0", "tick", "s1"),
            b: base("b", "p", &["t0", "t1", "t2"])
                .emit("t1", "lvl", 1.0)
                .emit("t2", "lvl", 1.0)
                .transition("t0", "tick", "t1")
                .transition("t0", "tick", "t2"),
            relation: vec![("s0", "t0"), ("s1", "t2"), ("s1", "t0")],
            simulation: false,
            inclusion: true,
        },
        KnownPair {
            label: "nondeterministic spec",
            a: base("a", "q", &["s0", "s1", "s2"])
                .emit("s1", "lvl", 1.0)
                .transition("s0", "tick", "s1")
                .transition("s1", "tick", "s2"),
            b: base("b", "p", &["t0", "t1", "t2", "t3"])
                .emit("t1", "lvl", 1.0)
                .emit("t2", "lvl", 1.0)
                .transition("t0", "tick", "t1")
                .transition("t0", "tick", "t2")
                .transition("t2", "tick", "t3"),
            relation: vec![("s0", "t0"), ("s1", "t2"), ("s2", "t3")],
            simulation: true,
            inclusion: true,
        },
        KnownPair {
            label: "second tick missing",
            a: base("a", "q", &["s0", "s1", "s2"])
                .emit("s1", "lvl", 1.0)
                .transition("s0", "tick", "s1")
                .transition("s1", "tick", "s2"),
            b: base("b", "p", &["t0", "t1", "t2"]).emit("t1", "lvl", 1.0).transition("t0", "tick", "t1"),
            relation: vec![("s0", "t0"), ("s1", "t1")],
            simulation: false,
            inclusion: false,
        },
        KnownPair {
            label: "extra start state",
            a: two().start(&["s0", "s1"]),
            b: two().with_state_var("p"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
            simulation: false,
            inclusion: false,
        },
    ]
}

/// (A1, A2, B) with A1 refining A2 under `relation`, and B compatible with
/// both: B watches `lvl` and answers with its own output action.
pub struct Triple {
    pub a1: FiniteSpec,
    pub a2: FiniteSpec,
    pub b: FiniteSpec,
    pub relation: Vec<(&'static str, &'static str)>,
}

pub fn triples() -> Vec<Triple> {
    let watcher = |name: &str| {
        FiniteSpec::new(name, "w", &["idle", "seen"])
            .input("lvl", VarType::Bool)
            .output("ack", VarType::Bool)
            .emit("seen", "ack", true)
            .action("tick", ActionKind::Input)
            .action("bell", ActionKind::Output)
            .transition("idle", "tick", "seen")
            .transition("seen", "tick", "seen")
            .transition("seen", "bell", "idle")
    };
    let counter = |name: &str| {
        FiniteSpec::new(name, "c", &["c0", "c1", "c2"])
            .output("go", VarType::Bool)
            .emit("c1", "go", true)
            .action("tick", ActionKind::Input)
            .action("beat", ActionKind::Hidden)
            .transition("c0", "beat", "c1")
            .transition("c1", "beat", "c2")
            .transition("c2", "beat", "c0")
            .transition("c0", "tick", "c0")
            .transition("c1", "tick", "c1")
            .transition("c2", "tick", "c2")
    };
    // the watcher reads lvl as a bool, so these specs emit it as one
    let boolean = |name: &str, sv: &str, states: &[&str]| {
        FiniteSpec::new(name, sv, states)
            .input("go", VarType::Bool)
            .output("lvl", VarType::Bool)
            .action("tick", ActionKind::Output)
            .action("tau", ActionKind::Hidden)
    };
    vec![
        Triple {
            a1: boolean("a1", "q", &["s0", "s1"]).emit("s1", "lvl", true),
            a2: boolean("a2", "p", &["s0", "s1"]).emit("s1", "lvl", true).transition("s0", "tick", "s1"),
            b: watcher("w1"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
        },
        Triple {
            a1: boolean("a1", "q", &["s0", "s1"])
                .emit("s1", "lvl", true)
                .transition_when("s0", "tick", "s1", "go", true),
            a2: boolean("a2", "p", &["s0", "s1"]).emit("s1", "lvl", true).transition("s0", "tick", "s1"),
            b: counter("c"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
        },
        Triple {
            a1: boolean("a1", "q", &["s0", "s1"]).emit("s1", "lvl", true).transition("s0", "tick", "s1"),
            a2: boolean("a2", "p", &["t0", "t1", "t2"])
                .emit("t2", "lvl", true)
                .transition("t0", "tau", "t1")
                .transition("t1", "tick", "t2"),
            b: watcher("w2"),
            relation: vec![("s0", "t0"), ("s1", "t2")],
        },
        Triple {
            a1: boolean("a1", "q", &["s0", "s1"])
                .emit("s1", "lvl", true)
                .transition("s0", "tick", "s1")
                .transition("s1", "tau", "s1"),
            a2: boolean("a2", "p", &["s0", "s1"])
                .emit("s1", "lvl", true)
                .transition("s0", "tick", "s1")
                .transition("s1", "tick", "s1"),
            b: counter("c2"),
            relation: vec![("s0", "s0"), ("s1", "s1")],
        },
        Triple {
            a1: boolean("a1", "q", &["s0", "s1", "s2"])
                .emit("s1", "lvl", true)
                .transition("s0", "tick", "s1")
                .transition("s1", "tick", "s2"),
            a2: boolean("a2", "p", &["t0", "t1", "t2", "t3"])
                .emit("t1", "lvl", true)
                .emit("t2", "lvl", true)
                .transition("t0", "tick", "t1")
                .transition("t0", "tick", "t2")
                .transition("t2", "tick", "t3"),
            b: watcher("w3"),
            relation: vec![("s0", "t0"), ("s1", "t2"), ("s2", "t3")],
        },
        Triple {
            a1: boolean("a1", "q", &["s0"]),
            a2: boolean("a2", "p", &["s0", "s1"])
                .emit("s1", "lvl", true)
                .transition("s0", "tau", "s1")
                .transition("s1", "tau", "s0"),
            b: watcher("w4"),
            relation: vec![("s0", "s0")],
        },
    ]
}

/// Random finite tables over the same observables as [`base`].
pub fn random_finite(rng: &mut impl Rng, name: &str) -> FiniteSpec {
    let n = rng.gen_range(1..=4);
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let refs: Vec<&str> = states.iter().map(String::as_str).collect();
    let mut spec = base(name, "q", &refs);
    for s in &states {
        if rng.gen_bool(0.5) {
            spec = spec.emit(s, "lvl", 1.0);
        }
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let (from, to) = (refs[rng.gen_range(0..n)], refs[rng.gen_range(0..n)]);
        let act = if rng.gen_bool(0.7) { "tick" } else { "tau" };
        spec = if rng.gen_bool(0.3) {
            spec.transition_when(from, act, to, "go", true)
        } else {
            spec.transition(from, act, to)
        };
    }
    spec
}

// ---- composition corpus ----

/// A grid large enough for two cars a few meters apart.
pub fn car_grid() -> SpaceGrid {
    SpaceGrid::new(80, 40, 0.25).unwrap()
}

pub fn car(tag: &str, x: f64, y: f64, heading: f64, mass: f64) -> CarParams {
    CarParams { tag: tag.into(), mass, position: (x, y), heading, ..CarParams::default() }
}

/// Car pairs in a few configurations: head-on, parallel, chasing, crossing.
pub fn car_pairs() -> Vec<(CarParams, CarParams)> {
    use std::f64::consts::PI;
    vec![
        (car("1", 4.0, 5.0, 0.0, 1000.0), car("2", 12.0, 5.0, PI, 1200.0)),
        (car("1", 3.0, 3.0, 0.0, 900.0), car("2", 3.0, 7.0, 0.0, 1100.0)),
        (car("1", 3.0, 5.0, 0.0, 800.0), car("2", 8.0, 5.0, 0.0, 1500.0)),
        (car("1", 4.0, 3.0, PI / 2.0, 1000.0), car("2", 10.0, 6.0, PI, 1000.0)),
    ]
}

/// A composed pair together with the routes closing its world (empty for
/// open composites).
pub struct CorpusEntry {
    pub label: String,
    pub a: Hioaw,
    pub b: Hioaw,
    pub composite: Hioaw,
    pub routes: Vec<Route>,
}

/// Cars, random hybrid pairs and finite products.
pub fn corpus(rng: &mut impl Rng, random: usize) -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for (i, (p1, p2)) in car_pairs().iter().enumerate() {
        let (a, b) = (build_car(p1, &car_grid()).unwrap(), build_car(p2, &car_grid()).unwrap());
        let composite = compose(&a, &b).unwrap();
        out.push(CorpusEntry { label: format!("cars{i}"), a, b, composite, routes: world_routes(0.0) });
    }
    for (i, t) in triples().iter().enumerate() {
        let (a, b) = (t.a1.build().unwrap(), t.b.build().unwrap());
        let composite = compose(&a, &b).unwrap();
        out.push(CorpusEntry { label: format!("finite{i}"), a, b, composite, routes: Vec::new() });
    }
    for i in 0..random {
        let (a, b) = random_pair(rng, i as u64);
        let composite = compose(&a, &b).unwrap();
        out.push(CorpusEntry { label: format!("hybrid{i}"), a, b, composite, routes: Vec::new() });
    }
    out
}

/// A run of the composite from its first start state, inside its closed
/// world when there are routes, with a random input choice otherwise.
pub fn corpus_run(rng: &mut impl Rng, e: &CorpusEntry, steps: usize) -> AvSequence {
    let x0 = e.composite.start_states()[0].clone();
    let sched = random_scheduler(rng);
    if e.routes.is_empty() {
        let choices = e.composite.input_choices();
        let pick = choices.choose(rng).cloned().unwrap_or_default();
        let mut env = ConstantEnv(pick);
        e.composite.execute(&x0, &mut env, dt(), steps, &sched).unwrap()
    } else {
        let mut env = ClosedWorld::new(&e.composite, e.routes.clone());
        e.composite.execute(&x0, &mut env, dt(), steps, &sched).unwrap()
    }
}

// ---- the two-car scenario ----

pub fn scenario_grid() -> SpaceGrid {
    SpaceGrid::new(200, 200, 0.25).unwrap()
}

/// The car's rectangle lies inside the grid.
pub fn on_grid(g: &SpaceGrid, pose: &CarPose) -> bool {
    let (c, s) = (pose.heading.cos(), pose.heading.sin());
    let (hl, hw) = (pose.length / 2.0, pose.width / 2.0);
    let (x0, y0) = g.origin();
    let (x1, y1) = (x0 + g.width() as f64 * g.cell_size(), y0 + g.height() as f64 * g.cell_size());
    [(hl, hw), (hl, -hw), (-hl, hw), (-hl, -hw)].iter().all(|(a, b)| {
        let (x, y) = (pose.center.0 + a * c - b * s, pose.center.1 + a * s + b * c);
        (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
    })
}

/// Per-sample checks of a closed two-car run: pressure mass, paint support,
/// and the first collision step of each car against the oracle.
pub fn check_car_run(p: [&CarParams; 2], g: &SpaceGrid, run: &AvSequence) -> Result<(), String> {
    let total = p[0].mass + p[1].mass;
    let mut first_risk: [Option<usize>; 2] = [None, None];
    let mut step = 0;
    for t in run.trajectories() {
        for (k, s) in t.samples().iter().enumerate() {
            let now = step + k;
            let poses = [pose_of(p[0], s), pose_of(p[1], s)];
            if poses.iter().all(|q| on_grid(g, q)) {
                let m = s.field("k").ok_or("no k")?.integral();
                if (m - total).abs() > 1e-9 * total {
                    return Err(format!("step {now}: pressure integrates to {m}, expected {total}"));
                }
            }
            let fps = [poses[0].footprint(g), poses[1].footprint(g)];
            let xi = s.field("xi").ok_or("no xi")?;
            if xi.support() != fps[0].union(&fps[1]) {
                return Err(format!("step {now}: paint differs from the footprints"));
            }
            for (i, risk) in supervisor_oracle(g, &poses).into_iter().enumerate() {
                if risk && first_risk[i].is_none() {
                    first_risk[i] = Some(now);
                }
            }
        }
        step += t.steps();
    }
    let steps = run.event_steps();
    for i in 0..2 {
        let name = p[i].name("collision");
        let fired = run.events().iter().zip(&steps).find(|(e, _)| e.action().is_some_and(|a| a.as_str() == name));
        let fired = fired.map(|(_, k)| *k);
        if fired != first_risk[i] {
            return Err(format!("car {i}: collision at {fired:?}, oracle risk at {:?}", first_risk[i]));
        }
    }
    Ok(())
}

pub fn run_cars(p1: &CarParams, p2: &CarParams, g: &SpaceGrid, steps: usize, sched: &Scheduler) -> (Hioaw, AvSequence) {
    let world = build_two_car_world(p1, p2, g).unwrap();
    let mut env = ClosedWorld::new(&world, world_routes(0.0));
    let run = world.execute(&world.start_states()[0], &mut env, dt(), steps, sched).unwrap();
    (world, run)
}
