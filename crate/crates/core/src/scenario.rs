//! Scenario files: sectioned `key = value` text describing a grid, a time
//! base, automata, compositions, checks and one run.
//!
//! ```text
//! [grid]
//! width = 200
//! height = 200
//! cell_size = 0.25
//!
//! [time]
//! dt = 0.1
//! horizon = 12
//!
//! [car 1]
//! x = 20
//! y = 25
//!
//! [compose world]
//! a = 1
//! b = 2
//! ```
//!
//! `#` and `;` start comments. Keys may repeat (`transition`, `route`).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::automaton::{ActionKind, ClosedWorld, Environment, IdentityEnv, Route, Scheduler};
use crate::cars::{self, CarParams};
use crate::composition::{compose, null_automaton};
use crate::finite::{FiniteSpec, Transition};
use crate::refinement::{FiniteInstance, Relation, DEFAULT_DEPTH, DEFAULT_STATE_BUDGET};
use crate::trajectory::TimeStep;
use crate::value::{Valuation, Value, VarType};
use crate::world::SpaceGrid;
use crate::Hioaw;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// Column where the value starts, 1-based.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: String,
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    fn label(&self) -> String {
        match &self.name {
            Some(n) => format!("[{} {}]", self.kind, n),
            None => format!("[{}]", self.kind),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&Entry, ParseError> {
        self.get(key).ok_or_else(|| ParseError::at(self.line, 1, format!("{} is missing `{key}`", self.label())))
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ParseError> {
        match self.get(key) {
            Some(e) => e.parse(),
            None => Ok(default),
        }
    }

    fn check_keys(&self, allowed: &[&str], prefixes: &[&str]) -> Result<(), ParseError> {
        for e in &self.entries {
            let ok = allowed.contains(&e.key.as_str()) || prefixes.iter().any(|p| e.key.starts_with(p));
            if !ok {
                return Err(ParseError::at(e.line, 1, format!("unknown key `{}` in {}", e.key, self.label())));
            }
        }
        Ok(())
    }
}

impl Entry {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.line, self.column, message)
    }

    fn parse<T: std::str::FromStr>(&self) -> Result<T, ParseError> {
        self.value.parse().map_err(|_| self.err(format!("cannot read `{}` as {}", self.value, short_type::<T>())))
    }

    fn words(&self) -> Vec<&str> {
        self.value.split([',', ' ', '\t']).filter(|w| !w.is_empty()).collect()
    }
}

fn short_type<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    full.rsplit("::").next().unwrap_or(full)
}

/// Splits the text into sections.
pub fn parse_sections(text: &str) -> Result<Vec<Section>, ParseError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find(['#', ';']) {
            Some(c) => &raw[..c],
            None => raw,
        };
        let indent = body.len() - body.trim_start().len();
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return Err(ParseError::at(line, indent + trimmed.len(), "expected `]`"));
            };
            let mut words = inner.split_whitespace();
            let Some(kind) = words.next() else {
                return Err(ParseError::at(line, indent + 2, "empty section header"));
            };
            let name = words.next().map(str::to_string);
            if let Some(extra) = words.next() {
                let col = raw.find(extra).unwrap_or(indent) + 1;
                return Err(ParseError::at(line, col, format!("unexpected `{extra}` in section header")));
            }
            out.push(Section { kind: kind.to_string(), name, line, entries: Vec::new() });
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ParseError::at(line, indent + 1, "expected `key = value`"));
        };
        let key = body[..eq].trim();
        if key.is_empty() {
            return Err(ParseError::at(line, eq + 1, "missing key before `=`"));
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let column = eq + 2 + (after.len() - after.trim_start().len());
        let Some(section) = out.last_mut() else {
            return Err(ParseError::at(line, indent + 1, "entry outside of any section"));
        };
        section.entries.push(Entry { key: key.to_string(), value: value.to_string(), line, column });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDef {
    pub spec: FiniteSpec,
    pub durations: Vec<usize>,
    pub state_budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeDef {
    pub a: String,
    pub b: String,
    /// Routes feeding composite world outputs back into world inputs.
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckKind {
    Compat,
    Inclusion,
    Simulation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RelationDef {
    Identity,
    /// Pairs of state labels.
    Pairs(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckDef {
    pub name: String,
    pub kind: CheckKind,
    pub a: String,
    pub b: String,
    pub relation: RelationDef,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDef {
    pub target: String,
    pub scheduler: Scheduler,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AutomatonDef {
    Car(CarParams),
    Finite(FiniteDef),
    Compose(ComposeDef),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no automaton named `{0}`")]
    Unknown(String),
    #[error("{name}: {message}")]
    Build { name: String, message: String },
}

/// A parsed scenario. Automata are built on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: SpaceGrid,
    pub dt: TimeStep,
    pub horizon_steps: usize,
    /// In file order.
    pub automata: Vec<(String, AutomatonDef)>,
    pub checks: Vec<CheckDef>,
    pub run: Option<RunDef>,
}

const SEPARATORS: [char; 3] = [',', ' ', '\t'];

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ParseError> {
        let sections = parse_sections(text)?;
        let end = text.lines().count() + 1;
        let single = |kind: &str| -> Result<&Section, ParseError> {
            let mut found = sections.iter().filter(|s| s.kind == kind);
            let first = found.next().ok_or_else(|| ParseError::at(end, 1, format!("missing [{kind}] section")))?;
            if let Some(dup) = found.next() {
                return Err(ParseError::at(dup.line, 1, format!("second [{kind}] section")));
            }
            Ok(first)
        };

        let g = single("grid")?;
        g.check_keys(&["width", "height", "cell_size", "origin_x", "origin_y"], &[])?;
        let width: usize = g.require("width")?.parse()?;
        let height: usize = g.require("height")?.parse()?;
        let cell_entry = g.require("cell_size")?;
        let cell: f64 = cell_entry.parse()?;
        let origin = (g.parse_or("origin_x", 0.0)?, g.parse_or("origin_y", 0.0)?);
        let grid = SpaceGrid::with_origin(width, height, cell, origin, crate::world::DEFAULT_CELL_BUDGET)
            .map_err(|e| cell_entry.err(e.to_string()))?;

        let t = single("time")?;
        t.check_keys(&["dt", "horizon"], &[])?;
        let dt_entry = t.require("dt")?;
        let dt = TimeStep::new(dt_entry.parse()?).map_err(|e| dt_entry.err(e.to_string()))?;
        let horizon_entry = t.require("horizon")?;
        let horizon: f64 = horizon_entry.parse()?;
        let horizon_steps = dt.steps(horizon).map_err(|e| horizon_entry.err(e.to_string()))?;

        let mut sc = Scenario { grid, dt, horizon_steps, automata: Vec::new(), checks: Vec::new(), run: None };
        let mut run_section = None;
        for s in &sections {
            let named =
                || s.name.clone().ok_or_else(|| ParseError::at(s.line, 1, format!("[{}] needs a name", s.kind)));
            match s.kind.as_str() {
                "grid" | "time" => {}
                "car" => {
                    let name = named()?;
                    let def = AutomatonDef::Car(car_section(s, &name)?);
                    sc.add(s, name, def)?;
                }
                "finite" => {
                    let name = named()?;
                    let def = AutomatonDef::Finite(finite_section(s, &name, &grid)?);
                    sc.add(s, name, def)?;
                }
                "compose" => {
                    let name = named()?;
                    let def = AutomatonDef::Compose(compose_section(s)?);
                    sc.add(s, name, def)?;
                }
                "check" => {
                    let name = named()?;
                    sc.checks.push(check_section(s, name)?);
                }
                "run" => {
                    if run_section.replace(s).is_some() {
                        return Err(ParseError::at(s.line, 1, "second [run] section"));
                    }
                }
                other => return Err(ParseError::at(s.line, 2, format!("unknown section kind `{other}`"))),
            }
        }
        if let Some(s) = run_section {
            sc.run = Some(run_def(s)?);
        }
        sc.resolve_names(&sections)?;
        Ok(sc)
    }

    fn add(&mut self, s: &Section, name: String, def: AutomatonDef) -> Result<(), ParseError> {
        if name == "null" || self.def(&name).is_some() {
            return Err(ParseError::at(s.line, 1, format!("automaton `{name}` defined twice")));
        }
        self.automata.push((name, def));
        Ok(())
    }

    /// Every referenced name must be defined earlier in the file (or be `null`).
    fn resolve_names(&self, sections: &[Section]) -> Result<(), ParseError> {
        let position = |n: &str| self.automata.iter().position(|(m, _)| m == n);
        for s in sections {
            let keys: &[&str] = match s.kind.as_str() {
                "compose" | "check" => &["a", "b"],
                "run" => &["target"],
                _ => continue,
            };
            let own = s.name.as_deref().and_then(position);
            for k in keys {
                let Some(e) = s.get(k) else { continue };
                if e.value == "null" && s.kind == "compose" {
                    continue;
                }
                match position(&e.value) {
                    Some(p) if own.is_none_or(|o| p < o) => {}
                    Some(_) => return Err(e.err(format!("`{}` must be defined before it is used", e.value))),
                    None => return Err(e.err(format!("no automaton named `{}`", e.value))),
                }
            }
        }
        Ok(())
    }

    pub fn def(&self, name: &str) -> Option<&AutomatonDef> {
        self.automata.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.automata.iter().map(|(n, _)| n.as_str())
    }

    pub fn automaton(&self, name: &str) -> Result<Hioaw, ScenarioError> {
        if name == "null" {
            return Ok(null_automaton());
        }
        let build = |message: String| ScenarioError::Build { name: name.to_string(), message };
        match self.def(name).ok_or_else(|| ScenarioError::Unknown(name.to_string()))? {
            AutomatonDef::Car(p) => {
                let mut car = cars::build_car(p, &self.grid).map_err(|e| build(e.to_string()))?;
                if let Some(w) = p.margin_warning(self.dt.seconds()) {
                    car = car.with_warning(&w);
                }
                Ok(car.renamed(name))
            }
            AutomatonDef::Finite(f) => Ok(f.spec.build().map_err(|e| build(e.to_string()))?.renamed(name)),
            AutomatonDef::Compose(c) => {
                let a = self.automaton(&c.a)?;
                let b = self.automaton(&c.b)?;
                Ok(compose(&a, &b).map_err(|e| build(e.to_string()))?.renamed(name))
            }
        }
    }

    /// The environment a run of `name` sees: the declared routes for
    /// composites, identity inputs otherwise.
    pub fn environment(&self, name: &str, a: &Hioaw) -> Box<dyn Environment> {
        match self.def(name) {
            Some(AutomatonDef::Compose(c)) if !c.routes.is_empty() => Box::new(ClosedWorld::new(a, c.routes.clone())),
            _ => Box::new(IdentityEnv::for_automaton(a)),
        }
    }

    /// The automaton as a finite instance, with its own duration menu and
    /// budget (defaults for cars and composites).
    pub fn instance(&self, name: &str) -> Result<FiniteInstance, ScenarioError> {
        let a = self.automaton(name)?;
        let mut inst = FiniteInstance::new(a, self.dt);
        if let Some(AutomatonDef::Finite(f)) = self.def(name) {
            inst = inst.with_durations(f.durations.clone()).with_state_budget(f.state_budget);
        }
        Ok(inst)
    }

    /// The state valuation of finite automaton `name` at `label`.
    pub fn state_of(&self, name: &str, label: &str) -> Result<Valuation, ScenarioError> {
        match self.def(name) {
            Some(AutomatonDef::Finite(f)) if f.spec.states.iter().any(|s| s == label) => Ok(f.spec.state(label)),
            Some(AutomatonDef::Finite(_)) => {
                Err(ScenarioError::Build { name: name.to_string(), message: format!("no state `{label}`") })
            }
            Some(_) => Err(ScenarioError::Build {
                name: name.to_string(),
                message: "state labels exist only for finite automata".into(),
            }),
            None => Err(ScenarioError::Unknown(name.to_string())),
        }
    }

    pub fn relation(&self, check: &CheckDef, a: &FiniteInstance) -> Result<Relation, ScenarioError> {
        match &check.relation {
            RelationDef::Identity => crate::refinement::identity_relation(a)
                .map_err(|e| ScenarioError::Build { name: check.name.clone(), message: e.to_string() }),
            RelationDef::Pairs(pairs) => {
                pairs.iter().map(|(x, y)| Ok((self.state_of(&check.a, x)?, self.state_of(&check.b, y)?))).collect()
            }
        }
    }
}

fn car_section(s: &Section, name: &str) -> Result<CarParams, ParseError> {
    s.check_keys(&["tag", "mass", "length", "width", "radius", "x", "y", "heading", "speed"], &[])?;
    let d = CarParams::default();
    let p = CarParams {
        tag: s.get("tag").map(|e| e.value.clone()).unwrap_or_else(|| name.to_string()),
        mass: s.parse_or("mass", d.mass)?,
        length: s.parse_or("length", d.length)?,
        width: s.parse_or("width", d.width)?,
        radius: s.parse_or("radius", d.radius)?,
        position: (s.parse_or("x", d.position.0)?, s.parse_or("y", d.position.1)?),
        heading: s.parse_or("heading", d.heading)?,
        speed: s.parse_or("speed", d.speed)?,
    };
    p.validate().map_err(|e| ParseError::at(s.line, 1, e.to_string()))?;
    Ok(p)
}

fn parse_type(e: &Entry, word: &str, grid: &SpaceGrid) -> Result<VarType, ParseError> {
    Ok(match word {
        "real" => VarType::Real,
        "bool" => VarType::Bool,
        "label" => VarType::Label,
        "field" => VarType::Field { kind: crate::world::FieldKind::Real, grid: *grid },
        other => return Err(e.err(format!("unknown type `{other}`"))),
    })
}

fn parse_value(e: &Entry, word: &str, ty: &VarType) -> Result<Value, ParseError> {
    let bad = || e.err(format!("`{word}` is not a {ty}"));
    Ok(match ty {
        VarType::Real | VarType::Field { .. } => Value::Scalar(word.parse().map_err(|_| bad())?),
        VarType::Bool => Value::Boolean(word.parse().map_err(|_| bad())?),
        VarType::Label => Value::Label(word.to_string()),
    })
}

/// `name:type` items.
fn typed_names(e: &Entry, grid: &SpaceGrid) -> Result<Vec<(String, VarType)>, ParseError> {
    e.words()
        .into_iter()
        .map(|w| {
            let (n, t) = w.split_once(':').ok_or_else(|| e.err(format!("expected name:type, got `{w}`")))?;
            Ok((n.to_string(), parse_type(e, t, grid)?))
        })
        .collect()
}

fn finite_section(s: &Section, name: &str, grid: &SpaceGrid) -> Result<FiniteDef, ParseError> {
    s.check_keys(
        &["state_var", "states", "start", "inputs", "outputs", "transition", "durations", "state_budget"],
        &["input_menu.", "actions.", "out."],
    )?;
    let states_entry = s.require("states")?;
    let states: Vec<&str> = states_entry.words();
    if states.is_empty() {
        return Err(states_entry.err("no states listed"));
    }
    let state_var = s.get("state_var").map(|e| e.value.as_str()).unwrap_or("q");
    let mut spec = FiniteSpec::new(name, state_var, &states);
    if let Some(e) = s.get("start") {
        spec = spec.start(&e.words());
    }
    let mut types: BTreeMap<String, VarType> = BTreeMap::new();
    for e in s.all("inputs") {
        for (n, ty) in typed_names(e, grid)? {
            if ty.is_field() {
                return Err(e.err("finite automata take no field inputs"));
            }
            types.insert(n.clone(), ty);
            spec = spec.input(&n, ty);
        }
    }
    for e in s.all("outputs") {
        for (n, ty) in typed_names(e, grid)? {
            types.insert(n.clone(), ty);
            spec = if ty.is_field() { spec.world_output(&n, *grid) } else { spec.output(&n, ty) };
        }
    }
    let lookup = |e: &Entry, n: &str| types.get(n).copied().ok_or_else(|| e.err(format!("undeclared variable `{n}`")));
    for e in &s.entries {
        if let Some(var) = e.key.strip_prefix("input_menu.") {
            let ty = lookup(e, var)?;
            let menu = e.words().into_iter().map(|w| parse_value(e, w, &ty)).collect::<Result<_, _>>()?;
            spec = spec.menu(var, menu);
        } else if let Some(kind) = e.key.strip_prefix("actions.") {
            let kind = match kind {
                "input" => ActionKind::Input,
                "output" => ActionKind::Output,
                "hidden" => ActionKind::Hidden,
                other => return Err(ParseError::at(e.line, 1, format!("unknown action kind `{other}`"))),
            };
            for a in e.words() {
                spec = spec.action(a, kind);
            }
        } else if let Some(state) = e.key.strip_prefix("out.") {
            for item in e.words() {
                let (n, v) = item.split_once('=').ok_or_else(|| e.err(format!("expected var=value, got `{item}`")))?;
                let ty = lookup(e, n)?;
                spec = spec.emit(state, n, parse_value(e, v, &ty)?);
            }
        } else if e.key == "transition" {
            spec.transitions.push(transition(e, &lookup)?);
        }
    }
    let durations = match s.get("durations") {
        Some(e) => {
            let d: Vec<usize> = e
                .words()
                .into_iter()
                .map(|w| w.parse().map_err(|_| e.err(format!("bad duration `{w}`"))))
                .collect::<Result<_, _>>()?;
            if d.contains(&0) {
                return Err(e.err("durations are positive step counts"));
            }
            d
        }
        None => vec![1, 2, 4],
    };
    let state_budget = s.parse_or("state_budget", DEFAULT_STATE_BUDGET)?;
    // surface unknown states and actions at parse time
    spec.build().map_err(|e| ParseError::at(s.line, 1, format!("[finite {name}]: {e}")))?;
    Ok(FiniteDef { spec, durations, state_budget })
}

/// `FROM ACTION TO [when VAR=VALUE ...] [urgent] [priority=N]`
fn transition(
    e: &Entry,
    lookup: &dyn Fn(&Entry, &str) -> Result<VarType, ParseError>,
) -> Result<Transition, ParseError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    let [from, action, to, rest @ ..] = words.as_slice() else {
        return Err(e.err("expected `from action to`"));
    };
    let mut t = Transition {
        from: from.to_string(),
        action: action.to_string(),
        to: to.to_string(),
        when: Vec::new(),
        urgent: false,
        priority: None,
    };
    let mut guards = false;
    for w in rest {
        if *w == "when" {
            guards = true;
        } else if *w == "urgent" {
            t.urgent = true;
        } else if let Some(p) = w.strip_prefix("priority=") {
            t.priority = Some(p.parse().map_err(|_| e.err(format!("bad priority `{p}`")))?);
        } else if let (true, Some((n, v))) = (guards, w.split_once('=')) {
            let ty = lookup(e, n)?;
            t.when.push((n.to_string(), parse_value(e, v, &ty)?));
        } else {
            return Err(e.err(format!("unexpected `{w}` in transition")));
        }
    }
    Ok(t)
}

fn compose_section(s: &Section) -> Result<ComposeDef, ParseError> {
    s.check_keys(&["a", "b", "close_world", "ground_threshold", "route"], &[])?;
    let mut routes = Vec::new();
    let close: bool = s.parse_or("close_world", false)?;
    if close {
        routes = cars::world_routes(s.parse_or("ground_threshold", 0.0)?);
    } else if let Some(e) = s.get("ground_threshold") {
        return Err(e.err("ground_threshold needs close_world = true"));
    }
    for e in s.all("route") {
        // IN <- OUT [latch THRESHOLD]
        let words: Vec<&str> = e.value.split_whitespace().collect();
        routes.push(match words.as_slice() {
            [input, "<-", output] => Route::copy(input, output),
            [input, "<-", output, "latch", th] => {
                Route::latch(input, output, th.parse().map_err(|_| e.err(format!("bad threshold `{th}`")))?)
            }
            _ => return Err(e.err("expected `input <- output [latch threshold]`")),
        });
    }
    Ok(ComposeDef { a: s.require("a")?.value.clone(), b: s.require("b")?.value.clone(), routes })
}

fn check_section(s: &Section, name: String) -> Result<CheckDef, ParseError> {
    s.check_keys(&["kind", "a", "b", "relation", "depth"], &[])?;
    let kind_entry = s.require("kind")?;
    let kind = match kind_entry.value.as_str() {
        "compat" => CheckKind::Compat,
        "inclusion" | "trace-inclusion" => CheckKind::Inclusion,
        "simulation" => CheckKind::Simulation,
        other => return Err(kind_entry.err(format!("unknown check kind `{other}`"))),
    };
    let relation = match s.get("relation") {
        None => RelationDef::Identity,
        Some(e) if e.value == "identity" => RelationDef::Identity,
        Some(e) => RelationDef::Pairs(
            e.value
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.split_once(':')
                        .map(|(x, y)| (x.trim().to_string(), y.trim().to_string()))
                        .ok_or_else(|| e.err(format!("expected a:b pair, got `{p}`")))
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    if kind != CheckKind::Simulation && s.get("relation").is_some() {
        return Err(ParseError::at(
            s.get("relation").expect("present").line,
            1,
            "relation applies to simulation checks",
        ));
    }
    Ok(CheckDef {
        name,
        kind,
        a: s.require("a")?.value.clone(),
        b: s.require("b")?.value.clone(),
        relation,
        depth: s.parse_or("depth", DEFAULT_DEPTH)?,
    })
}

fn run_def(s: &Section) -> Result<RunDef, ParseError> {
    s.check_keys(&["target", "scheduler", "seed", "fire_probability", "snapshot_times"], &[])?;
    let target = s.require("target")?.value.clone();
    let scheduler = match s.get("scheduler").map(|e| (e, e.value.as_str())) {
        None | Some((_, "urgent")) => Scheduler::Urgent,
        Some((_, "random")) => {
            Scheduler::Random { seed: s.parse_or("seed", 0)?, fire_probability: s.parse_or("fire_probability", 0.5)? }
        }
        Some((e, other)) => return Err(e.err(format!("unknown scheduler `{other}`"))),
    };
    let snapshot_times = match s.get("snapshot_times") {
        Some(e) => parse_times(&e.value).map_err(|m| e.err(m))?,
        None => Vec::new(),
    };
    Ok(RunDef { target, scheduler, snapshot_times })
}

/// Comma- or space-separated times.
pub fn parse_times(text: &str) -> Result<Vec<f64>, String> {
    text.split(SEPARATORS)
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<f64>().map_err(|_| format!("bad time `{w}`")))
        .collect()
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::Compat => "compat",
            CheckKind::Inclusion => "inclusion",
            CheckKind::Simulation => "simulation",
        })
    }
}
