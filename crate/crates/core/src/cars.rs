//! Cars on sandy ground. Each car presses on the ground and paints its
//! footprint; it stops when another body shows up around it and slows down
//! where the ground is already deformed.

use std::sync::Arc;

use thiserror::Error;

use crate::automaton::{ActionKind, Dynamics, Hioaw, Role, Route, Rule, Signature};
use crate::composition::{compose, ComposeError};
use crate::value::{Valuation, Value, VarType};
use crate::world::{
    footprint_cells, neighborhood, occupancy_field, pressure_field, FieldKind, FieldSlice, Point, Region, SpaceGrid,
};

/// World variable names.
pub const GROUND: &str = "g";
pub const COLOR: &str = "c";
pub const PRESSURE: &str = "k";
pub const PAINT: &str = "xi";

#[derive(Debug, Clone, PartialEq)]
pub struct CarParams {
    /// Suffix for the car's private names.
    pub tag: String,
    pub mass: f64,
    pub length: f64,
    pub width: f64,
    pub radius: f64,
    pub position: Point,
    pub heading: f64,
    /// Cruise speed; half of it on deformed ground, zero once stopped.
    pub speed: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        CarParams {
            tag: "1".into(),
            mass: 1000.0,
            length: 2.0,
            width: 1.0,
            radius: 2.0,
            position: (0.0, 0.0),
            heading: 0.0,
            speed: 1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarError {
    #[error("invalid car parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

impl CarParams {
    pub fn semi_diagonal(&self) -> f64 {
        (self.length.powi(2) + self.width.powi(2)).sqrt() / 2.0
    }

    pub fn validate(&self) -> Result<(), CarError> {
        let bad = |m: &str| Err(CarError::InvalidParams(m.to_string()));
        if self.tag.is_empty() {
            return bad("empty tag");
        }
        if !(self.length > 0.0 && self.width > 0.0) {
            return bad("length and width must be positive");
        }
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return bad("mass must be non-negative");
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return bad("speed must be non-negative");
        }
        if self.radius.is_nan() || self.radius <= self.semi_diagonal() {
            return bad("radius must exceed the semi-diagonal");
        }
        if !(self.position.0.is_finite() && self.position.1.is_finite() && self.heading.is_finite()) {
            return bad("position and heading must be finite");
        }
        Ok(())
    }

    /// Warning when the sensing ring is too thin to see one step ahead.
    pub fn margin_warning(&self, dt: f64) -> Option<String> {
        let need = self.semi_diagonal() + self.speed * dt;
        (self.radius <= need).then(|| {
            format!("car {}: radius {} does not exceed semi-diagonal plus one step ({need})", self.tag, self.radius)
        })
    }

    pub fn name(&self, base: &str) -> String {
        format!("{base}_{}", self.tag)
    }

    /// Velocity under the stop/slow flags.
    pub fn velocity(&self, stop: bool, slow: bool) -> f64 {
        if stop {
            0.0
        } else if slow {
            0.5 * self.speed
        } else {
            self.speed
        }
    }
}

/// Where a car is and how big it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarPose {
    pub center: Point,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
    pub radius: f64,
}

impl CarPose {
    pub fn footprint(&self, grid: &SpaceGrid) -> Region {
        footprint_cells(grid, self.heading, self.center, self.length, self.width)
    }

    /// The ring the car watches: its disc minus its own footprint.
    pub fn ring(&self, grid: &SpaceGrid) -> Region {
        neighborhood(grid, self.center, self.radius, &self.footprint(grid))
    }
}

#[derive(Clone)]
struct Names {
    phi: String,
    px: String,
    py: String,
    m: String,
    vel: String,
    r: String,
    stop: String,
    slow: String,
}

impl Names {
    fn new(p: &CarParams) -> Self {
        Names {
            phi: p.name("phi"),
            px: p.name("px"),
            py: p.name("py"),
            m: p.name("m"),
            vel: p.name("vel"),
            r: p.name("r"),
            stop: p.name("stop"),
            slow: p.name("slow"),
        }
    }
}

#[derive(Clone)]
struct Car {
    p: CarParams,
    n: Names,
    grid: SpaceGrid,
}

impl Car {
    fn pose(&self, x: &Valuation) -> CarPose {
        CarPose {
            center: (x.f64(&self.n.px).unwrap_or(f64::NAN), x.f64(&self.n.py).unwrap_or(f64::NAN)),
            heading: x.f64(&self.n.phi).unwrap_or(0.0),
            length: self.p.length,
            width: self.p.width,
            radius: x.f64(&self.n.r).unwrap_or(self.p.radius),
        }
    }

    fn flag(&self, x: &Valuation, name: &str) -> bool {
        x.bool(name).unwrap_or(false)
    }

    fn sees(&self, s: &Valuation, input: &str) -> bool {
        let Some(field) = s.field(input) else { return false };
        let ring = self.pose(s).ring(&self.grid);
        field.any_in(&ring, |v| v.is_black())
    }
}

impl Dynamics for Car {
    fn outputs(&self, x: &Valuation) -> Valuation {
        let fp = self.pose(x).footprint(&self.grid);
        let mass = x.f64(&self.n.m).unwrap_or(0.0);
        let k = pressure_field(mass, &fp, &self.grid).unwrap_or_else(|_| FieldSlice::zeros(self.grid, FieldKind::Real));
        Valuation::from_pairs([(PRESSURE, Value::Field(k)), (PAINT, Value::Field(occupancy_field(&fp, &self.grid)))])
    }

    fn advance(&self, s: &Valuation, dt: f64) -> Valuation {
        let mut x = s.project(&self.state_vars());
        let vel = s.f64(&self.n.vel).unwrap_or(0.0);
        let phi = s.f64(&self.n.phi).unwrap_or(0.0);
        let (sn, cs) = phi.sin_cos();
        x.insert(self.n.px.as_str(), Value::Scalar(s.f64(&self.n.px).unwrap_or(0.0) + vel * cs * dt));
        x.insert(self.n.py.as_str(), Value::Scalar(s.f64(&self.n.py).unwrap_or(0.0) + vel * sn * dt));
        x
    }
}

impl Car {
    fn state_vars(&self) -> crate::value::VarSet {
        let n = &self.n;
        crate::value::vars([
            n.phi.as_str(),
            n.px.as_str(),
            n.py.as_str(),
            n.m.as_str(),
            n.vel.as_str(),
            n.r.as_str(),
            n.stop.as_str(),
            n.slow.as_str(),
        ])
    }
}

/// The car automaton. Private names carry the `_tag` suffix; the world
/// variables `g`, `c`, `k`, `xi` are shared by every car.
pub fn build_car(p: &CarParams, grid: &SpaceGrid) -> Result<Hioaw, CarError> {
    p.validate()?;
    let car = Car { p: p.clone(), n: Names::new(p), grid: *grid };
    let n = car.n.clone();
    let field = |kind| VarType::Field { kind, grid: *grid };
    let mut sig = Signature::new()
        .var(GROUND, Role::WorldIn, field(FieldKind::Bool))
        .var(COLOR, Role::WorldIn, field(FieldKind::Count))
        .var(PRESSURE, Role::WorldOut, field(FieldKind::Real))
        .var(PAINT, Role::WorldOut, field(FieldKind::Count));
    for v in [&n.phi, &n.px, &n.py, &n.m, &n.vel, &n.r] {
        sig.declare(v, Role::AutoInternal, VarType::Real);
    }
    for v in [&n.stop, &n.slow] {
        sig.declare(v, Role::AutoInternal, VarType::Bool);
    }
    let collision = p.name("collision");
    let level = p.name("level");
    sig.declare_action(&collision, ActionKind::Hidden);
    sig.declare_action(&level, ActionKind::Hidden);

    let start = Valuation::from_pairs([
        (n.phi.as_str(), Value::Scalar(p.heading)),
        (n.px.as_str(), Value::Scalar(p.position.0)),
        (n.py.as_str(), Value::Scalar(p.position.1)),
        (n.m.as_str(), Value::Scalar(p.mass)),
        (n.vel.as_str(), Value::Scalar(p.velocity(false, false))),
        (n.r.as_str(), Value::Scalar(p.radius)),
        (n.stop.as_str(), Value::Boolean(false)),
        (n.slow.as_str(), Value::Boolean(false)),
    ]);

    let q = {
        let car = car.clone();
        move |x: &Valuation| {
            let (stop, slow) = (car.flag(x, &car.n.stop), car.flag(x, &car.n.slow));
            x.f64(&car.n.vel) == Some(car.p.velocity(stop, slow))
        }
    };
    let collide = {
        let (g, e) = (car.clone(), car.clone());
        Rule::new(
            &collision,
            move |s| !g.flag(s, &g.n.stop) && g.sees(s, COLOR),
            move |_| {
                Valuation::from_pairs([
                    (e.n.stop.as_str(), Value::Boolean(true)),
                    (e.n.vel.as_str(), Value::Scalar(0.0)),
                ])
            },
        )
        .urgent()
    };
    let slow_down = {
        let (g, e) = (car.clone(), car.clone());
        Rule::new(
            &level,
            move |s| !g.flag(s, &g.n.slow) && g.sees(s, GROUND),
            move |s| {
                let stop = e.flag(s, &e.n.stop);
                Valuation::from_pairs([
                    (e.n.slow.as_str(), Value::Boolean(true)),
                    (e.n.vel.as_str(), Value::Scalar(e.p.velocity(stop, true))),
                ])
            },
        )
        .urgent()
    };
    Ok(Hioaw::new(&format!("car_{}", p.tag), sig, Arc::new(car))
        .with_states(q)
        .with_start(vec![start])
        .with_rule(collide)
        .with_rule(slow_down))
}

/// Routes that close a car world: the color map is the composite paint,
/// the ground latches wherever pressure exceeds `threshold`.
pub fn world_routes(threshold: f64) -> Vec<Route> {
    vec![Route::copy(COLOR, PAINT), Route::latch(GROUND, PRESSURE, threshold)]
}

/// Two cars composed; pair it with [`world_routes`] to close the world.
pub fn build_two_car_world(p1: &CarParams, p2: &CarParams, grid: &SpaceGrid) -> Result<Hioaw, CarError> {
    if p1.tag == p2.tag {
        return Err(CarError::InvalidParams(format!("both cars are tagged {}", p1.tag)));
    }
    let b1 = build_car(p1, grid)?;
    let b2 = build_car(p2, grid)?;
    Ok(compose(&b1, &b2)?)
}

/// The pose of the car tagged as in `p`, read from a sample or state.
pub fn pose_of(p: &CarParams, x: &Valuation) -> CarPose {
    let n = Names::new(p);
    CarPose {
        center: (x.f64(&n.px).unwrap_or(f64::NAN), x.f64(&n.py).unwrap_or(f64::NAN)),
        heading: x.f64(&n.phi).unwrap_or(0.0),
        length: p.length,
        width: p.width,
        radius: x.f64(&n.r).unwrap_or(p.radius),
    }
}

/// Ground truth from explicit positions: car `i` is at risk iff some other
/// car's footprint meets its ring.
pub fn supervisor_oracle(grid: &SpaceGrid, cars: &[CarPose]) -> Vec<bool> {
    let prints: Vec<Region> = cars.iter().map(|c| c.footprint(grid)).collect();
    cars.iter()
        .enumerate()
        .map(|(i, c)| {
            let ring = c.ring(grid);
            prints.iter().enumerate().any(|(j, fp)| j != i && fp.intersects(&ring))
        })
        .collect()
}
