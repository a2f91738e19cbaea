//! Variable and action names, typed values and valuations.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::btree_map::{self, BTreeMap};
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::fmt::g9;
use crate::world::{FieldKind, FieldSlice, SpaceGrid};

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Self {
                $name(name.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

name_type!(
    /// Identifier of a variable; unique within an automaton.
    VarName
);
name_type!(
    /// Identifier of a discrete action.
    ActionName
);

pub type VarSet = BTreeSet<VarName>;
pub type ActionSet = BTreeSet<ActionName>;

/// Builds a variable set from string names.
pub fn vars<'a>(names: impl IntoIterator<Item = &'a str>) -> VarSet {
    names.into_iter().map(VarName::from).collect()
}

/// Builds an action set from string names.
pub fn actions<'a>(names: impl IntoIterator<Item = &'a str>) -> ActionSet {
    names.into_iter().map(ActionName::from).collect()
}

/// Static type of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarType {
    Real,
    Bool,
    Label,
    Field { kind: FieldKind, grid: SpaceGrid },
}

impl VarType {
    pub fn is_field(&self) -> bool {
        matches!(self, VarType::Field { .. })
    }

    /// The neutral value of the type: 0, false, the empty label, or the
    /// all-identity field.
    pub fn identity(&self) -> Value {
        match *self {
            VarType::Real => Value::Scalar(0.0),
            VarType::Bool => Value::Boolean(false),
            VarType::Label => Value::Label(String::new()),
            VarType::Field { kind, grid } => Value::Field(FieldSlice::zeros(grid, kind)),
        }
    }
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarType::Real => f.write_str("real"),
            VarType::Bool => f.write_str("bool"),
            VarType::Label => f.write_str("label"),
            VarType::Field { kind, grid } => {
                write!(f, "field<{kind:?}; {}x{} @ {}>", grid.width(), grid.height(), g9(grid.cell_size()))
            }
        }
    }
}

/// A value of a variable at one instant.
///
/// Equality, ordering and hashing are exact: reals compare by bit pattern.
#[derive(Debug, Clone)]
pub enum Value {
    Scalar(f64),
    Boolean(bool),
    Label(String),
    Field(FieldSlice),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("values of this type have no sum: {0} + {1}")]
pub struct NotSummable(pub String, pub String);

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Boolean(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_field(&self) -> Option<&FieldSlice> {
        match self {
            Value::Field(f) => Some(f),
            _ => None,
        }
    }

    pub fn has_type(&self, ty: &VarType) -> bool {
        match (self, ty) {
            (Value::Scalar(_), VarType::Real) => true,
            (Value::Boolean(_), VarType::Bool) => true,
            (Value::Label(_), VarType::Label) => true,
            (Value::Field(f), VarType::Field { kind, grid }) => f.kind() == *kind && f.grid() == grid,
            _ => false,
        }
    }

    /// Group sum of two values: reals add, fields add cell-wise.
    pub fn try_add(&self, other: &Value) -> Result<Value, NotSummable> {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => Ok(Value::Scalar(a + b)),
            (Value::Field(a), Value::Field(b)) => {
                a.try_add(b).map(Value::Field).map_err(|_| NotSummable(self.to_string(), other.to_string()))
            }
            _ => Err(NotSummable(self.to_string(), other.to_string())),
        }
    }

    /// Exact equality except real field cells, which may differ by `tol`.
    pub fn approx_eq(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Field(a), Value::Field(b)) => a.approx_eq(b, tol),
            _ => self == other,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Scalar(_) => 0,
            Value::Boolean(_) => 1,
            Value::Label(_) => 2,
            Value::Field(_) => 3,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Scalar(v) => f.write_str(&g9(*v)),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Label(s) => f.write_str(s),
            Value::Field(s) => write!(f, "<{:?} field {}x{}>", s.kind(), s.grid().width(), s.grid().height()),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => a.to_bits().cmp(&b.to_bits()),
            (Value::Boolean(a), Value::Boolean(b)) => a.cmp(b),
            (Value::Label(a), Value::Label(b)) => a.cmp(b),
            (Value::Field(a), Value::Field(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Scalar(v) => v.to_bits().hash(state),
            Value::Boolean(b) => b.hash(state),
            Value::Label(s) => s.hash(state),
            Value::Field(f) => f.hash(state),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Scalar(v)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Boolean(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_string())
    }
}

impl From<FieldSlice> for Value {
    fn from(f: FieldSlice) -> Self {
        Value::Field(f)
    }
}

/// Assignment of a value to each variable of a set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(BTreeMap<VarName, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Value)>) -> Self {
        Valuation(pairs.into_iter().map(|(k, v)| (VarName::from(k), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<VarName>, value: Value) -> Option<Value> {
        self.0.insert(name.into(), value)
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.0.remove(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, VarName, Value> {
        self.0.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &VarName> {
        self.0.keys()
    }

    pub fn var_set(&self) -> VarSet {
        self.0.keys().cloned().collect()
    }

    pub fn has_vars(&self, vars: &VarSet) -> bool {
        self.0.len() == vars.len() && self.0.keys().zip(vars).all(|(a, b)| a == b)
    }

    /// Pointwise restriction to `vars`.
    pub fn project(&self, vars: &VarSet) -> Valuation {
        Valuation(self.0.iter().filter(|(k, _)| vars.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// Union of two valuations; entries of `other` win on shared names.
    pub fn merged(&self, other: &Valuation) -> Valuation {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn extend_from(&mut self, other: &Valuation) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn f64(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(Value::as_f64)
    }

    pub fn bool(&self, name: &str) -> Option<bool> {
        self.get(name).and_then(Value::as_bool)
    }

    pub fn label(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(Value::as_label)
    }

    pub fn field(&self, name: &str) -> Option<&FieldSlice> {
        self.get(name).and_then(Value::as_field)
    }

    pub fn approx_eq(&self, other: &Valuation, tol: f64) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|((ka, va), (kb, vb))| ka == kb && va.approx_eq(vb, tol))
    }
}

impl FromIterator<(VarName, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (VarName, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Valuation {
    type Item = (&'a VarName, &'a Value);
    type IntoIter = btree_map::Iter<'a, VarName, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}
