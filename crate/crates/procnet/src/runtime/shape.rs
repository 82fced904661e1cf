//! Carrier shapes: how a structured value is laid out across channels.
//!
//! An `Item` occupies one channel and carries one value per production. A
//! `Vector` communicates its elements independently in parallel, one
//! sub-carrier each. A `Group` is the heterogeneous analogue of a vector
//! (used for the [kL pair, kO triple, kI triple] subkey grouping). A `Stream`
//! is a single channel of tagged `Data`/`Eot` messages communicating a
//! collection sequentially.

use std::fmt;

use super::value::{Kind, Value};
use super::BuildError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Item(Kind),
    Stream(Kind),
    Vector(usize, Box<Shape>),
    Group(Vec<Shape>),
}

/// Description of one leaf channel of a carrier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub kind: Kind,
    pub stream: bool,
    /// Index path suffix for channel naming, e.g. `[2][0]`.
    pub label: String,
}

impl Shape {
    pub fn item16() -> Shape {
        Shape::Item(Kind::W16)
    }

    pub fn vector(n: usize, inner: Shape) -> Shape {
        Shape::Vector(n, Box::new(inner))
    }

    /// Vector of `n` 16-bit items.
    pub fn vec16(n: usize) -> Shape {
        Shape::vector(n, Shape::item16())
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Item(_) | Shape::Stream(_) => 1,
            Shape::Vector(n, s) => n * s.leaf_count(),
            Shape::Group(ss) => ss.iter().map(Shape::leaf_count).sum(),
        }
    }

    pub fn contains_stream(&self) -> bool {
        match self {
            Shape::Item(_) => false,
            Shape::Stream(_) => true,
            Shape::Vector(_, s) => s.contains_stream(),
            Shape::Group(ss) => ss.iter().any(Shape::contains_stream),
        }
    }

    /// Streams may only appear as a whole carrier, never nested inside a
    /// vector or group (each stream needs its own EOT discipline).
    pub fn check_wellformed(&self) -> Result<(), BuildError> {
        let nested_ok = |s: &Shape| !s.contains_stream();
        let ok = match self {
            Shape::Item(_) | Shape::Stream(_) => true,
            Shape::Vector(_, s) => nested_ok(s),
            Shape::Group(ss) => ss.iter().all(nested_ok),
        };
        if ok {
            Ok(())
        } else {
            Err(BuildError::UnsupportedCarrier(self.to_string()))
        }
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(String::new(), &mut out);
        out
    }

    fn collect_leaves(&self, label: String, out: &mut Vec<Leaf>) {
        match self {
            Shape::Item(k) => out.push(Leaf {
                kind: k.clone(),
                stream: false,
                label,
            }),
            Shape::Stream(k) => out.push(Leaf {
                kind: k.clone(),
                stream: true,
                label,
            }),
            Shape::Vector(n, s) => {
                for i in 0..*n {
                    s.collect_leaves(format!("{label}[{i}]"), out);
                }
            }
            Shape::Group(ss) => {
                for (i, s) in ss.iter().enumerate() {
                    s.collect_leaves(format!("{label}[{i}]"), out);
                }
            }
        }
    }

    /// The sub-shape at an index path (indices step into vectors/groups).
    pub fn sub_shape(&self, path: &[usize]) -> Result<&Shape, BuildError> {
        let Some((&i, rest)) = path.split_first() else {
            return Ok(self);
        };
        match self {
            Shape::Vector(n, s) if i < *n => s.sub_shape(rest),
            Shape::Group(ss) if i < ss.len() => ss[i].sub_shape(rest),
            _ => Err(BuildError::BadPath {
                shape: self.to_string(),
                path: path.to_vec(),
            }),
        }
    }

    /// Leaf range `(offset, len)` covered by the sub-shape at `path`.
    pub fn leaf_range(&self, path: &[usize]) -> Result<(usize, usize), BuildError> {
        let Some((&i, rest)) = path.split_first() else {
            return Ok((0, self.leaf_count()));
        };
        match self {
            Shape::Vector(n, s) if i < *n => {
                let (off, len) = s.leaf_range(rest)?;
                Ok((i * s.leaf_count() + off, len))
            }
            Shape::Group(ss) if i < ss.len() => {
                let before: usize = ss[..i].iter().map(Shape::leaf_count).sum();
                let (off, len) = ss[i].leaf_range(rest)?;
                Ok((before + off, len))
            }
            _ => Err(BuildError::BadPath {
                shape: self.to_string(),
                path: path.to_vec(),
            }),
        }
    }

    /// The kind of this structure when sent as a single message payload
    /// (used to frame vector-shaped data onto a stream channel).
    pub fn payload_kind(&self) -> Result<Kind, BuildError> {
        match self {
            Shape::Item(k) => Ok(k.clone()),
            Shape::Vector(n, s) => {
                let k = s.payload_kind()?;
                Ok(Kind::List(vec![k; *n]))
            }
            Shape::Group(ss) => Ok(Kind::List(
                ss.iter().map(Shape::payload_kind).collect::<Result<_, _>>()?,
            )),
            Shape::Stream(_) => Err(BuildError::UnsupportedCarrier(self.to_string())),
        }
    }

    /// Decompose a structured value into leaf values in carrier order.
    /// Not defined for stream shapes (stream transfers are sequential).
    pub fn flatten(&self, v: &Value) -> Result<Vec<Value>, BuildError> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.flatten_into(v, &mut out)?;
        Ok(out)
    }

    fn flatten_into(&self, v: &Value, out: &mut Vec<Value>) -> Result<(), BuildError> {
        let mismatch = || BuildError::ValueShapeMismatch {
            shape: self.to_string(),
            value: format!("{v:?}"),
        };
        match self {
            Shape::Item(k) => {
                if !k.admits(v) {
                    return Err(mismatch());
                }
                out.push(v.clone());
                Ok(())
            }
            Shape::Vector(n, s) => match v {
                Value::List(xs) if xs.len() == *n => {
                    for x in xs {
                        s.flatten_into(x, out)?;
                    }
                    Ok(())
                }
                _ => Err(mismatch()),
            },
            Shape::Group(ss) => match v {
                Value::List(xs) if xs.len() == ss.len() => {
                    for (s, x) in ss.iter().zip(xs) {
                        s.flatten_into(x, out)?;
                    }
                    Ok(())
                }
                _ => Err(mismatch()),
            },
            Shape::Stream(_) => Err(mismatch()),
        }
    }

    /// Rebuild a structured value from leaf values in carrier order.
    pub fn unflatten(&self, leaves: &[Value]) -> Result<Value, BuildError> {
        let mut iter = leaves.iter();
        let v = self.unflatten_from(&mut iter)?;
        if iter.next().is_some() {
            return Err(BuildError::ValueShapeMismatch {
                shape: self.to_string(),
                value: format!("{} leaves", leaves.len()),
            });
        }
        Ok(v)
    }

    fn unflatten_from<'a>(
        &self,
        leaves: &mut impl Iterator<Item = &'a Value>,
    ) -> Result<Value, BuildError> {
        match self {
            Shape::Item(k) => {
                let v = leaves.next().ok_or_else(|| BuildError::ValueShapeMismatch {
                    shape: self.to_string(),
                    value: "too few leaves".into(),
                })?;
                if !k.admits(v) {
                    return Err(BuildError::ValueShapeMismatch {
                        shape: self.to_string(),
                        value: format!("{v:?}"),
                    });
                }
                Ok(v.clone())
            }
            Shape::Vector(n, s) => Ok(Value::List(
                (0..*n)
                    .map(|_| s.unflatten_from(leaves))
                    .collect::<Result<_, _>>()?,
            )),
            Shape::Group(ss) => Ok(Value::List(
                ss.iter()
                    .map(|s| s.unflatten_from(leaves))
                    .collect::<Result<_, _>>()?,
            )),
            Shape::Stream(_) => Err(BuildError::UnsupportedCarrier(self.to_string())),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Item(k) => write!(f, "Item({k})"),
            Shape::Stream(k) => write!(f, "Stream({k})"),
            Shape::Vector(n, s) => write!(f, "Vector({n}, {s})"),
            Shape::Group(ss) => {
                write!(f, "Group[")?;
                for (i, s) in ss.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "]")
            }
        }
    }
}
