//! Messages carried on channels: fixed-width words plus nested lists for
//! composite payloads (e.g. a whole subkey pack sent as one stream element).

use std::fmt;

/// A value communicable over a channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    W16(u16),
    W32(u32),
    W64(u64),
    W128(u128),
    List(Vec<Value>),
}

/// The type of a channel's payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    W16,
    W32,
    W64,
    W128,
    List(Vec<Kind>),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::W16(_) => Kind::W16,
            Value::W32(_) => Kind::W32,
            Value::W64(_) => Kind::W64,
            Value::W128(_) => Kind::W128,
            Value::List(xs) => Kind::List(xs.iter().map(Value::kind).collect()),
        }
    }

    pub fn as_w16(&self) -> u16 {
        match self {
            Value::W16(x) => *x,
            other => panic!("expected W16, got {other:?}"),
        }
    }

    pub fn as_w32(&self) -> u32 {
        match self {
            Value::W32(x) => *x,
            other => panic!("expected W32, got {other:?}"),
        }
    }

    pub fn as_w64(&self) -> u64 {
        match self {
            Value::W64(x) => *x,
            other => panic!("expected W64, got {other:?}"),
        }
    }

    pub fn as_w128(&self) -> u128 {
        match self {
            Value::W128(x) => *x,
            other => panic!("expected W128, got {other:?}"),
        }
    }

    pub fn as_list(&self) -> &[Value] {
        match self {
            Value::List(xs) => xs,
            other => panic!("expected List, got {other:?}"),
        }
    }

    pub fn into_list(self) -> Vec<Value> {
        match self {
            Value::List(xs) => xs,
            other => panic!("expected List, got {other:?}"),
        }
    }

    /// List of 16-bit words.
    pub fn from_w16s(xs: impl IntoIterator<Item = u16>) -> Value {
        Value::List(xs.into_iter().map(Value::W16).collect())
    }

    /// List of 64-bit words.
    pub fn from_w64s(xs: impl IntoIterator<Item = u64>) -> Value {
        Value::List(xs.into_iter().map(Value::W64).collect())
    }
}

impl Kind {
    /// True when `v` structurally matches this kind.
    pub fn admits(&self, v: &Value) -> bool {
        match (self, v) {
            (Kind::W16, Value::W16(_))
            | (Kind::W32, Value::W32(_))
            | (Kind::W64, Value::W64(_))
            | (Kind::W128, Value::W128(_)) => true,
            (Kind::List(ks), Value::List(vs)) => {
                ks.len() == vs.len() && ks.iter().zip(vs).all(|(k, v)| k.admits(v))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::W16 => write!(f, "W16"),
            Kind::W32 => write!(f, "W32"),
            Kind::W64 => write!(f, "W64"),
            Kind::W128 => write!(f, "W128"),
            Kind::List(ks) => {
                write!(f, "[")?;
                for (i, k) in ks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// One message on a stream channel: a data element or the end-of-transmission
/// marker. A well-formed stream is zero or more `Data` messages followed by
/// exactly one `Eot`.
///
/// Encoding note: the hardware-style description uses a data channel plus a
/// separate boolean EOT channel per stream. Here both are carried on a single
/// channel as a tagged message, which serialises the choice between them while
/// preserving the observable stream semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamMsg {
    Data(Value),
    Eot,
}
