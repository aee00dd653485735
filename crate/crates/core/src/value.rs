//! Primitive values, identity tuples and their text encodings.

use std::cmp::Ordering;
use std::fmt;

use chrono::NaiveDate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveType {
    String,
    Integer,
    Decimal,
    Date,
}

impl PrimitiveType {
    pub fn is_numeric(self) -> bool {
        matches!(self, PrimitiveType::Integer | PrimitiveType::Decimal)
    }

    /// Parses a non-empty cell of this type.
    pub fn parse(self, text: &str) -> Result<Value, String> {
        match self {
            PrimitiveType::String => Ok(Value::Str(text.to_string())),
            PrimitiveType::Integer => text
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| format!("`{text}` is not an integer")),
            PrimitiveType::Decimal => Decimal::parse(text.trim())
                .map(Value::Dec)
                .ok_or_else(|| format!("`{text}` is not a decimal")),
            PrimitiveType::Date => parse_date(text.trim()).map(Value::Date),
        }
    }

    /// Converts a value into this type where the conversion is lossless.
    pub fn coerce(self, value: Value) -> Result<Value, String> {
        match (self, value) {
            (PrimitiveType::String, v @ Value::Str(_))
            | (PrimitiveType::Integer, v @ Value::Int(_))
            | (PrimitiveType::Decimal, v @ Value::Dec(_))
            | (PrimitiveType::Date, v @ Value::Date(_)) => Ok(v),
            (PrimitiveType::Decimal, Value::Int(i)) => Ok(Value::Dec(Decimal::from(i))),
            (PrimitiveType::Date, Value::Str(s)) => parse_date(&s).map(Value::Date),
            (ty, v) => Err(format!("expected {ty}, found {} `{v}`", v.type_name())),
        }
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrimitiveType::String => "string",
            PrimitiveType::Integer => "integer",
            PrimitiveType::Decimal => "decimal",
            PrimitiveType::Date => "date",
        })
    }
}

fn parse_date(text: &str) -> Result<String, String> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map(|d| d.format("%Y-%m-%d").to_string())
        .map_err(|_| format!("`{text}` is not a YYYY-MM-DD date"))
}

/// An exact decimal kept in normalized text form: no leading `+`, no
/// redundant leading or trailing zeros, and no negative zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decimal(String);

impl Decimal {
    pub fn parse(text: &str) -> Option<Decimal> {
        let (negative, body) = match text.as_bytes().first()? {
            b'-' => (true, &text[1..]),
            b'+' => (false, &text[1..]),
            _ => (false, text),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let int = int.trim_start_matches('0');
        let frac = frac.trim_end_matches('0');
        let int = if int.is_empty() { "0" } else { int };
        let zero = int == "0" && frac.is_empty();
        let mut out = String::with_capacity(text.len());
        if negative && !zero {
            out.push('-');
        }
        out.push_str(int);
        if !frac.is_empty() {
            out.push('.');
            out.push_str(frac);
        }
        Some(Decimal(out))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.parse().unwrap_or(f64::NAN)
    }

    /// Exact addition; `None` on overflow of 38 significant digits.
    pub fn checked_add(&self, other: &Decimal) -> Option<Decimal> {
        let scale = self.parts().2.len().max(other.parts().2.len());
        let sum = self.scaled(scale)?.checked_add(other.scaled(scale)?)?;
        let digits = sum.unsigned_abs().to_string();
        let digits = format!("{digits:0>width$}", width = scale + 1);
        let (int, frac) = digits.split_at(digits.len() - scale);
        let sign = if sum < 0 { "-" } else { "" };
        Decimal::parse(&format!("{sign}{int}.{frac}"))
    }

    fn scaled(&self, scale: usize) -> Option<i128> {
        let (negative, int, frac) = self.parts();
        let mut digits = String::with_capacity(int.len() + scale);
        digits.push_str(int);
        digits.push_str(frac);
        digits.extend(std::iter::repeat_n('0', scale - frac.len()));
        let n: i128 = digits.parse().ok()?;
        Some(if negative { -n } else { n })
    }

    fn parts(&self) -> (bool, &str, &str) {
        let (negative, body) = match self.0.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, self.0.as_str()),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        (negative, int, frac)
    }
}

impl From<i64> for Decimal {
    fn from(value: i64) -> Self {
        Decimal(value.to_string())
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (an, ai, af) = self.parts();
        let (bn, bi, bf) = other.parts();
        let magnitude = ai
            .len()
            .cmp(&bi.len())
            .then_with(|| ai.cmp(bi))
            .then_with(|| af.cmp(bf));
        match (an, bn) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => magnitude,
            (true, true) => magnitude.reverse(),
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A non-NULL primitive value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Str(String),
    Int(i64),
    Dec(Decimal),
    /// ISO `YYYY-MM-DD`.
    Date(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Dec(_) => "decimal",
            Value::Date(_) => "date",
        }
    }

    pub fn primitive_type(&self) -> PrimitiveType {
        match self {
            Value::Str(_) => PrimitiveType::String,
            Value::Int(_) => PrimitiveType::Integer,
            Value::Dec(_) => PrimitiveType::Decimal,
            Value::Date(_) => PrimitiveType::Date,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Dec(d) => Some(d.to_f64()),
            _ => None,
        }
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Value::Int(i) => Some(Decimal::from(*i)),
            Value::Dec(d) => Some(d.clone()),
            _ => None,
        }
    }

    /// Comparison used by predicates: numbers compare numerically across
    /// integer and decimal, strings and dates codepoint-wise. `None` when
    /// the two values are not comparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Dec(a), Value::Dec(b)) => Some(a.cmp(b)),
            (Value::Int(a), Value::Dec(b)) => Some(Decimal::from(*a).cmp(b)),
            (Value::Dec(a), Value::Int(b)) => Some(a.cmp(&Decimal::from(*b))),
            (Value::Str(a) | Value::Date(a), Value::Str(b) | Value::Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) | Value::Dec(_) => 0,
            Value::Date(_) => 1,
            Value::Str(_) => 2,
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| {
            self.compare(other)
                .unwrap_or(Ordering::Equal)
                // keeps Ord consistent with Eq for Int(5) vs Dec("5")
                .then_with(|| matches!(self, Value::Dec(_)).cmp(&matches!(other, Value::Dec(_))))
        })
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) | Value::Date(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Dec(d) => write!(f, "{d}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

/// The by-value representative of an element. Flat and NULL-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdentityTuple(pub Vec<Value>);

impl IdentityTuple {
    pub fn single(value: impl Into<Value>) -> Self {
        IdentityTuple(vec![value.into()])
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    /// Parses the encoding produced by `Display` against the identity field
    /// types of the target concept.
    pub fn decode(text: &str, types: &[PrimitiveType]) -> Result<IdentityTuple, String> {
        if let [ty] = types {
            return ty.parse(text).map(|v| IdentityTuple(vec![v]));
        }
        let inner = text
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| format!("`{text}` is not a `(v1,v2,...)` identity"))?;
        let mut parts = Vec::with_capacity(types.len());
        let mut current = String::new();
        let mut chars = inner.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '(' | ')' | ',' if chars.peek() == Some(&c) => {
                    chars.next();
                    current.push(c);
                }
                ',' => parts.push(std::mem::take(&mut current)),
                '(' | ')' => return Err(format!("unescaped `{c}` in identity `{text}`")),
                _ => current.push(c),
            }
        }
        parts.push(current);
        if parts.len() != types.len() {
            return Err(format!(
                "identity `{text}` has {} components, expected {}",
                parts.len(),
                types.len()
            ));
        }
        parts
            .iter()
            .zip(types)
            .map(|(part, ty)| ty.parse(part))
            .collect::<Result<_, _>>()
            .map(IdentityTuple)
    }
}

impl fmt::Display for IdentityTuple {
    /// Single-field identities render bare; wider ones as `(v1,v2,...)`
    /// with `(`, `)` and `,` doubled inside components.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [only] = self.0.as_slice() {
            return write!(f, "{only}");
        }
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            for c in v.to_string().chars() {
                if matches!(c, '(' | ')' | ',') {
                    write!(f, "{c}{c}")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
        }
        f.write_str(")")
    }
}

/// An input value for one entity field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Datum {
    Null,
    Value(Value),
    /// Identity of a greater element.
    Ref(IdentityTuple),
}

impl From<Value> for Datum {
    fn from(v: Value) -> Self {
        Datum::Value(v)
    }
}
