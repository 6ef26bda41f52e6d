//! Values, finite domains, channels and events.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::KernelError;

/// Name used for identifiers everywhere in the model (channels, variables, ids).
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A data value carried by events or held in a store.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Id(Name),
    Null,
}

impl Value {
    pub fn id(s: &str) -> Value {
        Value::Id(name(s))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Parses the textual form produced by `Display`.
    pub fn parse(text: &str) -> Value {
        let t = text.trim();
        match t {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            "null" => Value::Null,
            _ => match t.parse::<i64>() {
                Ok(i) => Value::Int(i),
                Err(_) => Value::id(t),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Id(n) => write!(f, "{n}"),
            Value::Null => write!(f, "null"),
        }
    }
}

/// Inclusive integer range shared by every integer domain of a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: i64,
    pub hi: i64,
}

impl Default for IntRange {
    fn default() -> Self {
        IntRange { lo: 0, hi: 7 }
    }
}

impl IntRange {
    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// A finite value domain for one channel field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Ints,
    Bools,
    Ids(Vec<Name>),
    Nullable(Box<Domain>),
    Union(Vec<Domain>),
}

impl Domain {
    pub fn ids<I, S>(ids: I) -> Domain
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v: Vec<Name> = ids.into_iter().map(|s| name(s.as_ref())).collect();
        v.sort();
        v.dedup();
        Domain::Ids(v)
    }

    pub fn nullable(self) -> Domain {
        Domain::Nullable(Box::new(self))
    }

    /// Every value of the domain, in canonical order.
    pub fn values(&self, ints: IntRange) -> Vec<Value> {
        let mut out = Vec::new();
        self.collect(ints, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect(&self, ints: IntRange, out: &mut Vec<Value>) {
        match self {
            Domain::Ints => out.extend((ints.lo..=ints.hi).map(Value::Int)),
            Domain::Bools => out.extend([Value::Bool(false), Value::Bool(true)]),
            Domain::Ids(ids) => out.extend(ids.iter().cloned().map(Value::Id)),
            Domain::Nullable(d) => {
                out.push(Value::Null);
                d.collect(ints, out);
            }
            Domain::Union(ds) => ds.iter().for_each(|d| d.collect(ints, out)),
        }
    }

    pub fn contains(&self, v: &Value, ints: IntRange) -> bool {
        match (self, v) {
            (Domain::Ints, Value::Int(i)) => ints.contains(*i),
            (Domain::Bools, Value::Bool(_)) => true,
            (Domain::Ids(ids), Value::Id(n)) => ids.binary_search(n).is_ok(),
            (Domain::Nullable(_), Value::Null) => true,
            (Domain::Nullable(d), v) => d.contains(v, ints),
            (Domain::Union(ds), v) => ds.iter().any(|d| d.contains(v, ints)),
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Ints => "int".into(),
            Domain::Bools => "bool".into(),
            Domain::Ids(ids) => {
                let names: Vec<&str> = ids.iter().map(|n| &**n).collect();
                format!("{{{}}}", names.join(","))
            }
            Domain::Nullable(d) => format!("{}|null", d.describe()),
            Domain::Union(ds) => ds
                .iter()
                .map(Domain::describe)
                .collect::<Vec<_>>()
                .join("|"),
        }
    }
}

/// Declaration of a channel: its name and the domain of each field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelDecl {
    pub name: Name,
    pub fields: Vec<(String, Domain)>,
}

impl ChannelDecl {
    pub fn new(name_: &str, fields: Vec<(&str, Domain)>) -> Self {
        ChannelDecl {
            name: name(name_),
            fields: fields
                .into_iter()
                .map(|(n, d)| (n.to_string(), d))
                .collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.fields.len()
    }
}

/// The set of channels a system may use, with the global integer range.
#[derive(Clone, Debug, Default)]
pub struct ChannelTable {
    channels: BTreeMap<Name, ChannelDecl>,
    pub ints: IntRange,
}

impl ChannelTable {
    pub fn new(ints: IntRange) -> Self {
        ChannelTable {
            channels: BTreeMap::new(),
            ints,
        }
    }

    /// Adds a channel. Redeclaring with an identical signature is allowed.
    pub fn declare(&mut self, decl: ChannelDecl) -> Result<(), KernelError> {
        if let Some(prev) = self.channels.get(&decl.name) {
            if prev.fields.len() != decl.fields.len() {
                return Err(KernelError::WellFormed(format!(
                    "channel {} redeclared with arity {} (was {})",
                    decl.name,
                    decl.fields.len(),
                    prev.fields.len()
                )));
            }
            // Merge domains so different declarers can widen the field sets.
            let mut merged = prev.clone();
            for (slot, (_, d)) in merged.fields.iter_mut().zip(decl.fields) {
                if slot.1 != d {
                    slot.1 = merge_domains(&slot.1, &d);
                }
            }
            self.channels.insert(merged.name.clone(), merged);
            return Ok(());
        }
        self.channels.insert(decl.name.clone(), decl);
        Ok(())
    }

    pub fn get(&self, channel: &str) -> Option<&ChannelDecl> {
        self.channels.get(channel)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChannelDecl> {
        self.channels.values()
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Checks that an event conforms to its channel declaration.
    pub fn check_event(&self, e: &Event) -> Result<(), KernelError> {
        let decl = self
            .get(&e.channel)
            .ok_or_else(|| KernelError::WellFormed(format!("undeclared channel {}", e.channel)))?;
        if decl.arity() != e.values.len() {
            return Err(KernelError::WellFormed(format!(
                "event {e} has {} values, channel arity is {}",
                e.values.len(),
                decl.arity()
            )));
        }
        for (v, (field, d)) in e.values.iter().zip(&decl.fields) {
            if !d.contains(v, self.ints) {
                return Err(KernelError::Range(format!(
                    "value {v} outside domain {} of field {field} in {e}",
                    d.describe()
                )));
            }
        }
        Ok(())
    }
}

fn merge_domains(a: &Domain, b: &Domain) -> Domain {
    match (a, b) {
        (Domain::Ids(x), Domain::Ids(y)) => {
            let mut v = x.clone();
            v.extend(y.iter().cloned());
            v.sort();
            v.dedup();
            Domain::Ids(v)
        }
        (Domain::Nullable(x), Domain::Nullable(y)) => merge_domains(x, y).nullable(),
        (Domain::Nullable(x), y) | (y, Domain::Nullable(x)) => merge_domains(x, y).nullable(),
        (x, y) if x == y => x.clone(),
        (x, y) => Domain::Union(vec![x.clone(), y.clone()]),
    }
}

/// An observable communication: a channel plus a tuple of values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub channel: Name,
    pub values: Vec<Value>,
}

impl Event {
    pub fn new(channel: &str, values: Vec<Value>) -> Self {
        Event {
            channel: name(channel),
            values,
        }
    }

    pub fn bare(channel: &str) -> Self {
        Event::new(channel, Vec::new())
    }

    /// Parses `channel(v1,v2)` or a bare `channel`.
    pub fn parse(text: &str) -> Option<Event> {
        let t = text.trim();
        match t.find('(') {
            None => is_ident(t).then(|| Event::bare(t)),
            Some(open) => {
                let close = t.rfind(')')?;
                if close != t.len() - 1 || close < open {
                    return None;
                }
                let channel = &t[..open];
                if !is_ident(channel) {
                    return None;
                }
                let inner = t[open + 1..close].trim();
                let values = if inner.is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(Value::parse).collect()
                };
                Some(Event::new(channel, values))
            }
        }
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.channel)?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Transition label: an event, the global clock tick, or an internal step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Event(Event),
    Tick,
    Tau,
}

impl Label {
    pub fn emit(channel: &str, values: Vec<Value>) -> Label {
        Label::Event(Event::new(channel, values))
    }

    pub fn event(&self) -> Option<&Event> {
        match self {
            Label::Event(e) => Some(e),
            _ => None,
        }
    }

    fn sort_channel(&self) -> &str {
        match self {
            Label::Event(e) => &e.channel,
            Label::Tick => "tick",
            Label::Tau => "tau",
        }
    }

    /// Parses the textual form (`tick()`, `tau()` or an event).
    pub fn parse(text: &str) -> Option<Label> {
        match text.trim() {
            "tick()" | "tick" => Some(Label::Tick),
            "tau()" | "tau" => Some(Label::Tau),
            t => Event::parse(t).map(Label::Event),
        }
    }
}

/// Canonical order: channel name, then values. `tick` and `tau` sort by name.
impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_channel()
            .cmp(other.sort_channel())
            .then_with(|| match (self, other) {
                (Label::Event(a), Label::Event(b)) => a.values.cmp(&b.values),
                (Label::Event(_), _) => std::cmp::Ordering::Less,
                (_, Label::Event(_)) => std::cmp::Ordering::Greater,
                (Label::Tick, Label::Tau) => std::cmp::Ordering::Greater,
                (Label::Tau, Label::Tick) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Equal,
            })
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Event(e) => write!(f, "{e}"),
            Label::Tick => write!(f, "tick()"),
            Label::Tau => write!(f, "tau()"),
        }
    }
}

/// Pattern over events: a channel and, per field, an optional required value.
/// Used for alphabets and for checker queries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventPattern {
    pub channel: Name,
    /// `None` for "any arity / any values".
    pub fields: Option<Vec<Option<Value>>>,
}

impl EventPattern {
    pub fn channel(channel: &str) -> Self {
        EventPattern {
            channel: name(channel),
            fields: None,
        }
    }

    pub fn with(channel: &str, fields: Vec<Option<Value>>) -> Self {
        EventPattern {
            channel: name(channel),
            fields: Some(fields),
        }
    }

    pub fn matches(&self, e: &Event) -> bool {
        if self.channel != e.channel {
            return false;
        }
        match &self.fields {
            None => true,
            Some(fs) => {
                fs.len() == e.values.len()
                    && fs
                        .iter()
                        .zip(&e.values)
                        .all(|(p, v)| p.as_ref().is_none_or(|p| p == v))
            }
        }
    }

    pub fn matches_label(&self, l: &Label) -> bool {
        match l {
            Label::Event(e) => self.matches(e),
            Label::Tick => &*self.channel == "tick",
            Label::Tau => false,
        }
    }

    /// Parses `chan`, `chan.*`, `chan(*)` or `chan(v,*,v)`. `_` is the same
    /// field wildcard as `*`.
    pub fn parse(text: &str) -> Option<EventPattern> {
        let t = text.trim();
        if let Some(c) = t.strip_suffix(".*") {
            return is_ident(c).then(|| EventPattern::channel(c));
        }
        match t.find('(') {
            None => is_ident(t).then(|| EventPattern::channel(t)),
            Some(open) => {
                let close = t.rfind(')')?;
                if close != t.len() - 1 || close < open {
                    return None;
                }
                let c = &t[..open];
                if !is_ident(c) {
                    return None;
                }
                let inner = t[open + 1..close].trim();
                if inner == "*" {
                    return Some(EventPattern::channel(c));
                }
                let fields = if inner.is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|f| match f.trim() {
                            "*" | "_" => None,
                            v => Some(Value::parse(v)),
                        })
                        .collect()
                };
                Some(EventPattern::with(c, fields))
            }
        }
    }
}

impl fmt::Display for EventPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.fields {
            None => write!(f, "{}.*", self.channel),
            Some(fs) => {
                write!(f, "{}(", self.channel)?;
                for (i, v) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    match v {
                        Some(v) => write!(f, "{v}")?,
                        None => write!(f, "*")?,
                    }
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_order_is_channel_then_values() {
        let a = Label::Event(Event::new("b", vec![Value::Int(2)]));
        let b = Label::Event(Event::new("b", vec![Value::Int(10)]));
        let c = Label::Event(Event::bare("a"));
        let mut v = vec![Label::Tick, b.clone(), a.clone(), c.clone(), Label::Tau];
        v.sort();
        assert_eq!(v, vec![c, a, b, Label::Tau, Label::Tick]);
    }

    #[test]
    fn event_text_round_trip() {
        let e = Event::new("register", vec![Value::id("Reader"), Value::id("M")]);
        assert_eq!(e.to_string(), "register(Reader,M)");
        assert_eq!(Event::parse("register(Reader,M)"), Some(e));
        assert_eq!(Label::parse("tick()"), Some(Label::Tick));
        assert_eq!(
            Event::parse("end_of_program()"),
            Some(Event::bare("end_of_program"))
        );
    }

    #[test]
    fn patterns() {
        let p = EventPattern::parse("start_schedulable.*").unwrap();
        assert!(p.matches(&Event::new(
            "start_schedulable",
            vec![Value::id("R"), Value::id("M")]
        )));
        let q = EventPattern::parse("register(*,M)").unwrap();
        assert!(q.matches(&Event::new(
            "register",
            vec![Value::id("R"), Value::id("M")]
        )));
        assert!(!q.matches(&Event::new(
            "register",
            vec![Value::id("R"), Value::id("N")]
        )));
        assert_eq!(EventPattern::parse("register(_,M)"), Some(q));
        assert!(EventPattern::parse("writeCall")
            .unwrap()
            .matches(&Event::new("writeCall", vec![Value::Int(1)])));
    }

    #[test]
    fn domains_enumerate_in_order() {
        let d = Domain::ids(["b", "a"]).nullable();
        assert_eq!(
            d.values(IntRange::default()),
            vec![Value::id("a"), Value::id("b"), Value::Null]
        );
        assert_eq!(Domain::Ints.values(IntRange { lo: 0, hi: 2 }).len(), 3);
        assert!(!Domain::Ints.contains(&Value::Int(8), IntRange::default()));
    }
}
