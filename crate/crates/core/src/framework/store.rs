//! Shared object state: the fields of a mission or lock object, read and
//! written through `get`/`set` events tagged with the caller.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::kernel::{
    ChannelTable, Component, Domain, EventPattern, KernelError, Label, Local, Machine, Name, Value,
};

use super::channels as ch;

#[derive(Debug)]
struct Config {
    object: Name,
    domains: BTreeMap<Name, Domain>,
    callers: Vec<Name>,
}

#[derive(Clone)]
pub struct FieldStore {
    cfg: Arc<Config>,
    values: BTreeMap<Name, Value>,
}

impl fmt::Debug for FieldStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.values)
    }
}

impl FieldStore {
    /// `fields` gives each field's domain and initial value.
    pub fn new(object: &str, fields: Vec<(Name, Domain, Value)>, callers: Vec<Name>) -> Self {
        let mut domains = BTreeMap::new();
        let mut values = BTreeMap::new();
        for (f, d, v) in fields {
            domains.insert(f.clone(), d);
            values.insert(f, v);
        }
        FieldStore {
            cfg: Arc::new(Config {
                object: Name::from(object),
                domains,
                callers,
            }),
            values,
        }
    }

    pub fn component(self) -> Component {
        let o = Some(Value::Id(self.cfg.object.clone()));
        let alphabet = vec![
            EventPattern::with(ch::GET, vec![o.clone(), None, None, None]),
            EventPattern::with(ch::SET, vec![o, None, None, None]),
        ];
        let id = format!("Fields.{}", self.cfg.object);
        Component::new(&id, Local::machine(self), alphabet).passive()
    }
}

impl Machine for FieldStore {
    fn steps(
        &self,
        channels: &ChannelTable,
    ) -> Result<Vec<(Label, Arc<dyn Machine>)>, KernelError> {
        let mut out: Vec<(Label, Arc<dyn Machine>)> = Vec::new();
        let o = Value::Id(self.cfg.object.clone());
        let me: Arc<dyn Machine> = Arc::new(self.clone());
        for (f, v) in &self.values {
            let domain = &self.cfg.domains[f];
            let values = domain.values(channels.ints);
            for c in &self.cfg.callers {
                let head = vec![o.clone(), Value::Id(f.clone()), Value::Id(c.clone())];
                let mut get = head.clone();
                get.push(v.clone());
                out.push((Label::emit(ch::GET, get), me.clone()));
                for nv in &values {
                    let mut next = self.clone();
                    next.values.insert(f.clone(), nv.clone());
                    let mut set = head.clone();
                    set.push(nv.clone());
                    out.push((Label::emit(ch::SET, set), Arc::new(next)));
                }
            }
        }
        Ok(out)
    }

    fn is_terminated(&self) -> bool {
        false
    }

    fn position(&self) -> String {
        "serving".into()
    }

    fn fields(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
