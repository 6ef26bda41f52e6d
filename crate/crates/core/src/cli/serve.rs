//! Animation session over HTTP. The session is a stack of states reached by
//! the steps taken so far.

use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{parse_trace, ComponentView, ReplayError, StateSummary};
use crate::kernel::{system_steps, Composition, KernelError, Label, StepPolicy, SystemState};
use crate::sync::MonitorView;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no enabled event with index {0}")]
    NoSuchEvent(usize),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StateBody {
    pub state_id: String,
    pub components: Vec<ComponentView>,
    pub monitors: Vec<MonitorView>,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventEntry {
    pub index: usize,
    pub event: String,
    pub channel: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventsBody {
    pub events: Vec<EventEntry>,
}

pub struct Session {
    comp: Composition,
    policy: StepPolicy,
    /// States from the initial one to the current one, with the label that
    /// led to each.
    stack: Vec<(SystemState, Option<Label>)>,
}

pub fn state_id(s: &SystemState) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    s.hash(&mut h);
    format!("{:016x}", h.finish())
}

impl Session {
    pub fn new(comp: Composition, policy: StepPolicy) -> Result<Self, KernelError> {
        let init = comp.initial_state()?;
        Ok(Session {
            comp,
            policy,
            stack: vec![(init, None)],
        })
    }

    pub fn current(&self) -> &SystemState {
        &self.stack.last().expect("stack holds the initial state").0
    }

    pub fn trace(&self) -> Vec<Label> {
        self.stack.iter().filter_map(|(_, l)| l.clone()).collect()
    }

    pub fn state(&self) -> StateBody {
        let summary = StateSummary::of(&self.comp, self.current());
        StateBody {
            state_id: state_id(self.current()),
            components: summary.components,
            monitors: summary.monitors,
            trace: self.trace().iter().map(|l| l.to_string()).collect(),
        }
    }

    fn transitions(&self) -> Result<Vec<(Label, SystemState)>, KernelError> {
        system_steps(self.current(), &self.comp, self.policy)
    }

    pub fn events(&self) -> Result<EventsBody, SessionError> {
        let events = self
            .transitions()?
            .into_iter()
            .enumerate()
            .map(|(index, (l, _))| {
                let (channel, values) = match &l {
                    Label::Event(e) => (
                        e.channel.to_string(),
                        e.values.iter().map(|v| v.to_string()).collect(),
                    ),
                    Label::Tick => ("tick".to_string(), Vec::new()),
                    Label::Tau => ("tau".to_string(), Vec::new()),
                };
                EventEntry {
                    index,
                    event: l.to_string(),
                    channel,
                    values,
                }
            })
            .collect();
        Ok(EventsBody { events })
    }

    pub fn step(&mut self, index: usize) -> Result<StateBody, SessionError> {
        let (l, s) = self
            .transitions()?
            .into_iter()
            .nth(index)
            .ok_or(SessionError::NoSuchEvent(index))?;
        self.stack.push((s, Some(l)));
        Ok(self.state())
    }

    /// Undoes the last step. Returns false at the initial state.
    pub fn backtrack(&mut self) -> bool {
        if self.stack.len() > 1 {
            self.stack.pop();
            true
        } else {
            false
        }
    }

    pub fn reset(&mut self) {
        self.stack.truncate(1);
    }

    /// Replaces the session with a path that performs `events` from the
    /// initial state. Among several such paths the first in event order wins.
    pub fn load_trace(&mut self, events: &[String]) -> Result<StateBody, SessionError> {
        let labels = parse_trace(events)?;
        let init = self.stack[0].0.clone();
        // Per layer: state and index of its parent in the previous layer.
        let mut layers: Vec<Vec<(SystemState, usize)>> = vec![vec![(init, 0)]];
        for (index, label) in labels.iter().enumerate() {
            let mut next: Vec<(SystemState, usize)> = Vec::new();
            let mut seen = HashSet::new();
            for (pi, (s, _)) in layers.last().expect("non-empty").iter().enumerate() {
                for (l, t) in system_steps(s, &self.comp, self.policy)? {
                    if l == *label && seen.insert(t.clone()) {
                        next.push((t, pi));
                    }
                }
            }
            if next.is_empty() {
                return Err(ReplayError::Refused {
                    index,
                    label: label.to_string(),
                }
                .into());
            }
            layers.push(next);
        }
        let mut path = Vec::with_capacity(layers.len());
        let mut at = 0;
        for layer in layers.iter().rev() {
            let (s, parent) = &layer[at];
            path.push(s.clone());
            at = *parent;
        }
        path.reverse();
        self.stack = path
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i.checked_sub(1).map(|j| labels[j].clone())))
            .collect();
        Ok(self.state())
    }
}

#[derive(Deserialize)]
struct StepRequest {
    index: usize,
}

#[derive(Deserialize)]
struct TraceRequest {
    events: Vec<String>,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn json<T: Serialize>(status: u16, body: &T) -> (u16, String) {
    (
        status,
        serde_json::to_string(body).expect("body serializes"),
    )
}

fn error(status: u16, msg: impl ToString) -> (u16, String) {
    json(
        status,
        &ErrorBody {
            error: msg.to_string(),
        },
    )
}

/// Routes one request. Returns the status code and a JSON body.
pub fn handle(session: &mut Session, method: &str, path: &str, body: &str) -> (u16, String) {
    let path = path.split('?').next().unwrap_or(path);
    match (method, path) {
        ("GET", "/state") => json(200, &session.state()),
        ("GET", "/events") => match session.events() {
            Ok(e) => json(200, &e),
            Err(e) => error(500, e),
        },
        ("POST", "/step") => match serde_json::from_str::<StepRequest>(body) {
            Ok(r) => match session.step(r.index) {
                Ok(s) => json(200, &s),
                Err(e @ SessionError::NoSuchEvent(_)) => error(400, e),
                Err(e) => error(500, e),
            },
            Err(e) => error(400, e),
        },
        ("POST", "/backtrack") => {
            if session.backtrack() {
                json(200, &session.state())
            } else {
                error(409, "already at the initial state")
            }
        }
        ("POST", "/reset") => {
            session.reset();
            json(200, &session.state())
        }
        ("POST", "/trace") => match serde_json::from_str::<TraceRequest>(body) {
            Ok(r) => match session.load_trace(&r.events) {
                Ok(s) => json(200, &s),
                Err(e) => error(400, e),
            },
            Err(e) => error(400, e),
        },
        ("OPTIONS", _) => (204, String::new()),
        _ => error(404, format!("no route for {method} {path}")),
    }
}

pub fn bind(port: u16) -> Result<tiny_http::Server, String> {
    tiny_http::Server::http(("127.0.0.1", port))
        .map_err(|e| format!("cannot listen on port {port}: {e}"))
}

/// Answers requests one at a time until the server is dropped.
pub fn run(server: &tiny_http::Server, session: &mut Session) {
    for mut req in server.incoming_requests() {
        let mut body = String::new();
        let (status, text) = match req.as_reader().read_to_string(&mut body) {
            Ok(_) => handle(session, req.method().as_str(), req.url(), &body),
            Err(e) => error(400, e),
        };
        let headers = [
            "Content-Type: application/json",
            "Access-Control-Allow-Origin: *",
            "Access-Control-Allow-Methods: GET, POST, OPTIONS",
            "Access-Control-Allow-Headers: Content-Type",
        ];
        let mut resp = tiny_http::Response::from_string(text).with_status_code(status);
        for h in headers {
            resp = resp.with_header(h.parse::<tiny_http::Header>().expect("static header"));
        }
        let _ = req.respond(resp);
    }
}
