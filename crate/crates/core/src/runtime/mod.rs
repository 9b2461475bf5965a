//! Agents that own an engine, react to normative events through plans and
//! talk to each other through FIFO messages.

mod defacto;
mod plan;

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};

use indexmap::IndexMap;

pub use defacto::{DeFacto, DeFactoRecord, DeFactoStatus};
pub use plan::{Action, AgentEvent, Plan, TriggerKind};

use crate::engine::{Engine, EngineError, EventKind, NormEvent, TraceRecord, TraceWriter};
use crate::logic::{FactBase, Solver, Substitution, Term};
use crate::parser::DeonticKind;

/// Upper bound on events one agent may process in a single dispatch.
pub const DISPATCH_LIMIT: usize = 100_000;
/// Upper bound on deliver/dispatch rounds in [`System::run_until_quiet`].
pub const QUIET_ROUND_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_term(&self) -> Term {
        Term::atom(self.0.clone())
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId::new(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error("agent '{0}' already exists")]
    DuplicateAgent(String),
    #[error("'{from}' sent a message to unknown agent '{to}'")]
    UnknownRecipient { from: String, to: String },
    #[error("agent '{agent}': {source}")]
    Engine { agent: String, source: EngineError },
    #[error("agent '{agent}' processed {limit} events in one dispatch; plans are feeding each other")]
    DispatchLimit { agent: String, limit: usize },
    #[error("system still busy after {0} rounds")]
    NotQuiet(usize),
    #[error("trace output: {0}")]
    Trace(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    pub facts: Vec<Term>,
}

/// What an environment action did.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Assert(Term),
    Retract(Term),
    Send { to: AgentId, facts: Vec<Term> },
    /// A trace line with a scenario-defined kind.
    Trace { kind: String, payload: String },
    RecordDeFacto(DeFactoRecord),
}

/// The view an environment gets of the acting agent.
pub struct ActionContext<'a> {
    pub agent: &'a AgentId,
    pub now: u64,
    pub beliefs: &'a FactBase,
    pub de_facto: &'a DeFacto,
    pub event: &'a AgentEvent,
}

/// Executes [`Action::Invoke`] terms.
pub trait Environment {
    fn invoke(&mut self, ctx: &ActionContext<'_>, action: &Term) -> Result<Vec<Effect>, String>;
}

/// An environment with no actions.
pub struct NoEnvironment;

impl Environment for NoEnvironment {
    fn invoke(&mut self, _: &ActionContext<'_>, action: &Term) -> Result<Vec<Effect>, String> {
        Err(format!("no environment action {action}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeadLetter {
    pub event: AgentEvent,
    pub plan: String,
    pub error: String,
}

#[derive(Clone, Debug)]
struct Queued {
    event: AgentEvent,
    retried: bool,
}

/// An agent: its De Jure engine (whose fact base is the belief base), plans,
/// De Facto log and inbox.
pub struct Agent {
    id: AgentId,
    engine: Engine,
    plans: Vec<Plan>,
    de_facto: DeFacto,
    queue: VecDeque<Queued>,
    inbox: VecDeque<Message>,
    outbox: Vec<Message>,
    dead_letters: Vec<DeadLetter>,
    log: Vec<TraceRecord>,
}

impl Agent {
    pub fn new(id: impl Into<AgentId>, engine: Engine, plans: Vec<Plan>) -> Self {
        Agent {
            id: id.into(),
            engine,
            plans,
            de_facto: DeFacto::default(),
            queue: VecDeque::new(),
            inbox: VecDeque::new(),
            outbox: Vec::new(),
            dead_letters: Vec::new(),
            log: Vec::new(),
        }
    }

    pub fn id(&self) -> &AgentId {
        &self.id
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn beliefs(&self) -> &FactBase {
        self.engine.fact_base()
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn de_facto(&self) -> &DeFacto {
        &self.de_facto
    }

    pub fn dead_letters(&self) -> &[DeadLetter] {
        &self.dead_letters
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Asserts `facts`, steps the engine, and queues the resulting events
    /// (preceded by one `FactAdded` per genuinely new fact) for dispatch.
    pub fn perceive(&mut self, facts: Vec<Term>) -> Result<Vec<NormEvent>, AgentError> {
        let mut new: Vec<Term> = Vec::new();
        for f in &facts {
            if !self.engine.fact_base().contains(f) && !new.contains(f) {
                new.push(f.clone());
            }
        }
        let events = self.engine.assert_all(facts).map_err(|source| self.engine_error(source))?;
        for f in new {
            self.enqueue(AgentEvent::FactAdded(f));
        }
        self.note_events(&events);
        Ok(events)
    }

    /// Advances this agent's clock.
    pub fn tick(&mut self, now: u64) -> Result<Vec<NormEvent>, AgentError> {
        let events = self.engine.tick(now).map_err(|source| self.engine_error(source))?;
        self.note_events(&events);
        Ok(events)
    }

    /// Runs queued events against the plans until the queue is empty.
    /// Returns the number of plans fired.
    pub fn dispatch(&mut self, env: &mut dyn Environment) -> Result<usize, AgentError> {
        let mut fired = 0;
        let mut processed = 0;
        while let Some(item) = self.queue.pop_front() {
            processed += 1;
            if processed > DISPATCH_LIMIT {
                return Err(AgentError::DispatchLimit { agent: self.id.to_string(), limit: DISPATCH_LIMIT });
            }
            let Some((pi, s)) = self.select(&item.event) else {
                self.warn_unhandled(&item.event);
                continue;
            };
            match self.run_body(pi, &s, &item.event, env) {
                Ok(()) => fired += 1,
                Err(error) if !item.retried => {
                    self.log_line("plan-retry", format!("{}: {error}", self.plans[pi].name));
                    self.queue.push_back(Queued { event: item.event, retried: true });
                }
                Err(error) => {
                    let plan = self.plans[pi].name.clone();
                    self.log_line("dead-letter", format!("{plan}: {error}"));
                    self.dead_letters.push(DeadLetter { event: item.event, plan, error });
                }
            }
        }
        Ok(fired)
    }

    fn engine_error(&self, source: EngineError) -> AgentError {
        AgentError::Engine { agent: self.id.to_string(), source }
    }

    fn enqueue(&mut self, event: AgentEvent) {
        self.queue.push_back(Queued { event, retried: false });
    }

    fn note_events(&mut self, events: &[NormEvent]) {
        for e in events {
            let mut r = e.record();
            r.by = Some(self.id.to_string());
            self.log.push(r);
            self.enqueue(AgentEvent::Norm(e.clone()));
        }
    }

    fn log_line(&mut self, kind: &str, payload: String) {
        self.log.push(TraceRecord {
            t: self.engine.now(),
            kind: kind.to_string(),
            norm: None,
            instance: None,
            agent: Some(self.id.to_string()),
            payload,
            by: Some(self.id.to_string()),
        });
    }

    /// First plan whose trigger matches and whose guard has a solution.
    fn select(&self, event: &AgentEvent) -> Option<(usize, Substitution)> {
        let kind = event.trigger_kind();
        for (i, plan) in self.plans.iter().enumerate() {
            if plan.kind != kind {
                continue;
            }
            let Some(s) = event.matches(&plan.pattern) else { continue };
            let solver = Solver::new(self.engine.fact_base()).with_max_depth(self.engine.config().max_depth);
            // A guard that cannot be evaluated makes the plan inapplicable.
            if let Ok(answers) = solver.solve_from(&plan.guard, &s) {
                if let Some(first) = answers.into_iter().next() {
                    return Some((i, first));
                }
            }
        }
        None
    }

    fn warn_unhandled(&mut self, event: &AgentEvent) {
        if let AgentEvent::Norm(NormEvent { kind: EventKind::InstanceCreated(i), .. }) = event {
            if i.bearer_name() == self.id.as_str() && i.kind != DeonticKind::Permission {
                let payload = format!("{}: {}", i.norm, i);
                self.log_line("unhandled-obligation", payload);
            }
        }
    }

    /// Evaluates the body into a batch of effects, then applies the batch
    /// atomically. Environment calls see beliefs as of the start of the body.
    fn run_body(&mut self, pi: usize, s: &Substitution, event: &AgentEvent, env: &mut dyn Environment) -> Result<(), String> {
        let plan = &self.plans[pi];
        let now = self.engine.now();
        let mut effects = Vec::new();
        for action in &plan.body {
            match action {
                Action::Assert(t) => effects.push(Effect::Assert(ground(t, s)?)),
                Action::Retract(t) => effects.push(Effect::Retract(ground(t, s)?)),
                Action::Send { to, facts } => {
                    let to = match to.apply(s) {
                        Term::Atom(a) => AgentId::new(a),
                        other => return Err(format!("send target {other} is not an agent id")),
                    };
                    let facts = facts.iter().map(|f| ground(f, s)).collect::<Result<_, _>>()?;
                    effects.push(Effect::Send { to, facts });
                }
                Action::Invoke(t) => {
                    let ctx = ActionContext {
                        agent: &self.id,
                        now,
                        beliefs: self.engine.fact_base(),
                        de_facto: &self.de_facto,
                        event,
                    };
                    effects.extend(env.invoke(&ctx, &t.apply(s))?);
                }
                Action::RecordDeFacto { rationale } => {
                    let AgentEvent::Norm(NormEvent { kind: EventKind::SanctionCreated(f), .. }) = event else {
                        return Err("De Facto records need a sanction-created trigger".into());
                    };
                    let target = match &f.target {
                        Term::Atom(a) | Term::Str(a) => a.clone(),
                        other => other.to_string(),
                    };
                    let r = DeFactoRecord::executed(target, Some(f.rule.clone()), f.fact(), rationale.clone(), now);
                    effects.push(Effect::RecordDeFacto(r));
                }
            }
        }
        let name = plan.name.clone();
        let (mut asserts, mut retracts) = (Vec::new(), Vec::new());
        for e in &effects {
            match e {
                Effect::Assert(t) => asserts.push(t.clone()),
                Effect::Retract(t) => retracts.push(t.clone()),
                _ => {}
            }
        }
        let events = self.engine.update(asserts, retracts).map_err(|e| e.to_string())?;
        self.log_line("plan", name);
        self.note_events(&events);
        for e in effects {
            match e {
                Effect::Send { to, facts } => self.outbox.push(Message { from: self.id.clone(), to, facts }),
                Effect::Trace { kind, payload } => self.log_line(&kind, payload),
                Effect::RecordDeFacto(r) => self.de_facto.record(r),
                Effect::Assert(_) | Effect::Retract(_) => {}
            }
        }
        Ok(())
    }
}

fn ground(t: &Term, s: &Substitution) -> Result<Term, String> {
    let t = t.apply(s).fold_arith().map_err(|e| e.to_string())?;
    if t.is_ground() {
        Ok(t)
    } else {
        Err(format!("{t} is not ground"))
    }
}

/// A set of agents run in one logical thread: deliveries and dispatches go
/// round-robin in registration order.
pub struct System {
    agents: IndexMap<AgentId, Agent>,
    trace: Vec<TraceRecord>,
    writer: Option<TraceWriter<Box<dyn Write>>>,
    now: u64,
}

impl Default for System {
    fn default() -> Self {
        System::new()
    }
}

impl System {
    pub fn new() -> Self {
        System { agents: IndexMap::new(), trace: Vec::new(), writer: None, now: 0 }
    }

    /// Streams every trace record to `out` as it is produced.
    pub fn set_trace_writer(&mut self, out: Box<dyn Write>) {
        self.writer = Some(TraceWriter::new(out));
    }

    pub fn add_agent(&mut self, agent: Agent) -> Result<(), AgentError> {
        if self.agents.contains_key(agent.id()) {
            return Err(AgentError::DuplicateAgent(agent.id().to_string()));
        }
        self.agents.insert(agent.id().clone(), agent);
        Ok(())
    }

    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.get(&AgentId::new(id))
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> {
        self.agents.values()
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Queues a message; FIFO per recipient, so per sender-recipient pair too.
    pub fn send(&mut self, from: &str, to: &str, facts: Vec<Term>) -> Result<(), AgentError> {
        let msg = Message { from: AgentId::new(from), to: AgentId::new(to), facts };
        self.route(msg)
    }

    /// Direct perception from the environment.
    pub fn perceive(&mut self, id: &str, facts: Vec<Term>) -> Result<Vec<NormEvent>, AgentError> {
        let agent = self.agents.get_mut(&AgentId::new(id)).ok_or_else(|| AgentError::UnknownAgent(id.to_string()))?;
        let events = agent.perceive(facts);
        self.flush_logs()?;
        events
    }

    /// Delivers every message already waiting, agent by agent. Messages sent
    /// during delivery wait for the next round. Returns the number delivered.
    pub fn deliver(&mut self) -> Result<usize, AgentError> {
        let mut delivered = 0;
        for i in 0..self.agents.len() {
            let agent = &mut self.agents[i];
            let batch: Vec<Message> = agent.inbox.drain(..).collect();
            for msg in batch {
                delivered += 1;
                let result = agent.perceive(msg.facts);
                if let Err(e) = result {
                    self.flush_logs()?;
                    return Err(e);
                }
            }
        }
        self.flush_logs()?;
        Ok(delivered)
    }

    /// Dispatches every agent once, routing the messages their plans send.
    pub fn dispatch(&mut self, env: &mut dyn Environment) -> Result<usize, AgentError> {
        let mut fired = 0;
        for i in 0..self.agents.len() {
            let result = self.agents[i].dispatch(env);
            let out: Vec<Message> = self.agents[i].outbox.drain(..).collect();
            self.flush_logs()?;
            fired += result?;
            for msg in out {
                self.route(msg)?;
            }
        }
        Ok(fired)
    }

    /// Alternates deliver and dispatch until no message or event is pending.
    pub fn run_until_quiet(&mut self, env: &mut dyn Environment) -> Result<(), AgentError> {
        for _ in 0..QUIET_ROUND_LIMIT {
            self.deliver()?;
            self.dispatch(env)?;
            if self.is_quiet() {
                return Ok(());
            }
        }
        Err(AgentError::NotQuiet(QUIET_ROUND_LIMIT))
    }

    pub fn is_quiet(&self) -> bool {
        self.agents.values().all(|a| a.inbox.is_empty() && a.queue.is_empty() && a.outbox.is_empty())
    }

    /// Moves every agent's clock to `t`.
    pub fn advance_to(&mut self, t: u64) -> Result<(), AgentError> {
        for i in 0..self.agents.len() {
            let result = self.agents[i].tick(t);
            self.flush_logs()?;
            result?;
        }
        self.now = t;
        Ok(())
    }

    /// Earliest pending timed deadline across all agents.
    pub fn next_deadline(&self) -> Option<u64> {
        self.agents.values().filter_map(|a| a.engine.next_deadline()).min()
    }

    /// Adds a scenario-level line to the trace.
    pub fn log(&mut self, kind: &str, agent: Option<&str>, payload: String) -> Result<(), AgentError> {
        let r = TraceRecord {
            t: self.now,
            kind: kind.to_string(),
            norm: None,
            instance: None,
            agent: agent.map(str::to_string),
            payload,
            by: None,
        };
        self.push_record(r)
    }

    fn route(&mut self, msg: Message) -> Result<(), AgentError> {
        let Some(agent) = self.agents.get_mut(&msg.to) else {
            return Err(AgentError::UnknownRecipient { from: msg.from.to_string(), to: msg.to.to_string() });
        };
        let payload = msg.facts.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        let r = TraceRecord {
            t: agent.engine.now(),
            kind: "message".into(),
            norm: None,
            instance: None,
            agent: Some(msg.to.to_string()),
            payload,
            by: Some(msg.from.to_string()),
        };
        agent.inbox.push_back(msg);
        self.push_record(r)
    }

    fn flush_logs(&mut self) -> Result<(), AgentError> {
        let mut records = Vec::new();
        for a in self.agents.values_mut() {
            records.append(&mut a.log);
        }
        for r in records {
            self.push_record(r)?;
        }
        Ok(())
    }

    fn push_record(&mut self, r: TraceRecord) -> Result<(), AgentError> {
        if let Some(w) = &mut self.writer {
            w.write(&r)?;
        }
        self.trace.push(r);
        Ok(())
    }
}

#[cfg(test)]
mod tests;
