//! Plant, unit and valve agents wired over the runtime.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use indexmap::IndexMap;
use npls::engine::{Engine, TraceRecord};
use npls::logic::{unify, FactBase, Formula, Substitution, Term};
use npls::runtime::{Action, ActionContext, Agent, AgentError, DeFactoRecord, Effect, Environment, Plan, System, TriggerKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, ScenarioConfig};
use crate::model::{s1_adjust, simulate_fill, update_image, FillResult, ImageScore, Order, ValveModel};
use crate::summary::Summary;

pub const UNIT_DE_JURE: &str = include_str!("de_jure/unit.npl");
pub const PLANT_DE_JURE: &str = include_str!("de_jure/plant.npl");
pub const PLANT: &str = "plant";
/// Sender name for orders coming from outside the agent system.
pub const CUSTOMER: &str = "bottle";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

pub fn unit_id(i: usize) -> String {
    format!("unit{i}")
}

pub fn valve_id(i: usize) -> String {
    format!("valve{i}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillLog {
    pub time: u64,
    /// 1-based.
    pub order: usize,
    pub unit: String,
    pub valve: String,
    pub injected: bool,
    pub result: FillResult,
    /// Valve state right after the fill.
    pub estimated_rate: f64,
    pub base_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrderOutcome {
    Pending,
    Filled { unit: String, polarity: i8 },
    Unassigned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SanctionLog {
    pub time: u64,
    /// Upper-case id, `S1` .. `S5`.
    pub id: String,
    pub sanctioner: String,
    pub target: String,
    pub content: String,
}

pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub orders: Vec<Order>,
    pub outcomes: Vec<OrderOutcome>,
    pub fills: Vec<FillLog>,
    pub sanctions: Vec<SanctionLog>,
    /// Every agent's De Facto log, tagged with the agent.
    pub de_facto: Vec<(String, DeFactoRecord)>,
    pub valves: IndexMap<String, ValveModel>,
    pub trace: Vec<TraceRecord>,
    pub summary: Summary,
}

fn t(s: &str) -> Term {
    s.parse().expect("scenario terms are well formed")
}

fn f(s: &str) -> Formula {
    s.parse().expect("scenario formulas are well formed")
}

pub fn unit_plans() -> Vec<Plan> {
    vec![
        Plan::new("fill", TriggerKind::Created, t("created(n1, Me, fill(LQ, X, MN, MX))"))
            .with_guard(f("valve_of(V) & target(X, T)"))
            .then(Action::Send { to: t("V"), facts: vec![t("do_fill(Me, LQ, X, T, MN, MX)")] }),
        Plan::new("assess", TriggerKind::Created, t("created(n2, Me, assessed_ok(X, V))"))
            .then(Action::Invoke(t("evaluate(X, V)"))),
        Plan::new("enforce_s1", TriggerKind::SanctionCreated, t("sanction(V, adjust_flow_rate(X))"))
            .then(Action::Send { to: t("V"), facts: vec![t("adjust_flow_rate(X)")] })
            .then(Action::RecordDeFacto { rationale: "image_below_threshold".into() })
            .then(Action::Retract(t("sanction(V, adjust_flow_rate(X))"))),
        Plan::new("enforce_s2", TriggerKind::SanctionCreated, t("sanction(V, self_cleaning(X))"))
            .then(Action::Send { to: t("V"), facts: vec![t("self_cleaning(X)")] })
            .then(Action::RecordDeFacto { rationale: "consecutive_violations".into() })
            .then(Action::Retract(t("sanction(V, self_cleaning(X))"))),
    ]
}

pub fn valve_plans() -> Vec<Plan> {
    vec![
        Plan::new("pour", TriggerKind::FactAdded, t("do_fill(U, LQ, X, T, MN, MX)"))
            .then(Action::Invoke(t("pour(U, LQ, X, T, MN, MX)"))),
        Plan::new("adjust", TriggerKind::FactAdded, t("adjust_flow_rate(X)")).then(Action::Invoke(t("adjust(X)"))),
        Plan::new("clean", TriggerKind::FactAdded, t("self_cleaning(X)")).then(Action::Invoke(t("clean(X)"))),
    ]
}

pub fn plant_plans() -> Vec<Plan> {
    vec![
        Plan::new("assign", TriggerKind::FactAdded, t("order(LQ, X, T, MN, MX)"))
            .then(Action::Invoke(t("assign(LQ, X, T, MN, MX)"))),
        Plan::new("assess", TriggerKind::Created, t("created(p1, Me, unit_ok(U, X))"))
            .then(Action::Invoke(t("evaluate_unit(U, X)"))),
        Plan::new("enforce_s3", TriggerKind::SanctionCreated, t("sanction(U, adjust_image)"))
            .then(Action::RecordDeFacto { rationale: "image_below_threshold".into() })
            .then(Action::Retract(t("sanction(U, adjust_image)"))),
        Plan::new("enforce_s4", TriggerKind::SanctionCreated, t("sanction(U, disregard)"))
            .then(Action::Assert(t("disregarded(U)")))
            .then(Action::RecordDeFacto { rationale: "consecutive_violations".into() })
            .then(Action::Retract(t("sanction(U, disregard)"))),
        Plan::new("enforce_s5", TriggerKind::SanctionCreated, t("sanction(U, manual_intervention)"))
            .then(Action::Invoke(t("alarm(U)")))
            .then(Action::RecordDeFacto { rationale: "consecutive_violations".into() })
            .then(Action::Retract(t("sanction(U, manual_intervention)"))),
    ]
}

/// The simulated plant hardware as seen through agent actions.
struct World {
    cfg: ScenarioConfig,
    orders: Vec<Order>,
    injected: Vec<bool>,
    bottle_index: HashMap<String, usize>,
    valves: IndexMap<String, ValveModel>,
    results: HashMap<String, FillResult>,
    fills: Vec<FillLog>,
    outcomes: Vec<OrderOutcome>,
}

impl World {
    fn new(cfg: &ScenarioConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let orders: Vec<Order> = (0..cfg.orders)
            .map(|k| Order {
                liquid: cfg.liquids[k % cfg.liquids.len()].clone(),
                bottle: format!("b{}", k + 1),
                target: cfg.target,
                min: cfg.target - cfg.tolerance,
                max: cfg.target + cfg.tolerance,
            })
            .collect();
        // one draw per order, always, so the schedule depends only on the seed
        let injected = (0..cfg.orders)
            .map(|k| {
                let draw: f64 = rng.gen();
                draw < cfg.injection.probability || cfg.injection.at.contains(&(k + 1))
            })
            .collect();
        let valves = (1..=cfg.valves)
            .map(|i| {
                let v = ValveModel {
                    true_rate: cfg.true_rate,
                    clog: 1.0,
                    clog_decay: cfg.clog_decay,
                    estimated_rate: cfg.estimated_rate,
                    viscosity: cfg.viscosity.clone(),
                };
                (valve_id(i), v)
            })
            .collect();
        World {
            cfg: cfg.clone(),
            bottle_index: orders.iter().enumerate().map(|(k, o)| (o.bottle.clone(), k)).collect(),
            outcomes: vec![OrderOutcome::Pending; orders.len()],
            orders,
            injected,
            valves,
            results: HashMap::new(),
            fills: Vec::new(),
        }
    }

    fn assign(&mut self, ctx: &ActionContext<'_>, args: &[Term]) -> Result<Vec<Effect>, String> {
        let bottle = atom(&args[1])?;
        let mut best: Option<(String, f64)> = None;
        let mut units: Vec<String> = facts_like(ctx.beliefs, "unit", 1).map(|a| a[0].to_string()).collect();
        units.sort();
        for u in units {
            if ctx.beliefs.contains(&Term::compound("disregarded", vec![Term::atom(u.clone())])) {
                continue;
            }
            let image = number(&lookup(ctx.beliefs, "unit_image", &[Term::atom(u.clone())])?[1])?;
            if best.as_ref().is_none_or(|(_, b)| image > *b) {
                best = Some((u, image));
            }
        }
        let k = self.order_index(&bottle)?;
        let Some((unit, _)) = best else {
            self.outcomes[k] = OrderOutcome::Unassigned;
            return Ok(vec![
                Effect::Assert(Term::compound("unassigned", vec![Term::atom(bottle.clone())])),
                Effect::Trace { kind: "unassigned".into(), payload: format!("unassigned({bottle})") },
            ]);
        };
        let u = Term::atom(unit.clone());
        let b = Term::atom(bottle.clone());
        Ok(vec![
            Effect::Assert(Term::compound("assigned", vec![u.clone(), b.clone()])),
            Effect::Send {
                to: unit.as_str().into(),
                facts: vec![
                    Term::compound("fill_bottle", vec![args[0].clone(), b.clone(), args[3].clone(), args[4].clone()]),
                    Term::compound("target", vec![b, args[2].clone()]),
                ],
            },
            Effect::Trace { kind: "assign".into(), payload: format!("assign({unit}, {bottle})") },
        ])
    }

    fn pour(&mut self, ctx: &ActionContext<'_>, args: &[Term]) -> Result<Vec<Effect>, String> {
        let valve_name = ctx.agent.to_string();
        let unit = atom(&args[0])?;
        let bottle = atom(&args[2])?;
        let k = self.order_index(&bottle)?;
        let order = self.orders[k].clone();
        let injected = self.injected[k];
        let factor = self.cfg.injection.factor;
        let valve = self.valves.get_mut(&valve_name).ok_or_else(|| format!("no valve {valve_name}"))?;
        let mut effects = Vec::new();
        if injected {
            valve.clog *= factor;
            effects.push(Effect::Trace {
                kind: "clog-injection".into(),
                payload: format!("clog_injection({valve_name}, {bottle})"),
            });
        }
        let result = simulate_fill(valve, &order);
        self.fills.push(FillLog {
            time: ctx.now,
            order: k + 1,
            unit: unit.clone(),
            valve: valve_name.clone(),
            injected,
            result: result.clone(),
            estimated_rate: valve.estimated_rate,
            base_rate: valve.base_rate(),
        });
        self.outcomes[k] = OrderOutcome::Filled { unit: unit.clone(), polarity: result.polarity };
        let fill_term = Term::compound(
            "fill",
            vec![
                Term::atom(valve_name),
                Term::atom(unit.clone()),
                Term::atom(bottle.clone()),
                Term::float(result.actual),
                Term::int(result.polarity.into()),
                Term::float(result.magnitude),
            ],
        );
        effects.push(Effect::Trace { kind: "fill".into(), payload: fill_term.to_string() });
        effects.push(Effect::Send {
            to: unit.as_str().into(),
            facts: vec![Term::compound("bottle_filled", vec![Term::atom(bottle.clone()), Term::float(result.actual)])],
        });
        self.results.insert(bottle, result);
        Ok(effects)
    }

    fn adjust(&mut self, ctx: &ActionContext<'_>, bottle: &str) -> Result<Vec<Effect>, String> {
        let name = ctx.agent.to_string();
        let result = self.results.get(bottle).ok_or_else(|| format!("no fill recorded for {bottle}"))?;
        let valve = self.valves.get_mut(&name).ok_or_else(|| format!("no valve {name}"))?;
        let before = valve.estimated_rate;
        *valve = s1_adjust(valve, result);
        let payload = Term::compound(
            "adjust",
            vec![Term::atom(name), Term::atom(bottle), Term::float(before), Term::float(valve.estimated_rate)],
        );
        Ok(vec![Effect::Trace { kind: "s1-adjust".into(), payload: payload.to_string() }])
    }

    fn clean(&mut self, ctx: &ActionContext<'_>, bottle: &str) -> Result<Vec<Effect>, String> {
        let name = ctx.agent.to_string();
        let valve = self.valves.get_mut(&name).ok_or_else(|| format!("no valve {name}"))?;
        valve.clean();
        // a clean valve runs at its nominal rate again, so corrections made
        // while it was clogged no longer apply
        valve.estimated_rate = self.cfg.estimated_rate;
        Ok(vec![Effect::Trace { kind: "self-cleaning".into(), payload: format!("self_cleaning({name}, {bottle})") }])
    }

    /// Unit-side Evaluator: deviation and learning factors for the valve.
    fn evaluate(&self, ctx: &ActionContext<'_>, bottle: &Term, valve: &Term) -> Result<Vec<Effect>, String> {
        let fb = ctx.beliefs;
        let level = number(&lookup(fb, "bottle_filled", std::slice::from_ref(bottle))?[1])?;
        let order = lookup(fb, "fill_bottle", &[Term::var("_LQ"), bottle.clone()])?;
        let target = number(&lookup(fb, "target", std::slice::from_ref(bottle))?[1])?;
        let (min, max) = (number(&order[2])?, number(&order[3])?);
        let result = FillResult::assess(atom(bottle)?, target, level, min, max);
        let mut effects = self.learn(fb, ("image", "consecutive"), valve, result.polarity)?;
        effects.push(Effect::Assert(Term::compound("polarity", vec![valve.clone(), bottle.clone(), Term::int(result.polarity.into())])));
        effects.push(Effect::Assert(Term::compound("magnitude", vec![bottle.clone(), Term::float(result.magnitude)])));
        effects.push(Effect::Assert(Term::compound("factors_updated", vec![bottle.clone()])));
        effects.push(Effect::Send {
            to: PLANT.into(),
            facts: vec![Term::compound(
                "filled_report",
                vec![ctx.agent.as_term(), bottle.clone(), Term::float(level), order[2].clone(), order[3].clone()],
            )],
        });
        Ok(effects)
    }

    /// Plant-side Evaluator for a unit's report.
    fn evaluate_unit(&self, ctx: &ActionContext<'_>, unit: &Term, bottle: &Term) -> Result<Vec<Effect>, String> {
        let fb = ctx.beliefs;
        let report = lookup(fb, "filled_report", &[unit.clone(), bottle.clone()])?;
        let k = self.order_index(&atom(bottle)?)?;
        let (level, min, max) = (number(&report[2])?, number(&report[3])?, number(&report[4])?);
        let result = FillResult::assess(atom(bottle)?, self.orders[k].target, level, min, max);
        let mut effects = self.learn(fb, ("unit_image", "unit_consecutive"), unit, result.polarity)?;
        effects.push(Effect::Assert(Term::compound("unit_polarity", vec![unit.clone(), bottle.clone(), Term::int(result.polarity.into())])));
        effects.push(Effect::Assert(Term::compound("unit_assessed", vec![bottle.clone()])));
        Ok(effects)
    }

    /// Replaces the image and consecutive-violation facts about `who`.
    fn learn(&self, fb: &FactBase, (image_name, streak_name): (&str, &str), who: &Term, polarity: i8) -> Result<Vec<Effect>, String> {
        let old_image = lookup(fb, image_name, std::slice::from_ref(who))?[1].clone();
        let old_streak = lookup(fb, streak_name, std::slice::from_ref(who))?[1].clone();
        let image = update_image(ImageScore::new(number(&old_image)?), polarity, self.cfg.alpha);
        let streak = match (polarity < 0, &old_streak) {
            (true, Term::Number(n)) => n.as_f64() as i64 + 1,
            (true, other) => return Err(format!("streak {other} is not a number")),
            (false, _) => 0,
        };
        Ok(vec![
            Effect::Retract(Term::compound(image_name, vec![who.clone(), old_image])),
            Effect::Retract(Term::compound(streak_name, vec![who.clone(), old_streak])),
            Effect::Assert(Term::compound(image_name, vec![who.clone(), Term::float(image.value())])),
            Effect::Assert(Term::compound(streak_name, vec![who.clone(), Term::int(streak)])),
        ])
    }

    fn order_index(&self, bottle: &str) -> Result<usize, String> {
        self.bottle_index.get(bottle).copied().ok_or_else(|| format!("unknown bottle {bottle}"))
    }
}

impl Environment for World {
    fn invoke(&mut self, ctx: &ActionContext<'_>, action: &Term) -> Result<Vec<Effect>, String> {
        let args = action.args();
        match action.functor() {
            Some(("assign", 5)) => self.assign(ctx, args),
            Some(("pour", 6)) => self.pour(ctx, args),
            Some(("adjust", 1)) => self.adjust(ctx, &atom(&args[0])?),
            Some(("clean", 1)) => self.clean(ctx, &atom(&args[0])?),
            Some(("evaluate", 2)) => self.evaluate(ctx, &args[0], &args[1]),
            Some(("evaluate_unit", 2)) => self.evaluate_unit(ctx, &args[0], &args[1]),
            Some(("alarm", 1)) => Ok(vec![Effect::Trace { kind: "alarm".into(), payload: format!("alarm({})", args[0]) }]),
            _ => Err(format!("unknown plant action {action}")),
        }
    }
}

fn atom(t: &Term) -> Result<String, String> {
    t.as_atom().map(str::to_string).ok_or_else(|| format!("{t} is not an identifier"))
}

fn number(t: &Term) -> Result<f64, String> {
    t.as_number().map(|n| n.as_f64()).ok_or_else(|| format!("{t} is not a number"))
}

fn facts_like<'a>(fb: &'a FactBase, name: &'a str, arity: usize) -> impl Iterator<Item = &'a [Term]> + 'a {
    fb.facts().filter(move |f| f.functor() == Some((name, arity))).map(Term::args)
}

/// Arguments of the first `name(prefix.., _..)` fact, searching by the
/// leading arguments.
fn lookup(fb: &FactBase, name: &str, prefix: &[Term]) -> Result<Vec<Term>, String> {
    for args in fb.facts().filter(|f| f.functor().is_some_and(|(n, a)| n == name && a >= prefix.len())).map(Term::args) {
        let mut s = Some(Substitution::new());
        for (p, a) in prefix.iter().zip(args) {
            s = s.and_then(|s| unify(p, a, &s));
        }
        if s.is_some() {
            return Ok(args.to_vec());
        }
    }
    let shown: Vec<String> = prefix.iter().map(ToString::to_string).collect();
    Err(format!("no {name}({}, ..) belief", shown.join(", ")))
}

fn initial_beliefs(cfg: &ScenarioConfig) -> Vec<(String, Vec<Term>)> {
    let image = Term::float(cfg.initial_image);
    let threshold = Term::float(cfg.image_threshold);
    let mut plant = vec![
        t(&format!("me({PLANT})")),
        Term::compound("image_threshold", vec![threshold.clone()]),
        Term::compound("remove_threshold", vec![Term::int(cfg.remove_threshold.into())]),
    ];
    if cfg.alarm_with_disregard {
        plant.push(t("alarm_enabled"));
    }
    let mut out = Vec::new();
    for i in 1..=cfg.units {
        let (u, v) = (Term::atom(unit_id(i)), Term::atom(valve_id(i)));
        plant.push(Term::compound("unit", vec![u.clone()]));
        plant.push(Term::compound("unit_image", vec![u.clone(), image.clone()]));
        plant.push(Term::compound("unit_consecutive", vec![u.clone(), Term::int(0)]));
        let unit = vec![
            Term::compound("me", vec![u]),
            Term::compound("valve_of", vec![v.clone()]),
            Term::compound("image", vec![v.clone(), image.clone()]),
            Term::compound("consecutive", vec![v.clone(), Term::int(0)]),
            Term::compound("image_threshold", vec![threshold.clone()]),
            Term::compound("clean_threshold", vec![Term::int(cfg.clean_threshold.into())]),
        ];
        out.push((unit_id(i), unit));
        out.push((valve_id(i), vec![Term::compound("me", vec![v])]));
    }
    out.insert(0, (PLANT.to_string(), plant));
    out
}

/// Runs the whole order schedule. Orders arrive one per interval and each is
/// processed until the system is quiet before the next one.
pub fn run_scenario(cfg: &ScenarioConfig, trace_out: Option<Box<dyn Write>>) -> Result<ScenarioReport, ScenarioError> {
    cfg.validate()?;
    let mut world = World::new(cfg);
    let mut sys = System::new();
    if let Some(out) = trace_out {
        sys.set_trace_writer(out);
    }
    let engine = |src: &str| Engine::from_source(src).expect("bundled De Jure programs load");
    sys.add_agent(Agent::new(PLANT, engine(PLANT_DE_JURE), plant_plans()))?;
    for i in 1..=cfg.units {
        sys.add_agent(Agent::new(unit_id(i).as_str(), engine(UNIT_DE_JURE), unit_plans()))?;
        sys.add_agent(Agent::new(valve_id(i).as_str(), engine("np valve {}"), valve_plans()))?;
    }
    for (agent, facts) in initial_beliefs(cfg) {
        sys.perceive(&agent, facts)?;
    }
    sys.run_until_quiet(&mut world)?;

    for (k, o) in world.orders.clone().iter().enumerate() {
        sys.advance_to((k as u64 + 1) * cfg.order_interval_ms)?;
        let order = Term::compound(
            "order",
            vec![
                Term::atom(o.liquid.clone()),
                Term::atom(o.bottle.clone()),
                Term::float(o.target),
                Term::float(o.min),
                Term::float(o.max),
            ],
        );
        sys.send(CUSTOMER, PLANT, vec![order])?;
        sys.run_until_quiet(&mut world)?;
    }

    let mut sanctions: Vec<SanctionLog> = Vec::new();
    for a in sys.agents() {
        for s in a.engine().sanction_log() {
            sanctions.push(SanctionLog {
                time: s.time,
                id: s.rule.to_uppercase(),
                sanctioner: a.id().to_string(),
                target: s.target.to_string(),
                content: s.content.to_string(),
            });
        }
    }
    sanctions.sort_by_key(|s| s.time);
    let de_facto = sys
        .agents()
        .flat_map(|a| a.de_facto().records().iter().map(|r| (a.id().to_string(), r.clone())))
        .collect();

    let mut images = BTreeMap::new();
    for i in 1..=cfg.units {
        let unit = sys.agent(&unit_id(i)).expect("unit registered");
        let v = lookup(unit.beliefs(), "image", &[Term::atom(valve_id(i))]).ok().and_then(|a| number(&a[1]).ok());
        images.insert(valve_id(i), v.unwrap_or(cfg.initial_image));
        let plant = sys.agent(PLANT).expect("plant registered");
        let u = lookup(plant.beliefs(), "unit_image", &[Term::atom(unit_id(i))]).ok().and_then(|a| number(&a[1]).ok());
        images.insert(unit_id(i), u.unwrap_or(cfg.initial_image));
    }
    let summary = Summary::build(cfg, &world.outcomes, &sanctions, images);
    Ok(ScenarioReport {
        config: cfg.clone(),
        orders: world.orders,
        outcomes: world.outcomes,
        fills: world.fills,
        sanctions,
        de_facto,
        valves: world.valves,
        trace: sys.trace().to_vec(),
        summary,
    })
}
