use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::scenario::{unit_id, OrderOutcome, SanctionLog};

pub const SANCTION_IDS: [&str; 5] = ["S1", "S2", "S3", "S4", "S5"];

/// End-of-run figures, printed as TOML.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub orders: usize,
    pub fulfilled: usize,
    pub unassigned: usize,
    /// Share of compliant fills per unit; units that never filled are left out.
    pub compliance_rate: BTreeMap<String, f64>,
    pub sanctions: BTreeMap<String, usize>,
    /// Unit view of each valve and plant view of each unit.
    pub image: BTreeMap<String, f64>,
}

impl Summary {
    pub(crate) fn build(cfg: &ScenarioConfig, outcomes: &[OrderOutcome], sanctions: &[SanctionLog], image: BTreeMap<String, f64>) -> Self {
        let mut per_unit: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let (mut fulfilled, mut unassigned) = (0, 0);
        for o in outcomes {
            match o {
                OrderOutcome::Filled { unit, polarity } => {
                    fulfilled += 1;
                    let e = per_unit.entry(unit.clone()).or_default();
                    e.1 += 1;
                    if *polarity > 0 {
                        e.0 += 1;
                    }
                }
                OrderOutcome::Unassigned => unassigned += 1,
                OrderOutcome::Pending => {}
            }
        }
        let compliance_rate = (1..=cfg.units)
            .map(unit_id)
            .filter_map(|u| per_unit.get(&u).map(|(ok, n)| (u, *ok as f64 / *n as f64)))
            .collect();
        let mut counts: BTreeMap<String, usize> = SANCTION_IDS.iter().map(|s| (s.to_string(), 0)).collect();
        for s in sanctions {
            *counts.entry(s.id.clone()).or_default() += 1;
        }
        Summary { orders: outcomes.len(), fulfilled, unassigned, compliance_rate, sanctions: counts, image }
    }

    pub fn sanction_count(&self, id: &str) -> usize {
        self.sanctions.get(id).copied().unwrap_or(0)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summaries always serialize")
    }
}
