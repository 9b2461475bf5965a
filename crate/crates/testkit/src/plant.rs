//! Independent checks over a finished filling-plant run.

use myjoghurt::{FillLog, ScenarioReport};

/// Consecutive violations of `who` (a unit or valve) counted over the fills
/// up to and including time `t`.
pub fn streak_at(fills: &[FillLog], who: &str, t: u64) -> usize {
    let mut streak = 0;
    for f in fills.iter().filter(|f| f.time <= t && (f.unit == who || f.valve == who)) {
        streak = if f.result.is_violation() { streak + 1 } else { 0 };
    }
    streak
}

/// S2, S4 and S5 applied before their target reached the threshold streak.
pub fn gating_counterexamples(r: &ScenarioReport) -> Vec<String> {
    let mut bad = Vec::new();
    for s in &r.sanctions {
        let need = match s.id.as_str() {
            "S2" => r.config.clean_threshold as usize,
            "S4" | "S5" => r.config.remove_threshold as usize,
            _ => continue,
        };
        let streak = streak_at(&r.fills, &s.target, s.time);
        if streak < need {
            bad.push(format!("{} on {} at t={} after only {streak} consecutive violations", s.id, s.target, s.time));
        }
    }
    bad
}
