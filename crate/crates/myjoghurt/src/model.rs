//! The physical side of the plant: valves, fills and image scores.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Order {
    pub liquid: String,
    pub bottle: String,
    /// Target volume in ml.
    pub target: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValveModel {
    /// Clean-valve flow rate in ml/s.
    pub true_rate: f64,
    /// In (0, 1]; multiplies the true rate.
    pub clog: f64,
    /// Multiplier applied to `clog` after every fill.
    pub clog_decay: f64,
    /// The valve agent's belief about its own clean flow rate.
    pub estimated_rate: f64,
    pub viscosity: BTreeMap<String, f64>,
}

impl ValveModel {
    pub fn viscosity_of(&self, liquid: &str) -> f64 {
        self.viscosity.get(liquid).copied().unwrap_or(1.0)
    }

    pub fn effective_rate(&self, liquid: &str) -> f64 {
        self.true_rate * self.clog * self.viscosity_of(liquid)
    }

    /// The clean-equivalent rate the valve actually delivers, comparable with
    /// `estimated_rate`.
    pub fn base_rate(&self) -> f64 {
        self.true_rate * self.clog
    }

    pub fn clean(&mut self) {
        self.clog = 1.0;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FillResult {
    pub bottle: String,
    pub intended: f64,
    pub actual: f64,
    /// +1 inside the tolerance window, -1 outside.
    pub polarity: i8,
    /// Distance outside the window in units of the window width.
    pub magnitude: f64,
}

impl FillResult {
    pub fn assess(bottle: impl Into<String>, intended: f64, actual: f64, min: f64, max: f64) -> Self {
        let outside = if actual < min {
            min - actual
        } else if actual > max {
            actual - max
        } else {
            0.0
        };
        FillResult {
            bottle: bottle.into(),
            intended,
            actual,
            polarity: if outside > 0.0 { -1 } else { 1 },
            magnitude: outside / (max - min),
        }
    }

    pub fn is_violation(&self) -> bool {
        self.polarity < 0
    }
}

/// Opens the valve for the window the estimate says is needed, pours at the
/// effective rate, then lets the valve clog a little more.
pub fn simulate_fill(valve: &mut ValveModel, order: &Order) -> FillResult {
    let visc = valve.viscosity_of(&order.liquid);
    let window = order.target / (valve.estimated_rate * visc);
    let actual = window * valve.effective_rate(&order.liquid);
    valve.clog *= valve.clog_decay;
    FillResult::assess(order.bottle.clone(), order.target, actual, order.min, order.max)
}

/// Sanction S1: scale the estimate by how far the sanctioned fill was off.
pub fn s1_adjust(valve: &ValveModel, result: &FillResult) -> ValveModel {
    let mut v = valve.clone();
    v.estimated_rate *= result.actual / result.intended;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ImageScore(f64);

impl ImageScore {
    /// Clamped into [0, 1].
    pub fn new(value: f64) -> Self {
        ImageScore(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One EWMA step towards 1 on compliance and towards 0 on violation.
pub fn update_image(prev: ImageScore, polarity: i8, alpha: f64) -> ImageScore {
    let outcome = if polarity > 0 { 1.0 } else { 0.0 };
    ImageScore::new((1.0 - alpha) * prev.0 + alpha * outcome)
}
