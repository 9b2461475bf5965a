//! A filling plant where units sanction their valves and the plant sanctions
//! its units, all through NPL(s) De Jure programs and agent plans.

pub mod config;
pub mod model;
pub mod scenario;
pub mod summary;

pub use config::{ConfigError, Injection, ScenarioConfig};
pub use model::{s1_adjust, simulate_fill, update_image, FillResult, ImageScore, Order, ValveModel};
pub use scenario::{run_scenario, FillLog, OrderOutcome, SanctionLog, ScenarioError, ScenarioReport};
pub use summary::Summary;
