//! Hidden-board tick-tack-toe world and an agent that learns its rules
//! from lamp readings alone.

pub mod agent;
pub mod belief;
pub mod induction;
pub mod model;
pub mod planner;
pub mod rules;
pub mod scalar;
pub mod trace;
pub mod world;

/// Exact values for search and tests.
pub type Rational = num_rational::Ratio<i64>;
pub type ExactSearch = planner::Search<Rational>;
pub type FloatSearch = planner::Search<f64>;
