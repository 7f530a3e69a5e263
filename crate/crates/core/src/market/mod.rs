//! Housing-market equilibrium: assignment, money values and prices.

mod assign;
mod audit;
mod money;
mod prices;

pub use assign::{assign_by_school_levels, assign_locations, Allocation, Cutoffs, Member, Segment};
pub use audit::{ic_audit, Deviation, IcReport};
pub use money::{money_values, money_values_with_steps, outside_pdv, MoneyValueSolution, DEFAULT_ODE_STEPS};
pub use prices::{steady_state_price, steady_state_prices, two_period_price};
