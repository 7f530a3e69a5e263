//! Competition between school districts in a sorting housing market.
//!
//! Arriving households differ in income and choose among homes whose value
//! to them combines house quality and the quality of the local school.
//! Districts fund schools from property taxes; equilibrium home prices
//! capitalise both. The crate computes the housing-market equilibrium for
//! any spending profile, the spending game between districts, and the
//! welfare effects of caps, fees and floors on school spending.

pub mod distribution;
pub mod districts;
pub mod econ;
pub mod economy;
pub mod error;
pub mod market;
pub mod numerics;
pub mod policy;
pub mod scenarios;

pub use distribution::{Distribution, DistributionSpec};
pub use districts::{DistrictObjectiveValue, Game, GameSolution, SolverSettings, TaxSchedule};
pub use econ::{ClosedForm, PaymentPriceVector, SavingsSolution, UtilitySpec};
pub use economy::{District, Economy, OldWealth, OutsideOption, RenterShare, SchoolTech};
pub use error::{Error, Result};
