//! The chapters of the guide in `book/`, compiled as doctests so that every
//! listing keeps running against the current code.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/housing-market.md")]
pub mod housing_market {}
#[doc = include_str!("../../../book/src/prices.md")]
pub mod prices {}
#[doc = include_str!("../../../book/src/spending-game.md")]
pub mod spending_game {}
#[doc = include_str!("../../../book/src/policy.md")]
pub mod policy {}
#[doc = include_str!("../../../book/src/rdd.md")]
pub mod rdd {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
