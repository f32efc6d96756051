//! Learning-augmented online allocation.
//!
//! Two fractional online algorithms that take a per-item predicted buyer and a
//! confidence parameter `eta` (0 = full trust in the prediction, 1 = none):
//!
//! * [`bounded`]: three-stage water-filling for online bounded allocation
//!   (fixed item prices, interested-buyer sets), certified by a level-based
//!   dual solution.
//! * [`auction`]: multiplicative primal-dual algorithm for online ad-auctions
//!   (per-buyer bids), with a fictitious buyer `0` that absorbs unsold items.
//!
//! Around them: offline optima ([`offline`]), synthetic prediction oracles
//! ([`predictions`]), instance generators ([`generators`]) and an experiment
//! harness ([`harness`]) producing competitive-ratio sweeps as CSV and SVG.
//!
//! Buyers are numbered `1..=n`; buyer `0` is the fictitious buyer everywhere.
//! Items are numbered `0..m` in memory and `1..=m` in every text format.

pub mod auction;
pub mod bounded;
pub mod error;
pub mod generators;
pub mod harness;
pub mod io;
pub mod market;
pub mod offline;
pub mod predictions;
pub mod rng;

pub use error::{Error, Result};
pub use market::{
    check_dual_feasibility, check_primal_feasibility, duality_gap, revenue, AuctionInstance, BoundedInstance,
    BoundedItem, BuyerId, DualFeasibilityReport, DualSolution, FractionalAllocation, Instance, Market, Prediction,
    PrimalFeasibilityReport, EPS, FICTITIOUS,
};
