//! The compliant geo-distributed optimizer: lineage tagging, SHIP-edge
//! compliance checking, cost modeling, and exhaustive DP plan search.

mod check;
mod cost;
mod optimize;
mod site;
mod stats;

pub use check::{check_plan, ship_violates, Compliance, ShipViolation};
pub use cost::{estimate_cost, CostModel, ShipRates};
pub use optimize::{
    extract_shape, optimize, optimize_shape, BestPlan, Optimized, OptimizeError, QueryShape,
    RootKind, ShapePred, ShapeTable, MAX_TABLES,
};
pub use site::{LineageTag, SiteNode, SitePlan};
pub use stats::{column_width, distinct_of, pred_key, Estimator, StatsError, SubtreeContent, AGG_OUTPUT_WIDTH};
