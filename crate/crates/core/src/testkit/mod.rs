//! Independent oracles for testing: a nested-loop reference evaluator, a
//! brute-force plan enumerator with its own compliance and cost walkers, a
//! plain-product variant-selection oracle, a linear-scan matchmaking oracle,
//! escrow transcript safety walkers, and a random query generator.
//!
//! Nothing in the crate's production paths calls into this module.

mod gen_assets;
mod genquery;
mod match_oracle;
mod misc;
mod plan_oracle;
mod ref_eval;
mod select_oracle;
mod transcript_check;

pub use gen_assets::random_descriptor;
pub use genquery::{random_program, GenConfig};
pub use match_oracle::linear_scan_match;
pub use misc::{bind_builtin, site_all_at};
pub use plan_oracle::{best_compliant_by_enumeration, oracle_compliant, oracle_cost};
pub use ref_eval::{nested_loop_eval, sorted_rows};
pub use select_oracle::{enumerate_selection, OracleSelection};
pub use transcript_check::{check_atomicity, check_mediator_blindness, chunk_paid_and_released};
