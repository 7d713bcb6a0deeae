pub mod bill;
pub mod catalog;
pub mod demo;
pub mod escrow;
pub mod plan;
pub mod run;
