//! Execution manager and simulated node executors: certificate-gated
//! placement, equivalent-variant selection under budget, and in-process
//! execution of site plans over generated data.

mod node;
mod run;
mod table;
mod variant;

pub use node::{
    parse_node_registry, verify_certificates, AuthorityRegistry, CertError, Certificate,
    NodeExecutorInfo, NodeRegistryError,
};
pub use run::{execute_plan, transfer_asset_id, ExecError, ExecOutput};
pub use table::{generate_table, Database, Table};
pub use variant::{
    operator_category, operators, select_variants, usage_price, ExecutionPlan,
    ImplementationVariant, OperatorBinding, SelectError,
};
