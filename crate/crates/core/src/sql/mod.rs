//! The extended-SQL frontend: registration statements with table statistics,
//! shipping-policy statements, conjunctive equi-join selects, and lowering to
//! the logical relational algebra.

mod ast;
mod lexer;
mod logical;
mod lower;
mod parser;

pub use ast::{
    AggCall, AggFunc, CmpOp, ColRef, ColumnDef, Literal, Predicate, SelectItem, SelectItems,
    SelectSpec, Statement, TableDef,
};
pub use logical::{LogicalNode, LogicalPlan, OutItem, ResolvedAgg, ResolvedCol, ResolvedFilter};
pub use lower::{split_program, to_logical_plan, LowerError, TableRegistry};
pub use parser::{parse_program, SyntaxError};
