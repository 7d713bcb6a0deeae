//! Recursive-descent parser for the extended-SQL dialect. Keywords are
//! case-insensitive; errors carry the exact token position and the set of
//! alternatives that would have been accepted there.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::policy::CompliancePolicy;
use crate::region::Region;
use crate::value::ColumnType;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: expected {}, found `{}`",
            self.line,
            self.column,
            self.expected.join(" | "),
            self.found
        )
    }
}

/// Parses a whole program into statements in source order.
pub fn parse_program(text: &str) -> Result<Vec<Statement>, SyntaxError> {
    let tokens = tokenize(text).map_err(|e| SyntaxError {
        line: e.line,
        column: e.column,
        expected: vec!["token".to_string()],
        found: e.message,
    })?;
    let mut p = Parser { tokens, pos: 0 };
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Statement-structure keywords that can never be column or table names.
const RESERVED: [&str; 22] = [
    "SELECT", "FROM", "WHERE", "AND", "GROUP", "BY", "AT", "REGISTER", "TABLE", "CARD",
    "ROWBYTES", "COLS", "DISTINCT", "CONSTRAINT", "DENY", "SHIP", "TO", "ALLOW", "ONLY",
    "AGGREGATED", "ANY", "AS",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word.to_ascii_uppercase().as_str())
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.kind, TokenKind::Eof) {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            line: tok.line,
            column: tok.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.kind.describe(),
        }
    }

    fn error_here(&self, expected: &[&str]) -> SyntaxError {
        self.error_at(self.peek(), expected)
    }

    /// Uppercased keyword at the cursor, if the cursor is an identifier.
    fn keyword(&self) -> Option<String> {
        match &self.peek().kind {
            TokenKind::Ident(s) => Some(s.to_ascii_uppercase()),
            _ => None,
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.keyword().as_deref() == Some(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error_here(&[kw]))
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(&self.peek().kind, TokenKind::Punct(q) if *q == p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(&[p]))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !is_reserved(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error_here(&[what])),
        }
    }

    fn expect_uint(&mut self, what: &str) -> Result<u64, SyntaxError> {
        match self.peek().kind {
            TokenKind::Int(v) if v >= 0 => {
                self.advance();
                Ok(v as u64)
            }
            _ => Err(self.error_here(&[what])),
        }
    }

    fn expect_region(&mut self) -> Result<Region, SyntaxError> {
        let tok = self.peek().clone();
        match self.keyword() {
            Some(kw) => match kw.parse::<Region>() {
                Ok(r) => {
                    self.advance();
                    Ok(r)
                }
                Err(_) => Err(self.error_at(&tok, &["EU", "NA", "ME", "AS"])),
            },
            None => Err(self.error_at(&tok, &["EU", "NA", "ME", "AS"])),
        }
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        match self.keyword().as_deref() {
            Some("REGISTER") => self.register(),
            Some("CONSTRAINT") => self.policy(),
            Some("SELECT") => self.select(),
            _ => Err(self.error_here(&["REGISTER", "CONSTRAINT", "SELECT"])),
        }
    }

    fn register(&mut self) -> Result<Statement, SyntaxError> {
        self.expect_keyword("REGISTER")?;
        self.expect_keyword("TABLE")?;
        let name = self.expect_ident("table name")?;
        self.expect_keyword("AT")?;
        let region = self.expect_region()?;
        self.expect_keyword("CARD")?;
        let row_count = self.expect_uint("row count ≥ 0")?;
        self.expect_keyword("ROWBYTES")?;
        let bytes_tok = self.peek().clone();
        let row_bytes = self.expect_uint("row bytes > 0")?;
        if row_bytes == 0 {
            return Err(self.error_at(&bytes_tok, &["row bytes > 0"]));
        }
        self.expect_keyword("COLS")?;
        self.expect_punct("(")?;
        let mut columns = Vec::new();
        loop {
            let col_tok = self.peek().clone();
            let col_name = self.expect_ident("column name")?;
            if columns.iter().any(|c: &ColumnDef| c.name == col_name) {
                return Err(self.error_at(&col_tok, &["distinct column name"]));
            }
            let ty_tok = self.peek().clone();
            let ty = match self.keyword().as_deref() {
                Some("INT") => ColumnType::Int64,
                Some("FLOAT") => ColumnType::Float64,
                Some("TEXT") => ColumnType::Text,
                Some("BOOL") => ColumnType::Bool,
                Some("DATE") => ColumnType::Date,
                _ => return Err(self.error_at(&ty_tok, &["INT", "FLOAT", "TEXT", "BOOL", "DATE"])),
            };
            self.advance();
            let mut distinct = None;
            if self.eat_keyword("DISTINCT") {
                let d_tok = self.peek().clone();
                let d = self.expect_uint("distinct count")?;
                let valid = if row_count > 0 { (1..=row_count).contains(&d) } else { d >= 1 };
                if !valid {
                    return Err(self.error_at(&d_tok, &["DISTINCT in [1, CARD]"]));
                }
                distinct = Some(d);
            }
            columns.push(ColumnDef { name: col_name, ty, distinct });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(Statement::Register(TableDef { name, region, row_count, row_bytes, columns }))
    }

    fn policy(&mut self) -> Result<Statement, SyntaxError> {
        self.expect_keyword("CONSTRAINT")?;
        match self.keyword().as_deref() {
            Some("DENY") => {
                self.advance();
                self.expect_keyword("SHIP")?;
                self.expect_keyword("FROM")?;
                let from = self.expect_region()?;
                self.expect_keyword("TO")?;
                let to_tok = self.peek().clone();
                let to = if self.eat_keyword("ANY") { None } else { Some(self.expect_region()?) };
                self.expect_punct(";")?;
                let policy = CompliancePolicy::deny_ship(from, to)
                    .map_err(|_| self.error_at(&to_tok, &["a region different from FROM", "ANY"]))?;
                Ok(Statement::Policy(policy))
            }
            Some("ALLOW") => {
                self.advance();
                self.expect_keyword("ONLY")?;
                self.expect_keyword("AGGREGATED")?;
                self.expect_keyword("FROM")?;
                let from = self.expect_region()?;
                self.expect_punct(";")?;
                Ok(Statement::Policy(CompliancePolicy::AggregatedOnly { from }))
            }
            _ => Err(self.error_here(&["DENY", "ALLOW"])),
        }
    }

    fn select(&mut self) -> Result<Statement, SyntaxError> {
        self.expect_keyword("SELECT")?;
        let items = self.items()?;
        self.expect_keyword("FROM")?;
        let mut tables = Vec::new();
        loop {
            let tok = self.peek().clone();
            let t = self.expect_ident("table name")?;
            if tables.contains(&t) {
                return Err(self.error_at(&tok, &["a table not already in FROM"]));
            }
            tables.push(t);
            if !self.eat_punct(",") {
                break;
            }
        }
        let mut predicates = Vec::new();
        if self.eat_keyword("WHERE") {
            loop {
                predicates.push(self.predicate()?);
                if !self.eat_keyword("AND") {
                    break;
                }
            }
        }
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by.push(self.colref()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let target_region = if self.eat_keyword("AT") { Some(self.expect_region()?) } else { None };
        self.expect_punct(";")?;
        Ok(Statement::Query(SelectSpec { items, tables, predicates, group_by, target_region }))
    }

    fn items(&mut self) -> Result<SelectItems, SyntaxError> {
        if self.eat_punct("*") {
            return Ok(SelectItems::Star);
        }
        let mut list = Vec::new();
        loop {
            list.push(self.item()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(SelectItems::List(list))
    }

    fn item(&mut self) -> Result<SelectItem, SyntaxError> {
        let agg = match self.keyword().as_deref() {
            Some("COUNT") => Some(AggFunc::Count),
            Some("SUM") => Some(AggFunc::Sum),
            Some("AVG") => Some(AggFunc::Avg),
            Some("MIN") => Some(AggFunc::Min),
            Some("MAX") => Some(AggFunc::Max),
            _ => None,
        };
        // An aggregate keyword only counts when followed by `(`.
        if let Some(func) = agg {
            if matches!(&self.tokens[self.pos + 1].kind, TokenKind::Punct("(")) {
                self.advance();
                self.expect_punct("(")?;
                let arg = if self.eat_punct("*") {
                    if func != AggFunc::Count {
                        return Err(self.error_here(&["column reference (only COUNT takes *)"]));
                    }
                    None
                } else {
                    Some(self.colref()?)
                };
                self.expect_punct(")")?;
                return Ok(SelectItem::Agg(AggCall { func, arg }));
            }
        }
        if matches!(&self.peek().kind, TokenKind::Ident(s) if !is_reserved(s)) {
            return Ok(SelectItem::Col(self.colref()?));
        }
        Err(self.error_here(&["*", "column reference", "aggregate call"]))
    }

    fn colref(&mut self) -> Result<ColRef, SyntaxError> {
        let first = self.expect_ident("column reference")?;
        if self.eat_punct(".") {
            let column = self.expect_ident("column name")?;
            Ok(ColRef { table: Some(first), column })
        } else {
            Ok(ColRef { table: None, column: first })
        }
    }

    fn predicate(&mut self) -> Result<Predicate, SyntaxError> {
        let lhs = self.colref()?;
        let op_tok = self.peek().clone();
        let op = match &op_tok.kind {
            TokenKind::Punct("=") => CmpOp::Eq,
            TokenKind::Punct("<") => CmpOp::Lt,
            TokenKind::Punct(">") => CmpOp::Gt,
            TokenKind::Punct("<=") => CmpOp::Le,
            TokenKind::Punct(">=") => CmpOp::Ge,
            TokenKind::Punct("!=") | TokenKind::Punct("<>") => CmpOp::Ne,
            _ => return Err(self.error_here(&["=", "<", ">", "<=", ">=", "!="])),
        };
        self.advance();
        // RHS: literal, TRUE/FALSE, or a column reference (equi-join, = only).
        match self.peek().kind.clone() {
            TokenKind::Int(v) => {
                self.advance();
                Ok(Predicate::Filter(lhs, op, Literal::Int(v)))
            }
            TokenKind::Float(v) => {
                self.advance();
                Ok(Predicate::Filter(lhs, op, Literal::Float(v)))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Predicate::Filter(lhs, op, Literal::Str(s)))
            }
            TokenKind::Ident(_) => {
                match self.keyword().as_deref() {
                    Some("TRUE") => {
                        self.advance();
                        return Ok(Predicate::Filter(lhs, op, Literal::Bool(true)));
                    }
                    Some("FALSE") => {
                        self.advance();
                        return Ok(Predicate::Filter(lhs, op, Literal::Bool(false)));
                    }
                    _ => {}
                }
                let rhs_tok = self.peek().clone();
                let rhs = self.colref()?;
                if op != CmpOp::Eq {
                    return Err(self.error_at(&rhs_tok, &["literal (column-to-column joins use =)"]));
                }
                Ok(Predicate::Join(lhs, rhs))
            }
            _ => Err(self.error_here(&["literal", "column reference"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deny_ship_policy_parses() {
        let stmts = parse_program("CONSTRAINT DENY SHIP FROM NA TO EU;").unwrap();
        assert_eq!(
            stmts,
            vec![Statement::Policy(
                CompliancePolicy::deny_ship(Region::NA, Some(Region::EU)).unwrap()
            )]
        );
    }

    #[test]
    fn aggregated_only_policy_parses() {
        let stmts = parse_program("constraint allow only aggregated from eu;").unwrap();
        assert_eq!(
            stmts,
            vec![Statement::Policy(CompliancePolicy::AggregatedOnly { from: Region::EU })]
        );
    }

    #[test]
    fn select_from_without_items_errors_at_from() {
        let err = parse_program("SELECT FROM;").unwrap_err();
        assert_eq!((err.line, err.column), (1, 8));
        assert_eq!(err.found, "FROM");
        assert!(err.expected.iter().any(|e| e == "*"));
    }

    #[test]
    fn register_parses_with_stats() {
        let text = "REGISTER TABLE orders AT EU CARD 1500 ROWBYTES 120 \
                    COLS (o_orderkey INT DISTINCT 1500, o_custkey INT DISTINCT 150, o_date DATE);";
        let stmts = parse_program(text).unwrap();
        match &stmts[0] {
            Statement::Register(t) => {
                assert_eq!(t.name, "orders");
                assert_eq!(t.region, Region::EU);
                assert_eq!(t.row_count, 1500);
                assert_eq!(t.columns.len(), 3);
                assert_eq!(t.columns[1].distinct, Some(150));
                assert_eq!(t.columns[2].distinct, None);
            }
            other => panic!("expected register, got {other:?}"),
        }
    }

    #[test]
    fn distinct_out_of_range_is_rejected() {
        let text = "REGISTER TABLE t AT EU CARD 10 ROWBYTES 8 COLS (a INT DISTINCT 11);";
        let err = parse_program(text).unwrap_err();
        assert!(err.expected[0].contains("DISTINCT"));
    }

    #[test]
    fn degenerate_deny_ship_is_rejected() {
        let err = parse_program("CONSTRAINT DENY SHIP FROM EU TO EU;").unwrap_err();
        assert!(err.expected[0].contains("different"));
    }

    #[test]
    fn full_select_parses() {
        let text = "SELECT c.name, SUM(o.total) FROM c, o \
                    WHERE c.id = o.cid AND o.total > 10 GROUP BY c.name AT AS;";
        let stmts = parse_program(text).unwrap();
        match &stmts[0] {
            Statement::Query(q) => {
                assert_eq!(q.tables, vec!["c".to_string(), "o".to_string()]);
                assert_eq!(q.predicates.len(), 2);
                assert_eq!(q.group_by.len(), 1);
                assert_eq!(q.target_region, Some(Region::AS));
            }
            other => panic!("expected query, got {other:?}"),
        }
    }

    #[test]
    fn statements_keep_source_order() {
        let text = "REGISTER TABLE t AT EU CARD 1 ROWBYTES 1 COLS (a INT);\n\
                    CONSTRAINT DENY SHIP FROM NA TO ANY;\n\
                    SELECT * FROM t;";
        let stmts = parse_program(text).unwrap();
        assert!(matches!(stmts[0], Statement::Register(_)));
        assert!(matches!(stmts[1], Statement::Policy(_)));
        assert!(matches!(stmts[2], Statement::Query(_)));
    }
}
