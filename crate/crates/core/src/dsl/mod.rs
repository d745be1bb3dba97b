//! Text format for theories, values, and instruction queues.
//!
//! A theory file looks like:
//!
//! ```text
//! theory Ledger {
//!   precision k=2 m=2;
//!
//!   fields {
//!     total: !;
//!     notes: ?;
//!   }
//!
//!   forms {
//!     Invoice {
//!       total = <0>;
//!       notes = <>;
//!     }
//!   }
//!
//!   filters {
//!     All(d) where true;
//!   }
//!
//!   transactions {
//!     Approve;
//!   }
//!
//!   default trans skip-queue;
//!
//!   on trans Invoice.Approve(params) when true emit {
//!     set notes := <approved>;
//!   }
//! }
//! ```
//!
//! The optional `precision` statement must come first when present.
//! Identifiers that are not reserved variable names (`docID`, `fValue`,
//! `params`, `model`, `doc`, `id`, and a filter's form variable inside its
//! own guard) denote urelement constants. Bare integers denote the
//! corresponding numerals; `nat(7)` and `real("01.50")` build numerals and
//! fixed-precision decimals explicitly. `<...>` builds lists; `⟨...⟩` is
//! accepted as a synonym. `//` starts a line comment.
//!
//! A queue file holds one instruction value per line; the top line is the
//! instruction that executes first (the back of the queue list).

mod print;

pub use print::{print_queue, print_theory, PrintError};

use std::fmt;
use std::sync::Arc;

use crate::ast::{Cardinality, FormulaAst, TermAst, VAR_DOC_ID};
use crate::numerics::{encode_real, NumericConfig};
use crate::theory::{
    DaemonRule, DefaultAction, FilterDef, FormDef, InstructionTerm, LoopBody, RuleAction, Theory,
    ValidationIssue,
};
use crate::value::Value;

/// A syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Why a theory file was rejected: it either does not parse, or parses to
/// a theory the validator refuses.
#[derive(Debug, thiserror::Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", issues_text(.0))]
    Invalid(Vec<ValidationIssue>),
}

fn issues_text(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parse and validate a theory file.
pub fn parse_theory(text: &str) -> Result<Theory, DslError> {
    let th = parse_theory_unchecked(text)?;
    let issues = th.validate();
    if issues.is_empty() {
        Ok(th)
    } else {
        Err(DslError::Invalid(issues))
    }
}

/// Parse a theory file without running the validator.
pub fn parse_theory_unchecked(text: &str) -> Result<Theory, ParseError> {
    let mut parser = Parser::new(lex(text)?);
    parser.theory()
}

/// Parse a single value literal.
pub fn parse_value(text: &str, cfg: &NumericConfig) -> Result<Value, ParseError> {
    let mut parser = Parser::new(lex(text)?);
    parser.cfg = *cfg;
    let v = parser.value()?;
    parser.expect_eof()?;
    Ok(v)
}

/// Parse a queue file: one instruction value per line, top line first.
///
/// The top line is the first instruction to execute, which makes it the
/// *last* element of the returned queue list (the queue's head sits at the
/// back).
pub fn parse_queue(text: &str, cfg: &NumericConfig) -> Result<Value, ParseError> {
    let mut items = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let tokens = lex(line).map_err(|e| reline(e, index))?;
        if tokens.is_empty() {
            continue;
        }
        let mut parser = Parser::new(tokens);
        parser.cfg = *cfg;
        let item = parser
            .value()
            .and_then(|v| {
                parser.expect_eof()?;
                Ok(v)
            })
            .map_err(|e| reline(e, index))?;
        items.push(item);
    }
    Ok(Value::list(items.into_iter().rev()))
}

fn reline(mut e: ParseError, line_index: usize) -> ParseError {
    e.line = line_index as u32 + 1;
    e
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Comma,
    Semi,
    Colon,
    Dot,
    Eq,
    Assign,
    Question,
    Bang,
    Plus,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(_) => "a string".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LAngle => "`<`".into(),
            Tok::RAngle => "`>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Question => "`?`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Plus => "`+`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
    column: u32,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '-'
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut column: u32 = 1;
    let mut chars = text.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        }};
    }
    while let Some(&c) = chars.peek() {
        let (start_line, start_column) = (line, column);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump!();
                }
                continue;
            }
            return Err(ParseError {
                line: start_line,
                column: start_column,
                message: "stray `/` (comments start with `//`)".into(),
            });
        }
        if ident_start(c) {
            let mut name = String::new();
            while chars.peek().is_some_and(|&c| ident_continue(c)) {
                name.push(bump!());
            }
            out.push(Token {
                tok: Tok::Ident(name),
                line: start_line,
                column: start_column,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                digits.push(bump!());
            }
            let n: usize = digits.parse().map_err(|_| ParseError {
                line: start_line,
                column: start_column,
                message: format!("integer literal `{digits}` is too large"),
            })?;
            out.push(Token {
                tok: Tok::Int(n),
                line: start_line,
                column: start_column,
            });
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.peek() {
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\n') | None => {
                        return Err(ParseError {
                            line: start_line,
                            column: start_column,
                            message: "unterminated string".into(),
                        });
                    }
                    Some(_) => s.push(bump!()),
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                line: start_line,
                column: start_column,
            });
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '<' | '\u{27e8}' => Tok::LAngle,
            '>' | '\u{27e9}' => Tok::RAngle,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            '=' => Tok::Eq,
            '?' => Tok::Question,
            '!' => Tok::Bang,
            '+' => Tok::Plus,
            ':' => {
                bump!();
                let tok = if chars.peek() == Some(&'=') {
                    bump!();
                    Tok::Assign
                } else {
                    Tok::Colon
                };
                out.push(Token {
                    tok,
                    line: start_line,
                    column: start_column,
                });
                continue;
            }
            other => {
                return Err(ParseError {
                    line: start_line,
                    column: start_column,
                    message: format!("unexpected character `{other}`"),
                });
            }
        };
        bump!();
        out.push(Token {
            tok,
            line: start_line,
            column: start_column,
        });
    }
    Ok(out)
}

const VARIABLES: [&str; 6] = ["docID", "fValue", "params", "model", "doc", "id"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (u32, u32),
    cfg: NumericConfig,
    /// Form variable in scope while parsing a filter guard.
    filter_var: Option<String>,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Parser {
        let end = tokens
            .last()
            .map(|t| (t.line, t.column + 1))
            .unwrap_or((1, 1));
        Parser {
            tokens,
            pos: 0,
            end,
            cfg: NumericConfig::default(),
            filter_var: None,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.tokens
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or(self.end)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, column) = self.here();
        Err(ParseError {
            line,
            column,
            message: message.into(),
        })
    }

    fn expected<T>(&self, what: &str) -> Result<T, ParseError> {
        match self.peek() {
            Some(tok) => self.fail(format!("expected {what}, found {}", tok.describe())),
            None => self.fail(format!("expected {what}, found end of input")),
        }
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == Some(tok)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.expected(&tok.describe())
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            self.expected("end of input")
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.expected(what),
        }
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn keyword(&mut self, name: &str) -> Result<(), ParseError> {
        if self.at_ident(name) {
            self.pos += 1;
            Ok(())
        } else {
            self.expected(&format!("`{name}`"))
        }
    }

    fn int(&mut self, what: &str) -> Result<usize, ParseError> {
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => self.expected(what),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.expected(what),
        }
    }

    fn is_var(&self, name: &str) -> bool {
        VARIABLES.contains(&name) || self.filter_var.as_deref() == Some(name)
    }

    fn theory(&mut self) -> Result<Theory, ParseError> {
        self.keyword("theory")?;
        let name = self.ident("a theory name")?;
        self.expect(Tok::LBrace)?;
        let mut th = Theory {
            name: Arc::from(name.as_str()),
            cfg: NumericConfig::default(),
            fields: Vec::new(),
            forms: Vec::new(),
            filters: Vec::new(),
            transactions: Vec::new(),
            set_rules: Vec::new(),
            trans_rules: Vec::new(),
            default_set: DefaultAction::KeepQueue,
            default_trans: DefaultAction::KeepQueue,
        };
        let mut first = true;
        while !self.at(&Tok::RBrace) {
            match self.peek() {
                Some(Tok::Ident(kw)) => match kw.as_str() {
                    "precision" => {
                        if !first {
                            return self.fail("the precision statement must come first");
                        }
                        self.precision(&mut th)?;
                    }
                    "fields" => self.fields_block(&mut th)?,
                    "forms" => self.forms_block(&mut th)?,
                    "filters" => self.filters_block(&mut th)?,
                    "transactions" => self.transactions_block(&mut th)?,
                    "default" => self.default_statement(&mut th)?,
                    "on" => self.rule(&mut th)?,
                    _ => {
                        return self.expected(
                            "a block (`fields`, `forms`, `filters`, `transactions`), \
                             a `default` statement, or an `on` rule",
                        );
                    }
                },
                _ => return self.expected("a block or rule"),
            }
            first = false;
        }
        self.expect(Tok::RBrace)?;
        self.expect_eof()?;
        Ok(th)
    }

    fn precision(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        let at = self.here();
        self.keyword("precision")?;
        self.keyword("k")?;
        self.expect(Tok::Eq)?;
        let k = self.int("an integer digit count")?;
        self.keyword("m")?;
        self.expect(Tok::Eq)?;
        let m = self.int("a fraction digit count")?;
        self.expect(Tok::Semi)?;
        let wide = |n: usize| u32::try_from(n).ok().filter(|&n| n <= 1000);
        let cfg = match (wide(k), wide(m)) {
            (Some(k), Some(m)) => NumericConfig::new(k, m).map_err(|e| ParseError {
                line: at.0,
                column: at.1,
                message: e.to_string(),
            })?,
            _ => {
                return Err(ParseError {
                    line: at.0,
                    column: at.1,
                    message: "precision digits must be at most 1000".into(),
                });
            }
        };
        th.cfg = cfg;
        self.cfg = cfg;
        Ok(())
    }

    fn fields_block(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("fields")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident("a field name")?;
            self.expect(Tok::Colon)?;
            let card = self.cardinality()?;
            self.expect(Tok::Semi)?;
            th.fields.push((Arc::from(name.as_str()), card));
        }
        Ok(())
    }

    fn cardinality(&mut self) -> Result<Cardinality, ParseError> {
        match self.peek() {
            Some(Tok::Question) => {
                self.pos += 1;
                Ok(Cardinality::AtMostOne)
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Cardinality::ExactlyOne)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                Ok(Cardinality::AtLeastOne)
            }
            Some(Tok::Ident(s)) if s == "empty" => {
                self.pos += 1;
                Ok(Cardinality::Empty)
            }
            _ => self.expected("a cardinality (`empty`, `?`, `!`, or `+`)"),
        }
    }

    fn forms_block(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("forms")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident("a form name")?;
            self.expect(Tok::LBrace)?;
            let mut blank_fields = Vec::new();
            while !self.eat(&Tok::RBrace) {
                let field = self.ident("a field name")?;
                self.expect(Tok::Eq)?;
                let v = self.value()?;
                self.expect(Tok::Semi)?;
                blank_fields.push((Arc::from(field.as_str()), v));
            }
            th.forms.push(FormDef {
                name: Arc::from(name.as_str()),
                blank_fields,
            });
        }
        Ok(())
    }

    fn filters_block(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("filters")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident("a filter name")?;
            self.expect(Tok::LParen)?;
            let form_var = self.ident("a form variable")?;
            self.expect(Tok::RParen)?;
            self.keyword("where")?;
            self.filter_var = Some(form_var.clone());
            let guard = self.formula();
            self.filter_var = None;
            let guard = guard?;
            self.expect(Tok::Semi)?;
            th.filters.push(FilterDef {
                name: Arc::from(name.as_str()),
                form_var: Arc::from(form_var.as_str()),
                guard,
            });
        }
        Ok(())
    }

    fn transactions_block(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("transactions")?;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            let name = self.ident("a transaction name")?;
            self.expect(Tok::Semi)?;
            th.transactions.push(Arc::from(name.as_str()));
        }
        Ok(())
    }

    fn default_statement(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("default")?;
        let table = self.ident("`set` or `trans`")?;
        if table != "set" && table != "trans" {
            return self.fail(format!("expected `set` or `trans`, found `{table}`"));
        }
        let action = self.ident("`keep-queue` or `skip-queue`")?;
        let action = match action.as_str() {
            "keep-queue" => DefaultAction::KeepQueue,
            "skip-queue" => DefaultAction::SkipQueue,
            other => {
                return self.fail(format!(
                    "expected `keep-queue` or `skip-queue`, found `{other}`"
                ));
            }
        };
        self.expect(Tok::Semi)?;
        if table == "set" {
            th.default_set = action;
        } else {
            th.default_trans = action;
        }
        Ok(())
    }

    fn rule(&mut self, th: &mut Theory) -> Result<(), ParseError> {
        self.keyword("on")?;
        let table = self.ident("`set` or `trans`")?;
        if table != "set" && table != "trans" {
            return self.fail(format!("expected `set` or `trans`, found `{table}`"));
        }
        let form = self.ident("a form name")?;
        self.expect(Tok::Dot)?;
        let event = self.ident(if table == "set" {
            "a field name"
        } else {
            "a transaction name"
        })?;
        if table == "trans" {
            self.expect(Tok::LParen)?;
            self.keyword("params")?;
            self.expect(Tok::RParen)?;
        }
        self.keyword("when")?;
        let guard = self.formula()?;
        let action = if self.at_ident("emit") {
            self.pos += 1;
            self.expect(Tok::LBrace)?;
            let mut terms = Vec::new();
            while !self.eat(&Tok::RBrace) {
                terms.push(self.instruction()?);
            }
            RuleAction::Extend(terms)
        } else if self.at_ident("clear-queue") {
            self.pos += 1;
            self.expect(Tok::Semi)?;
            RuleAction::ClearQueue
        } else {
            return self.expected("`emit` or `clear-queue`");
        };
        let rule = DaemonRule {
            form: Arc::from(form.as_str()),
            name: Arc::from(event.as_str()),
            guard,
            action,
        };
        if table == "set" {
            th.set_rules.push(rule);
        } else {
            th.trans_rules.push(rule);
        }
        Ok(())
    }

    fn instruction(&mut self) -> Result<InstructionTerm, ParseError> {
        match self.peek() {
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "set" => {
                    self.pos += 1;
                    let field = self.ident("a field name")?;
                    let target = if self.at_ident("of") {
                        self.pos += 1;
                        self.term()?
                    } else {
                        TermAst::Var(Arc::from(VAR_DOC_ID))
                    };
                    self.expect(Tok::Assign)?;
                    let value = self.term()?;
                    self.expect(Tok::Semi)?;
                    Ok(InstructionTerm::SetField {
                        field: Arc::from(field.as_str()),
                        target,
                        value,
                    })
                }
                "create" => {
                    self.pos += 1;
                    let form = self.ident("a form name")?;
                    self.expect(Tok::Semi)?;
                    Ok(InstructionTerm::CreateDoc {
                        form: Arc::from(form.as_str()),
                    })
                }
                "trans" => {
                    self.pos += 1;
                    let name = self.ident("a transaction name")?;
                    self.expect(Tok::LParen)?;
                    let target = self.term()?;
                    self.expect(Tok::Comma)?;
                    let params = self.term()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Semi)?;
                    Ok(InstructionTerm::Trans {
                        trans: Arc::from(name.as_str()),
                        target,
                        params,
                    })
                }
                "for" => {
                    self.pos += 1;
                    self.keyword("id")?;
                    self.keyword("in")?;
                    self.keyword("filter")?;
                    let filter = self.ident("a filter name")?;
                    self.expect(Tok::LParen)?;
                    let form = self.ident("a form name")?;
                    self.expect(Tok::Comma)?;
                    let params = self.term()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::LBrace)?;
                    let body = self.loop_body()?;
                    self.expect(Tok::RBrace)?;
                    Ok(InstructionTerm::FilterLoop {
                        filter: Arc::from(filter.as_str()),
                        form: Arc::from(form.as_str()),
                        params,
                        body,
                    })
                }
                _ => self.expected("an instruction (`set`, `create`, `trans`, or `for`)"),
            },
            _ => self.expected("an instruction (`set`, `create`, `trans`, or `for`)"),
        }
    }

    fn loop_body(&mut self) -> Result<LoopBody, ParseError> {
        if self.at_ident("trans") {
            self.pos += 1;
            let name = self.ident("a transaction name")?;
            self.expect(Tok::LParen)?;
            self.keyword("id")?;
            self.expect(Tok::Comma)?;
            let params = self.term()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            Ok(LoopBody::EmitTrans {
                trans: Arc::from(name.as_str()),
                params,
            })
        } else if self.at_ident("create") {
            self.pos += 1;
            let form = self.ident("a form name")?;
            self.expect(Tok::Semi)?;
            Ok(LoopBody::EmitCreateDoc {
                form: Arc::from(form.as_str()),
            })
        } else {
            self.expected("`trans` or `create`")
        }
    }

    fn formula(&mut self) -> Result<FormulaAst, ParseError> {
        self.or_formula()
    }

    fn or_formula(&mut self) -> Result<FormulaAst, ParseError> {
        let mut left = self.and_formula()?;
        while self.at_ident("or") {
            self.pos += 1;
            let right = self.and_formula()?;
            left = FormulaAst::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_formula(&mut self) -> Result<FormulaAst, ParseError> {
        let mut left = self.not_formula()?;
        while self.at_ident("and") {
            self.pos += 1;
            let right = self.not_formula()?;
            left = FormulaAst::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_formula(&mut self) -> Result<FormulaAst, ParseError> {
        if self.at_ident("not") {
            self.pos += 1;
            let inner = self.not_formula()?;
            Ok(FormulaAst::Not(Box::new(inner)))
        } else {
            self.atom_formula()
        }
    }

    fn atom_formula(&mut self) -> Result<FormulaAst, ParseError> {
        // `true` / `false` are boolean constants unless they open a
        // comparison (e.g. `true = head(params)` compares the atom).
        let comparison_follows =
            matches!(self.peek2(), Some(Tok::Eq) | Some(Tok::LAngle));
        if self.at_ident("true") && !comparison_follows {
            self.pos += 1;
            return Ok(FormulaAst::True);
        }
        if self.at_ident("false") && !comparison_follows {
            self.pos += 1;
            return Ok(FormulaAst::False);
        }
        if self.eat(&Tok::LParen) {
            let inner = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        let left = self.term()?;
        match self.peek() {
            Some(Tok::Eq) => {
                self.pos += 1;
                let right = self.term()?;
                Ok(FormulaAst::Eq(Box::new(left), Box::new(right)))
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                let right = self.term()?;
                Ok(FormulaAst::Less(Box::new(left), Box::new(right)))
            }
            _ => self.expected("`=` or `<` to finish the comparison"),
        }
    }

    fn term(&mut self) -> Result<TermAst, ParseError> {
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(TermAst::Const(Value::nat(n)))
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.at(&Tok::RAngle) {
                    loop {
                        items.push(self.term()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RAngle)?;
                if items.iter().all(|t| matches!(t, TermAst::Const(_))) {
                    let values = items.into_iter().map(|t| match t {
                        TermAst::Const(v) => v,
                        _ => unreachable!(),
                    });
                    Ok(TermAst::Const(Value::list(values)))
                } else {
                    Ok(TermAst::ListLiteral(items))
                }
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                if self.peek2() == Some(&Tok::LParen) {
                    self.call(name)
                } else {
                    self.pos += 1;
                    if self.is_var(&name) {
                        Ok(TermAst::Var(Arc::from(name.as_str())))
                    } else {
                        Ok(TermAst::Const(Value::atom(name.as_str())))
                    }
                }
            }
            _ => self.expected("a term"),
        }
    }

    fn call(&mut self, name: String) -> Result<TermAst, ParseError> {
        let at = self.here();
        self.pos += 1; // the function name
        self.expect(Tok::LParen)?;
        let term = match name.as_str() {
            "nat" => {
                let n = self.int("a number")?;
                TermAst::Const(Value::nat(n))
            }
            "real" => {
                let digits = self.string("a quoted digit string")?;
                let v = encode_real(&digits, &self.cfg).map_err(|e| ParseError {
                    line: at.0,
                    column: at.1,
                    message: e.to_string(),
                })?;
                TermAst::Const(v)
            }
            "head" => TermAst::Head(Box::new(self.term()?)),
            "tail" => TermAst::Tail(Box::new(self.term()?)),
            "len" => TermAst::Len(Box::new(self.term()?)),
            "rev" => TermAst::Rev(Box::new(self.term()?)),
            "min" => TermAst::Min(Box::new(self.term()?)),
            "max" => TermAst::Max(Box::new(self.term()?)),
            "formOf" => TermAst::FormOf(Box::new(self.term()?)),
            "situation" => TermAst::Situation(Box::new(self.term()?)),
            "GetLastDocID" => TermAst::GetLastDocId(Box::new(self.term()?)),
            "cons" => {
                let (a, b) = self.pair()?;
                TermAst::Cons(Box::new(a), Box::new(b))
            }
            "conc" => {
                let (a, b) = self.pair()?;
                TermAst::Conc(Box::new(a), Box::new(b))
            }
            "index" => {
                let (a, b) = self.pair()?;
                TermAst::Index(Box::new(a), Box::new(b))
            }
            "add" => {
                let (a, b) = self.pair()?;
                TermAst::Add(Box::new(a), Box::new(b))
            }
            "GetDocByID" => {
                let (a, b) = self.pair()?;
                TermAst::GetDocById(Box::new(a), Box::new(b))
            }
            "FindFieldPosition" => {
                let (a, b) = self.pair()?;
                TermAst::FindFieldPosition(Box::new(a), Box::new(b))
            }
            "GetFieldValue" => {
                let a = self.term()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                self.expect(Tok::Comma)?;
                let c = self.term()?;
                TermAst::GetFieldValue(Box::new(a), Box::new(b), Box::new(c))
            }
            other => {
                return Err(ParseError {
                    line: at.0,
                    column: at.1,
                    message: format!("unknown function `{other}`"),
                });
            }
        };
        self.expect(Tok::RParen)?;
        Ok(term)
    }

    fn pair(&mut self) -> Result<(TermAst, TermAst), ParseError> {
        let a = self.term()?;
        self.expect(Tok::Comma)?;
        let b = self.term()?;
        Ok((a, b))
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(&Tok::Int(n)) => {
                self.pos += 1;
                Ok(Value::nat(n))
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.at(&Tok::RAngle) {
                    loop {
                        items.push(self.value()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RAngle)?;
                Ok(Value::list(items))
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                if self.peek2() == Some(&Tok::LParen) {
                    let at = self.here();
                    match name.as_str() {
                        "nat" => {
                            self.pos += 1;
                            self.expect(Tok::LParen)?;
                            let n = self.int("a number")?;
                            self.expect(Tok::RParen)?;
                            Ok(Value::nat(n))
                        }
                        "real" => {
                            self.pos += 1;
                            self.expect(Tok::LParen)?;
                            let digits = self.string("a quoted digit string")?;
                            self.expect(Tok::RParen)?;
                            encode_real(&digits, &self.cfg).map_err(|e| ParseError {
                                line: at.0,
                                column: at.1,
                                message: e.to_string(),
                            })
                        }
                        other => Err(ParseError {
                            line: at.0,
                            column: at.1,
                            message: format!(
                                "unknown function `{other}` in a value (only `nat` and `real` \
                                 are allowed here)"
                            ),
                        }),
                    }
                } else {
                    self.pos += 1;
                    Ok(Value::atom(name.as_str()))
                }
            }
            _ => self.expected("a value"),
        }
    }
}
