//! Canonical printer for the text format.
//!
//! `parse_theory(print_theory(th)?) == th` holds for every theory the
//! printer accepts. Theories built programmatically may use guard and term
//! forms the text format cannot express (bounded search, recursion,
//! quantifiers); printing those reports an error rather than inventing
//! syntax.

use std::fmt::Write as _;

use crate::ast::{FormulaAst, TermAst, VAR_DOC_ID};
use crate::theory::{
    DaemonRule, DefaultAction, InstructionTerm, LoopBody, RuleAction, Theory,
};
use crate::value::Value;

/// The theory uses a construct the text format cannot express.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot print: {reason}")]
pub struct PrintError {
    pub reason: String,
}

fn unsupported(what: &str) -> PrintError {
    PrintError {
        reason: format!("{what} has no textual form"),
    }
}

/// Render a theory in the text format.
pub fn print_theory(th: &Theory) -> Result<String, PrintError> {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "theory {} {{", th.name);
    let _ = writeln!(
        w,
        "  precision k={} m={};",
        th.cfg.int_digits, th.cfg.frac_digits
    );

    if !th.fields.is_empty() {
        let _ = writeln!(w, "\n  fields {{");
        for (name, card) in &th.fields {
            let _ = writeln!(w, "    {name}: {};", card.symbol());
        }
        let _ = writeln!(w, "  }}");
    }

    let _ = writeln!(w, "\n  forms {{");
    for form in &th.forms {
        if form.blank_fields.is_empty() {
            let _ = writeln!(w, "    {} {{}}", form.name);
        } else {
            let _ = writeln!(w, "    {} {{", form.name);
            for (field, v) in &form.blank_fields {
                let _ = writeln!(w, "      {field} = {v};");
            }
            let _ = writeln!(w, "    }}");
        }
    }
    let _ = writeln!(w, "  }}");

    if !th.filters.is_empty() {
        let _ = writeln!(w, "\n  filters {{");
        for filter in &th.filters {
            let _ = writeln!(
                w,
                "    {}({}) where {};",
                filter.name,
                filter.form_var,
                guard_text(&filter.guard, 0)?
            );
        }
        let _ = writeln!(w, "  }}");
    }

    if !th.transactions.is_empty() {
        let _ = writeln!(w, "\n  transactions {{");
        for name in &th.transactions {
            let _ = writeln!(w, "    {name};");
        }
        let _ = writeln!(w, "  }}");
    }

    if th.default_set == DefaultAction::SkipQueue {
        let _ = writeln!(w, "\n  default set skip-queue;");
    }
    if th.default_trans == DefaultAction::SkipQueue {
        let _ = writeln!(w, "\n  default trans skip-queue;");
    }

    for rule in &th.set_rules {
        w.push('\n');
        rule_text(w, "set", rule)?;
    }
    for rule in &th.trans_rules {
        w.push('\n');
        rule_text(w, "trans", rule)?;
    }

    let _ = writeln!(w, "}}");
    Ok(out)
}

/// Render a queue value, one instruction per line, first-to-execute first.
pub fn print_queue(queue: &Value) -> String {
    match queue.as_list() {
        Some(items) => {
            let mut out = String::new();
            for item in items.iter_back() {
                let _ = writeln!(out, "{item}");
            }
            out
        }
        None => format!("{queue}\n"),
    }
}

fn rule_text(w: &mut String, table: &str, rule: &DaemonRule) -> Result<(), PrintError> {
    let event = if table == "trans" {
        format!("{}.{}(params)", rule.form, rule.name)
    } else {
        format!("{}.{}", rule.form, rule.name)
    };
    let guard = guard_text(&rule.guard, 0)?;
    match &rule.action {
        RuleAction::ClearQueue => {
            let _ = writeln!(w, "  on {table} {event} when {guard} clear-queue;");
        }
        RuleAction::Extend(terms) => {
            let _ = writeln!(w, "  on {table} {event} when {guard} emit {{");
            for term in terms {
                instr_text(w, term, 4)?;
            }
            let _ = writeln!(w, "  }}");
        }
    }
    Ok(())
}

fn is_doc_id(t: &TermAst) -> bool {
    matches!(t, TermAst::Var(v) if &**v == VAR_DOC_ID)
}

fn instr_text(w: &mut String, instr: &InstructionTerm, indent: usize) -> Result<(), PrintError> {
    let pad = " ".repeat(indent);
    match instr {
        InstructionTerm::SetField {
            field,
            target,
            value,
        } => {
            let value = term_text(value)?;
            if is_doc_id(target) {
                let _ = writeln!(w, "{pad}set {field} := {value};");
            } else {
                let _ = writeln!(w, "{pad}set {field} of {} := {value};", term_text(target)?);
            }
        }
        InstructionTerm::CreateDoc { form } => {
            let _ = writeln!(w, "{pad}create {form};");
        }
        InstructionTerm::Trans {
            trans,
            target,
            params,
        } => {
            let _ = writeln!(
                w,
                "{pad}trans {trans}({}, {});",
                term_text(target)?,
                term_text(params)?
            );
        }
        InstructionTerm::FilterLoop {
            filter,
            form,
            params,
            body,
        } => {
            let _ = writeln!(
                w,
                "{pad}for id in filter {filter}({form}, {}) {{",
                term_text(params)?
            );
            match body {
                LoopBody::EmitTrans { trans, params } => {
                    let _ = writeln!(w, "{pad}  trans {trans}(id, {});", term_text(params)?);
                }
                LoopBody::EmitCreateDoc { form } => {
                    let _ = writeln!(w, "{pad}  create {form};");
                }
            }
            let _ = writeln!(w, "{pad}}}");
        }
    }
    Ok(())
}

/// Guard rendering: `or` binds loosest (level 0), then `and` (1), then
/// `not` (2); comparisons and constants are primaries (3). A child is
/// parenthesized exactly when its level is below the context's.
fn guard_text(f: &FormulaAst, prec: u8) -> Result<String, PrintError> {
    let (text, level) = match f {
        FormulaAst::True => ("true".to_string(), 3),
        FormulaAst::False => ("false".to_string(), 3),
        FormulaAst::Eq(l, r) => (format!("{} = {}", term_text(l)?, term_text(r)?), 3),
        FormulaAst::Less(l, r) => (format!("{} < {}", term_text(l)?, term_text(r)?), 3),
        FormulaAst::Not(x) => (format!("not {}", guard_text(x, 2)?), 2),
        FormulaAst::And(l, r) => (
            format!("{} and {}", guard_text(l, 1)?, guard_text(r, 2)?),
            1,
        ),
        FormulaAst::Or(l, r) => (
            format!("{} or {}", guard_text(l, 0)?, guard_text(r, 1)?),
            0,
        ),
        FormulaAst::Member(..) => return Err(unsupported("a membership test")),
        FormulaAst::InitSeg(..) => return Err(unsupported("a prefix test")),
        FormulaAst::Implies(..) => return Err(unsupported("an implication")),
        FormulaAst::Forall { .. } | FormulaAst::Exists { .. } => {
            return Err(unsupported("a quantifier"));
        }
        FormulaAst::IsNat(..) | FormulaAst::IsReal(..) | FormulaAst::IsField(..) => {
            return Err(unsupported("a sort test"));
        }
        FormulaAst::HasCard(..) => return Err(unsupported("a cardinality test")),
    };
    Ok(if level < prec {
        format!("({text})")
    } else {
        text
    })
}

fn term_text(t: &TermAst) -> Result<String, PrintError> {
    Ok(match t {
        TermAst::Const(v) => v.to_string(),
        TermAst::Var(name) => name.to_string(),
        TermAst::Head(x) => format!("head({})", term_text(x)?),
        TermAst::Tail(x) => format!("tail({})", term_text(x)?),
        TermAst::Len(x) => format!("len({})", term_text(x)?),
        TermAst::Rev(x) => format!("rev({})", term_text(x)?),
        TermAst::Min(x) => format!("min({})", term_text(x)?),
        TermAst::Max(x) => format!("max({})", term_text(x)?),
        TermAst::FormOf(x) => format!("formOf({})", term_text(x)?),
        TermAst::Situation(x) => format!("situation({})", term_text(x)?),
        TermAst::GetLastDocId(x) => format!("GetLastDocID({})", term_text(x)?),
        TermAst::Cons(a, b) => format!("cons({}, {})", term_text(a)?, term_text(b)?),
        TermAst::Conc(a, b) => format!("conc({}, {})", term_text(a)?, term_text(b)?),
        TermAst::Index(a, b) => format!("index({}, {})", term_text(a)?, term_text(b)?),
        TermAst::Add(a, b) => format!("add({}, {})", term_text(a)?, term_text(b)?),
        TermAst::GetDocById(a, b) => {
            format!("GetDocByID({}, {})", term_text(a)?, term_text(b)?)
        }
        TermAst::FindFieldPosition(a, b) => {
            format!("FindFieldPosition({}, {})", term_text(a)?, term_text(b)?)
        }
        TermAst::GetFieldValue(a, b, c) => format!(
            "GetFieldValue({}, {}, {})",
            term_text(a)?,
            term_text(b)?,
            term_text(c)?
        ),
        TermAst::ListLiteral(items) => {
            let mut parts = Vec::with_capacity(items.len());
            for item in items {
                parts.push(term_text(item)?);
            }
            format!("<{}>", parts.join(", "))
        }
        TermAst::Cond { .. } => return Err(unsupported("a conditional term")),
        TermAst::BSearch { .. } => return Err(unsupported("a bounded-search term")),
        TermAst::Rec { .. } => return Err(unsupported("a recursion term")),
    })
}
