//! Evaluation of terms and formulas against an environment.
//!
//! Every operation is total on lists; the only hard errors are unbound
//! variables and list operations applied to atoms. Partial lookups and
//! numeric overflow stay in-band as the `fault` constant, so guards can
//! test for them.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{BoundKind, Cardinality, FormulaAst, TermAst};
use crate::docmodel;
use crate::numerics::{self, Comparison, NumericConfig};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not in scope")]
    Unbound(Arc<str>),
    #[error("`{op}` needs a list, got the atom `{operand}`")]
    AtomOperand { op: &'static str, operand: String },
}

impl EvalError {
    pub fn atom_operand(op: &'static str, operand: &Value) -> EvalError {
        EvalError::AtomOperand {
            op,
            operand: brief(operand),
        }
    }
}

/// Renders a value for error messages, truncated so that situation-sized
/// lists stay readable.
fn brief(v: &Value) -> String {
    struct Budget {
        out: String,
        left: usize,
    }
    impl fmt::Write for Budget {
        fn write_str(&mut self, s: &str) -> fmt::Result {
            for ch in s.chars() {
                if self.left == 0 {
                    return Err(fmt::Error);
                }
                self.out.push(ch);
                self.left -= 1;
            }
            Ok(())
        }
    }
    let mut b = Budget {
        out: String::new(),
        left: 96,
    };
    if write!(b, "{v}").is_err() {
        b.out.push('…');
    }
    b.out
}

/// Variable bindings, innermost last; lookups honor shadowing.
#[derive(Debug, Clone, Default)]
pub struct Env {
    bindings: Vec<(Arc<str>, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    /// Builder-style binding for constructing rule scopes.
    pub fn with(mut self, name: impl Into<Arc<str>>, v: Value) -> Env {
        self.push(name.into(), v);
        self
    }

    pub fn push(&mut self, name: Arc<str>, v: Value) {
        self.bindings.push((name, v));
    }

    pub fn pop(&mut self) {
        self.bindings.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }
}

static NO_FIELDS: BTreeMap<Arc<str>, Cardinality> = BTreeMap::new();

/// What a term needs besides its environment: the decimal layout and the
/// ambient field declarations (for the field-shape predicate).
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub cfg: &'a NumericConfig,
    pub fields: &'a BTreeMap<Arc<str>, Cardinality>,
}

impl<'a> EvalContext<'a> {
    pub fn new(cfg: &'a NumericConfig, fields: &'a BTreeMap<Arc<str>, Cardinality>) -> Self {
        EvalContext { cfg, fields }
    }

    /// A context with no field declarations; the field predicate is then
    /// false everywhere.
    pub fn bare(cfg: &'a NumericConfig) -> Self {
        EvalContext {
            cfg,
            fields: &NO_FIELDS,
        }
    }
}

/// True of `<v1, ..., vm, name>` where `name` is a declared field whose
/// cardinality admits `m` values.
pub fn is_field_shape(v: &Value, fields: &BTreeMap<Arc<str>, Cardinality>) -> bool {
    let Some(l) = v.as_list() else { return false };
    let Some(name) = l.head_ref().and_then(Value::as_atom) else {
        return false;
    };
    match fields.get(name) {
        Some(card) => card.admits(l.len() - 1),
        None => false,
    }
}

pub fn eval_term(t: &TermAst, env: &mut Env, cx: &EvalContext) -> Result<Value, EvalError> {
    match t {
        TermAst::Const(v) => Ok(v.clone()),
        TermAst::Var(name) => env
            .lookup(name)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(name.clone())),
        TermAst::Head(t) => {
            let v = eval_term(t, env, cx)?;
            let l = v.as_list().ok_or_else(|| EvalError::atom_operand("head", &v))?;
            Ok(l.head())
        }
        TermAst::Tail(t) => {
            let v = eval_term(t, env, cx)?;
            let l = v.as_list().ok_or_else(|| EvalError::atom_operand("tail", &v))?;
            Ok(Value::List(l.tail()))
        }
        TermAst::Cons(x, y) => {
            let xv = eval_term(x, env, cx)?;
            let yv = eval_term(y, env, cx)?;
            let l = xv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("cons", &xv))?;
            Ok(Value::List(l.cons(yv)))
        }
        TermAst::Conc(x, y) => {
            let xv = eval_term(x, env, cx)?;
            let yv = eval_term(y, env, cx)?;
            let xl = xv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("conc", &xv))?;
            let yl = yv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("conc", &yv))?;
            Ok(Value::List(xl.conc(yl)))
        }
        TermAst::ListLiteral(items) => {
            let mut vals = Vec::with_capacity(items.len());
            for item in items {
                vals.push(eval_term(item, env, cx)?);
            }
            Ok(Value::list(vals))
        }
        TermAst::Cond { branches, default } => {
            for (guard, branch) in branches {
                if eval_formula(guard, env, cx)? {
                    return eval_term(branch, env, cx);
                }
            }
            eval_term(default, env, cx)
        }
        TermAst::BSearch { var, cond, over } => {
            let range = eval_term(over, env, cx)?;
            let l = range
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("bsearch", &range))?;
            let mut hit: Option<Value> = None;
            for e in l.to_vec() {
                env.push(var.clone(), e.clone());
                let keep = eval_formula(cond, env, cx);
                env.pop();
                if keep? {
                    hit = Some(e);
                }
            }
            Ok(hit.unwrap_or(range))
        }
        TermAst::Rec {
            base,
            acc,
            elem,
            step,
            over,
        } => {
            let range = eval_term(over, env, cx)?;
            let l = range
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("rec", &range))?;
            let mut result = eval_term(base, env, cx)?;
            for e in l.to_vec() {
                env.push(acc.clone(), result);
                env.push(elem.clone(), e);
                let next = eval_term(step, env, cx);
                env.pop();
                env.pop();
                result = next?;
            }
            Ok(result)
        }
        TermAst::Index(x, i) => {
            let xv = eval_term(x, env, cx)?;
            let iv = eval_term(i, env, cx)?;
            numerics::index(&xv, &iv)
        }
        TermAst::Add(x, y) => {
            let xv = eval_term(x, env, cx)?;
            let yv = eval_term(y, env, cx)?;
            Ok(numerics::add(&xv, &yv, cx.cfg))
        }
        TermAst::Min(t) => {
            let v = eval_term(t, env, cx)?;
            Ok(numerics::min_list(&v, cx.cfg))
        }
        TermAst::Max(t) => {
            let v = eval_term(t, env, cx)?;
            Ok(numerics::max_list(&v, cx.cfg))
        }
        TermAst::Len(t) => {
            let v = eval_term(t, env, cx)?;
            let l = v.as_list().ok_or_else(|| EvalError::atom_operand("len", &v))?;
            Ok(Value::nat(l.len()))
        }
        TermAst::Rev(t) => {
            let v = eval_term(t, env, cx)?;
            let l = v.as_list().ok_or_else(|| EvalError::atom_operand("rev", &v))?;
            Ok(Value::List(l.iter_back().cloned().collect()))
        }
        TermAst::FormOf(t) => {
            let v = eval_term(t, env, cx)?;
            docmodel::form_of(&v)
        }
        TermAst::Situation(m) => {
            let v = eval_term(m, env, cx)?;
            docmodel::current_situation(&v)
        }
        TermAst::GetLastDocId(m) => {
            let v = eval_term(m, env, cx)?;
            docmodel::get_last_doc_id(&v)
        }
        TermAst::GetDocById(id, m) => {
            let idv = eval_term(id, env, cx)?;
            let mv = eval_term(m, env, cx)?;
            docmodel::get_doc_by_id(&idv, &mv)
        }
        TermAst::GetFieldValue(id, field, m) => {
            let idv = eval_term(id, env, cx)?;
            let fv = eval_term(field, env, cx)?;
            let mv = eval_term(m, env, cx)?;
            docmodel::get_field_value(&idv, &fv, &mv)
        }
        TermAst::FindFieldPosition(field, doc) => {
            let fv = eval_term(field, env, cx)?;
            let dv = eval_term(doc, env, cx)?;
            docmodel::find_field_position(&fv, &dv)
        }
    }
}

pub fn eval_formula(f: &FormulaAst, env: &mut Env, cx: &EvalContext) -> Result<bool, EvalError> {
    match f {
        FormulaAst::True => Ok(true),
        FormulaAst::False => Ok(false),
        FormulaAst::Eq(t, u) => Ok(eval_term(t, env, cx)? == eval_term(u, env, cx)?),
        FormulaAst::Less(t, u) => {
            let tv = eval_term(t, env, cx)?;
            let uv = eval_term(u, env, cx)?;
            Ok(numerics::compare(&tv, &uv, cx.cfg) == Comparison::Lt)
        }
        FormulaAst::Member(t, u) => {
            let tv = eval_term(t, env, cx)?;
            let uv = eval_term(u, env, cx)?;
            let l = uv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("member", &uv))?;
            Ok(l.contains(&tv))
        }
        FormulaAst::InitSeg(t, u) => {
            let tv = eval_term(t, env, cx)?;
            let uv = eval_term(u, env, cx)?;
            let tl = tv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("initial-segment", &tv))?;
            let ul = uv
                .as_list()
                .ok_or_else(|| EvalError::atom_operand("initial-segment", &uv))?;
            Ok(tl.is_initial_segment_of(ul))
        }
        FormulaAst::Not(f) => Ok(!eval_formula(f, env, cx)?),
        FormulaAst::And(a, b) => Ok(eval_formula(a, env, cx)? && eval_formula(b, env, cx)?),
        FormulaAst::Or(a, b) => Ok(eval_formula(a, env, cx)? || eval_formula(b, env, cx)?),
        FormulaAst::Implies(a, b) => Ok(!eval_formula(a, env, cx)? || eval_formula(b, env, cx)?),
        FormulaAst::Forall {
            var,
            bound,
            over,
            body,
        } => quantify(true, var, *bound, over, body, env, cx),
        FormulaAst::Exists {
            var,
            bound,
            over,
            body,
        } => quantify(false, var, *bound, over, body, env, cx),
        FormulaAst::IsNat(t) => Ok(numerics::is_nat(&eval_term(t, env, cx)?)),
        FormulaAst::IsReal(t) => Ok(numerics::is_real(&eval_term(t, env, cx)?, cx.cfg)),
        FormulaAst::IsField(t) => Ok(is_field_shape(&eval_term(t, env, cx)?, cx.fields)),
        FormulaAst::HasCard(card, t) => {
            let v = eval_term(t, env, cx)?;
            Ok(v.as_list().is_some_and(|l| card.admits(l.len())))
        }
    }
}

/// Shared body of the bounded quantifiers: `universal` selects ∀ (stop on a
/// false instance) versus ∃ (stop on a true one). Member bounds range over
/// elements front-to-back; initial-segment bounds over every prefix from
/// `<>` up to the full list.
fn quantify(
    universal: bool,
    var: &Arc<str>,
    bound: BoundKind,
    over: &TermAst,
    body: &FormulaAst,
    env: &mut Env,
    cx: &EvalContext,
) -> Result<bool, EvalError> {
    let range = eval_term(over, env, cx)?;
    let op = if universal { "forall" } else { "exists" };
    let l = range
        .as_list()
        .ok_or_else(|| EvalError::atom_operand(op, &range))?;
    let candidates: Vec<Value> = match bound {
        BoundKind::Member => l.to_vec(),
        BoundKind::InitSeg => l.prefixes().into_iter().map(Value::List).collect(),
    };
    for c in candidates {
        env.push(var.clone(), c);
        let holds = eval_formula(body, env, cx);
        env.pop();
        if holds? != universal {
            return Ok(!universal);
        }
    }
    Ok(universal)
}
