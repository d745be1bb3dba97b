//! Term and formula ASTs for the extended list language.
//!
//! Terms cover the list constructors, guarded conditionals (`Cond`), bounded
//! search (`BSearch`), bounded recursion (`Rec`), and the document-term
//! vocabulary (numeric and model accessors). Formulas are the bounded
//! (Δ0) fragment: equality, numeric `<`, membership, initial-segment, Boolean
//! connectives, bounded quantifiers, and the sort predicates.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::value::Value;

/// Reserved variable bound to the target document id in daemon rules.
pub const VAR_DOC_ID: &str = "docID";
/// Reserved variable bound to the incoming field value in set-field rules.
pub const VAR_F_VALUE: &str = "fValue";
/// Reserved variable bound to the transaction parameter list.
pub const VAR_PARAMS: &str = "params";
/// Reserved variable bound to the current model.
pub const VAR_MODEL: &str = "model";
/// Reserved variable bound to the candidate document tuple in filter guards.
pub const VAR_DOC: &str = "doc";
/// Reserved loop variable carrying each filter-selected id.
pub const VAR_LOOP_ID: &str = "id";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermAst {
    /// A closed value: urelement constant, `<>`, or any list literal.
    Const(Value),
    Var(Arc<str>),
    Head(Box<TermAst>),
    Tail(Box<TermAst>),
    Cons(Box<TermAst>, Box<TermAst>),
    Conc(Box<TermAst>, Box<TermAst>),
    /// `<t1, ..., tn>`: sugar for the cons chain over the element terms.
    ListLiteral(Vec<TermAst>),
    /// First branch whose guard holds wins; the default catches the rest.
    Cond {
        branches: Vec<(FormulaAst, TermAst)>,
        default: Box<TermAst>,
    },
    /// Last element of `over` satisfying `cond` (scanning front-to-back),
    /// or the whole list when nothing matches.
    BSearch {
        var: Arc<str>,
        cond: Box<FormulaAst>,
        over: Box<TermAst>,
    },
    /// Bounded fold: value `base` on `<>`, then `step` applied once per
    /// element front-to-back with `acc` bound to the previous result and
    /// `elem` to the current element.
    Rec {
        base: Box<TermAst>,
        acc: Arc<str>,
        elem: Arc<str>,
        step: Box<TermAst>,
        over: Box<TermAst>,
    },
    /// 1-based element access `index(x, i)`; faults in-band on a bad index.
    Index(Box<TermAst>, Box<TermAst>),
    /// Fixed-precision decimal addition; faults in-band.
    Add(Box<TermAst>, Box<TermAst>),
    /// Least element of a list of reals; faults in-band.
    Min(Box<TermAst>),
    /// Greatest element of a list of reals; faults in-band.
    Max(Box<TermAst>),
    /// Element count as a nat.
    Len(Box<TermAst>),
    /// List reversal.
    Rev(Box<TermAst>),
    /// Form name of a document tuple.
    FormOf(Box<TermAst>),
    /// Situation of the newest tuple of a model (`<>` for the empty model).
    Situation(Box<TermAst>),
    /// Greatest document id in a model, or `0` when the model is empty.
    GetLastDocId(Box<TermAst>),
    /// Newest tuple with the given id; faults in-band when absent.
    GetDocById(Box<TermAst>, Box<TermAst>),
    /// Value list of a field in the newest version of a document;
    /// faults in-band when the document or the field is absent.
    GetFieldValue(Box<TermAst>, Box<TermAst>, Box<TermAst>),
    /// Splits a document into `<list1, list2>` with the named field at the
    /// head of `list1`; faults in-band when the field is absent.
    FindFieldPosition(Box<TermAst>, Box<TermAst>),
}

impl TermAst {
    pub fn var(name: &str) -> TermAst {
        TermAst::Var(Arc::from(name))
    }

    pub fn value(v: Value) -> TermAst {
        TermAst::Const(v)
    }

    pub fn atom(name: &str) -> TermAst {
        TermAst::Const(Value::atom(name))
    }

    pub fn empty() -> TermAst {
        TermAst::Const(Value::empty())
    }

    pub fn head(self) -> TermAst {
        TermAst::Head(Box::new(self))
    }

    pub fn tail(self) -> TermAst {
        TermAst::Tail(Box::new(self))
    }

    pub fn cons(self, v: TermAst) -> TermAst {
        TermAst::Cons(Box::new(self), Box::new(v))
    }

    pub fn conc(self, other: TermAst) -> TermAst {
        TermAst::Conc(Box::new(self), Box::new(other))
    }

    pub fn eq(self, other: TermAst) -> FormulaAst {
        FormulaAst::Eq(Box::new(self), Box::new(other))
    }

    pub fn lt(self, other: TermAst) -> FormulaAst {
        FormulaAst::Less(Box::new(self), Box::new(other))
    }

    /// Variables this term reads from its environment.
    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        collect_term(self, &mut Vec::new(), &mut out);
        out
    }
}

fn collect_term(t: &TermAst, bound: &mut Vec<Arc<str>>, out: &mut BTreeSet<Arc<str>>) {
    match t {
        TermAst::Const(_) => {}
        TermAst::Var(name) => {
            if !bound.iter().any(|b| b == name) {
                out.insert(name.clone());
            }
        }
        TermAst::Head(t)
        | TermAst::Tail(t)
        | TermAst::Min(t)
        | TermAst::Max(t)
        | TermAst::Len(t)
        | TermAst::Rev(t)
        | TermAst::FormOf(t)
        | TermAst::Situation(t)
        | TermAst::GetLastDocId(t) => collect_term(t, bound, out),
        TermAst::Cons(x, y)
        | TermAst::Conc(x, y)
        | TermAst::Index(x, y)
        | TermAst::Add(x, y)
        | TermAst::GetDocById(x, y)
        | TermAst::FindFieldPosition(x, y) => {
            collect_term(x, bound, out);
            collect_term(y, bound, out);
        }
        TermAst::GetFieldValue(x, y, z) => {
            collect_term(x, bound, out);
            collect_term(y, bound, out);
            collect_term(z, bound, out);
        }
        TermAst::ListLiteral(items) => {
            for item in items {
                collect_term(item, bound, out);
            }
        }
        TermAst::Cond { branches, default } => {
            for (guard, branch) in branches {
                collect_formula(guard, bound, out);
                collect_term(branch, bound, out);
            }
            collect_term(default, bound, out);
        }
        TermAst::BSearch { var, cond, over } => {
            collect_term(over, bound, out);
            bound.push(var.clone());
            collect_formula(cond, bound, out);
            bound.pop();
        }
        TermAst::Rec {
            base,
            acc,
            elem,
            step,
            over,
        } => {
            collect_term(base, bound, out);
            collect_term(over, bound, out);
            bound.push(acc.clone());
            bound.push(elem.clone());
            collect_term(step, bound, out);
            bound.pop();
            bound.pop();
        }
    }
}

fn collect_formula(f: &FormulaAst, bound: &mut Vec<Arc<str>>, out: &mut BTreeSet<Arc<str>>) {
    match f {
        FormulaAst::True | FormulaAst::False => {}
        FormulaAst::Eq(t, u)
        | FormulaAst::Less(t, u)
        | FormulaAst::Member(t, u)
        | FormulaAst::InitSeg(t, u) => {
            collect_term(t, bound, out);
            collect_term(u, bound, out);
        }
        FormulaAst::Not(f) => collect_formula(f, bound, out),
        FormulaAst::And(a, b) | FormulaAst::Or(a, b) | FormulaAst::Implies(a, b) => {
            collect_formula(a, bound, out);
            collect_formula(b, bound, out);
        }
        FormulaAst::Forall {
            var, over, body, ..
        }
        | FormulaAst::Exists {
            var, over, body, ..
        } => {
            collect_term(over, bound, out);
            bound.push(var.clone());
            collect_formula(body, bound, out);
            bound.pop();
        }
        FormulaAst::IsNat(t)
        | FormulaAst::IsReal(t)
        | FormulaAst::IsField(t)
        | FormulaAst::HasCard(_, t) => collect_term(t, bound, out),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaAst {
    True,
    False,
    Eq(Box<TermAst>, Box<TermAst>),
    /// Numeric strict order on fixed-precision reals; false off-domain.
    Less(Box<TermAst>, Box<TermAst>),
    /// `s ∈ t`: element membership.
    Member(Box<TermAst>, Box<TermAst>),
    /// `s ⊑ t`: s is an initial segment (front prefix) of t.
    InitSeg(Box<TermAst>, Box<TermAst>),
    Not(Box<FormulaAst>),
    And(Box<FormulaAst>, Box<FormulaAst>),
    Or(Box<FormulaAst>, Box<FormulaAst>),
    Implies(Box<FormulaAst>, Box<FormulaAst>),
    Forall {
        var: Arc<str>,
        bound: BoundKind,
        over: Box<TermAst>,
        body: Box<FormulaAst>,
    },
    Exists {
        var: Arc<str>,
        bound: BoundKind,
        over: Box<TermAst>,
        body: Box<FormulaAst>,
    },
    IsNat(Box<TermAst>),
    IsReal(Box<TermAst>),
    /// True of well-formed fields of the ambient theory.
    IsField(Box<TermAst>),
    /// Cardinality predicate applied to a value list.
    HasCard(Cardinality, Box<TermAst>),
}

impl FormulaAst {
    /// Builder-style negation, alongside [`FormulaAst::and`] and
    /// [`FormulaAst::or`]; not the `!` operator.
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> FormulaAst {
        FormulaAst::Not(Box::new(self))
    }

    pub fn and(self, other: FormulaAst) -> FormulaAst {
        FormulaAst::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: FormulaAst) -> FormulaAst {
        FormulaAst::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: FormulaAst) -> FormulaAst {
        FormulaAst::Implies(Box::new(self), Box::new(other))
    }

    /// Conjunction of all given formulas, `True` when empty.
    pub fn all(formulas: impl IntoIterator<Item = FormulaAst>) -> FormulaAst {
        let mut iter = formulas.into_iter();
        match iter.next() {
            None => FormulaAst::True,
            Some(first) => iter.fold(first, FormulaAst::and),
        }
    }

    /// Variables this formula reads from its environment.
    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        collect_formula(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Quantifier bound: over elements of a list, or over its initial segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Member,
    InitSeg,
}

/// Field cardinality constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cardinality {
    /// Value list must be empty.
    Empty,
    /// At most one element (`?`).
    AtMostOne,
    /// Exactly one element (`!`).
    ExactlyOne,
    /// At least one element (`+`).
    AtLeastOne,
}

impl Cardinality {
    pub fn admits(self, element_count: usize) -> bool {
        match self {
            Cardinality::Empty => element_count == 0,
            Cardinality::AtMostOne => element_count <= 1,
            Cardinality::ExactlyOne => element_count == 1,
            Cardinality::AtLeastOne => element_count >= 1,
        }
    }

    /// DSL spelling: `empty`, `?`, `!`, `+`.
    pub fn symbol(self) -> &'static str {
        match self {
            Cardinality::Empty => "empty",
            Cardinality::AtMostOne => "?",
            Cardinality::ExactlyOne => "!",
            Cardinality::AtLeastOne => "+",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_vars_respect_binders() {
        let search = TermAst::BSearch {
            var: Arc::from("x"),
            cond: Box::new(TermAst::var("x").eq(TermAst::var("needle"))),
            over: Box::new(TermAst::var("haystack")),
        };
        let vars = search.free_vars();
        let names: Vec<&str> = vars.iter().map(|s| &**s).collect();
        assert_eq!(names, vec!["haystack", "needle"]);

        let fold = TermAst::Rec {
            base: Box::new(TermAst::var("seed")),
            acc: Arc::from("r"),
            elem: Arc::from("b"),
            step: Box::new(TermAst::var("r").cons(TermAst::var("b"))),
            over: Box::new(TermAst::var("xs")),
        };
        let vars = fold.free_vars();
        let names: Vec<&str> = vars.iter().map(|s| &**s).collect();
        assert_eq!(names, vec!["seed", "xs"]);

        // The bound variable is free in the range term but not the body.
        let quant = FormulaAst::Forall {
            var: Arc::from("x"),
            bound: BoundKind::Member,
            over: Box::new(TermAst::var("x")),
            body: Box::new(TermAst::var("x").eq(TermAst::empty())),
        };
        let vars = quant.free_vars();
        let names: Vec<&str> = vars.iter().map(|s| &**s).collect();
        assert_eq!(names, vec!["x"]);
    }

    #[test]
    fn cardinalities_admit_the_documented_counts() {
        assert!(Cardinality::Empty.admits(0) && !Cardinality::Empty.admits(1));
        assert!(Cardinality::AtMostOne.admits(0) && Cardinality::AtMostOne.admits(1));
        assert!(!Cardinality::AtMostOne.admits(2));
        assert!(!Cardinality::ExactlyOne.admits(0) && Cardinality::ExactlyOne.admits(1));
        assert!(!Cardinality::ExactlyOne.admits(2));
        assert!(!Cardinality::AtLeastOne.admits(0) && Cardinality::AtLeastOne.admits(5));
    }
}
