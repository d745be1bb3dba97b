//! Document theories: declared names, blanks, filters, and daemon rules.
//!
//! A theory declares four disjoint name sets (fields, forms, filters,
//! transactions), a blank document per form, guarded filters for selecting
//! documents, and two rule tables run by the engine daemons: one consulted
//! after every field write, one for every transaction call. Within a table
//! the first rule whose form, name, and guard all match is the one that
//! fires.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Cardinality, FormulaAst, TermAst, VAR_DOC, VAR_DOC_ID, VAR_F_VALUE, VAR_LOOP_ID, VAR_MODEL, VAR_PARAMS};
use crate::docmodel;
use crate::eval::{eval_formula, Env, EvalContext, EvalError};
use crate::numerics::NumericConfig;
use crate::value::{Value, CREATE_DOC, FAULT, SET_FIELD};

/// A form declaration: the name and the fields of its blank document, each
/// with a default value list. A form with no blank fields starts as `<>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormDef {
    pub name: Arc<str>,
    pub blank_fields: Vec<(Arc<str>, Value)>,
}

/// A named document filter. Applied to a form and a parameter list, it
/// selects the documents of that form whose newest version satisfies the
/// guard; `form_var` names the form inside the guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterDef {
    pub name: Arc<str>,
    pub form_var: Arc<str>,
    pub guard: FormulaAst,
}

/// One guarded daemon rule. `form` and `name` select the events the rule
/// can answer: field writes of `name` on documents of `form` for the
/// set-field table, calls of transaction `name` targeted at documents of
/// `form` for the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaemonRule {
    pub form: Arc<str>,
    pub name: Arc<str>,
    pub guard: FormulaAst,
    pub action: RuleAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleAction {
    /// Prepend these instructions (in the given execution order) to the
    /// remaining queue.
    Extend(Vec<InstructionTerm>),
    /// Drop the remaining queue.
    ClearQueue,
}

/// An instruction template inside a rule action. Targets and values are
/// terms, evaluated when the rule fires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstructionTerm {
    SetField {
        field: Arc<str>,
        target: TermAst,
        value: TermAst,
    },
    CreateDoc {
        form: Arc<str>,
    },
    Trans {
        trans: Arc<str>,
        target: TermAst,
        params: TermAst,
    },
    /// Expands into one body instruction per document the filter selects.
    FilterLoop {
        filter: Arc<str>,
        form: Arc<str>,
        params: TermAst,
        body: LoopBody,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopBody {
    /// `trans(id, params)` for each selected id. The parameter term is
    /// evaluated once, before the loop unrolls.
    EmitTrans { trans: Arc<str>, params: TermAst },
    /// One fresh document per selected id.
    EmitCreateDoc { form: Arc<str> },
}

/// What a daemon does when no rule in its table matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DefaultAction {
    /// Leave the remaining queue alone.
    #[default]
    KeepQueue,
    /// Drop the remaining queue.
    SkipQueue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub name: Arc<str>,
    pub cfg: NumericConfig,
    pub fields: Vec<(Arc<str>, Cardinality)>,
    pub forms: Vec<FormDef>,
    pub filters: Vec<FilterDef>,
    pub transactions: Vec<Arc<str>>,
    pub set_rules: Vec<DaemonRule>,
    pub trans_rules: Vec<DaemonRule>,
    pub default_set: DefaultAction,
    pub default_trans: DefaultAction,
}

/// Names no declaration may take: the instruction tags, the fault constant,
/// and the rule-scope variables.
pub const RESERVED_NAMES: [&str; 9] = [
    FAULT, CREATE_DOC, SET_FIELD, VAR_DOC_ID, VAR_F_VALUE, VAR_PARAMS, VAR_MODEL, VAR_DOC,
    VAR_LOOP_ID,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameKind {
    Field,
    Form,
    Filter,
    Transaction,
}

impl fmt::Display for NameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NameKind::Field => "field",
            NameKind::Form => "form",
            NameKind::Filter => "filter",
            NameKind::Transaction => "transaction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationIssue {
    #[error("a theory needs at least one form")]
    NoForms,
    #[error("`{0}` is declared more than once")]
    Duplicate(Arc<str>),
    #[error("`{0}` collides with a reserved name")]
    Reserved(Arc<str>),
    #[error("{site} references unknown {kind} `{name}`")]
    UnknownName {
        site: String,
        kind: NameKind,
        name: Arc<str>,
    },
    #[error("blank for `{form}.{field}`: {problem}")]
    BlankValue {
        form: Arc<str>,
        field: Arc<str>,
        problem: String,
    },
    #[error("{site} uses `{var}`, which is not in scope there")]
    UnboundVariable { site: String, var: Arc<str> },
    #[error("{site} creates a document; only transaction rules may do that")]
    CreateInSetRule { site: String },
    #[error("{site} must pass `model` itself to document accessors")]
    ModelArgument { site: String },
}

/// Filters may only read the ambient model: every accessor's model-typed
/// argument must be the `model` variable, not a derived list.
fn accessor_models_ok_term(t: &TermAst) -> bool {
    use TermAst::*;
    let is_model = |m: &TermAst| matches!(m, Var(v) if &**v == VAR_MODEL);
    match t {
        Const(_) | Var(_) => true,
        Head(x) | Tail(x) | Min(x) | Max(x) | Len(x) | Rev(x) | FormOf(x) | Situation(x) => {
            accessor_models_ok_term(x)
        }
        Cons(a, b) | Conc(a, b) | Index(a, b) | Add(a, b) | FindFieldPosition(a, b) => {
            accessor_models_ok_term(a) && accessor_models_ok_term(b)
        }
        ListLiteral(items) => items.iter().all(accessor_models_ok_term),
        Cond { branches, default } => {
            branches
                .iter()
                .all(|(g, t)| accessor_models_ok_formula(g) && accessor_models_ok_term(t))
                && accessor_models_ok_term(default)
        }
        BSearch { cond, over, .. } => {
            accessor_models_ok_formula(cond) && accessor_models_ok_term(over)
        }
        Rec {
            base, step, over, ..
        } => {
            accessor_models_ok_term(base)
                && accessor_models_ok_term(step)
                && accessor_models_ok_term(over)
        }
        GetLastDocId(m) => is_model(m),
        GetDocById(x, m) => accessor_models_ok_term(x) && is_model(m),
        GetFieldValue(x, y, m) => {
            accessor_models_ok_term(x) && accessor_models_ok_term(y) && is_model(m)
        }
    }
}

fn accessor_models_ok_formula(f: &FormulaAst) -> bool {
    use FormulaAst::*;
    match f {
        True | False => true,
        Eq(a, b) | Less(a, b) | Member(a, b) | InitSeg(a, b) => {
            accessor_models_ok_term(a) && accessor_models_ok_term(b)
        }
        Not(x) => accessor_models_ok_formula(x),
        And(a, b) | Or(a, b) | Implies(a, b) => {
            accessor_models_ok_formula(a) && accessor_models_ok_formula(b)
        }
        Forall { over, body, .. } | Exists { over, body, .. } => {
            accessor_models_ok_term(over) && accessor_models_ok_formula(body)
        }
        IsNat(t) | IsReal(t) | IsField(t) | HasCard(_, t) => accessor_models_ok_term(t),
    }
}

impl Theory {
    /// Field cardinalities keyed by name, for evaluation contexts.
    pub fn field_map(&self) -> BTreeMap<Arc<str>, Cardinality> {
        self.fields.iter().cloned().collect()
    }

    pub fn form(&self, name: &str) -> Option<&FormDef> {
        self.forms.iter().find(|f| &*f.name == name)
    }

    pub fn filter_def(&self, name: &str) -> Option<&FilterDef> {
        self.filters.iter().find(|f| &*f.name == name)
    }

    pub fn has_transaction(&self, name: &str) -> bool {
        self.transactions.iter().any(|t| &**t == name)
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.fields.iter().any(|(f, _)| &**f == name)
    }

    /// The blank document for a form: its declared fields with their
    /// default value lists, in declaration order.
    pub fn blank_doc(&self, form: &str) -> Option<Value> {
        let def = self.form(form)?;
        let mut doc = crate::value::HfList::new();
        for (field, default) in &def.blank_fields {
            let values = default.as_list()?;
            doc = doc.cons(Value::List(values.cons(Value::atom(&**field))));
        }
        Some(Value::List(doc))
    }

    /// Structural well-formedness: every issue found, empty when sound.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        if self.forms.is_empty() {
            issues.push(ValidationIssue::NoForms);
        }

        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let all_names = self
            .fields
            .iter()
            .map(|(n, _)| n)
            .chain(self.forms.iter().map(|f| &f.name))
            .chain(self.filters.iter().map(|f| &f.name))
            .chain(self.transactions.iter());
        for name in all_names {
            if RESERVED_NAMES.contains(&&**name) {
                issues.push(ValidationIssue::Reserved(name.clone()));
            }
            if !seen.insert(name) {
                issues.push(ValidationIssue::Duplicate(name.clone()));
            }
        }

        for form in &self.forms {
            for (field, default) in &form.blank_fields {
                let card = match self.fields.iter().find(|(n, _)| n == field) {
                    Some((_, c)) => *c,
                    None => {
                        issues.push(ValidationIssue::UnknownName {
                            site: format!("blank of form `{}`", form.name),
                            kind: NameKind::Field,
                            name: field.clone(),
                        });
                        continue;
                    }
                };
                match default.as_list() {
                    None => issues.push(ValidationIssue::BlankValue {
                        form: form.name.clone(),
                        field: field.clone(),
                        problem: "the default must be a value list".into(),
                    }),
                    Some(l) if !card.admits(l.len()) => {
                        issues.push(ValidationIssue::BlankValue {
                            form: form.name.clone(),
                            field: field.clone(),
                            problem: format!(
                                "{} value(s) break the `{}` cardinality",
                                l.len(),
                                card.symbol()
                            ),
                        })
                    }
                    Some(_) => {}
                }
            }
        }

        for filter in &self.filters {
            let site = format!("filter `{}`", filter.name);
            if [VAR_PARAMS, VAR_DOC, VAR_MODEL].contains(&&*filter.form_var) {
                issues.push(ValidationIssue::Reserved(filter.form_var.clone()));
            }
            let scope = [
                Arc::from(VAR_PARAMS),
                Arc::from(VAR_DOC),
                Arc::from(VAR_MODEL),
                filter.form_var.clone(),
            ];
            self.check_scope(&site, filter.guard.free_vars(), &scope, &mut issues);
            if !accessor_models_ok_formula(&filter.guard) {
                issues.push(ValidationIssue::ModelArgument { site });
            }
        }

        let set_rules = self.set_rules.iter().map(|r| (NameKind::Field, r));
        let trans_rules = self.trans_rules.iter().map(|r| (NameKind::Transaction, r));
        for (idx, (kind, rule)) in set_rules.chain(trans_rules).enumerate() {
            let table = match kind {
                NameKind::Field => "set",
                _ => "trans",
            };
            let site = format!("{} rule #{} ({}.{})", table, idx + 1, rule.form, rule.name);
            if self.form(&rule.form).is_none() {
                issues.push(ValidationIssue::UnknownName {
                    site: site.clone(),
                    kind: NameKind::Form,
                    name: rule.form.clone(),
                });
            }
            let name_known = match kind {
                NameKind::Field => self.has_field(&rule.name),
                _ => self.has_transaction(&rule.name),
            };
            if !name_known {
                issues.push(ValidationIssue::UnknownName {
                    site: site.clone(),
                    kind,
                    name: rule.name.clone(),
                });
            }

            let value_var: Arc<str> = match kind {
                NameKind::Field => Arc::from(VAR_F_VALUE),
                _ => Arc::from(VAR_PARAMS),
            };
            let scope = [Arc::from(VAR_DOC_ID), value_var.clone(), Arc::from(VAR_MODEL)];
            let loop_body_scope = [value_var, Arc::from(VAR_MODEL)];
            self.check_scope(&site, rule.guard.free_vars(), &scope, &mut issues);

            let instructions = match &rule.action {
                RuleAction::ClearQueue => continue,
                RuleAction::Extend(instructions) => instructions,
            };
            for instr in instructions {
                // Document creation is the transaction daemon's privilege.
                if kind == NameKind::Field {
                    let creates = matches!(instr, InstructionTerm::CreateDoc { .. })
                        || matches!(
                            instr,
                            InstructionTerm::FilterLoop {
                                body: LoopBody::EmitCreateDoc { .. },
                                ..
                            }
                        );
                    if creates {
                        issues.push(ValidationIssue::CreateInSetRule { site: site.clone() });
                    }
                }
                match instr {
                    InstructionTerm::SetField {
                        field,
                        target,
                        value,
                    } => {
                        if !self.has_field(field) {
                            issues.push(ValidationIssue::UnknownName {
                                site: site.clone(),
                                kind: NameKind::Field,
                                name: field.clone(),
                            });
                        }
                        self.check_scope(&site, target.free_vars(), &scope, &mut issues);
                        self.check_scope(&site, value.free_vars(), &scope, &mut issues);
                    }
                    InstructionTerm::CreateDoc { form } => {
                        if self.form(form).is_none() {
                            issues.push(ValidationIssue::UnknownName {
                                site: site.clone(),
                                kind: NameKind::Form,
                                name: form.clone(),
                            });
                        }
                    }
                    InstructionTerm::Trans {
                        trans,
                        target,
                        params,
                    } => {
                        if !self.has_transaction(trans) {
                            issues.push(ValidationIssue::UnknownName {
                                site: site.clone(),
                                kind: NameKind::Transaction,
                                name: trans.clone(),
                            });
                        }
                        self.check_scope(&site, target.free_vars(), &scope, &mut issues);
                        self.check_scope(&site, params.free_vars(), &scope, &mut issues);
                    }
                    InstructionTerm::FilterLoop {
                        filter,
                        form,
                        params,
                        body,
                    } => {
                        if self.filter_def(filter).is_none() {
                            issues.push(ValidationIssue::UnknownName {
                                site: site.clone(),
                                kind: NameKind::Filter,
                                name: filter.clone(),
                            });
                        }
                        if self.form(form).is_none() {
                            issues.push(ValidationIssue::UnknownName {
                                site: site.clone(),
                                kind: NameKind::Form,
                                name: form.clone(),
                            });
                        }
                        self.check_scope(&site, params.free_vars(), &scope, &mut issues);
                        match body {
                            LoopBody::EmitTrans { trans, params } => {
                                if !self.has_transaction(trans) {
                                    issues.push(ValidationIssue::UnknownName {
                                        site: site.clone(),
                                        kind: NameKind::Transaction,
                                        name: trans.clone(),
                                    });
                                }
                                // The loop parameter term is evaluated once,
                                // before any id is selected, so neither the
                                // loop variable nor the target id is visible.
                                self.check_scope(
                                    &site,
                                    params.free_vars(),
                                    &loop_body_scope,
                                    &mut issues,
                                );
                            }
                            LoopBody::EmitCreateDoc { form } => {
                                if self.form(form).is_none() {
                                    issues.push(ValidationIssue::UnknownName {
                                        site: site.clone(),
                                        kind: NameKind::Form,
                                        name: form.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        issues
    }

    fn check_scope(
        &self,
        site: &str,
        free: BTreeSet<Arc<str>>,
        scope: &[Arc<str>],
        issues: &mut Vec<ValidationIssue>,
    ) {
        for var in free {
            if !scope.contains(&var) {
                issues.push(ValidationIssue::UnboundVariable {
                    site: site.to_string(),
                    var,
                });
            }
        }
    }

    /// Ids of the documents a filter selects, newest first.
    ///
    /// Each document is judged by its newest version alone: it is selected
    /// when that version has the requested form and satisfies the guard
    /// with `params`, `model`, `doc`, and the filter's form variable bound.
    pub fn eval_filter(
        &self,
        def: &FilterDef,
        form: &str,
        params: &Value,
        model: &Value,
        cx: &EvalContext,
    ) -> Result<Vec<Value>, EvalError> {
        let tuples = model
            .as_list()
            .ok_or_else(|| EvalError::atom_operand("filter", model))?;
        let form_value = Value::atom(form);
        let mut seen: Vec<Value> = Vec::new();
        let mut selected = Vec::new();
        for tuple in tuples.iter_back() {
            let Some(l) = tuple.as_list() else { continue };
            let Some(id) = l.head_ref() else { continue };
            if seen.contains(id) {
                continue;
            }
            seen.push(id.clone());
            if docmodel::form_of(tuple)? != form_value {
                continue;
            }
            let mut env = Env::new()
                .with(VAR_PARAMS, params.clone())
                .with(VAR_MODEL, model.clone())
                .with(VAR_DOC, tuple.clone())
                .with(def.form_var.clone(), form_value.clone());
            if eval_formula(&def.guard, &mut env, cx)? {
                selected.push(id.clone());
            }
        }
        Ok(selected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{FormulaAst as F, TermAst as T};

    fn tiny_theory() -> Theory {
        Theory {
            name: Arc::from("Tiny"),
            cfg: NumericConfig::default(),
            fields: vec![
                (Arc::from("total"), Cardinality::ExactlyOne),
                (Arc::from("notes"), Cardinality::AtMostOne),
            ],
            forms: vec![FormDef {
                name: Arc::from("Invoice"),
                blank_fields: vec![
                    (Arc::from("total"), Value::list([Value::nat(0)])),
                    (Arc::from("notes"), Value::empty()),
                ],
            }],
            filters: vec![FilterDef {
                name: Arc::from("All"),
                form_var: Arc::from("f"),
                guard: F::True,
            }],
            transactions: vec![Arc::from("Approve")],
            set_rules: vec![DaemonRule {
                form: Arc::from("Invoice"),
                name: Arc::from("total"),
                guard: F::True,
                action: RuleAction::Extend(vec![InstructionTerm::SetField {
                    field: Arc::from("notes"),
                    target: T::var(VAR_DOC_ID),
                    value: T::var(VAR_F_VALUE),
                }]),
            }],
            trans_rules: vec![DaemonRule {
                form: Arc::from("Invoice"),
                name: Arc::from("Approve"),
                guard: F::True,
                action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                    filter: Arc::from("All"),
                    form: Arc::from("Invoice"),
                    params: T::var(VAR_PARAMS),
                    body: LoopBody::EmitTrans {
                        trans: Arc::from("Approve"),
                        params: T::var(VAR_MODEL).cons(T::empty()),
                    },
                }]),
            }],
            default_set: DefaultAction::KeepQueue,
            default_trans: DefaultAction::SkipQueue,
        }
    }

    #[test]
    fn a_sound_theory_has_no_issues() {
        assert_eq!(tiny_theory().validate(), vec![]);
    }

    #[test]
    fn blanks_follow_declaration_order() {
        let t = tiny_theory();
        let blank = t.blank_doc("Invoice").unwrap();
        assert_eq!(
            blank,
            Value::list([
                Value::list([Value::nat(0), Value::atom("total")]),
                Value::list([Value::atom("notes")]),
            ])
        );
        assert!(t.blank_doc("Order").is_none());
    }

    #[test]
    fn name_collisions_are_reported() {
        let mut t = tiny_theory();
        t.transactions.push(Arc::from("total"));
        assert_eq!(
            t.validate(),
            vec![ValidationIssue::Duplicate(Arc::from("total"))]
        );

        let mut t = tiny_theory();
        t.transactions.push(Arc::from("model"));
        assert_eq!(
            t.validate(),
            vec![ValidationIssue::Reserved(Arc::from("model"))]
        );
    }

    #[test]
    fn blank_defaults_must_fit_their_fields() {
        let mut t = tiny_theory();
        t.forms[0].blank_fields[0].1 = Value::atom("x");
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::BlankValue { field, .. }] if &**field == "total"
        ));

        let mut t = tiny_theory();
        t.forms[0].blank_fields[0].1 = Value::list([Value::nat(1), Value::nat(2)]);
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::BlankValue { problem, .. }] if problem.contains('!')
        ));

        let mut t = tiny_theory();
        t.forms[0].blank_fields.push((Arc::from("zzz"), Value::empty()));
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnknownName {
                kind: NameKind::Field,
                ..
            }]
        ));
    }

    #[test]
    fn rules_must_reference_declared_names() {
        let mut t = tiny_theory();
        t.set_rules[0].form = Arc::from("Order");
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnknownName {
                kind: NameKind::Form,
                ..
            }]
        ));

        let mut t = tiny_theory();
        t.trans_rules[0].name = Arc::from("Reject");
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnknownName {
                kind: NameKind::Transaction,
                ..
            }]
        ));
    }

    #[test]
    fn rule_scopes_are_enforced() {
        // A set rule has no transaction parameters.
        let mut t = tiny_theory();
        t.set_rules[0].guard = T::var(VAR_PARAMS).eq(T::empty());
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnboundVariable { var, .. }] if &**var == VAR_PARAMS
        ));

        // The loop parameter term cannot see the rule's target document.
        let mut t = tiny_theory();
        if let RuleAction::Extend(instrs) = &mut t.trans_rules[0].action {
            if let InstructionTerm::FilterLoop { body, .. } = &mut instrs[0] {
                *body = LoopBody::EmitTrans {
                    trans: Arc::from("Approve"),
                    params: T::var(VAR_DOC_ID),
                };
            }
        }
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnboundVariable { var, .. }] if &**var == VAR_DOC_ID
        ));

        // Filter guards see the filter scope, not the rule scope.
        let mut t = tiny_theory();
        t.filters[0].guard = T::var(VAR_DOC_ID).eq(T::empty());
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::UnboundVariable { var, .. }] if &**var == VAR_DOC_ID
        ));
    }

    #[test]
    fn set_rules_cannot_create_documents() {
        let mut t = tiny_theory();
        t.set_rules[0].action = RuleAction::Extend(vec![InstructionTerm::CreateDoc {
            form: Arc::from("Invoice"),
        }]);
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::CreateInSetRule { .. }]
        ));

        // A create hidden inside a loop body is rejected too.
        let mut t = tiny_theory();
        t.set_rules[0].action = RuleAction::Extend(vec![InstructionTerm::FilterLoop {
            filter: Arc::from("All"),
            form: Arc::from("Invoice"),
            params: T::empty(),
            body: LoopBody::EmitCreateDoc {
                form: Arc::from("Invoice"),
            },
        }]);
        assert!(matches!(
            t.validate().as_slice(),
            [ValidationIssue::CreateInSetRule { .. }]
        ));

        // The same emissions are fine in a transaction rule.
        let mut t = tiny_theory();
        if let RuleAction::Extend(instrs) = &mut t.trans_rules[0].action {
            instrs.push(InstructionTerm::CreateDoc {
                form: Arc::from("Invoice"),
            });
        }
        assert_eq!(t.validate(), vec![]);
    }

    #[test]
    fn empty_form_lists_are_rejected() {
        let mut t = tiny_theory();
        t.forms.clear();
        let issues = t.validate();
        assert!(issues.contains(&ValidationIssue::NoForms));
    }

    fn version(id: usize, form: &str, total: usize, sit: usize) -> Value {
        docmodel::doc_tuple(
            Value::nat(sit),
            Value::atom(form),
            Value::list([Value::list([Value::nat(total), Value::atom("total")])]),
            Value::nat(id),
        )
    }

    #[test]
    fn filters_judge_documents_by_their_newest_version() {
        let t = tiny_theory();
        let fields = t.field_map();
        let cx = EvalContext::new(&t.cfg, &fields);
        // Guard: the document's total is <2>.
        let def = FilterDef {
            name: Arc::from("TotalTwo"),
            form_var: Arc::from("f"),
            guard: T::GetFieldValue(
                Box::new(T::var(VAR_DOC).head()),
                Box::new(T::atom("total")),
                Box::new(T::var(VAR_MODEL)),
            )
            .eq(T::empty().cons(T::value(Value::nat(2)))),
        };

        // Doc 1: old version matches, the newest does not. Doc 2: newest
        // matches. Doc 3: wrong form entirely.
        let model = Value::list([
            version(1, "Invoice", 2, 0),
            version(2, "Invoice", 0, 1),
            version(3, "Order", 2, 2),
            version(2, "Invoice", 2, 3),
            version(1, "Invoice", 7, 4),
        ]);
        let ids = t
            .eval_filter(&def, "Invoice", &Value::empty(), &model, &cx)
            .unwrap();
        assert_eq!(ids, vec![Value::nat(2)]);

        // With a vacuous guard both invoices are selected, newest first.
        let all = t.filter_def("All").unwrap();
        let ids = t
            .eval_filter(all, "Invoice", &Value::empty(), &model, &cx)
            .unwrap();
        assert_eq!(ids, vec![Value::nat(1), Value::nat(2)]);

        let none = t
            .eval_filter(all, "Missing", &Value::empty(), &model, &cx)
            .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn filter_guards_see_params_and_the_form_variable() {
        let t = tiny_theory();
        let fields = t.field_map();
        let cx = EvalContext::new(&t.cfg, &fields);
        let def = FilterDef {
            name: Arc::from("FormIs"),
            form_var: Arc::from("f"),
            guard: T::var("f").eq(T::var(VAR_PARAMS).head()),
        };
        let model = Value::list([version(1, "Invoice", 0, 0)]);
        let matching = Value::list([Value::atom("Invoice")]);
        let other = Value::list([Value::atom("Order")]);
        assert_eq!(
            t.eval_filter(&def, "Invoice", &matching, &model, &cx)
                .unwrap(),
            vec![Value::nat(1)]
        );
        assert!(t
            .eval_filter(&def, "Invoice", &other, &model, &cx)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn filter_accessors_must_read_the_ambient_model() {
        let mut t = tiny_theory();
        t.filters[0].guard = T::GetFieldValue(
            Box::new(T::var(VAR_DOC).head()),
            Box::new(T::atom("total")),
            Box::new(T::var(VAR_MODEL).tail()),
        )
        .eq(T::empty());
        assert!(t
            .validate()
            .iter()
            .any(|i| matches!(i, ValidationIssue::ModelArgument { .. })));

        t.filters[0].guard = T::GetFieldValue(
            Box::new(T::var(VAR_DOC).head()),
            Box::new(T::atom("total")),
            Box::new(T::var(VAR_MODEL)),
        )
        .eq(T::empty());
        assert!(t.validate().is_empty());
    }
}
