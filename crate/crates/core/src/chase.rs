//! The chase: stepwise execution of an instruction queue against a model.
//!
//! Each step consumes the instruction at the queue's head (the back of the
//! queue list). Creates and field writes append one version tuple to the
//! model; transaction calls leave the model alone. After a field write the
//! set-field rule table is consulted, after a transaction call the
//! transaction table; the first rule whose form, name, and guard match may
//! extend the remaining queue (its instructions run next) or clear it.
//! When no rule matches, the table's default either keeps or drops the rest.
//!
//! Any failure — malformed instruction, unknown form, rejected field write,
//! or an evaluation error inside a rule — aborts the run: the model rolls
//! back to its initial state and the queue empties.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::ast::{Cardinality, VAR_DOC_ID, VAR_F_VALUE, VAR_MODEL, VAR_PARAMS};
use crate::docmodel::{self, Instruction};
use crate::eval::{eval_formula, eval_term, is_field_shape, Env, EvalContext, EvalError};
use crate::theory::{
    DaemonRule, DefaultAction, InstructionTerm, LoopBody, RuleAction, Theory,
};
use crate::value::{HfList, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbortReason {
    /// The queue head fits none of the three instruction shapes, or names
    /// an undeclared transaction.
    InvalidInstruction,
    /// A create instruction names a form the theory does not declare.
    UnknownForm,
    /// A field write whose target document, field, or value is unusable.
    BadSetField,
    /// A guard or term inside a rule failed to evaluate.
    Eval(String),
}

impl AbortReason {
    /// Stable machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            AbortReason::InvalidInstruction => "invalid-instruction",
            AbortReason::UnknownForm => "unknown-form",
            AbortReason::BadSetField => "bad-set-field",
            AbortReason::Eval(_) => "eval-error",
        }
    }
}

impl From<EvalError> for AbortReason {
    fn from(e: EvalError) -> AbortReason {
        AbortReason::Eval(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChaseStatus {
    Running,
    /// The queue drained with no failure.
    Terminated,
    Aborted(AbortReason),
    /// The step budget ran out; model and queue are left as they were.
    FuelExhausted,
}

impl ChaseStatus {
    pub fn code(&self) -> &'static str {
        match self {
            ChaseStatus::Running => "running",
            ChaseStatus::Terminated => "terminated",
            ChaseStatus::Aborted(_) => "aborted",
            ChaseStatus::FuelExhausted => "fuel-exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChaseOptions {
    /// Maximum number of instructions to process.
    pub fuel: u64,
    pub record_trace: bool,
    /// Store `<>` instead of real situations in new tuples. Cuts memory on
    /// long runs; safe whenever no guard inspects situations.
    pub elide_situations: bool,
}

impl Default for ChaseOptions {
    fn default() -> Self {
        ChaseOptions {
            fuel: 1_000_000,
            record_trace: false,
            elide_situations: false,
        }
    }
}

/// One processed instruction, as recorded in a trace.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    /// 1-based step number.
    pub step: u64,
    pub instruction: Value,
    /// The rule that fired, e.g. `trans#2(TMcell.MakeTMStep)`.
    pub rule: Option<String>,
    /// Instructions the rule appended, in execution order.
    pub appended: Vec<Value>,
    /// The version tuple this step appended to the model.
    pub delta: Option<Value>,
    /// True when this step aborted the run and rolled the model back.
    pub rollback: bool,
}

/// `TraceEvent` with values rendered canonically, ready for JSON lines.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    pub instruction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub appended: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub rollback: bool,
}

impl TraceEvent {
    pub fn to_record(&self) -> TraceRecord {
        TraceRecord {
            step: self.step,
            instruction: self.instruction.to_string(),
            rule: self.rule.clone(),
            appended: self.appended.iter().map(Value::to_string).collect(),
            delta: self.delta.as_ref().map(Value::to_string),
            rollback: self.rollback,
        }
    }
}

/// Folds a trace back into a model: start from `initial`, append each
/// step's delta, and honor rollbacks. Reproduces the final model of the
/// run that wrote the trace.
pub fn replay_trace(initial: &Value, trace: &[TraceEvent]) -> Value {
    let mut model = initial.clone();
    for event in trace {
        if event.rollback {
            model = initial.clone();
        } else if let Some(delta) = &event.delta {
            if let Some(l) = model.as_list() {
                model = Value::List(l.cons(delta.clone()));
            }
        }
    }
    model
}

/// A chase run in progress (or finished).
pub struct Chase<'t> {
    theory: &'t Theory,
    fields: BTreeMap<Arc<str>, Cardinality>,
    options: ChaseOptions,
    initial_model: Value,
    pub model: Value,
    pub queue: Value,
    pub status: ChaseStatus,
    pub steps: u64,
    trace: Vec<TraceEvent>,
}

/// Convenience wrapper: build a chase and run it to quiescence.
pub fn run_chase(
    theory: &Theory,
    model: Value,
    queue: Value,
    options: ChaseOptions,
) -> Chase<'_> {
    let mut chase = Chase::new(theory, model, queue, options);
    chase.run();
    chase
}

impl<'t> Chase<'t> {
    pub fn new(theory: &'t Theory, model: Value, queue: Value, options: ChaseOptions) -> Self {
        Chase {
            fields: theory.field_map(),
            theory,
            options,
            initial_model: model.clone(),
            model,
            queue,
            status: ChaseStatus::Running,
            steps: 0,
            trace: Vec::new(),
        }
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn initial_model(&self) -> &Value {
        &self.initial_model
    }

    pub fn model_len(&self) -> usize {
        self.model.as_list().map_or(0, HfList::len)
    }

    pub fn queue_len(&self) -> usize {
        self.queue.as_list().map_or(0, HfList::len)
    }

    #[cfg(test)]
    fn queue_is_empty(&self) -> bool {
        self.queue.as_list().is_some_and(HfList::is_empty)
    }

    /// Runs until the queue drains, the run aborts, or the fuel is spent.
    pub fn run(&mut self) {
        while self.status == ChaseStatus::Running {
            self.step();
        }
    }

    /// One transition: drain-check, then fuel-check, then process the
    /// head instruction. An empty queue terminates even with no fuel left.
    pub fn step(&mut self) {
        if self.status != ChaseStatus::Running {
            return;
        }
        let Some(q) = self.queue.as_list().cloned() else {
            self.abort(
                Value::empty(),
                AbortReason::Eval("the queue is not a list".into()),
            );
            return;
        };
        let Some(instr) = q.head_ref().cloned() else {
            self.status = ChaseStatus::Terminated;
            return;
        };
        if self.steps >= self.options.fuel {
            self.status = ChaseStatus::FuelExhausted;
            return;
        }
        let rest = q.tail();
        self.steps += 1;
        match self.process(&instr, &rest) {
            Ok(event) => {
                if self.options.record_trace {
                    self.trace.push(event);
                }
            }
            Err(reason) => self.abort(instr, reason),
        }
    }

    fn abort(&mut self, instruction: Value, reason: AbortReason) {
        if self.options.record_trace {
            self.trace.push(TraceEvent {
                step: self.steps,
                instruction,
                rule: None,
                appended: Vec::new(),
                delta: None,
                rollback: true,
            });
        }
        self.model = self.initial_model.clone();
        self.queue = Value::empty();
        self.status = ChaseStatus::Aborted(reason);
    }

    fn process(&mut self, instr: &Value, rest: &HfList) -> Result<TraceEvent, AbortReason> {
        let mut event = TraceEvent {
            step: self.steps,
            instruction: instr.clone(),
            rule: None,
            appended: Vec::new(),
            delta: None,
            rollback: false,
        };
        match docmodel::classify_instruction(instr) {
            None => return Err(AbortReason::InvalidInstruction),
            Some(Instruction::CreateDoc { form }) => {
                let blank = self
                    .theory
                    .blank_doc(&form)
                    .ok_or(AbortReason::UnknownForm)?;
                let last = docmodel::get_last_doc_id(&self.model)?;
                let id = Value::List(
                    last.as_list()
                        .expect("document ids are lists")
                        .cons(Value::empty()),
                );
                let tuple = docmodel::doc_tuple(
                    self.new_situation(instr)?,
                    Value::atom(&*form),
                    blank,
                    id,
                );
                self.append_tuple(&tuple);
                event.delta = Some(tuple);
                self.queue = Value::List(rest.clone());
            }
            Some(Instruction::SetField {
                value,
                field,
                target,
            }) => {
                let tuple = docmodel::get_doc_by_id(&target, &self.model)?;
                if tuple.is_fault() {
                    return Err(AbortReason::BadSetField);
                }
                let Some(values) = value.as_list() else {
                    return Err(AbortReason::BadSetField);
                };
                let field_name = Value::atom(&*field);
                let candidate = Value::List(values.cons(field_name.clone()));
                if !is_field_shape(&candidate, &self.fields) {
                    return Err(AbortReason::BadSetField);
                }
                let doc = docmodel::doc_of(&tuple)?;
                let Some(doc_fields) = doc.as_list() else {
                    return Err(AbortReason::Eval(
                        "the target document body is not a list".into(),
                    ));
                };
                let Some(new_doc) = docmodel::replace_field(doc_fields, &field_name, candidate)
                else {
                    return Err(AbortReason::BadSetField);
                };
                let new_tuple = docmodel::doc_tuple(
                    self.new_situation(instr)?,
                    docmodel::form_of(&tuple)?,
                    Value::List(new_doc),
                    target.clone(),
                );
                // The rule table sees the model as it was before this write.
                let (queue, rule, appended) = self.fire(
                    "set",
                    &self.theory.set_rules,
                    self.theory.default_set,
                    &field,
                    &target,
                    (VAR_F_VALUE, &value),
                    rest,
                )?;
                self.append_tuple(&new_tuple);
                event.delta = Some(new_tuple);
                event.rule = rule;
                event.appended = appended;
                self.queue = Value::List(queue);
            }
            Some(Instruction::Trans {
                params,
                target,
                name,
            }) => {
                if !self.theory.has_transaction(&name) {
                    return Err(AbortReason::InvalidInstruction);
                }
                let (queue, rule, appended) = self.fire(
                    "trans",
                    &self.theory.trans_rules,
                    self.theory.default_trans,
                    &name,
                    &target,
                    (VAR_PARAMS, &params),
                    rest,
                )?;
                event.rule = rule;
                event.appended = appended;
                self.queue = Value::List(queue);
            }
        }
        Ok(event)
    }

    fn append_tuple(&mut self, tuple: &Value) {
        let model = self
            .model
            .as_list()
            .expect("the model stays a list while running");
        self.model = Value::List(model.cons(tuple.clone()));
    }

    /// `cons(current_situation, instruction)`: the history the new version
    /// records, unless situations are elided.
    fn new_situation(&self, instr: &Value) -> Result<Value, AbortReason> {
        if self.options.elide_situations {
            return Ok(Value::empty());
        }
        let sit = docmodel::current_situation(&self.model)?;
        let l = sit
            .as_list()
            .ok_or_else(|| EvalError::atom_operand("cons", &sit))?;
        Ok(Value::List(l.cons(instr.clone())))
    }

    /// Consults a rule table for the event `(target document, name)`. The
    /// first rule declared for the target's form and the event name whose
    /// guard holds decides the new queue; otherwise the default acts.
    #[allow(clippy::too_many_arguments)]
    fn fire(
        &self,
        table: &'static str,
        rules: &[DaemonRule],
        default: DefaultAction,
        event_name: &str,
        target: &Value,
        binding: (&'static str, &Value),
        rest: &HfList,
    ) -> Result<(HfList, Option<String>, Vec<Value>), AbortReason> {
        let cx = EvalContext::new(&self.theory.cfg, &self.fields);
        let tuple = docmodel::get_doc_by_id(target, &self.model)?;
        // A missing target document matches no rule; the default decides.
        let form = if tuple.is_fault() {
            None
        } else {
            docmodel::form_of(&tuple)?.as_atom().map(str::to_string)
        };
        if let Some(form) = form {
            let mut env = Env::new()
                .with(VAR_DOC_ID, target.clone())
                .with(binding.0, binding.1.clone())
                .with(VAR_MODEL, self.model.clone());
            for (index, rule) in rules.iter().enumerate() {
                if *rule.form != form || &*rule.name != event_name {
                    continue;
                }
                if !eval_formula(&rule.guard, &mut env, &cx)? {
                    continue;
                }
                let label = format!("{table}#{}({}.{})", index + 1, rule.form, rule.name);
                return match &rule.action {
                    RuleAction::ClearQueue => Ok((HfList::new(), Some(label), Vec::new())),
                    RuleAction::Extend(terms) => {
                        let mut appended = Vec::new();
                        for term in terms {
                            appended.extend(self.expand(term, &mut env, &cx)?);
                        }
                        // Newly appended instructions run before the old
                        // remainder: conc them at the back in reverse.
                        let mut queue = rest.clone();
                        for v in appended.iter().rev() {
                            queue = queue.cons(v.clone());
                        }
                        Ok((queue, Some(label), appended))
                    }
                };
            }
        }
        match default {
            DefaultAction::KeepQueue => Ok((rest.clone(), None, Vec::new())),
            DefaultAction::SkipQueue => Ok((HfList::new(), None, Vec::new())),
        }
    }

    /// Evaluates one instruction template to concrete queue entries.
    fn expand(
        &self,
        term: &InstructionTerm,
        env: &mut Env,
        cx: &EvalContext,
    ) -> Result<Vec<Value>, AbortReason> {
        match term {
            InstructionTerm::SetField {
                field,
                target,
                value,
            } => {
                let value = eval_term(value, env, cx)?;
                let target = eval_term(target, env, cx)?;
                Ok(vec![docmodel::make_set_field(value, field, target)])
            }
            InstructionTerm::CreateDoc { form } => Ok(vec![docmodel::make_create(form)]),
            InstructionTerm::Trans {
                trans,
                target,
                params,
            } => {
                let params = eval_term(params, env, cx)?;
                let target = eval_term(target, env, cx)?;
                Ok(vec![docmodel::make_trans(params, target, trans)])
            }
            InstructionTerm::FilterLoop {
                filter,
                form,
                params,
                body,
            } => {
                let def = self.theory.filter_def(filter).ok_or_else(|| {
                    AbortReason::Eval(format!("filter `{filter}` is not declared"))
                })?;
                let params = eval_term(params, env, cx)?;
                let ids = self
                    .theory
                    .eval_filter(def, form, &params, &self.model, cx)?;
                match body {
                    LoopBody::EmitTrans { trans, params } => {
                        // Evaluated once; the ids only pick the targets.
                        let params = eval_term(params, env, cx)?;
                        Ok(ids
                            .into_iter()
                            .map(|id| docmodel::make_trans(params.clone(), id, trans))
                            .collect())
                    }
                    LoopBody::EmitCreateDoc { form } => Ok(ids
                        .iter()
                        .map(|_| docmodel::make_create(form))
                        .collect()),
                }
            }
        }
    }
}
