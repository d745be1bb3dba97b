//! Generators for two stress families.
//!
//! [`encode_tm`] turns a single-tape machine description into a theory
//! whose trans daemon replays the machine one step per dispatch, plus the
//! four-instruction queue that lays down the starting tape. The documents
//! are tape cells in id order with one extra document carrying the machine
//! state; the state document sits immediately to the right of the scanned
//! cell. [`TmSimulator`] runs the same description directly so the two can
//! be compared configuration by configuration.
//!
//! [`exp_theory`] builds a doubling cascade: `MakeExp_i` asks every
//! level-`i-1` document to duplicate the level-`i` population, so each
//! level squares-by-doubling into the next and the run takes a tower of
//! exponentials of steps. [`exp_counts`] predicts the exact step and
//! document totals.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{FormulaAst as F, TermAst as T, VAR_PARAMS};
use crate::chase::{Chase, ChaseOptions, ChaseStatus};
use crate::docmodel::{
    classify_instruction, get_field_value, get_last_doc_id, make_create, make_set_field,
    make_trans, Instruction,
};
use crate::numerics::NumericConfig;
use crate::theory::{
    DaemonRule, DefaultAction, FilterDef, FormDef, InstructionTerm, LoopBody, RuleAction, Theory,
};
use crate::value::Value;

/// A line of a machine file was malformed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TmParseError {
    pub line: u32,
    pub message: String,
}

/// Which way the head moves after a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
}

/// One transition: write `write`, switch to `state`, move `shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmAction {
    pub state: String,
    pub write: String,
    pub shift: Move,
}

/// A deterministic single-tape machine.
///
/// The text format is line oriented: `blank <symbol>`, `init <state>`,
/// and one `<state> <symbol> -> <state> <symbol> <L|R>` line per
/// transition. `#` starts a comment. A machine halts on any undefined
/// (state, symbol) pair, or by moving off the left end of the tape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSpec {
    pub blank: String,
    pub init: String,
    pub rules: BTreeMap<(String, String), TmAction>,
    pub states: BTreeSet<String>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '-')
}

/// Parse the machine text format.
pub fn parse_tm(text: &str) -> Result<TmSpec, TmParseError> {
    let mut blank: Option<String> = None;
    let mut init: Option<String> = None;
    let mut rules: BTreeMap<(String, String), TmAction> = BTreeMap::new();
    let mut states: BTreeSet<String> = BTreeSet::new();
    let mut symbols: BTreeSet<String> = BTreeSet::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index as u32 + 1;
        let fail = |message: String| TmParseError { line, message };
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let words: Vec<&str> = content.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let named = |what: &str, word: &str| -> Result<String, TmParseError> {
            if is_ident(word) {
                Ok(word.to_string())
            } else {
                Err(fail(format!("{what} `{word}` is not a plain name")))
            }
        };
        match words[0] {
            "blank" => {
                if words.len() != 2 {
                    return Err(fail("expected `blank <symbol>`".into()));
                }
                if blank.is_some() {
                    return Err(fail("`blank` was already declared".into()));
                }
                let sym = named("symbol", words[1])?;
                symbols.insert(sym.clone());
                blank = Some(sym);
            }
            "init" => {
                if words.len() != 2 {
                    return Err(fail("expected `init <state>`".into()));
                }
                if init.is_some() {
                    return Err(fail("`init` was already declared".into()));
                }
                let state = named("state", words[1])?;
                states.insert(state.clone());
                init = Some(state);
            }
            _ => {
                if words.len() != 6 || words[2] != "->" {
                    return Err(fail(
                        "expected `<state> <symbol> -> <state> <symbol> <L|R>`".into(),
                    ));
                }
                let state = named("state", words[0])?;
                let read = named("symbol", words[1])?;
                let next = named("state", words[3])?;
                let write = named("symbol", words[4])?;
                let shift = match words[5] {
                    "L" => Move::Left,
                    "R" => Move::Right,
                    other => return Err(fail(format!("move must be `L` or `R`, not `{other}`"))),
                };
                let key = (state.clone(), read.clone());
                if rules.contains_key(&key) {
                    return Err(fail(format!(
                        "duplicate transition for state `{state}` reading `{read}`"
                    )));
                }
                states.insert(state);
                states.insert(next.clone());
                symbols.insert(read);
                symbols.insert(write.clone());
                rules.insert(
                    key,
                    TmAction {
                        state: next,
                        write,
                        shift,
                    },
                );
            }
        }
    }

    let blank = blank.ok_or(TmParseError {
        line: text.lines().count() as u32 + 1,
        message: "missing `blank` declaration".into(),
    })?;
    let init = init.ok_or(TmParseError {
        line: text.lines().count() as u32 + 1,
        message: "missing `init` declaration".into(),
    })?;
    if let Some(clash) = states.intersection(&symbols).next() {
        return Err(TmParseError {
            line: 1,
            message: format!("`{clash}` is used both as a state and as a tape symbol"),
        });
    }
    Ok(TmSpec {
        blank,
        init,
        rules,
        states,
    })
}

const CELL_FORM: &str = "TMcell";
const SYMBOL_FIELD: &str = "TMsymbol";
const STEP_TRANS: &str = "MakeTMStep";

fn sym_value(sym: &str) -> Value {
    Value::list([Value::atom(sym)])
}

fn sym_const(sym: &str) -> T {
    T::value(sym_value(sym))
}

fn field_at(target: T) -> T {
    T::GetFieldValue(
        Box::new(target),
        Box::new(T::atom(SYMBOL_FIELD)),
        Box::new(T::var(crate::ast::VAR_MODEL)),
    )
}

/// Encode a machine as a theory plus its starting queue.
///
/// The queue creates two cell documents, stamps the initial state into the
/// second, and dispatches the first step against it. Runs end with an
/// empty queue exactly when the machine halts.
pub fn encode_tm(spec: &TmSpec) -> (Theory, Value) {
    let mut rules: Vec<DaemonRule> = Vec::new();

    // Dispatching against document 1 means the head fell off the left end.
    rules.push(DaemonRule {
        form: Arc::from(CELL_FORM),
        name: Arc::from(STEP_TRANS),
        guard: T::var(crate::ast::VAR_DOC_ID).eq(T::value(Value::nat(1))),
        action: RuleAction::ClearQueue,
    });

    let doc_id = || T::var(crate::ast::VAR_DOC_ID);
    let succ = |t: T| T::Cons(Box::new(t), Box::new(T::empty()));
    for ((state, read), action) in &spec.rules {
        let scanned = F::and(
            field_at(doc_id().tail()).eq(sym_const(read)),
            field_at(doc_id()).eq(sym_const(state)),
        );
        let set_sym = |target: T, value: T| InstructionTerm::SetField {
            field: Arc::from(SYMBOL_FIELD),
            target,
            value,
        };
        let dispatch = |target: T| InstructionTerm::Trans {
            trans: Arc::from(STEP_TRANS),
            target,
            params: T::empty(),
        };
        match action.shift {
            Move::Left => {
                // The state document slides one cell left; the written
                // symbol lands where the state used to sit.
                rules.push(DaemonRule {
                    form: Arc::from(CELL_FORM),
                    name: Arc::from(STEP_TRANS),
                    guard: scanned,
                    action: RuleAction::Extend(vec![
                        set_sym(doc_id().tail(), sym_const(&action.state)),
                        set_sym(doc_id(), sym_const(&action.write)),
                        dispatch(doc_id().tail()),
                    ]),
                });
            }
            Move::Right => {
                // At the right end a fresh blank cell is created first;
                // either way the state document slides one cell right.
                rules.push(DaemonRule {
                    form: Arc::from(CELL_FORM),
                    name: Arc::from(STEP_TRANS),
                    guard: F::and(
                        scanned.clone(),
                        doc_id().eq(T::GetLastDocId(Box::new(T::var(crate::ast::VAR_MODEL)))),
                    ),
                    action: RuleAction::Extend(vec![
                        InstructionTerm::CreateDoc {
                            form: Arc::from(CELL_FORM),
                        },
                        set_sym(doc_id().tail(), sym_const(&action.write)),
                        set_sym(doc_id(), sym_const(&spec.blank)),
                        set_sym(succ(doc_id()), sym_const(&action.state)),
                        dispatch(succ(doc_id())),
                    ]),
                });
                rules.push(DaemonRule {
                    form: Arc::from(CELL_FORM),
                    name: Arc::from(STEP_TRANS),
                    guard: scanned,
                    action: RuleAction::Extend(vec![
                        set_sym(doc_id().tail(), sym_const(&action.write)),
                        set_sym(doc_id(), field_at(succ(doc_id()))),
                        set_sym(succ(doc_id()), sym_const(&action.state)),
                        dispatch(succ(doc_id())),
                    ]),
                });
            }
        }
    }

    let theory = Theory {
        name: Arc::from("TuringMachine"),
        cfg: NumericConfig::default(),
        fields: vec![(Arc::from(SYMBOL_FIELD), crate::ast::Cardinality::ExactlyOne)],
        forms: vec![FormDef {
            name: Arc::from(CELL_FORM),
            blank_fields: vec![(Arc::from(SYMBOL_FIELD), sym_value(&spec.blank))],
        }],
        filters: Vec::new(),
        transactions: vec![Arc::from(STEP_TRANS)],
        set_rules: Vec::new(),
        trans_rules: rules,
        default_set: DefaultAction::KeepQueue,
        default_trans: DefaultAction::SkipQueue,
    };

    let queue = queue_of(&[
        make_create(CELL_FORM),
        make_create(CELL_FORM),
        make_set_field(sym_value(&spec.init), SYMBOL_FIELD, Value::nat(2)),
        make_trans(Value::empty(), Value::nat(2), STEP_TRANS),
    ]);
    (theory, queue)
}

/// Build a queue value from instructions in execution order.
fn queue_of(instructions: &[Value]) -> Value {
    Value::list(instructions.iter().rev().cloned())
}

/// Direct interpreter for a machine description.
///
/// `head` is 1-based; 0 means the machine fell off the left end (halted).
#[derive(Debug, Clone)]
pub struct TmSimulator<'m> {
    spec: &'m TmSpec,
    pub tape: Vec<String>,
    pub head: usize,
    pub state: String,
    pub halted: bool,
}

impl<'m> TmSimulator<'m> {
    pub fn new(spec: &'m TmSpec) -> Self {
        TmSimulator {
            spec,
            tape: vec![spec.blank.clone()],
            head: 1,
            state: spec.init.clone(),
            halted: false,
        }
    }

    /// The configuration word: cells left of and under the head, then the
    /// state, then the rest of the tape.
    pub fn config(&self) -> Value {
        let atom = |s: &String| Value::atom(s.as_str());
        let mut parts: Vec<Value> = self.tape[..self.head].iter().map(atom).collect();
        parts.push(Value::atom(self.state.as_str()));
        parts.extend(self.tape[self.head..].iter().map(atom));
        Value::list(parts)
    }

    /// Perform one transition. Returns false if none applies (already
    /// halted, or the pair is undefined). A left move from cell 1 is
    /// performed and then halts the machine.
    pub fn step(&mut self) -> bool {
        if self.halted {
            return false;
        }
        let key = (self.state.clone(), self.tape[self.head - 1].clone());
        let Some(action) = self.spec.rules.get(&key) else {
            self.halted = true;
            return false;
        };
        self.tape[self.head - 1] = action.write.clone();
        self.state = action.state.clone();
        match action.shift {
            Move::Left => {
                self.head -= 1;
                if self.head == 0 {
                    self.halted = true;
                }
            }
            Move::Right => {
                if self.head == self.tape.len() {
                    self.tape.push(self.spec.blank.clone());
                }
                self.head += 1;
            }
        }
        true
    }

    /// The first `limit` configurations: the initial one, then one per
    /// performed transition.
    pub fn run_configs(&mut self, limit: usize) -> Vec<Value> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        out.push(self.config());
        while out.len() < limit && self.step() {
            out.push(self.config());
        }
        out
    }
}

/// Read the configuration word out of a model produced by [`encode_tm`]:
/// documents in id order, with the unique state-carrying document's symbol
/// standing for the machine state. `None` if the model does not decode.
pub fn decode_word(model: &Value, spec: &TmSpec) -> Option<Value> {
    let last = get_last_doc_id(model).ok()?.as_nat()?;
    let mut parts = Vec::with_capacity(last);
    let mut state_seen = false;
    for id in 1..=last {
        let value = get_field_value(&Value::nat(id), &Value::atom(SYMBOL_FIELD), model).ok()?;
        let items = value.as_list()?;
        if items.len() != 1 {
            return None;
        }
        let sym = items.head();
        if spec.states.contains(sym.as_atom()?) {
            if state_seen {
                return None;
            }
            state_seen = true;
        }
        parts.push(sym);
    }
    if state_seen {
        Some(Value::list(parts))
    } else {
        None
    }
}

/// Run the encoded machine, recording the configuration word before each
/// step dispatch (at most `limit` of them).
pub fn chase_configs(
    spec: &TmSpec,
    theory: &Theory,
    queue: Value,
    fuel: u64,
    limit: usize,
) -> (Vec<Value>, ChaseStatus, u64) {
    let options = ChaseOptions {
        fuel,
        ..ChaseOptions::default()
    };
    let mut chase = Chase::new(theory, Value::empty(), queue, options);
    let mut configs = Vec::new();
    while chase.status == ChaseStatus::Running {
        if configs.len() < limit {
            let head = chase.queue.as_list().filter(|q| !q.is_empty()).map(|q| q.head());
            let dispatching = head
                .as_ref()
                .and_then(classify_instruction)
                .is_some_and(|i| matches!(i, Instruction::Trans { name, .. } if &*name == STEP_TRANS));
            if dispatching {
                if let Some(word) = decode_word(&chase.model, spec) {
                    configs.push(word);
                }
            }
        }
        chase.step();
    }
    (configs, chase.status, chase.steps)
}

/// Halts immediately: no transition is defined.
pub const TM_HALT_EMPTY: &str = "\
# halts on the first dispatch
blank b
init q0
";

/// Writes two symbols rightward, then halts.
pub const TM_HALT_WRITES: &str = "\
blank b
init q0
q0 b -> q1 x R
q1 b -> q2 y R
";

/// Walks right, doubles back once, then runs out of transitions.
pub const TM_HALT_ZIGZAG: &str = "\
blank b
init q0
q0 b -> q1 a R
q1 b -> q2 c L
q2 a -> q3 a R
q3 c -> q4 d R
q4 b -> q5 e L
";

/// Runs right forever over blank tape.
pub const TM_LOOP_RIGHT: &str = "\
blank b
init q0
q0 b -> q0 b R
";

/// Bounces between the first two cells forever.
pub const TM_LOOP_PINGPONG: &str = "\
blank b
init q0
q0 b -> q1 b R
q1 b -> q0 b L
";

/// Exact run totals for [`exp_theory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpCounts {
    /// Instructions processed before the queue drains.
    pub steps: u128,
    /// Documents in the final model.
    pub documents: u128,
}

fn tower(i: u32, n: u32) -> Option<u128> {
    // EXP^1(n) = 2^n, EXP^{j+1}(n) = 2^{EXP^j(n)}.
    let mut e: u128 = 1u128.checked_shl(n)?;
    for _ in 1..i {
        let shift = u32::try_from(e).ok()?;
        if shift >= 128 {
            return None;
        }
        e = 1u128 << shift;
    }
    Some(e)
}

/// Predict the exact step and document counts for `exp_theory(k, n)`,
/// if they fit in 128 bits.
pub fn exp_counts(k: u32, n: u32) -> Option<ExpCounts> {
    if n >= 128 {
        return None;
    }
    if k == 0 {
        // Just the n creation instructions.
        return Some(ExpCounts {
            steps: n as u128,
            documents: n as u128,
        });
    }
    let mut steps: u128 = (n as u128).checked_add(2 * k as u128)?;
    steps = steps.checked_add(n as u128)?;
    let mut documents: u128 = n as u128;
    for i in 1..=k {
        let e = tower(i, n)?;
        steps = steps.checked_add(e - 1)?;
        if i < k {
            steps = steps.checked_add(e)?;
        }
        documents = documents.checked_add(e)?;
    }
    Some(ExpCounts { steps, documents })
}

/// Build the doubling cascade with `k` levels over `n` seed documents,
/// plus the queue that seeds and fires it.
pub fn exp_theory(k: u32, n: u32) -> (Theory, Value) {
    let form_name = |i: u32| format!("Form_{i}");
    let exp_name = |i: u32| format!("MakeExp_{i}");

    let forms = (0..=k)
        .map(|i| FormDef {
            name: Arc::from(form_name(i).as_str()),
            blank_fields: Vec::new(),
        })
        .collect();

    let mut transactions: Vec<Arc<str>> = (1..=k)
        .map(|i| Arc::from(exp_name(i).as_str()))
        .collect();
    transactions.push(Arc::from("Duplicate"));
    transactions.push(Arc::from("Duplicate'"));

    let mut rules = Vec::new();
    for i in 1..=k {
        // Every level-(i-1) document gets asked to duplicate level i.
        rules.push(DaemonRule {
            form: Arc::from(form_name(i).as_str()),
            name: Arc::from(exp_name(i).as_str()),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                filter: Arc::from("SelectAllbyForm"),
                form: Arc::from(form_name(i - 1).as_str()),
                params: T::var(VAR_PARAMS),
                body: LoopBody::EmitTrans {
                    trans: Arc::from("Duplicate"),
                    params: T::var(VAR_PARAMS),
                },
            }]),
        });
    }
    for i in 1..=k {
        // Duplicating level i means one fresh document per existing one.
        rules.push(DaemonRule {
            form: Arc::from(form_name(i - 1).as_str()),
            name: Arc::from("Duplicate"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                filter: Arc::from("SelectAllbyForm"),
                form: Arc::from(form_name(i).as_str()),
                params: T::var(VAR_PARAMS),
                body: LoopBody::EmitCreateDoc {
                    form: Arc::from(form_name(i).as_str()),
                },
            }]),
        });
    }

    let theory = Theory {
        name: Arc::from("ExpCascade"),
        cfg: NumericConfig::default(),
        fields: Vec::new(),
        forms,
        filters: vec![FilterDef {
            name: Arc::from("SelectAllbyForm"),
            form_var: Arc::from("c"),
            guard: F::True,
        }],
        transactions,
        set_rules: Vec::new(),
        trans_rules: rules,
        default_set: DefaultAction::KeepQueue,
        default_trans: DefaultAction::SkipQueue,
    };

    let mut instructions = Vec::new();
    for _ in 0..n {
        instructions.push(make_create(&form_name(0)));
    }
    for i in 1..=k {
        instructions.push(make_create(&form_name(i)));
    }
    for i in 1..=k {
        // The level-i document was created i-th after the n seeds.
        instructions.push(make_trans(
            Value::empty(),
            Value::nat(n as usize + i as usize),
            &exp_name(i),
        ));
    }
    (theory, queue_of(&instructions))
}
