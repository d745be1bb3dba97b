//! Static analysis of theories: the dependency graph, local simplicity,
//! instruction rank, document-generating terms, and effect bounds.
//!
//! The dependency graph has a vertex for every (form, field), (form,
//! transaction), and (form, CreateDoc) pair, and an edge from a rule's
//! condition vertex to each instruction its extension can emit. An acyclic
//! graph ("locally simple") guarantees every chase terminates; if on top of
//! that no filter loop can lead to document creation, the chase's step
//! count and final document population admit closed-form bounds.
//!
//! Bound fine print: the document bound caps the number of *distinct
//! documents*, not the model list's length — every field write appends a
//! version tuple, so the list itself grows with the step count.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::ast::TermAst;
use crate::docmodel::{classify_instruction, form_of, Instruction};
use crate::theory::{InstructionTerm, LoopBody, RuleAction, Theory};
use crate::value::{Value, CREATE_DOC};

/// Analyses that need a longest path are undefined on a cyclic graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("the dependency graph has a cycle")]
pub struct CyclicTheory;

/// Which rule table an instruction term lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleTable {
    Set,
    Trans,
}

impl fmt::Display for RuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleTable::Set => "set",
            RuleTable::Trans => "trans",
        })
    }
}

/// Address of one instruction term inside a theory's rule tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TermLocation {
    pub table: RuleTable,
    /// 0-based rule index within the table.
    pub rule: usize,
    /// 0-based term index within the rule's extension.
    pub term: usize,
}

impl fmt::Display for TermLocation {
    /// 1-based, matching trace rule labels: `trans#2.term#1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}.term#{}", self.table, self.rule + 1, self.term + 1)
    }
}

impl TermLocation {
    /// The term this location points at, if it still exists.
    pub fn term_in<'t>(&self, th: &'t Theory) -> Option<&'t InstructionTerm> {
        let rules = match self.table {
            RuleTable::Set => &th.set_rules,
            RuleTable::Trans => &th.trans_rules,
        };
        match &rules.get(self.rule)?.action {
            RuleAction::Extend(terms) => terms.get(self.term),
            RuleAction::ClearQueue => None,
        }
    }

    /// `trans#2.term#1(Doc.Go)` — location plus the owning rule's event.
    pub fn describe(&self, th: &Theory) -> String {
        let rules = match self.table {
            RuleTable::Set => &th.set_rules,
            RuleTable::Trans => &th.trans_rules,
        };
        match rules.get(self.rule) {
            Some(rule) => format!("{self}({}.{})", rule.form, rule.name),
            None => self.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// The instruction term that witnesses this edge.
    pub loc: TermLocation,
}

pub struct DependencyGraph {
    /// (form, name) pairs; `name` is a field, a transaction, or `CreateDoc`.
    vertices: Vec<(Arc<str>, Arc<str>)>,
    edges: Vec<Edge>,
    /// Outgoing edge indices per vertex.
    adj: Vec<Vec<usize>>,
}

impl DependencyGraph {
    pub fn build(th: &Theory) -> Self {
        let mut vertices = Vec::new();
        for form in &th.forms {
            for (field, _) in &th.fields {
                vertices.push((form.name.clone(), field.clone()));
            }
            for trans in &th.transactions {
                vertices.push((form.name.clone(), trans.clone()));
            }
            vertices.push((form.name.clone(), Arc::from(CREATE_DOC)));
        }
        let mut graph = DependencyGraph {
            adj: vec![Vec::new(); vertices.len()],
            edges: Vec::new(),
            vertices,
        };
        let tables = [
            (RuleTable::Set, &th.set_rules),
            (RuleTable::Trans, &th.trans_rules),
        ];
        for (table, rules) in tables {
            for (rule_index, rule) in rules.iter().enumerate() {
                let RuleAction::Extend(terms) = &rule.action else {
                    continue;
                };
                let Some(from) = graph.vertex(&rule.form, &rule.name) else {
                    continue;
                };
                for (term_index, term) in terms.iter().enumerate() {
                    let loc = TermLocation {
                        table,
                        rule: rule_index,
                        term: term_index,
                    };
                    for (form, name) in term_vertices(th, rule.form.clone(), term) {
                        if let Some(to) = graph.vertex(&form, &name) {
                            graph.adj[from].push(graph.edges.len());
                            graph.edges.push(Edge { from, to, loc });
                        }
                    }
                }
            }
        }
        graph
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, form: &str, name: &str) -> Option<usize> {
        self.vertices
            .iter()
            .position(|(f, n)| &**f == form && &**n == name)
    }

    pub fn vertex_label(&self, v: usize) -> String {
        let (form, name) = &self.vertices[v];
        format!("({form}, {name})")
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Some directed cycle as a vertex sequence (each consecutive pair, and
    /// last back to first, is an edge), or None when the graph is acyclic.
    pub fn cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        fn visit(
            g: &DependencyGraph,
            v: usize,
            color: &mut [Color],
            stack: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            color[v] = Color::Gray;
            stack.push(v);
            for &e in &g.adj[v] {
                let w = g.edges[e].to;
                match color[w] {
                    Color::White => {
                        if let Some(cycle) = visit(g, w, color, stack) {
                            return Some(cycle);
                        }
                    }
                    Color::Gray => {
                        let start = stack.iter().position(|&x| x == w).expect("w is gray");
                        return Some(stack[start..].to_vec());
                    }
                    Color::Black => {}
                }
            }
            stack.pop();
            color[v] = Color::Black;
            None
        }
        let mut color = vec![Color::White; self.vertices.len()];
        let mut stack = Vec::new();
        for v in 0..self.vertices.len() {
            if color[v] == Color::White {
                if let Some(cycle) = visit(self, v, &mut color, &mut stack) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    pub fn is_locally_simple(&self) -> bool {
        self.cycle().is_none()
    }

    /// Edge count of the longest path leaving each vertex; None when cyclic.
    pub fn longest_paths(&self) -> Option<Vec<usize>> {
        if self.cycle().is_some() {
            return None;
        }
        fn longest(g: &DependencyGraph, v: usize, memo: &mut [Option<usize>]) -> usize {
            if let Some(known) = memo[v] {
                return known;
            }
            let best = g.adj[v]
                .iter()
                .map(|&e| 1 + longest(g, g.edges[e].to, memo))
                .max()
                .unwrap_or(0);
            memo[v] = Some(best);
            best
        }
        let mut memo = vec![None; self.vertices.len()];
        Some((0..self.vertices.len()).map(|v| longest(self, v, &mut memo)).collect())
    }

    /// Vertex groups connected when edge direction is ignored, each sorted.
    pub fn weak_components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut undirected = vec![Vec::new(); n];
        for e in &self.edges {
            undirected[e.from].push(e.to);
            undirected[e.to].push(e.from);
        }
        let mut component = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = vec![start];
            component[start] = id;
            let mut frontier = vec![start];
            while let Some(v) = frontier.pop() {
                for &w in &undirected[v] {
                    if component[w] == usize::MAX {
                        component[w] = id;
                        members.push(w);
                        frontier.push(w);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        groups
    }
}

/// The (form, name) pairs an instruction term can emit. A write or call
/// whose target is the rule's own `docID` stays on the rule's form; any
/// other target could name a document of any form.
fn term_vertices(
    th: &Theory,
    rule_form: Arc<str>,
    term: &InstructionTerm,
) -> Vec<(Arc<str>, Arc<str>)> {
    let is_doc_id = |t: &TermAst| matches!(t, TermAst::Var(v) if &**v == crate::ast::VAR_DOC_ID);
    let spread = |name: &Arc<str>, target: &TermAst| -> Vec<(Arc<str>, Arc<str>)> {
        if is_doc_id(target) {
            vec![(rule_form.clone(), name.clone())]
        } else {
            th.forms
                .iter()
                .map(|f| (f.name.clone(), name.clone()))
                .collect()
        }
    };
    match term {
        InstructionTerm::SetField { field, target, .. } => spread(field, target),
        InstructionTerm::Trans { trans, target, .. } => spread(trans, target),
        InstructionTerm::CreateDoc { form } => vec![(form.clone(), Arc::from(CREATE_DOC))],
        InstructionTerm::FilterLoop { form, body, .. } => match body {
            LoopBody::EmitTrans { trans, .. } => vec![(form.clone(), trans.clone())],
            LoopBody::EmitCreateDoc { form } => vec![(form.clone(), Arc::from(CREATE_DOC))],
        },
    }
}

/// Forms that occur in well-shaped version tuples of `model`.
fn model_forms(model: &Value) -> BTreeSet<String> {
    let mut forms = BTreeSet::new();
    if let Some(l) = model.as_list() {
        for tuple in l.iter_back() {
            if tuple.as_list().is_none() {
                continue;
            }
            if let Ok(form) = form_of(tuple) {
                if let Some(name) = form.as_atom() {
                    forms.insert(name.to_string());
                }
            }
        }
    }
    forms
}

/// Distinct document IDs in a model, by canonical rendering.
pub fn document_count(model: &Value) -> usize {
    let mut ids = BTreeSet::new();
    if let Some(l) = model.as_list() {
        for tuple in l.iter_back() {
            if let Some(t) = tuple.as_list() {
                if let Some(id) = t.head_ref() {
                    ids.insert(id.to_string());
                }
            }
        }
    }
    ids.len()
}

fn rank_with(
    graph: &DependencyGraph,
    longest: &[usize],
    instr: &Value,
    forms: &BTreeSet<String>,
) -> usize {
    let name: Arc<str> = match classify_instruction(instr) {
        Some(Instruction::SetField { field, .. }) => field,
        Some(Instruction::Trans { name, .. }) => name,
        // Creates and malformed lists trigger no cascade.
        _ => return 0,
    };
    forms
        .iter()
        .filter_map(|form| graph.vertex(form, &name))
        .map(|v| longest[v])
        .max()
        .unwrap_or(0)
}

/// How many further instructions one instruction can transitively spawn:
/// the longest dependency path from its vertex, maximized over the forms
/// present in `model`. Zero when nothing in the model can dispatch it.
pub fn rank(instr: &Value, th: &Theory, model: &Value) -> Result<usize, CyclicTheory> {
    let graph = DependencyGraph::build(th);
    let longest = graph.longest_paths().ok_or(CyclicTheory)?;
    Ok(rank_with(&graph, &longest, instr, &model_forms(model)))
}

/// Term locations that can create documents, directly or transitively: a
/// literal create, a loop that creates per selected document, or any term
/// whose emitted event is answered by a rule holding such a term.
pub fn document_generating(th: &Theory) -> Result<Vec<TermLocation>, CyclicTheory> {
    let graph = DependencyGraph::build(th);
    if !graph.is_locally_simple() {
        return Err(CyclicTheory);
    }
    Ok(doc_generating_set(th, &graph).into_iter().collect())
}

fn doc_generating_set(th: &Theory, graph: &DependencyGraph) -> BTreeSet<TermLocation> {
    let mut generating = BTreeSet::new();
    let tables = [
        (RuleTable::Set, &th.set_rules),
        (RuleTable::Trans, &th.trans_rules),
    ];
    for (table, rules) in tables {
        for (rule_index, rule) in rules.iter().enumerate() {
            let RuleAction::Extend(terms) = &rule.action else {
                continue;
            };
            for (term_index, term) in terms.iter().enumerate() {
                let creates = matches!(
                    term,
                    InstructionTerm::CreateDoc { .. }
                        | InstructionTerm::FilterLoop {
                            body: LoopBody::EmitCreateDoc { .. },
                            ..
                        }
                );
                if creates {
                    generating.insert(TermLocation {
                        table,
                        rule: rule_index,
                        term: term_index,
                    });
                }
            }
        }
    }
    // A term inherits the property from rules answering its emissions.
    loop {
        let mut grew = false;
        for edge in graph.edges() {
            if generating.contains(&edge.loc) {
                continue;
            }
            let successor_generates = graph
                .edges()
                .iter()
                .any(|e| e.from == edge.to && generating.contains(&e.loc));
            if successor_generates {
                generating.insert(edge.loc);
                grew = true;
            }
        }
        if !grew {
            return generating;
        }
    }
}

/// Largest number of instruction terms in any one rule extension.
pub fn extension_width(th: &Theory) -> usize {
    th.set_rules
        .iter()
        .chain(&th.trans_rules)
        .map(|rule| match &rule.action {
            RuleAction::Extend(terms) => terms.len(),
            RuleAction::ClearQueue => 0,
        })
        .max()
        .unwrap_or(0)
}

/// Closed-form bounds for one chase input, when the theory admits them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    /// Max instruction terms per extension.
    pub n: usize,
    /// Max rank over the queue's instructions wrt the model.
    pub k: usize,
    pub model_len: usize,
    pub queue_len: usize,
    /// `|queue| * (N * (|model| + N))^k`; None when it overflows u128.
    pub steps: Option<u128>,
    /// `max(|model|, |queue| * (|model| + N))`, capping how many distinct
    /// documents the final model can hold; None when it overflows u128.
    pub documents: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectBounds {
    Eligible(BoundsReport),
    /// Cycle witness as vertex labels.
    NotLocallySimple { cycle: Vec<String> },
    /// Filter loops that can create documents, so no polynomial bound.
    DocGeneratingLoops { loops: Vec<TermLocation> },
}

/// Instantiates the step and document bounds for a concrete (model, queue)
/// pair, or reports which precondition fails.
pub fn effect_bounds(th: &Theory, model: &Value, queue: &Value) -> EffectBounds {
    let graph = DependencyGraph::build(th);
    if let Some(cycle) = graph.cycle() {
        return EffectBounds::NotLocallySimple {
            cycle: cycle.iter().map(|&v| graph.vertex_label(v)).collect(),
        };
    }
    let generating = doc_generating_set(th, &graph);
    let loops: Vec<TermLocation> = generating
        .iter()
        .filter(|loc| {
            matches!(
                loc.term_in(th),
                Some(InstructionTerm::FilterLoop { .. })
            )
        })
        .copied()
        .collect();
    if !loops.is_empty() {
        return EffectBounds::DocGeneratingLoops { loops };
    }
    let longest = graph.longest_paths().expect("acyclic by the check above");
    let forms = model_forms(model);
    let queue_items: Vec<Value> = queue.as_list().map(|l| l.to_vec()).unwrap_or_default();
    let k = queue_items
        .iter()
        .map(|instr| rank_with(&graph, &longest, instr, &forms))
        .max()
        .unwrap_or(0);
    let n = extension_width(th);
    let model_len = model.as_list().map_or(0, |l| l.len());
    let queue_len = queue_items.len();
    let steps = (n as u128)
        .checked_mul(model_len as u128 + n as u128)
        .and_then(|base| base.checked_pow(k as u32))
        .and_then(|pow| pow.checked_mul(queue_len as u128));
    let documents = (queue_len as u128)
        .checked_mul(model_len as u128 + n as u128)
        .map(|grown| grown.max(model_len as u128));
    EffectBounds::Eligible(BoundsReport {
        n,
        k,
        model_len,
        queue_len,
        steps,
        documents,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Locally simple, and no filter loop can create documents: every
    /// chase terminates within closed-form bounds.
    PolyBounded,
    /// Locally simple, so every chase terminates, but document-creating
    /// loops rule out the polynomial bounds.
    TerminatingUnbounded,
    /// Cyclic dependencies; termination is undecidable in general.
    PossiblyNonTerminating,
}

impl Classification {
    pub fn code(&self) -> &'static str {
        match self {
            Classification::PolyBounded => "poly-bounded",
            Classification::TerminatingUnbounded => "terminating-unbounded",
            Classification::PossiblyNonTerminating => "possibly-non-terminating",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Classification::PolyBounded => 0,
            Classification::TerminatingUnbounded => 4,
            Classification::PossiblyNonTerminating => 5,
        }
    }
}

/// Whole-theory verdict, independent of any concrete model or queue.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisVerdict {
    pub locally_simple: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<String>>,
    /// Human-readable locations of document-generating terms.
    pub doc_generating: Vec<String>,
    /// Max instruction terms per extension.
    pub n: usize,
    /// Longest dependency path in the graph = max possible rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub documents_bound: Option<String>,
    pub classification: Classification,
}

pub fn analyze(th: &Theory) -> AnalysisVerdict {
    let graph = DependencyGraph::build(th);
    let n = extension_width(th);
    if let Some(cycle) = graph.cycle() {
        let mut labels: Vec<String> = cycle.iter().map(|&v| graph.vertex_label(v)).collect();
        // Close the loop visually.
        labels.push(labels[0].clone());
        return AnalysisVerdict {
            locally_simple: false,
            cycle: Some(labels),
            doc_generating: Vec::new(),
            n,
            k_max: None,
            steps_bound: None,
            documents_bound: None,
            classification: Classification::PossiblyNonTerminating,
        };
    }
    let longest = graph.longest_paths().expect("acyclic by the check above");
    let k_max = longest.iter().copied().max().unwrap_or(0);
    let generating = doc_generating_set(th, &graph);
    let doc_generating: Vec<String> = generating.iter().map(|loc| loc.describe(th)).collect();
    let loops_generate = generating.iter().any(|loc| {
        matches!(
            loc.term_in(th),
            Some(InstructionTerm::FilterLoop { .. })
        )
    });
    if loops_generate {
        return AnalysisVerdict {
            locally_simple: true,
            cycle: None,
            doc_generating,
            n,
            k_max: Some(k_max),
            steps_bound: None,
            documents_bound: None,
            classification: Classification::TerminatingUnbounded,
        };
    }
    AnalysisVerdict {
        locally_simple: true,
        cycle: None,
        doc_generating,
        n,
        k_max: Some(k_max),
        steps_bound: Some(format!("|queue| * ({n} * (|model| + {n}))^{k_max}")),
        documents_bound: Some(format!("max(|model|, |queue| * (|model| + {n}))")),
        classification: Classification::PolyBounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Cardinality, FormulaAst as F, TermAst as T, VAR_DOC_ID};
    use crate::chase::{run_chase, ChaseOptions, ChaseStatus};
    use crate::docmodel::{doc_tuple, make_create, make_set_field, make_trans};
    use crate::numerics::NumericConfig;
    use crate::theory::{DaemonRule, DefaultAction, FilterDef, FormDef};

    fn skeleton(name: &str) -> Theory {
        Theory {
            name: Arc::from(name),
            cfg: NumericConfig::default(),
            fields: vec![
                (Arc::from("x"), Cardinality::AtMostOne),
                (Arc::from("y"), Cardinality::AtMostOne),
                (Arc::from("z"), Cardinality::AtMostOne),
            ],
            forms: vec![FormDef {
                name: Arc::from("A"),
                blank_fields: vec![
                    (Arc::from("x"), Value::empty()),
                    (Arc::from("y"), Value::empty()),
                    (Arc::from("z"), Value::empty()),
                ],
            }],
            filters: vec![FilterDef {
                name: Arc::from("All"),
                form_var: Arc::from("d"),
                guard: F::True,
            }],
            transactions: vec![Arc::from("Go"), Arc::from("Step")],
            set_rules: vec![],
            trans_rules: vec![],
            default_set: DefaultAction::KeepQueue,
            default_trans: DefaultAction::KeepQueue,
        }
    }

    fn write_rule(form: &str, on: &str, write: &str) -> DaemonRule {
        DaemonRule {
            form: Arc::from(form),
            name: Arc::from(on),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::SetField {
                field: Arc::from(write),
                target: T::var(VAR_DOC_ID),
                value: T::value(Value::list([Value::atom("v")])),
            }]),
        }
    }

    /// Go --loop--> Step --> x --> y --> z: a 5-vertex chain on form A.
    fn chain_theory() -> Theory {
        let mut th = skeleton("Chain");
        th.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                filter: Arc::from("All"),
                form: Arc::from("A"),
                params: T::empty(),
                body: LoopBody::EmitTrans {
                    trans: Arc::from("Step"),
                    params: T::empty(),
                },
            }]),
        });
        th.trans_rules.push(write_rule("A", "Step", "x"));
        th.set_rules.push(write_rule("A", "x", "y"));
        th.set_rules.push(write_rule("A", "y", "z"));
        th
    }

    /// A Go rule that re-emits Go at an arbitrary target: a self-loop.
    fn cyclic_theory() -> Theory {
        let mut th = skeleton("Cyclic");
        th.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::Trans {
                trans: Arc::from("Go"),
                target: T::var(VAR_DOC_ID).tail(),
                params: T::empty(),
            }]),
        });
        th
    }

    fn model_of_a_docs(count: usize) -> Value {
        Value::list((1..=count).map(|i| {
            doc_tuple(
                Value::empty(),
                Value::atom("A"),
                Value::list([
                    Value::list([Value::atom("x")]),
                    Value::list([Value::atom("y")]),
                    Value::list([Value::atom("z")]),
                ]),
                Value::nat(i),
            )
        }))
    }

    #[test]
    fn rule_free_theories_have_edgeless_acyclic_graphs() {
        let th = skeleton("Empty");
        let g = DependencyGraph::build(&th);
        // 1 form x (3 fields + 2 transactions + CreateDoc).
        assert_eq!(g.vertex_count(), 6);
        assert!(g.edges().is_empty());
        assert!(g.is_locally_simple());
        assert_eq!(g.longest_paths().unwrap(), vec![0; 6]);
        assert!(g.weak_components().iter().all(|c| c.len() == 1));

        let verdict = analyze(&th);
        assert!(verdict.locally_simple);
        assert_eq!(verdict.n, 0);
        assert_eq!(verdict.k_max, Some(0));
        assert_eq!(verdict.classification, Classification::PolyBounded);
        assert!(verdict.steps_bound.is_some());
    }

    #[test]
    fn condition_vertices_point_at_emitted_instructions() {
        let th = chain_theory();
        let g = DependencyGraph::build(&th);
        let v = |name: &str| g.vertex("A", name).unwrap();
        let got: BTreeSet<(usize, usize)> =
            g.edges().iter().map(|e| (e.from, e.to)).collect();
        let expected: BTreeSet<(usize, usize)> = [
            (v("Go"), v("Step")),
            (v("Step"), v("x")),
            (v("x"), v("y")),
            (v("y"), v("z")),
        ]
        .into();
        assert_eq!(got, expected);
        // Provenance: the Go edge comes from the first trans rule's only term.
        let go_edge = g.edges().iter().find(|e| e.from == v("Go")).unwrap();
        assert_eq!(
            go_edge.loc,
            TermLocation {
                table: RuleTable::Trans,
                rule: 0,
                term: 0
            }
        );
        assert_eq!(go_edge.loc.describe(&th), "trans#1.term#1(A.Go)");
    }

    #[test]
    fn unknown_target_writes_fan_out_to_every_form() {
        let mut th = skeleton("Fan");
        th.forms.push(FormDef {
            name: Arc::from("B"),
            blank_fields: vec![(Arc::from("x"), Value::empty())],
        });
        // Writing through head(docID) could hit any form...
        th.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::SetField {
                field: Arc::from("x"),
                target: T::var(VAR_DOC_ID).head(),
                value: T::value(Value::list([Value::atom("v")])),
            }]),
        });
        // ...while writing through docID itself stays on the rule's form.
        th.trans_rules.push(DaemonRule {
            form: Arc::from("B"),
            name: Arc::from("Step"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::SetField {
                field: Arc::from("y"),
                target: T::var(VAR_DOC_ID),
                value: T::value(Value::list([Value::atom("v")])),
            }]),
        });
        let g = DependencyGraph::build(&th);
        let from_go: BTreeSet<usize> = g
            .edges()
            .iter()
            .filter(|e| e.from == g.vertex("A", "Go").unwrap())
            .map(|e| e.to)
            .collect();
        assert_eq!(
            from_go,
            BTreeSet::from([g.vertex("A", "x").unwrap(), g.vertex("B", "x").unwrap()])
        );
        let from_step: Vec<usize> = g
            .edges()
            .iter()
            .filter(|e| e.from == g.vertex("B", "Step").unwrap())
            .map(|e| e.to)
            .collect();
        assert_eq!(from_step, vec![g.vertex("B", "y").unwrap()]);
    }

    #[test]
    fn edges_match_a_brute_force_scan() {
        // Independently re-derive every edge by scanning all (rule, term)
        // pairs with the documented classification.
        let mut th = chain_theory();
        th.forms.push(FormDef {
            name: Arc::from("B"),
            blank_fields: vec![],
        });
        th.trans_rules.push(DaemonRule {
            form: Arc::from("B"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![
                InstructionTerm::CreateDoc { form: Arc::from("A") },
                InstructionTerm::Trans {
                    trans: Arc::from("Step"),
                    target: T::value(Value::nat(1)),
                    params: T::empty(),
                },
                InstructionTerm::FilterLoop {
                    filter: Arc::from("All"),
                    form: Arc::from("B"),
                    params: T::empty(),
                    body: LoopBody::EmitCreateDoc { form: Arc::from("B") },
                },
            ]),
        });
        let g = DependencyGraph::build(&th);
        let mut expected: Vec<(String, String, TermLocation)> = Vec::new();
        let tables = [
            (RuleTable::Set, &th.set_rules),
            (RuleTable::Trans, &th.trans_rules),
        ];
        for (table, rules) in tables {
            for (ri, rule) in rules.iter().enumerate() {
                let RuleAction::Extend(terms) = &rule.action else {
                    continue;
                };
                for (ti, term) in terms.iter().enumerate() {
                    let loc = TermLocation { table, rule: ri, term: ti };
                    let targets: Vec<(String, String)> = match term {
                        InstructionTerm::SetField { field, target, .. }
                        | InstructionTerm::Trans {
                            trans: field,
                            target,
                            ..
                        } => {
                            if matches!(target, T::Var(v) if &**v == VAR_DOC_ID) {
                                vec![(rule.form.to_string(), field.to_string())]
                            } else {
                                th.forms
                                    .iter()
                                    .map(|f| (f.name.to_string(), field.to_string()))
                                    .collect()
                            }
                        }
                        InstructionTerm::CreateDoc { form } => {
                            vec![(form.to_string(), CREATE_DOC.to_string())]
                        }
                        InstructionTerm::FilterLoop { form, body, .. } => match body {
                            LoopBody::EmitTrans { trans, .. } => {
                                vec![(form.to_string(), trans.to_string())]
                            }
                            LoopBody::EmitCreateDoc { form } => {
                                vec![(form.to_string(), CREATE_DOC.to_string())]
                            }
                        },
                    };
                    for (f, n) in targets {
                        expected.push((format!("({}, {})", rule.form, rule.name), format!("({f}, {n})"), loc));
                    }
                }
            }
        }
        expected.sort();
        let mut got: Vec<(String, String, TermLocation)> = g
            .edges()
            .iter()
            .map(|e| (g.vertex_label(e.from), g.vertex_label(e.to), e.loc))
            .collect();
        got.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn cycles_are_reported_with_a_genuine_witness() {
        let th = cyclic_theory();
        let g = DependencyGraph::build(&th);
        let cycle = g.cycle().expect("the Go rule feeds itself");
        assert!(!g.is_locally_simple());
        // Every consecutive hop, wrapping around, is a real edge.
        for (i, &v) in cycle.iter().enumerate() {
            let w = cycle[(i + 1) % cycle.len()];
            assert!(
                g.edges().iter().any(|e| e.from == v && e.to == w),
                "missing edge {} -> {}",
                g.vertex_label(v),
                g.vertex_label(w)
            );
        }
        assert!(cycle.contains(&g.vertex("A", "Go").unwrap()));
        assert_eq!(g.longest_paths(), None);
        assert_eq!(
            rank(&make_trans(Value::empty(), Value::nat(1), "Go"), &th, &model_of_a_docs(1)),
            Err(CyclicTheory)
        );
        assert_eq!(document_generating(&th), Err(CyclicTheory));

        let verdict = analyze(&th);
        assert!(!verdict.locally_simple);
        let witness = verdict.cycle.unwrap();
        assert_eq!(witness.first(), witness.last());
        assert_eq!(verdict.classification, Classification::PossiblyNonTerminating);
        assert_eq!(verdict.classification.exit_code(), 5);
    }

    #[test]
    fn longest_paths_drive_rank() {
        let th = chain_theory();
        let g = DependencyGraph::build(&th);
        let longest = g.longest_paths().unwrap();

        // Oracle: enumerate every simple path by depth-first walk.
        fn all_paths(g: &DependencyGraph, v: usize, seen: &mut Vec<usize>) -> usize {
            let mut best = 0;
            for e in g.edges() {
                if e.from == v && !seen.contains(&e.to) {
                    seen.push(e.to);
                    best = best.max(1 + all_paths(g, e.to, seen));
                    seen.pop();
                }
            }
            best
        }
        for (v, &len) in longest.iter().enumerate() {
            assert_eq!(len, all_paths(&g, v, &mut vec![v]), "vertex {}", g.vertex_label(v));
        }

        let model = model_of_a_docs(2);
        let go = make_trans(Value::empty(), Value::nat(1), "Go");
        assert_eq!(rank(&go, &th, &model), Ok(4));
        let step = make_trans(Value::empty(), Value::nat(1), "Step");
        assert_eq!(rank(&step, &th, &model), Ok(3));
        let set_x = make_set_field(Value::list([Value::atom("v")]), "x", Value::nat(1));
        assert_eq!(rank(&set_x, &th, &model), Ok(2));
        let set_z = make_set_field(Value::list([Value::atom("v")]), "z", Value::nat(1));
        assert_eq!(rank(&set_z, &th, &model), Ok(0));
        // Creates never cascade, and an empty model dispatches nothing.
        assert_eq!(rank(&make_create("A"), &th, &model), Ok(0));
        assert_eq!(rank(&go, &th, &Value::empty()), Ok(0));
    }

    #[test]
    fn rank_maximizes_over_the_forms_present() {
        // (A, Go) starts a 2-edge chain; (B, Go) has no outgoing edges.
        let mut th = skeleton("TwoForms");
        th.forms.push(FormDef {
            name: Arc::from("B"),
            blank_fields: vec![],
        });
        th.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::SetField {
                field: Arc::from("x"),
                target: T::var(VAR_DOC_ID),
                value: T::value(Value::list([Value::atom("v")])),
            }]),
        });
        th.set_rules.push(write_rule("A", "x", "y"));
        let go = make_trans(Value::empty(), Value::nat(1), "Go");
        let b_doc = Value::list([doc_tuple(
            Value::empty(),
            Value::atom("B"),
            Value::empty(),
            Value::nat(1),
        )]);
        assert_eq!(rank(&go, &th, &b_doc), Ok(0), "only B is present");
        assert_eq!(rank(&go, &th, &model_of_a_docs(1)), Ok(2));
        let both = Value::List(
            b_doc
                .as_list()
                .unwrap()
                .conc(model_of_a_docs(1).as_list().unwrap()),
        );
        assert_eq!(rank(&go, &th, &both), Ok(2), "the best form wins");
    }

    #[test]
    fn document_generation_propagates_to_predecessors() {
        // Like the chain theory, but the loop's Step rule creates an A:
        // both the literal create and the loop that reaches it generate.
        let mut th = chain_theory();
        th.trans_rules[1] = DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Step"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::CreateDoc {
                form: Arc::from("A"),
            }]),
        };
        let found = document_generating(&th).unwrap();
        assert_eq!(
            found,
            vec![
                TermLocation { table: RuleTable::Trans, rule: 0, term: 0 },
                TermLocation { table: RuleTable::Trans, rule: 1, term: 0 },
            ]
        );

        // The untouched chain writes fields only: nothing generates.
        assert_eq!(document_generating(&chain_theory()).unwrap(), vec![]);

        // A loop that emits creates directly is the other base case.
        let mut looped = skeleton("LoopCreate");
        looped.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                filter: Arc::from("All"),
                form: Arc::from("A"),
                params: T::empty(),
                body: LoopBody::EmitCreateDoc { form: Arc::from("A") },
            }]),
        });
        assert_eq!(
            document_generating(&looped).unwrap(),
            vec![TermLocation { table: RuleTable::Trans, rule: 0, term: 0 }]
        );
    }

    #[test]
    fn document_generation_is_monotone() {
        let base = chain_theory();
        let before: BTreeSet<TermLocation> =
            document_generating(&base).unwrap().into_iter().collect();
        let mut extended = base;
        extended.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Step"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::CreateDoc {
                form: Arc::from("A"),
            }]),
        });
        let after: BTreeSet<TermLocation> =
            document_generating(&extended).unwrap().into_iter().collect();
        assert!(before.is_subset(&after));
        assert!(after.len() > before.len(), "the new create must register");
    }

    #[test]
    fn effect_bounds_requires_the_preconditions() {
        match effect_bounds(&cyclic_theory(), &Value::empty(), &Value::empty()) {
            EffectBounds::NotLocallySimple { cycle } => assert!(!cycle.is_empty()),
            other => panic!("expected a cycle report, got {other:?}"),
        }

        let mut looped = skeleton("LoopCreate");
        looped.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::FilterLoop {
                filter: Arc::from("All"),
                form: Arc::from("A"),
                params: T::empty(),
                body: LoopBody::EmitCreateDoc { form: Arc::from("A") },
            }]),
        });
        match effect_bounds(&looped, &Value::empty(), &Value::empty()) {
            EffectBounds::DocGeneratingLoops { loops } => {
                assert_eq!(
                    loops,
                    vec![TermLocation { table: RuleTable::Trans, rule: 0, term: 0 }]
                );
            }
            other => panic!("expected a loop report, got {other:?}"),
        }
        assert_eq!(
            analyze(&looped).classification,
            Classification::TerminatingUnbounded
        );

        // Literal creates outside loops do not break eligibility.
        let mut literal = skeleton("LiteralCreate");
        literal.trans_rules.push(DaemonRule {
            form: Arc::from("A"),
            name: Arc::from("Go"),
            guard: F::True,
            action: RuleAction::Extend(vec![InstructionTerm::CreateDoc {
                form: Arc::from("A"),
            }]),
        });
        assert!(matches!(
            effect_bounds(&literal, &Value::empty(), &Value::empty()),
            EffectBounds::Eligible(_)
        ));
    }

    #[test]
    fn effect_bounds_instantiates_the_closed_forms() {
        let th = chain_theory();
        let model = model_of_a_docs(2);
        let queue = Value::list([
            make_set_field(Value::list([Value::atom("v")]), "x", Value::nat(1)),
            make_trans(Value::empty(), Value::nat(1), "Go"),
        ]);
        let EffectBounds::Eligible(report) = effect_bounds(&th, &model, &queue) else {
            panic!("the chain theory is eligible");
        };
        assert_eq!(report.n, 1);
        assert_eq!(report.k, 4, "Go outranks the field write");
        assert_eq!(report.model_len, 2);
        assert_eq!(report.queue_len, 2);
        // 2 * (1 * (2 + 1))^4 and max(2, 2 * (2 + 1)).
        assert_eq!(report.steps, Some(162));
        assert_eq!(report.documents, Some(6));

        let EffectBounds::Eligible(empty) = effect_bounds(&th, &model, &Value::empty()) else {
            panic!("still eligible");
        };
        assert_eq!(empty.steps, Some(0));
        assert_eq!(empty.documents, Some(2), "an idle chase keeps its documents");
    }

    #[test]
    fn observed_runs_stay_within_the_bounds() {
        let th = chain_theory();
        let model = model_of_a_docs(3);
        let queue = Value::list([
            make_trans(Value::empty(), Value::nat(2), "Go"),
            make_set_field(Value::list([Value::atom("v")]), "y", Value::nat(3)),
            make_trans(Value::empty(), Value::nat(1), "Go"),
        ]);
        let EffectBounds::Eligible(report) = effect_bounds(&th, &model, &queue) else {
            panic!("eligible");
        };
        let chase = run_chase(&th, model, queue, ChaseOptions::default());
        assert_eq!(chase.status, ChaseStatus::Terminated);
        assert!(u128::from(chase.steps) <= report.steps.unwrap());
        assert!(document_count(&chase.model) as u128 <= report.documents.unwrap());
    }

    #[test]
    fn weak_components_group_connected_vertices() {
        let th = chain_theory();
        let g = DependencyGraph::build(&th);
        let big: Vec<Vec<usize>> = g
            .weak_components()
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect();
        assert_eq!(big.len(), 1);
        let labels: BTreeSet<String> =
            big[0].iter().map(|&v| g.vertex_label(v)).collect();
        assert_eq!(
            labels,
            BTreeSet::from([
                "(A, Go)".to_string(),
                "(A, Step)".to_string(),
                "(A, x)".to_string(),
                "(A, y)".to_string(),
                "(A, z)".to_string(),
            ])
        );
    }

    #[test]
    fn verdicts_serialize_for_machine_use() {
        let verdict = analyze(&chain_theory());
        assert_eq!(verdict.classification, Classification::PolyBounded);
        assert_eq!(verdict.classification.exit_code(), 0);
        assert_eq!(verdict.k_max, Some(4));
        let json = serde_json::to_string(&verdict).unwrap();
        assert!(json.contains("\"classification\":\"poly-bounded\""));
        assert!(json.contains("\"k_max\":4"));
        assert!(!json.contains("cycle"), "absent fields are omitted");
    }
}
