//! Seedable random generators for values, models, and queues.
//!
//! Tests and benches share these so that "N random inputs" claims are
//! reproducible: seed a `ChaCha8Rng` (or any `Rng`) and the shapes drawn
//! here are deterministic.

use rand::Rng;

use crate::ast::Cardinality;
use crate::docmodel::{doc_tuple, make_create, make_set_field, make_trans};
use crate::theory::Theory;
use crate::value::Value;

const ATOMS: [&str; 8] = ["a", "b", "c", "x", "y", "mark", "note", "tag"];

pub fn random_atom(rng: &mut impl Rng) -> Value {
    Value::atom(ATOMS[rng.random_range(0..ATOMS.len())])
}

/// A value of nesting depth at most `depth`, biased toward small shapes.
pub fn random_value(rng: &mut impl Rng, depth: usize) -> Value {
    if depth == 0 || rng.random_range(0..4) == 0 {
        match rng.random_range(0..3) {
            0 => random_atom(rng),
            1 => Value::empty(),
            _ => Value::nat(rng.random_range(0..10)),
        }
    } else {
        let width = rng.random_range(0..=4);
        Value::list((0..width).map(|_| random_value(rng, depth - 1)))
    }
}

/// A field value list that satisfies the cardinality.
fn random_field_value(rng: &mut impl Rng, card: Cardinality) -> Value {
    let count = match card {
        Cardinality::Empty => 0,
        Cardinality::AtMostOne => rng.random_range(0..=1),
        Cardinality::ExactlyOne => 1,
        Cardinality::AtLeastOne => rng.random_range(1..=2),
    };
    Value::list((0..count).map(|_| random_value(rng, 1)))
}

/// A model of `doc_count` documents with ids 1..=doc_count, each a blank of
/// a randomly drawn declared form.
pub fn random_model(rng: &mut impl Rng, th: &Theory, doc_count: usize) -> Value {
    Value::list((1..=doc_count).map(|id| {
        let form = &th.forms[rng.random_range(0..th.forms.len())];
        doc_tuple(
            Value::empty(),
            Value::atom(form.name.clone()),
            th.blank_doc(&form.name).expect("declared form"),
            Value::nat(id),
        )
    }))
}

/// A queue of up to `max_len` instructions over the theory's names.
/// Targets usually hit ids 1..=doc_count but sometimes miss on purpose.
/// With `allow_creates` false the mix is field writes and transaction
/// calls only.
pub fn random_queue(
    rng: &mut impl Rng,
    th: &Theory,
    doc_count: usize,
    max_len: usize,
    allow_creates: bool,
) -> Value {
    let len = rng.random_range(0..=max_len);
    let target = |rng: &mut dyn rand::RngCore| {
        if doc_count > 0 && rng.random_range(0..8) != 0 {
            Value::nat(rng.random_range(1..=doc_count))
        } else {
            Value::nat(doc_count + 1 + rng.random_range(0..3))
        }
    };
    Value::list((0..len).map(|_| {
        let mut kind = rng.random_range(0..3);
        if !allow_creates && kind == 0 {
            kind = 1 + rng.random_range(0..2);
        }
        match kind {
            0 => {
                let form = &th.forms[rng.random_range(0..th.forms.len())];
                make_create(&form.name)
            }
            1 if !th.fields.is_empty() => {
                let (field, card) = &th.fields[rng.random_range(0..th.fields.len())];
                make_set_field(random_field_value(rng, *card), field, target(rng))
            }
            _ if !th.transactions.is_empty() => {
                let name = &th.transactions[rng.random_range(0..th.transactions.len())];
                let params = if rng.random_range(0..2) == 0 {
                    Value::empty()
                } else {
                    Value::list([random_value(rng, 1)])
                };
                make_trans(params, target(rng), name)
            }
            _ => {
                let form = &th.forms[rng.random_range(0..th.forms.len())];
                make_create(&form.name)
            }
        }
    }))
}
