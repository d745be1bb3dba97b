//! Documents, models, and the accessor operations over them.
//!
//! A document version is the tuple `<sit, form, doc, id>`: the situation it
//! was created in, its form name, the field list, and its id (a nat). A
//! model is the list of all versions ever written, newest at the back, so
//! `head(model)` is the most recent write. A field is `<v1, ..., vm, name>`:
//! the value list with the field name consed on.
//!
//! Lookups that can miss (`get_doc_by_id`, `get_field_value`,
//! `find_field_position`) report absence with the in-band `fault` constant;
//! only atoms in list positions are hard errors.

use std::sync::Arc;

use crate::eval::EvalError;
use crate::value::{HfList, Value, CREATE_DOC, SET_FIELD};

/// Builds the version tuple `<sit, form, doc, id>`.
pub fn doc_tuple(sit: Value, form: Value, doc: Value, id: Value) -> Value {
    Value::list([sit, form, doc, id])
}

fn as_list<'a>(v: &'a Value, op: &'static str) -> Result<&'a HfList, EvalError> {
    v.as_list().ok_or_else(|| EvalError::atom_operand(op, v))
}

/// Id component of a version tuple (its last element).
pub fn id_of(tuple: &Value) -> Result<Value, EvalError> {
    Ok(as_list(tuple, "document id")?.head())
}

/// Field-list component of a version tuple.
pub fn doc_of(tuple: &Value) -> Result<Value, EvalError> {
    Ok(as_list(tuple, "document body")?.tail().head())
}

/// Form-name component of a version tuple.
pub fn form_of(tuple: &Value) -> Result<Value, EvalError> {
    Ok(as_list(tuple, "Form")?.tail().tail().head())
}

/// Situation component of a version tuple.
pub fn sit_of(tuple: &Value) -> Result<Value, EvalError> {
    let l = as_list(tuple, "Situation")?;
    Ok(l.tail().tail().tail().head())
}

/// Situation of the newest version in the model; `<>` for the empty model.
pub fn current_situation(model: &Value) -> Result<Value, EvalError> {
    let m = as_list(model, "Situation")?;
    match m.head_ref() {
        None => Ok(Value::empty()),
        Some(newest) => sit_of(newest),
    }
}

/// Greatest document id present in the model, as a nat; `0` when empty.
/// Ids are compared by length, which on nats is the numeric order.
pub fn get_last_doc_id(model: &Value) -> Result<Value, EvalError> {
    let m = as_list(model, "GetLastDocID")?;
    let mut best: Option<Value> = None;
    for tuple in m.iter_back() {
        let id = id_of(tuple)?;
        let id_len = as_list(&id, "GetLastDocID")?.len();
        match &best {
            Some(b) if b.as_list().expect("ids are lists").len() >= id_len => {}
            _ => best = Some(id),
        }
    }
    Ok(best.unwrap_or_else(Value::empty))
}

/// Newest version tuple carrying the given id; `fault` when no version
/// matches. Entries that are not tuples never match.
pub fn get_doc_by_id(id: &Value, model: &Value) -> Result<Value, EvalError> {
    let m = as_list(model, "GetDocByID")?;
    for tuple in m.iter_back() {
        if let Some(l) = tuple.as_list() {
            if l.head_ref() == Some(id) {
                return Ok(tuple.clone());
            }
        }
    }
    Ok(Value::fault())
}

/// Value list of the named field in the newest version of the document with
/// the given id. When several fields share the name, the one nearest the
/// back wins. `fault` when the document or the field is absent.
pub fn get_field_value(id: &Value, field: &Value, model: &Value) -> Result<Value, EvalError> {
    let tuple = get_doc_by_id(id, model)?;
    if tuple.is_fault() {
        return Ok(Value::fault());
    }
    let doc = doc_of(&tuple)?;
    let fields = as_list(&doc, "GetFieldValue")?;
    for f in fields.iter_back() {
        if let Some(fl) = f.as_list() {
            if fl.head_ref() == Some(field) {
                return Ok(Value::List(fl.tail()));
            }
        }
    }
    Ok(Value::fault())
}

/// Splits a field list into `<list1, list2>` around the named field: `list1`
/// ends with the last field of that name and `conc(list1, list2)` restores
/// the input. `fault` when no field carries the name.
pub fn find_field_position(field: &Value, doc: &Value) -> Result<Value, EvalError> {
    let fields = as_list(doc, "FindFieldPosition")?;
    let split = match last_position_of(fields, field) {
        Some(p) => p,
        None => return Ok(Value::fault()),
    };
    let list1 = fields.prefix(split).expect("split is within the list");
    let rest: HfList = fields.to_vec().split_off(split).into_iter().collect();
    Ok(Value::list([Value::List(list1), Value::List(rest)]))
}

/// 1-based position of the last field named `field`, if any.
fn last_position_of(fields: &HfList, field: &Value) -> Option<usize> {
    let mut pos = fields.len();
    for f in fields.iter_back() {
        if f.as_list().and_then(|fl| fl.head_ref()) == Some(field) {
            return Some(pos);
        }
        pos -= 1;
    }
    None
}

/// Replaces the value list of the last field named `field` with `new_field`
/// (already in `<v1, ..., vm, name>` shape). `None` when the name is absent.
pub fn replace_field(fields: &HfList, field: &Value, new_field: Value) -> Option<HfList> {
    let split = last_position_of(fields, field)?;
    let mut out = fields.prefix(split - 1).expect("split is within the list");
    out = out.cons(new_field);
    for v in fields.to_vec().split_off(split) {
        out = out.cons(v);
    }
    Some(out)
}

/// A structurally well-shaped queue entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// `<form, CreateDoc>`
    CreateDoc { form: Arc<str> },
    /// `<value, field, target, SetField>`
    SetField {
        value: Value,
        field: Arc<str>,
        target: Value,
    },
    /// `<params, target, name>` for a transaction name.
    Trans {
        params: Value,
        target: Value,
        name: Arc<str>,
    },
}

/// Reads the instruction shape off a queue entry. The tag is the entry's
/// head; anything that does not fit one of the three layouts is `None`.
/// Whether a transaction name is actually declared is the engine's check,
/// not a shape question.
pub fn classify_instruction(v: &Value) -> Option<Instruction> {
    let l = v.as_list()?;
    let tag: Arc<str> = match l.head_ref()? {
        Value::Atom(a) => a.clone(),
        Value::List(_) => return None,
    };
    match (&*tag, l.len()) {
        (CREATE_DOC, 2) => {
            let form = l.get(1)?.as_atom()?;
            Some(Instruction::CreateDoc {
                form: Arc::from(form),
            })
        }
        (SET_FIELD, 4) => {
            let field = l.get(2)?.as_atom()?;
            Some(Instruction::SetField {
                value: l.get(1)?.clone(),
                field: Arc::from(field),
                target: l.get(3)?.clone(),
            })
        }
        (CREATE_DOC, _) | (SET_FIELD, _) => None,
        (_, 3) => Some(Instruction::Trans {
            params: l.get(1)?.clone(),
            target: l.get(2)?.clone(),
            name: tag,
        }),
        _ => None,
    }
}

/// `<form, CreateDoc>`
pub fn make_create(form: &str) -> Value {
    Value::list([Value::atom(form), Value::atom(CREATE_DOC)])
}

/// `<value, field, target, SetField>`
pub fn make_set_field(value: Value, field: &str, target: Value) -> Value {
    Value::list([value, Value::atom(field), target, Value::atom(SET_FIELD)])
}

/// `<params, target, name>`
pub fn make_trans(params: Value, target: Value, name: &str) -> Value {
    Value::list([params, target, Value::atom(name)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(name: &str, values: &[Value]) -> Value {
        let mut l: HfList = values.iter().cloned().collect();
        l = l.cons(Value::atom(name));
        Value::List(l)
    }

    fn tuple(id: usize, form: &str, fields: &[Value]) -> Value {
        doc_tuple(
            Value::empty(),
            Value::atom(form),
            Value::list(fields.iter().cloned()),
            Value::nat(id),
        )
    }

    #[test]
    fn tuple_components_sit_behind_the_id() {
        let t = tuple(3, "Invoice", &[field("total", &[Value::nat(2)])]);
        assert_eq!(id_of(&t).unwrap(), Value::nat(3));
        assert_eq!(form_of(&t).unwrap(), Value::atom("Invoice"));
        assert_eq!(sit_of(&t).unwrap(), Value::empty());
        assert_eq!(
            doc_of(&t).unwrap(),
            Value::list([field("total", &[Value::nat(2)])])
        );
        assert!(form_of(&Value::atom("junk")).is_err());
    }

    #[test]
    fn situation_of_the_newest_version() {
        assert_eq!(
            current_situation(&Value::empty()).unwrap(),
            Value::empty()
        );
        let old = tuple(1, "A", &[]);
        let newer = doc_tuple(
            Value::atom("mark"),
            Value::atom("B"),
            Value::empty(),
            Value::nat(2),
        );
        let model = Value::list([old, newer]);
        assert_eq!(current_situation(&model).unwrap(), Value::atom("mark"));
        assert!(current_situation(&Value::atom("m")).is_err());
    }

    #[test]
    fn last_doc_id_is_the_length_maximum() {
        assert_eq!(get_last_doc_id(&Value::empty()).unwrap(), Value::nat(0));
        let model = Value::list([
            tuple(1, "A", &[]),
            tuple(5, "A", &[]),
            tuple(3, "A", &[]),
            tuple(5, "A", &[]),
        ]);
        assert_eq!(get_last_doc_id(&model).unwrap(), Value::nat(5));
    }

    #[test]
    fn doc_lookup_prefers_the_newest_version() {
        let v1 = tuple(2, "A", &[field("f", &[Value::nat(1)])]);
        let v2 = tuple(2, "A", &[field("f", &[Value::nat(7)])]);
        let model = Value::list([v1, Value::atom("noise"), v2.clone()]);
        assert_eq!(get_doc_by_id(&Value::nat(2), &model).unwrap(), v2);
        assert!(get_doc_by_id(&Value::nat(9), &model).unwrap().is_fault());
        assert!(get_doc_by_id(&Value::nat(2), &Value::atom("m")).is_err());
    }

    #[test]
    fn field_lookup_takes_the_last_field_of_the_newest_version() {
        let old = tuple(1, "A", &[field("f", &[Value::nat(1)])]);
        let new = tuple(
            1,
            "A",
            &[
                field("f", &[Value::nat(2)]),
                field("g", &[]),
                field("f", &[Value::nat(9), Value::nat(8)]),
            ],
        );
        let model = Value::list([old, new]);
        let f = Value::atom("f");
        assert_eq!(
            get_field_value(&Value::nat(1), &f, &model).unwrap(),
            Value::list([Value::nat(9), Value::nat(8)])
        );
        assert!(get_field_value(&Value::nat(1), &Value::atom("h"), &model)
            .unwrap()
            .is_fault());
        assert!(get_field_value(&Value::nat(4), &f, &model)
            .unwrap()
            .is_fault());
    }

    #[test]
    fn field_position_splits_at_the_last_occurrence() {
        let fa = field("n", &[Value::nat(1)]);
        let fb = field("other", &[]);
        let fc = field("n", &[Value::nat(2)]);
        let doc = Value::list([fa.clone(), fb.clone(), fc.clone()]);
        let split = find_field_position(&Value::atom("n"), &doc).unwrap();
        assert_eq!(
            split,
            Value::list([
                Value::list([fa.clone(), fb.clone(), fc.clone()]),
                Value::empty(),
            ])
        );
        let split = find_field_position(&Value::atom("other"), &doc).unwrap();
        let parts = split.as_list().unwrap();
        let list1 = parts.get(1).unwrap().as_list().unwrap();
        let list2 = parts.get(2).unwrap().as_list().unwrap();
        assert_eq!(list1.head(), fb);
        assert_eq!(Value::List(list1.conc(list2)), doc);
        assert!(find_field_position(&Value::atom("zzz"), &doc)
            .unwrap()
            .is_fault());
        assert!(find_field_position(&Value::atom("n"), &Value::atom("d")).is_err());
    }

    #[test]
    fn replace_field_rewrites_in_place() {
        let doc: HfList = [
            field("a", &[Value::nat(1)]),
            field("b", &[Value::nat(2)]),
            field("a", &[Value::nat(3)]),
        ]
        .into_iter()
        .collect();
        let swapped = replace_field(&doc, &Value::atom("b"), field("b", &[Value::nat(9)]))
            .unwrap();
        assert_eq!(
            Value::List(swapped),
            Value::list([
                field("a", &[Value::nat(1)]),
                field("b", &[Value::nat(9)]),
                field("a", &[Value::nat(3)]),
            ])
        );
        // The last occurrence is the one replaced.
        let swapped = replace_field(&doc, &Value::atom("a"), field("a", &[])).unwrap();
        assert_eq!(
            Value::List(swapped),
            Value::list([
                field("a", &[Value::nat(1)]),
                field("b", &[Value::nat(2)]),
                field("a", &[]),
            ])
        );
        assert!(replace_field(&doc, &Value::atom("zzz"), field("zzz", &[])).is_none());
    }

    #[test]
    fn instruction_shapes_round_trip() {
        let create = make_create("Invoice");
        assert_eq!(
            classify_instruction(&create),
            Some(Instruction::CreateDoc {
                form: Arc::from("Invoice")
            })
        );
        let set = make_set_field(Value::list([Value::nat(7)]), "total", Value::nat(2));
        assert_eq!(
            classify_instruction(&set),
            Some(Instruction::SetField {
                value: Value::list([Value::nat(7)]),
                field: Arc::from("total"),
                target: Value::nat(2),
            })
        );
        let trans = make_trans(Value::empty(), Value::nat(1), "Approve");
        assert_eq!(
            classify_instruction(&trans),
            Some(Instruction::Trans {
                params: Value::empty(),
                target: Value::nat(1),
                name: Arc::from("Approve"),
            })
        );
    }

    #[test]
    fn malformed_instructions_are_rejected() {
        assert_eq!(classify_instruction(&Value::atom("x")), None);
        assert_eq!(classify_instruction(&Value::empty()), None);
        // Tag must be an atom.
        assert_eq!(
            classify_instruction(&Value::list([Value::atom("a"), Value::empty()])),
            None
        );
        // CreateDoc arity is exactly two.
        assert_eq!(
            classify_instruction(&Value::list([
                Value::atom("x"),
                Value::atom("Invoice"),
                Value::atom(CREATE_DOC),
            ])),
            None
        );
        // SetField needs an atom field name.
        assert_eq!(
            classify_instruction(&Value::list([
                Value::empty(),
                Value::empty(),
                Value::nat(1),
                Value::atom(SET_FIELD),
            ])),
            None
        );
        // A two-element list with an unknown tag is not a transaction call.
        assert_eq!(
            classify_instruction(&Value::list([Value::empty(), Value::atom("T")])),
            None
        );
    }
}
