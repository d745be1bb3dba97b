//! End-to-end runs over the bundled fixture theories: parse the source,
//! chase a queue, and check the final model, the step count, and the
//! analyzer's verdict against hand-computed expectations.

use doctheory::analysis::{analyze, effect_bounds, Classification, EffectBounds};
use doctheory::chase::{run_chase, ChaseOptions, ChaseStatus};
use doctheory::docmodel::get_field_value;
use doctheory::dsl::{parse_queue, parse_theory, print_theory};
use doctheory::theory::Theory;
use doctheory::Value;

const INVOICE: &str = include_str!("../fixtures/invoice.dth");
const ORDERS: &str = include_str!("../fixtures/orders.dth");

fn theory(text: &str) -> Theory {
    parse_theory(text).expect("fixture theory parses")
}

fn queue(th: &Theory, text: &str) -> Value {
    parse_queue(text, &th.cfg).expect("queue parses")
}

fn field(model: &Value, id: usize, name: &str) -> Value {
    get_field_value(&Value::nat(id), &Value::atom(name), model).expect("field present")
}

fn one_atom(name: &str) -> Value {
    Value::list([Value::atom(name)])
}

#[test]
fn approvals_cascade_through_every_open_invoice() {
    let th = theory(INVOICE);
    let q = queue(
        &th,
        "<Invoice, CreateDoc>\n<Invoice, CreateDoc>\n<<>, 1, Approve>\n",
    );
    let chase = run_chase(&th, Value::empty(), q, ChaseOptions::default());

    assert_eq!(chase.status, ChaseStatus::Terminated);
    // 2 creates + Approve, then Stamp/status/log/note per invoice.
    assert_eq!(chase.steps, 11);
    assert_eq!(doctheory::analysis::document_count(&chase.model), 2);
    for id in [1, 2] {
        assert_eq!(field(&chase.model, id, "status"), one_atom("stamped"));
        assert_eq!(field(&chase.model, id, "log"), one_atom("stamped"));
        assert_eq!(field(&chase.model, id, "note"), one_atom("stamped"));
    }
}

#[test]
fn a_prebuilt_model_respects_the_closed_form_bounds() {
    let th = theory(INVOICE);
    // Phase one only builds documents; phase two is create-free, which is
    // the shape the step/document bounds are stated for.
    let setup = run_chase(
        &th,
        Value::empty(),
        queue(&th, "<Invoice, CreateDoc>\n<Invoice, CreateDoc>\n"),
        ChaseOptions::default(),
    );
    assert_eq!(setup.status, ChaseStatus::Terminated);
    assert_eq!(setup.steps, 2);

    let model = setup.model.clone();
    let q = queue(&th, "<<>, 1, Approve>\n");
    let bounds = match effect_bounds(&th, &model, &q) {
        EffectBounds::Eligible(report) => report,
        other => panic!("expected bounds, got {other:?}"),
    };
    assert_eq!(bounds.n, 1);
    assert_eq!(bounds.k, 4);
    assert_eq!(bounds.steps, Some(81)); // 1 * (1 * (2 + 1))^4

    let chase = run_chase(&th, model, q, ChaseOptions::default());
    assert_eq!(chase.status, ChaseStatus::Terminated);
    assert_eq!(chase.steps, 9); // Approve, then 4 writes per invoice.
    let documents = doctheory::analysis::document_count(&chase.model) as u128;
    assert!(u128::from(chase.steps) <= bounds.steps.unwrap());
    assert!(documents <= bounds.documents.unwrap());
}

#[test]
fn placing_an_order_creates_and_ships_a_shipment() {
    let th = theory(ORDERS);
    let q = queue(&th, "<Order, CreateDoc>\n<<>, 1, Place>\n");
    let chase = run_chase(&th, Value::empty(), q, ChaseOptions::default());

    assert_eq!(chase.status, ChaseStatus::Terminated);
    // create, Place, create Shipment, set flag, Ship, set count.
    assert_eq!(chase.steps, 6);
    assert_eq!(doctheory::analysis::document_count(&chase.model), 2);
    assert_eq!(field(&chase.model, 1, "flag"), one_atom("hot"));
    assert_eq!(field(&chase.model, 2, "item"), one_atom("box"));
    assert_eq!(field(&chase.model, 2, "count"), Value::list([Value::nat(1)]));
}

#[test]
fn an_unmatched_transaction_skips_the_rest_of_the_queue() {
    let th = theory(ORDERS);
    // Ship targets an Order, and there is no (Order, Ship) rule; the
    // declared default drops the rest of the queue, so the trailing
    // create never runs.
    let q = queue(&th, "<Order, CreateDoc>\n<<>, 1, Ship>\n<Order, CreateDoc>\n");
    let chase = run_chase(&th, Value::empty(), q, ChaseOptions::default());

    assert_eq!(chase.status, ChaseStatus::Terminated);
    assert_eq!(chase.steps, 2);
    assert_eq!(doctheory::analysis::document_count(&chase.model), 1);
}

#[test]
fn fuel_runs_out_mid_queue() {
    let th = theory(INVOICE);
    let q = queue(&th, "<Invoice, CreateDoc>\n<Invoice, CreateDoc>\n");
    let options = ChaseOptions {
        fuel: 1,
        ..ChaseOptions::default()
    };
    let chase = run_chase(&th, Value::empty(), q, options);
    assert_eq!(chase.status, ChaseStatus::FuelExhausted);
    assert_eq!(chase.steps, 1);
}

#[test]
fn the_analyzer_grades_both_fixtures() {
    let invoice = analyze(&theory(INVOICE));
    assert_eq!(invoice.classification, Classification::PolyBounded);
    assert!(invoice.locally_simple);
    assert_eq!(invoice.k_max, Some(4));
    assert_eq!(invoice.n, 1);
    assert!(invoice.doc_generating.is_empty());

    let orders = analyze(&theory(ORDERS));
    assert_eq!(orders.classification, Classification::PolyBounded);
    assert!(orders.locally_simple);
    // The literal `create Shipment` in Place's rule generates documents
    // without spoiling the polynomial bounds.
    assert_eq!(orders.doc_generating.len(), 1);
    assert!(orders.doc_generating[0].contains("Order.Place"));
}

#[test]
fn fixtures_print_and_reparse_unchanged() {
    for text in [INVOICE, ORDERS] {
        let th = theory(text);
        let printed = print_theory(&th).expect("fixture prints");
        let again = parse_theory(&printed).expect("printed form reparses");
        assert_eq!(th, again);
    }
}
