//! Hereditarily finite list values over urelements.
//!
//! A [`Value`] is either an atom (urelement) or a [`HfList`]. Lists follow a
//! back-oriented access convention used throughout this crate:
//!
//! - `head(x)` is the **last** element of `x` (the most recently appended one),
//! - `tail(x)` is `x` without its last element,
//! - `cons(x, y)` appends `y` at the **end** of `x`,
//! - `conc(x, y)` concatenates.
//!
//! Elements are stored front-to-back, so `<a, b, c>` has front `a` and head `c`.
//! `head(<>)` and `tail(<>)` are total and yield `<>`.
//!
//! `HfList` is a persistent linked list whose spine starts at the back, so
//! `cons`, `head` and `tail` are O(1) and share structure. Long chains built by
//! repeated `cons` (document ids, situations, models) cost one node per append.

use std::fmt;
use std::sync::{Arc, OnceLock};

/// An atom or a finite list of values.
#[derive(Clone, PartialEq, Eq)]
pub enum Value {
    Atom(Arc<str>),
    List(HfList),
}

/// Name of the distinguished in-band error constant.
pub const FAULT: &str = "fault";
/// Tag atom carried at the head of create-document instructions.
pub const CREATE_DOC: &str = "CreateDoc";
/// Tag atom carried at the head of set-field instructions.
pub const SET_FIELD: &str = "SetField";

impl Value {
    pub fn atom(name: impl Into<Arc<str>>) -> Value {
        Value::Atom(name.into())
    }

    /// The empty list `<>`.
    pub fn empty() -> Value {
        Value::List(HfList::new())
    }

    /// Builds a list from elements in front-to-back order.
    pub fn list<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::List(HfList::from_iter(items))
    }

    /// The natural number `n` encoded as a list of `n` empty lists.
    pub fn nat(n: usize) -> Value {
        let mut l = HfList::new();
        for _ in 0..n {
            l = l.cons(Value::empty());
        }
        Value::List(l)
    }

    /// The distinguished error constant.
    pub fn fault() -> Value {
        static FAULT_ATOM: OnceLock<Arc<str>> = OnceLock::new();
        Value::Atom(FAULT_ATOM.get_or_init(|| Arc::from(FAULT)).clone())
    }

    pub fn is_fault(&self) -> bool {
        matches!(self, Value::Atom(a) if &**a == FAULT)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(a) => Some(a),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&HfList> {
        match self {
            Value::Atom(_) => None,
            Value::List(l) => Some(l),
        }
    }

    pub fn is_empty_list(&self) -> bool {
        matches!(self, Value::List(l) if l.is_empty())
    }

    /// `Some(n)` when this value is the nat `n` (a list of empty lists).
    pub fn as_nat(&self) -> Option<usize> {
        let l = self.as_list()?;
        l.iter_back()
            .all(Value::is_empty_list)
            .then_some(l.len())
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    /// Canonical rendering: atoms print bare, nats print as integers,
    /// other lists as `<e1, ..., en>` (front-to-back).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => f.write_str(a),
            Value::List(l) => {
                if let (true, Some(n)) = (!l.is_empty(), self.as_nat()) {
                    return write!(f, "{n}");
                }
                f.write_str("<")?;
                let items = l.to_vec();
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    fmt::Display::fmt(item, f)?;
                }
                f.write_str(">")
            }
        }
    }
}

struct Node {
    /// The back element at this depth.
    last: Value,
    /// Spine of the list without `last`.
    init: Option<Arc<Node>>,
}

/// Persistent list with O(1) back access and structural sharing.
#[derive(Clone)]
pub struct HfList {
    len: usize,
    spine: Option<Arc<Node>>,
}

impl HfList {
    pub fn new() -> HfList {
        HfList { len: 0, spine: None }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The last element, or `<>` for the empty list.
    pub fn head(&self) -> Value {
        self.head_ref().cloned().unwrap_or_else(Value::empty)
    }

    pub fn head_ref(&self) -> Option<&Value> {
        self.spine.as_deref().map(|n| &n.last)
    }

    /// The list without its last element; `<>` stays `<>`.
    pub fn tail(&self) -> HfList {
        match &self.spine {
            None => HfList::new(),
            Some(node) => HfList {
                len: self.len - 1,
                spine: node.init.clone(),
            },
        }
    }

    /// Appends `v` at the back. Shares this list's spine.
    pub fn cons(&self, v: Value) -> HfList {
        HfList {
            len: self.len + 1,
            spine: Some(Arc::new(Node {
                last: v,
                init: self.spine.clone(),
            })),
        }
    }

    /// Concatenation; costs O(len(other)) and shares this list's spine.
    pub fn conc(&self, other: &HfList) -> HfList {
        let mut out = self.clone();
        for v in other.to_vec() {
            out = out.cons(v);
        }
        out
    }

    /// First `n` elements as a shared-spine list; `None` if `n > len`.
    pub fn prefix(&self, n: usize) -> Option<HfList> {
        if n > self.len {
            return None;
        }
        let mut spine = &self.spine;
        for _ in 0..(self.len - n) {
            spine = &spine.as_deref().expect("spine length matches len").init;
        }
        Some(HfList {
            len: n,
            spine: spine.clone(),
        })
    }

    /// Element at 1-based position `pos` counted from the front.
    pub fn get(&self, pos: usize) -> Option<&Value> {
        if pos == 0 || pos > self.len {
            return None;
        }
        let mut node = self.spine.as_deref();
        for _ in 0..(self.len - pos) {
            node = node.and_then(|n| n.init.as_deref());
        }
        node.map(|n| &n.last)
    }

    /// Iterates back-to-front (cheap direction for this representation).
    pub fn iter_back(&self) -> IterBack<'_> {
        IterBack {
            node: self.spine.as_deref(),
        }
    }

    /// Elements in front-to-back order.
    pub fn to_vec(&self) -> Vec<Value> {
        let mut v: Vec<Value> = self.iter_back().cloned().collect();
        v.reverse();
        v
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.iter_back().any(|e| e == v)
    }

    /// `self ⊑ other`: self equals the first `len(self)` elements of `other`.
    pub fn is_initial_segment_of(&self, other: &HfList) -> bool {
        match other.prefix(self.len) {
            Some(p) => p == *self,
            None => false,
        }
    }

    /// All initial segments, shortest first (`<>` up to the list itself).
    pub fn prefixes(&self) -> Vec<HfList> {
        let mut spines = Vec::with_capacity(self.len + 1);
        let mut spine = self.spine.clone();
        let mut len = self.len;
        loop {
            spines.push(HfList { len, spine: spine.clone() });
            match spine {
                None => break,
                Some(node) => {
                    spine = node.init.clone();
                    len -= 1;
                }
            }
        }
        spines.reverse();
        spines
    }
}

impl Default for HfList {
    fn default() -> Self {
        HfList::new()
    }
}

impl FromIterator<Value> for HfList {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut l = HfList::new();
        for v in iter {
            l = l.cons(v);
        }
        l
    }
}

impl PartialEq for HfList {
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len {
            return false;
        }
        let mut a = self.spine.as_ref();
        let mut b = other.spine.as_ref();
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.last != y.last {
                        return false;
                    }
                    a = x.init.as_ref();
                    b = y.init.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl Eq for HfList {}

impl fmt::Debug for HfList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Value::List(self.clone()), f)
    }
}

impl Drop for HfList {
    // Unlink the spine iteratively while uniquely owned, so dropping a
    // million-element list cannot overflow the stack.
    fn drop(&mut self) {
        let mut cur = self.spine.take();
        while let Some(arc) = cur {
            match Arc::try_unwrap(arc) {
                Ok(mut node) => cur = node.init.take(),
                Err(_) => break,
            }
        }
    }
}

pub struct IterBack<'a> {
    node: Option<&'a Node>,
}

impl<'a> Iterator for IterBack<'a> {
    type Item = &'a Value;

    fn next(&mut self) -> Option<&'a Value> {
        let node = self.node?;
        self.node = node.init.as_deref();
        Some(&node.last)
    }
}
