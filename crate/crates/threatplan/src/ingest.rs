//! Reading, checking, and writing the JSON model format.
//!
//! The format is strict on purpose: version-gated, a fixed vocabulary of
//! fields, integer money, four-digit decimal factors. Anything outside
//! that vocabulary is a finding, not a silent default — a model that
//! drives spending decisions should not be open to interpretation.
//!
//! Checking happens in two passes. The first pass walks the raw JSON and
//! reports structural problems (missing fields, wrong types, bad number
//! shapes). Only if that pass is clean is a [`Model`] built and handed to
//! [`validate_model`] for cross-reference checks (dangling ids, orphaned
//! threats, duplicate grouping). Findings from both passes carry the same
//! path notation and sort in document order, so a report reads top to
//! bottom alongside the file.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{Map, Value};

use crate::model::{AnalysisConfig, Countermeasure, Mitigation, Model, Threat, TreeNode};
use crate::money::{Factor, FactorError, Money};

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

/// How bad a finding is. Errors make the model unusable for analysis;
/// warnings flag likely oversights the numbers can survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    /// Uppercase token used in text output: `ERROR` / `WARNING`.
    pub fn token(self) -> &'static str {
        match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        }
    }

    /// Lowercase name used in JSON output: `error` / `warning`.
    pub fn as_lower(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Closed set of diagnostic codes. Codes are stable: tooling may match on
/// them, so new checks get new codes rather than reusing old ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FindingCode {
    /// The document is not parseable JSON.
    Syntax,
    /// The `version` field is missing in spirit: present but not the
    /// supported format version.
    Version,
    /// A field or element has the wrong JSON type or number shape.
    Type,
    /// A required field is absent.
    Missing,
    /// A field outside the format vocabulary.
    UnknownField,
    /// A tree node that is neither a proper refinement nor a proper leaf.
    NodeShape,
    /// A monetary amount written as a negative number.
    NegValue,
    /// A monetary amount beyond the representable range.
    Overflow,
    /// A mitigation factor outside [0, 1] or with too many digits.
    FactorRange,
    /// An identifier outside the `[a-z0-9-]+` alphabet.
    BadId,
    /// An identifier reused within its namespace.
    DupId,
    /// A threat whose attack costs nothing; its risk would be unbounded.
    ZeroEffort,
    /// A classification threshold that cannot split anything.
    Threshold,
    /// A countermeasure listing the same threat twice.
    DupMitigation,
    /// A reference to an id that does not exist.
    BadRef,
    /// A cataloged threat that no tree leaf accounts for.
    OrphanThreat,
    /// A threat grouped under more than one tree leaf.
    DupLeaf,
    /// A refinement with no children, or a leaf with no threats.
    EmptyNode,
    /// A threat no countermeasure addresses.
    Uncovered,
    /// A notes field present but blank.
    EmptyNotes,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::Syntax => "E-SYNTAX",
            FindingCode::Version => "E-VERSION",
            FindingCode::Type => "E-TYPE",
            FindingCode::Missing => "E-MISSING",
            FindingCode::UnknownField => "E-UNKNOWN-FIELD",
            FindingCode::NodeShape => "E-NODE-SHAPE",
            FindingCode::NegValue => "E-NEG-VALUE",
            FindingCode::Overflow => "E-OVERFLOW",
            FindingCode::FactorRange => "E-FACTOR-RANGE",
            FindingCode::BadId => "E-BAD-ID",
            FindingCode::DupId => "E-DUP-ID",
            FindingCode::ZeroEffort => "E-ZERO-EFFORT",
            FindingCode::Threshold => "E-THRESHOLD",
            FindingCode::DupMitigation => "E-DUP-MITIGATION",
            FindingCode::BadRef => "E-BAD-REF",
            FindingCode::OrphanThreat => "E-ORPHAN-THREAT",
            FindingCode::DupLeaf => "E-DUP-LEAF",
            FindingCode::EmptyNode => "E-EMPTY-NODE",
            FindingCode::Uncovered => "W-UNCOVERED",
            FindingCode::EmptyNotes => "W-EMPTY-NOTES",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            FindingCode::Uncovered | FindingCode::EmptyNotes => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One diagnostic: severity, stable code, a slash-separated path into the
/// document (`/` for the document itself), and a human message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub path: String,
    pub message: String,
    /// Document-order sort key, recorded while walking.
    ord: Vec<u32>,
}

impl Finding {
    /// Builds a finding at an explicit path. For callers reporting their
    /// own reference problems (for example, a request naming an unknown
    /// id); parser-produced findings carry richer ordering information.
    pub fn new(code: FindingCode, path: impl Into<String>, message: impl Into<String>) -> Finding {
        Finding {
            severity: code.severity(),
            code,
            path: path.into(),
            message: message.into(),
            ord: Vec::new(),
        }
    }

    fn at(code: FindingCode, segs: &[Seg], message: impl Into<String>) -> Finding {
        let mut path = String::new();
        let mut ord = Vec::with_capacity(segs.len());
        for seg in segs {
            path.push('/');
            match seg {
                Seg::Key { name, rank } => {
                    path.push_str(name);
                    ord.push(*rank);
                }
                Seg::Index(i) => {
                    path.push_str(&i.to_string());
                    ord.push(*i as u32);
                }
            }
        }
        if path.is_empty() {
            path.push('/');
        }
        Finding {
            severity: code.severity(),
            code,
            path,
            message: message.into(),
            ord,
        }
    }
}

impl fmt::Display for Finding {
    /// The one-line text form: `SEVERITY CODE path message`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.severity.token(),
            self.code,
            self.path,
            self.message
        )
    }
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        a.ord
            .cmp(&b.ord)
            .then_with(|| a.code.as_str().cmp(b.code.as_str()))
            .then_with(|| a.path.cmp(&b.path))
    });
}

// ---------------------------------------------------------------------------
// Path bookkeeping shared by both passes
// ---------------------------------------------------------------------------

enum Seg {
    Key { name: String, rank: u32 },
    Index(usize),
}

/// Rank given to fields outside the vocabulary, so unknown-field findings
/// sort after everything legitimate at the same level.
const UNKNOWN_RANK: u32 = 99;

const TOP_FIELDS: &[(&str, u32)] = &[
    ("version", 0),
    ("currency", 1),
    ("config", 2),
    ("threats", 3),
    ("tree", 4),
    ("countermeasures", 5),
];
const CONFIG_FIELDS: &[(&str, u32)] = &[("damage_threshold", 0), ("effort_threshold", 1)];
const THREAT_FIELDS: &[(&str, u32)] = &[
    ("id", 0),
    ("title", 1),
    ("damage", 2),
    ("attacker_effort", 3),
    ("notes", 4),
];
const NODE_FIELDS: &[(&str, u32)] = &[("id", 0), ("label", 1), ("children", 2), ("threats", 2)];
const MEASURE_FIELDS: &[(&str, u32)] = &[
    ("id", 0),
    ("title", 1),
    ("cost", 2),
    ("mitigates", 3),
    ("notes", 4),
];
const MITIGATION_FIELDS: &[(&str, u32)] = &[("threat", 0), ("factor", 1)];

struct Cx {
    findings: Vec<Finding>,
    segs: Vec<Seg>,
}

impl Cx {
    fn new() -> Cx {
        Cx {
            findings: Vec::new(),
            segs: Vec::new(),
        }
    }

    fn emit(&mut self, code: FindingCode, message: impl Into<String>) {
        self.findings.push(Finding::at(code, &self.segs, message));
    }

    fn key<R>(&mut self, name: &str, rank: u32, f: impl FnOnce(&mut Cx) -> R) -> R {
        self.segs.push(Seg::Key {
            name: name.to_string(),
            rank,
        });
        let r = f(self);
        self.segs.pop();
        r
    }

    fn idx<R>(&mut self, i: usize, f: impl FnOnce(&mut Cx) -> R) -> R {
        self.segs.push(Seg::Index(i));
        let r = f(self);
        self.segs.pop();
        r
    }

    fn into_sorted(mut self) -> Vec<Finding> {
        sort_findings(&mut self.findings);
        self.findings
    }
}

// ---------------------------------------------------------------------------
// Pass 1: structure
// ---------------------------------------------------------------------------

/// A successfully parsed model plus any warnings raised along the way.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: Model,
    pub warnings: Vec<Finding>,
}

/// Parses and fully checks a model document.
///
/// `Ok` means the model is analyzable: the returned warnings, if any, are
/// advisory. `Err` carries every finding discovered, errors and warnings
/// alike, sorted in document order.
pub fn parse_model(text: &str) -> Result<ParsedModel, Vec<Finding>> {
    let mut cx = Cx::new();
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            cx.emit(FindingCode::Syntax, format!("not valid JSON: {e}"));
            return Err(cx.into_sorted());
        }
    };
    let model = check_root(&mut cx, &value);
    if !cx.findings.is_empty() {
        return Err(cx.into_sorted());
    }
    let model = model.expect("a clean structural pass always yields a model");
    let findings = validate_model(&model);
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(findings);
    }
    Ok(ParsedModel {
        model,
        warnings: findings,
    })
}

fn rank_of(fields: &[(&str, u32)], name: &str) -> Option<u32> {
    fields.iter().find(|(k, _)| *k == name).map(|(_, r)| *r)
}

fn unknown_fields(cx: &mut Cx, obj: &Map<String, Value>, known: &[(&str, u32)]) {
    for key in obj.keys() {
        if rank_of(known, key).is_none() {
            cx.key(key, UNKNOWN_RANK, |cx| {
                cx.emit(FindingCode::UnknownField, format!("unknown field \"{key}\""));
            });
        }
    }
}

fn req_value<'v>(
    cx: &mut Cx,
    obj: &'v Map<String, Value>,
    name: &str,
    rank: u32,
) -> Option<&'v Value> {
    match obj.get(name) {
        Some(v) => Some(v),
        None => {
            cx.key(name, rank, |cx| {
                cx.emit(
                    FindingCode::Missing,
                    format!("required field \"{name}\" is missing"),
                );
            });
            None
        }
    }
}

fn req_string(cx: &mut Cx, obj: &Map<String, Value>, name: &str, rank: u32) -> Option<String> {
    let v = req_value(cx, obj, name, rank)?;
    match v.as_str() {
        Some(s) => Some(s.to_string()),
        None => {
            cx.key(name, rank, |cx| {
                cx.emit(FindingCode::Type, format!("field \"{name}\" must be a string"));
            });
            None
        }
    }
}

/// Optional notes: absent is fine, present must be a string.
/// Outer `None` means a finding was emitted.
fn opt_notes(cx: &mut Cx, obj: &Map<String, Value>, rank: u32) -> Option<Option<String>> {
    match obj.get("notes") {
        None => Some(None),
        Some(Value::String(s)) => Some(Some(s.clone())),
        Some(_) => {
            cx.key("notes", rank, |cx| {
                cx.emit(FindingCode::Type, "field \"notes\" must be a string");
            });
            None
        }
    }
}

fn req_money(cx: &mut Cx, obj: &Map<String, Value>, name: &str, rank: u32) -> Option<Money> {
    let v = req_value(cx, obj, name, rank)?;
    cx.key(name, rank, |cx| money_value(cx, v, name))
}

/// Money is a plain non-negative integer literal. Decimal points and
/// exponents are type errors even when the value would come out whole:
/// amounts are in minor units precisely so files never carry fractions.
fn money_value(cx: &mut Cx, v: &Value, name: &str) -> Option<Money> {
    let Value::Number(n) = v else {
        cx.emit(
            FindingCode::Type,
            format!("field \"{name}\" must be an integer amount in minor currency units"),
        );
        return None;
    };
    let token = n.to_string();
    if token.contains(['.', 'e', 'E']) {
        cx.emit(
            FindingCode::Type,
            format!("field \"{name}\" must be a whole number of minor currency units, got {token}"),
        );
        return None;
    }
    if token.starts_with('-') {
        cx.emit(
            FindingCode::NegValue,
            format!("field \"{name}\" must not be negative, got {token}"),
        );
        return None;
    }
    match token.parse::<u64>() {
        Ok(amount) => Some(Money::new(amount)),
        Err(_) => {
            cx.emit(
                FindingCode::Overflow,
                format!("field \"{name}\" exceeds the representable range, got {token}"),
            );
            None
        }
    }
}

fn check_root(cx: &mut Cx, value: &Value) -> Option<Model> {
    let Some(obj) = value.as_object() else {
        cx.emit(FindingCode::Type, "the model document must be a JSON object");
        return None;
    };
    unknown_fields(cx, obj, TOP_FIELDS);
    let version_ok = check_version(cx, obj);
    let currency = req_string(cx, obj, "currency", 1);
    let config = check_config(cx, obj);
    let threats = check_threats(cx, obj);
    let tree = check_tree(cx, obj);
    let countermeasures = check_measures(cx, obj);
    if !version_ok {
        return None;
    }
    Some(Model {
        currency: currency?,
        config: config?,
        threats: threats?,
        tree: tree?,
        countermeasures: countermeasures?,
    })
}

fn check_version(cx: &mut Cx, obj: &Map<String, Value>) -> bool {
    let Some(v) = req_value(cx, obj, "version", 0) else {
        return false;
    };
    if matches!(v, Value::Number(n) if n.to_string() == "1") {
        true
    } else {
        cx.key("version", 0, |cx| {
            cx.emit(
                FindingCode::Version,
                format!("unsupported format version {v}, this reader understands version 1"),
            );
        });
        false
    }
}

fn check_config(cx: &mut Cx, obj: &Map<String, Value>) -> Option<AnalysisConfig> {
    let v = req_value(cx, obj, "config", 2)?;
    cx.key("config", 2, |cx| {
        let Some(map) = v.as_object() else {
            cx.emit(FindingCode::Type, "field \"config\" must be an object");
            return None;
        };
        unknown_fields(cx, map, CONFIG_FIELDS);
        let damage = req_money(cx, map, "damage_threshold", 0);
        let effort = req_money(cx, map, "effort_threshold", 1);
        Some(AnalysisConfig {
            damage_threshold: damage?,
            effort_threshold: effort?,
        })
    })
}

fn check_threats(cx: &mut Cx, obj: &Map<String, Value>) -> Option<Vec<Threat>> {
    let v = req_value(cx, obj, "threats", 3)?;
    cx.key("threats", 3, |cx| {
        let Some(arr) = v.as_array() else {
            cx.emit(FindingCode::Type, "field \"threats\" must be an array");
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (i, item) in arr.iter().enumerate() {
            cx.idx(i, |cx| match check_threat(cx, item) {
                Some(t) => out.push(t),
                None => ok = false,
            });
        }
        ok.then_some(out)
    })
}

fn check_threat(cx: &mut Cx, v: &Value) -> Option<Threat> {
    let Some(map) = v.as_object() else {
        cx.emit(FindingCode::Type, "each threat must be an object");
        return None;
    };
    unknown_fields(cx, map, THREAT_FIELDS);
    let id = req_string(cx, map, "id", 0);
    let title = req_string(cx, map, "title", 1);
    let damage = req_money(cx, map, "damage", 2);
    let effort = req_money(cx, map, "attacker_effort", 3);
    let notes = opt_notes(cx, map, 4);
    Some(Threat {
        id: id?,
        title: title?,
        damage: damage?,
        attacker_effort: effort?,
        notes: notes?,
    })
}

fn check_tree(cx: &mut Cx, obj: &Map<String, Value>) -> Option<TreeNode> {
    let v = req_value(cx, obj, "tree", 4)?;
    cx.key("tree", 4, |cx| check_node(cx, v))
}

fn check_node(cx: &mut Cx, v: &Value) -> Option<TreeNode> {
    let Some(map) = v.as_object() else {
        cx.emit(FindingCode::Type, "each tree node must be an object");
        return None;
    };
    unknown_fields(cx, map, NODE_FIELDS);
    let id = req_string(cx, map, "id", 0);
    let label = req_string(cx, map, "label", 1);
    match (map.get("children"), map.get("threats")) {
        (Some(_), Some(_)) => {
            cx.emit(
                FindingCode::NodeShape,
                "a node carries either \"children\" or \"threats\", not both",
            );
            None
        }
        (None, None) => {
            cx.emit(
                FindingCode::NodeShape,
                "a node needs \"children\" (a refinement) or \"threats\" (a leaf)",
            );
            None
        }
        (Some(children), None) => {
            let kids = cx.key("children", 2, |cx| {
                let Some(arr) = children.as_array() else {
                    cx.emit(FindingCode::Type, "field \"children\" must be an array");
                    return None;
                };
                let mut out = Vec::with_capacity(arr.len());
                let mut ok = true;
                for (i, item) in arr.iter().enumerate() {
                    cx.idx(i, |cx| match check_node(cx, item) {
                        Some(n) => out.push(n),
                        None => ok = false,
                    });
                }
                ok.then_some(out)
            });
            Some(TreeNode::Internal {
                id: id?,
                label: label?,
                children: kids?,
            })
        }
        (None, Some(threats)) => {
            let refs = cx.key("threats", 2, |cx| {
                let Some(arr) = threats.as_array() else {
                    cx.emit(FindingCode::Type, "field \"threats\" must be an array");
                    return None;
                };
                let mut out = Vec::with_capacity(arr.len());
                let mut ok = true;
                for (i, item) in arr.iter().enumerate() {
                    match item.as_str() {
                        Some(s) => out.push(s.to_string()),
                        None => {
                            cx.idx(i, |cx| {
                                cx.emit(FindingCode::Type, "threat references must be strings");
                            });
                            ok = false;
                        }
                    }
                }
                ok.then_some(out)
            });
            Some(TreeNode::Leaf {
                id: id?,
                label: label?,
                threats: refs?,
            })
        }
    }
}

fn check_measures(cx: &mut Cx, obj: &Map<String, Value>) -> Option<Vec<Countermeasure>> {
    let v = req_value(cx, obj, "countermeasures", 5)?;
    cx.key("countermeasures", 5, |cx| {
        let Some(arr) = v.as_array() else {
            cx.emit(FindingCode::Type, "field \"countermeasures\" must be an array");
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (i, item) in arr.iter().enumerate() {
            cx.idx(i, |cx| match check_measure(cx, item) {
                Some(m) => out.push(m),
                None => ok = false,
            });
        }
        ok.then_some(out)
    })
}

fn check_measure(cx: &mut Cx, v: &Value) -> Option<Countermeasure> {
    let Some(map) = v.as_object() else {
        cx.emit(FindingCode::Type, "each countermeasure must be an object");
        return None;
    };
    unknown_fields(cx, map, MEASURE_FIELDS);
    let id = req_string(cx, map, "id", 0);
    let title = req_string(cx, map, "title", 1);
    let cost = req_money(cx, map, "cost", 2);
    let mitigates = check_mitigates(cx, map);
    let notes = opt_notes(cx, map, 4);
    Some(Countermeasure {
        id: id?,
        title: title?,
        cost: cost?,
        mitigates: mitigates?,
        notes: notes?,
    })
}

fn check_mitigates(cx: &mut Cx, map: &Map<String, Value>) -> Option<Vec<Mitigation>> {
    let v = req_value(cx, map, "mitigates", 3)?;
    cx.key("mitigates", 3, |cx| {
        let Some(arr) = v.as_array() else {
            cx.emit(FindingCode::Type, "field \"mitigates\" must be an array");
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (i, item) in arr.iter().enumerate() {
            cx.idx(i, |cx| match check_mitigation(cx, item) {
                Some(m) => out.push(m),
                None => ok = false,
            });
        }
        ok.then_some(out)
    })
}

fn check_mitigation(cx: &mut Cx, v: &Value) -> Option<Mitigation> {
    let Some(map) = v.as_object() else {
        cx.emit(FindingCode::Type, "each mitigation entry must be an object");
        return None;
    };
    unknown_fields(cx, map, MITIGATION_FIELDS);
    let threat = req_string(cx, map, "threat", 0);
    let factor = req_factor(cx, map);
    Some(Mitigation {
        threat: threat?,
        factor: factor?,
    })
}

fn req_factor(cx: &mut Cx, map: &Map<String, Value>) -> Option<Factor> {
    let v = req_value(cx, map, "factor", 1)?;
    cx.key("factor", 1, |cx| {
        let Value::Number(n) = v else {
            cx.emit(FindingCode::Type, "field \"factor\" must be a number");
            return None;
        };
        let token = n.to_string();
        match Factor::parse_decimal(&token) {
            Ok(f) => Some(f),
            Err(FactorError::OutOfRange) => {
                cx.emit(
                    FindingCode::FactorRange,
                    format!("mitigation factor must lie in [0, 1], got {token}"),
                );
                None
            }
            Err(FactorError::TooPrecise) => {
                cx.emit(
                    FindingCode::FactorRange,
                    format!("mitigation factor carries more than four decimal digits: {token}"),
                );
                None
            }
            Err(FactorError::Malformed) => {
                cx.emit(
                    FindingCode::Type,
                    format!("mitigation factor must be a plain decimal number, got {token}"),
                );
                None
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Pass 2: cross-references and completeness
// ---------------------------------------------------------------------------

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

/// Checks a structurally sound model for referential and completeness
/// problems. Returns every finding, sorted in document order; the model
/// is analyzable when none of them is an error.
pub fn validate_model(model: &Model) -> Vec<Finding> {
    let mut cx = Cx::new();

    cx.key("config", 2, |cx| {
        if model.config.damage_threshold.is_zero() {
            cx.key("damage_threshold", 0, |cx| {
                cx.emit(FindingCode::Threshold, "damage threshold must be positive");
            });
        }
        if model.config.effort_threshold.is_zero() {
            cx.key("effort_threshold", 1, |cx| {
                cx.emit(FindingCode::Threshold, "effort threshold must be positive");
            });
        }
    });

    let mut threat_ids: BTreeSet<&str> = BTreeSet::new();
    cx.key("threats", 3, |cx| {
        for (i, t) in model.threats.iter().enumerate() {
            cx.idx(i, |cx| {
                if !valid_id(&t.id) {
                    cx.key("id", 0, |cx| {
                        cx.emit(
                            FindingCode::BadId,
                            format!("id \"{}\" must be non-empty lowercase [a-z0-9-]", t.id),
                        );
                    });
                }
                if !threat_ids.insert(&t.id) {
                    cx.key("id", 0, |cx| {
                        cx.emit(FindingCode::DupId, format!("duplicate threat id \"{}\"", t.id));
                    });
                }
                if t.attacker_effort.is_zero() {
                    cx.key("attacker_effort", 3, |cx| {
                        cx.emit(
                            FindingCode::ZeroEffort,
                            format!(
                                "threat \"{}\" costs the attacker nothing; risk is undefined",
                                t.id
                            ),
                        );
                    });
                }
                if t.notes.as_deref() == Some("") {
                    cx.key("notes", 4, |cx| {
                        cx.emit(FindingCode::EmptyNotes, "notes are present but blank");
                    });
                }
            });
        }
    });

    let mut node_ids: BTreeSet<&str> = BTreeSet::new();
    let mut grouped: BTreeSet<&str> = BTreeSet::new();
    cx.key("tree", 4, |cx| {
        walk_node(cx, &model.tree, &threat_ids, &mut node_ids, &mut grouped);
    });

    cx.key("threats", 3, |cx| {
        for (i, t) in model.threats.iter().enumerate() {
            if !grouped.contains(t.id.as_str()) {
                cx.idx(i, |cx| {
                    cx.emit(
                        FindingCode::OrphanThreat,
                        format!("threat \"{}\" does not appear under any tree leaf", t.id),
                    );
                });
            }
        }
    });

    let mut measure_ids: BTreeSet<&str> = BTreeSet::new();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    cx.key("countermeasures", 5, |cx| {
        for (i, m) in model.countermeasures.iter().enumerate() {
            cx.idx(i, |cx| {
                if !valid_id(&m.id) {
                    cx.key("id", 0, |cx| {
                        cx.emit(
                            FindingCode::BadId,
                            format!("id \"{}\" must be non-empty lowercase [a-z0-9-]", m.id),
                        );
                    });
                }
                if !measure_ids.insert(&m.id) {
                    cx.key("id", 0, |cx| {
                        cx.emit(
                            FindingCode::DupId,
                            format!("duplicate countermeasure id \"{}\"", m.id),
                        );
                    });
                }
                let mut listed: BTreeSet<&str> = BTreeSet::new();
                cx.key("mitigates", 3, |cx| {
                    for (j, mit) in m.mitigates.iter().enumerate() {
                        cx.idx(j, |cx| {
                            if !threat_ids.contains(mit.threat.as_str()) {
                                cx.key("threat", 0, |cx| {
                                    cx.emit(
                                        FindingCode::BadRef,
                                        format!(
                                            "mitigation references unknown threat \"{}\"",
                                            mit.threat
                                        ),
                                    );
                                });
                            }
                            if !listed.insert(&mit.threat) {
                                cx.emit(
                                    FindingCode::DupMitigation,
                                    format!(
                                        "countermeasure \"{}\" lists threat \"{}\" more than once",
                                        m.id, mit.threat
                                    ),
                                );
                            }
                        });
                        covered.insert(&mit.threat);
                    }
                });
                if m.notes.as_deref() == Some("") {
                    cx.key("notes", 4, |cx| {
                        cx.emit(FindingCode::EmptyNotes, "notes are present but blank");
                    });
                }
            });
        }
    });

    cx.key("threats", 3, |cx| {
        for (i, t) in model.threats.iter().enumerate() {
            if !covered.contains(t.id.as_str()) {
                cx.idx(i, |cx| {
                    cx.emit(
                        FindingCode::Uncovered,
                        format!("no countermeasure addresses threat \"{}\"", t.id),
                    );
                });
            }
        }
    });

    cx.into_sorted()
}

fn walk_node<'m>(
    cx: &mut Cx,
    node: &'m TreeNode,
    threat_ids: &BTreeSet<&str>,
    node_ids: &mut BTreeSet<&'m str>,
    grouped: &mut BTreeSet<&'m str>,
) {
    if !valid_id(node.id()) {
        cx.key("id", 0, |cx| {
            cx.emit(
                FindingCode::BadId,
                format!("id \"{}\" must be non-empty lowercase [a-z0-9-]", node.id()),
            );
        });
    }
    if !node_ids.insert(node.id()) {
        cx.key("id", 0, |cx| {
            cx.emit(FindingCode::DupId, format!("duplicate node id \"{}\"", node.id()));
        });
    }
    match node {
        TreeNode::Internal { children, .. } => {
            if children.is_empty() {
                cx.emit(FindingCode::EmptyNode, "refinement node has no children");
            }
            for (i, child) in children.iter().enumerate() {
                cx.key("children", 2, |cx| {
                    cx.idx(i, |cx| walk_node(cx, child, threat_ids, node_ids, grouped));
                });
            }
        }
        TreeNode::Leaf { threats, .. } => {
            if threats.is_empty() {
                cx.emit(FindingCode::EmptyNode, "leaf node lists no threats");
            }
            for (j, tid) in threats.iter().enumerate() {
                cx.key("threats", 2, |cx| {
                    cx.idx(j, |cx| {
                        if !threat_ids.contains(tid.as_str()) {
                            cx.emit(
                                FindingCode::BadRef,
                                format!("leaf references unknown threat \"{tid}\""),
                            );
                        } else if !grouped.insert(tid) {
                            cx.emit(
                                FindingCode::DupLeaf,
                                format!("threat \"{tid}\" is grouped more than once in the tree"),
                            );
                        }
                    });
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

/// Writes a model in the canonical on-disk form: fixed key order,
/// two-space indentation, minimal decimal factors, trailing newline.
/// Parsing canonical text and serializing the result reproduces the
/// input byte for byte.
pub fn serialize_model(model: &Model) -> String {
    let mut e = Emitter::new();
    e.line("{");
    e.indent();
    e.line("\"version\": 1,");
    e.line(&format!("\"currency\": {},", jstr(&model.currency)));
    e.line("\"config\": {");
    e.indent();
    e.line(&format!(
        "\"damage_threshold\": {},",
        model.config.damage_threshold
    ));
    e.line(&format!(
        "\"effort_threshold\": {}",
        model.config.effort_threshold
    ));
    e.dedent();
    e.line("},");
    if model.threats.is_empty() {
        e.line("\"threats\": [],");
    } else {
        e.line("\"threats\": [");
        e.indent();
        let n = model.threats.len();
        for (i, t) in model.threats.iter().enumerate() {
            write_threat(&mut e, t, i + 1 < n);
        }
        e.dedent();
        e.line("],");
    }
    write_node(&mut e, &model.tree, Some("tree"), true);
    if model.countermeasures.is_empty() {
        e.line("\"countermeasures\": []");
    } else {
        e.line("\"countermeasures\": [");
        e.indent();
        let n = model.countermeasures.len();
        for (i, m) in model.countermeasures.iter().enumerate() {
            write_measure(&mut e, m, i + 1 < n);
        }
        e.dedent();
        e.line("]");
    }
    e.dedent();
    e.line("}");
    e.out
}

struct Emitter {
    out: String,
    depth: usize,
}

impl Emitter {
    fn new() -> Emitter {
        Emitter {
            out: String::new(),
            depth: 0,
        }
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn indent(&mut self) {
        self.depth += 1;
    }

    fn dedent(&mut self) {
        self.depth -= 1;
    }
}

fn jstr(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

fn write_threat(e: &mut Emitter, t: &Threat, comma: bool) {
    e.line("{");
    e.indent();
    e.line(&format!("\"id\": {},", jstr(&t.id)));
    e.line(&format!("\"title\": {},", jstr(&t.title)));
    e.line(&format!("\"damage\": {},", t.damage));
    match &t.notes {
        Some(notes) => {
            e.line(&format!("\"attacker_effort\": {},", t.attacker_effort));
            e.line(&format!("\"notes\": {}", jstr(notes)));
        }
        None => e.line(&format!("\"attacker_effort\": {}", t.attacker_effort)),
    }
    e.dedent();
    e.line(if comma { "}," } else { "}" });
}

fn write_node(e: &mut Emitter, node: &TreeNode, key: Option<&str>, comma: bool) {
    match key {
        Some(k) => e.line(&format!("\"{k}\": {{")),
        None => e.line("{"),
    }
    e.indent();
    e.line(&format!("\"id\": {},", jstr(node.id())));
    e.line(&format!("\"label\": {},", jstr(node.label())));
    match node {
        TreeNode::Internal { children, .. } => {
            if children.is_empty() {
                e.line("\"children\": []");
            } else {
                e.line("\"children\": [");
                e.indent();
                let n = children.len();
                for (i, child) in children.iter().enumerate() {
                    write_node(e, child, None, i + 1 < n);
                }
                e.dedent();
                e.line("]");
            }
        }
        TreeNode::Leaf { threats, .. } => {
            if threats.is_empty() {
                e.line("\"threats\": []");
            } else {
                e.line("\"threats\": [");
                e.indent();
                let n = threats.len();
                for (i, t) in threats.iter().enumerate() {
                    e.line(&format!(
                        "{}{}",
                        jstr(t),
                        if i + 1 < n { "," } else { "" }
                    ));
                }
                e.dedent();
                e.line("]");
            }
        }
    }
    e.dedent();
    e.line(if comma { "}," } else { "}" });
}

fn write_measure(e: &mut Emitter, m: &Countermeasure, comma: bool) {
    e.line("{");
    e.indent();
    e.line(&format!("\"id\": {},", jstr(&m.id)));
    e.line(&format!("\"title\": {},", jstr(&m.title)));
    e.line(&format!("\"cost\": {},", m.cost));
    let tail = if m.notes.is_some() { "," } else { "" };
    if m.mitigates.is_empty() {
        e.line(&format!("\"mitigates\": []{tail}"));
    } else {
        e.line("\"mitigates\": [");
        e.indent();
        let n = m.mitigates.len();
        for (i, mit) in m.mitigates.iter().enumerate() {
            e.line("{");
            e.indent();
            e.line(&format!("\"threat\": {},", jstr(&mit.threat)));
            e.line(&format!("\"factor\": {}", mit.factor));
            e.dedent();
            e.line(if i + 1 < n { "}," } else { "}" });
        }
        e.dedent();
        e.line(&format!("]{tail}"));
    }
    if let Some(notes) = &m.notes {
        e.line(&format!("\"notes\": {}", jstr(notes)));
    }
    e.dedent();
    e.line(if comma { "}," } else { "}" });
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const CLEAN: &str = r#"{
  "version": 1,
  "currency": "EUR",
  "config": {
    "damage_threshold": 100,
    "effort_threshold": 50
  },
  "threats": [
    {
      "id": "t-a",
      "title": "Threat A",
      "damage": 120,
      "attacker_effort": 30
    },
    {
      "id": "t-b",
      "title": "Threat B",
      "damage": 40,
      "attacker_effort": 60,
      "notes": "cheap to ignore"
    }
  ],
  "tree": {
    "id": "n-root",
    "label": "Compromise the system",
    "children": [
      {
        "id": "n-leaf",
        "label": "Direct attacks",
        "threats": [
          "t-a",
          "t-b"
        ]
      }
    ]
  },
  "countermeasures": [
    {
      "id": "m-a",
      "title": "Measure A",
      "cost": 10,
      "mitigates": [
        {
          "threat": "t-a",
          "factor": 0.5
        },
        {
          "threat": "t-b",
          "factor": 1
        }
      ]
    }
  ]
}
"#;

    fn parse_ok(text: &str) -> ParsedModel {
        parse_model(text).expect("model should parse")
    }

    fn parse_err(text: &str) -> Vec<Finding> {
        parse_model(text).expect_err("model should be rejected")
    }

    fn codes(findings: &[Finding]) -> Vec<(&str, &str)> {
        findings
            .iter()
            .map(|f| (f.code.as_str(), f.path.as_str()))
            .collect()
    }

    #[test]
    fn clean_model_parses_without_findings() {
        let parsed = parse_ok(CLEAN);
        assert!(parsed.warnings.is_empty());
        assert_eq!(parsed.model.threats.len(), 2);
        assert_eq!(parsed.model.currency, "EUR");
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let parsed = parse_ok(CLEAN);
        assert_eq!(serialize_model(&parsed.model), CLEAN);
    }

    #[test]
    fn serialization_is_idempotent() {
        let once = serialize_model(&parse_ok(CLEAN).model);
        let twice = serialize_model(&parse_ok(&once).model);
        assert_eq!(once, twice);
    }

    #[test]
    fn garbage_is_a_syntax_finding() {
        let findings = parse_err("{ not json");
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::Syntax);
        assert_eq!(findings[0].path, "/");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let doc = CLEAN.replace("\"version\": 1,", "\"version\": 2,");
        assert!(codes(&parse_err(&doc)).contains(&("E-VERSION", "/version")));
    }

    #[test]
    fn missing_currency_is_reported_with_its_path() {
        let doc = CLEAN.replace("  \"currency\": \"EUR\",\n", "");
        assert!(codes(&parse_err(&doc)).contains(&("E-MISSING", "/currency")));
    }

    #[test]
    fn unknown_fields_are_errors() {
        let doc = CLEAN.replace(
            "\"currency\": \"EUR\",",
            "\"currency\": \"EUR\",\n  \"color\": \"red\",",
        );
        assert!(codes(&parse_err(&doc)).contains(&("E-UNKNOWN-FIELD", "/color")));
    }

    #[test]
    fn fractional_money_is_a_type_finding() {
        let doc = CLEAN.replace("\"damage\": 120,", "\"damage\": 120.5,");
        assert!(codes(&parse_err(&doc)).contains(&("E-TYPE", "/threats/0/damage")));
    }

    #[test]
    fn negative_money_has_its_own_code() {
        let doc = CLEAN.replace("\"damage\": 120,", "\"damage\": -120,");
        assert!(codes(&parse_err(&doc)).contains(&("E-NEG-VALUE", "/threats/0/damage")));
    }

    #[test]
    fn oversized_money_is_an_overflow() {
        let doc = CLEAN.replace("\"damage\": 120,", "\"damage\": 99999999999999999999,");
        assert!(codes(&parse_err(&doc)).contains(&("E-OVERFLOW", "/threats/0/damage")));
    }

    #[test]
    fn out_of_range_factor_is_flagged() {
        let doc = CLEAN.replace("\"factor\": 0.5", "\"factor\": 1.25");
        assert!(codes(&parse_err(&doc)).contains(&(
            "E-FACTOR-RANGE",
            "/countermeasures/0/mitigates/0/factor"
        )));
    }

    #[test]
    fn five_digit_factor_is_flagged() {
        let doc = CLEAN.replace("\"factor\": 0.5", "\"factor\": 0.50001");
        assert!(codes(&parse_err(&doc)).contains(&(
            "E-FACTOR-RANGE",
            "/countermeasures/0/mitigates/0/factor"
        )));
    }

    #[test]
    fn node_with_both_shapes_is_rejected() {
        let doc = CLEAN.replace(
            "\"threats\": [\n          \"t-a\",\n          \"t-b\"\n        ]",
            "\"threats\": [\n          \"t-a\",\n          \"t-b\"\n        ],\n        \"children\": []",
        );
        assert!(codes(&parse_err(&doc)).contains(&("E-NODE-SHAPE", "/tree/children/0")));
    }

    #[test]
    fn zero_effort_is_rejected() {
        let doc = CLEAN.replace("\"attacker_effort\": 30", "\"attacker_effort\": 0");
        assert!(codes(&parse_err(&doc)).contains(&("E-ZERO-EFFORT", "/threats/0/attacker_effort")));
    }

    #[test]
    fn zero_threshold_is_rejected() {
        let doc = CLEAN.replace("\"effort_threshold\": 50", "\"effort_threshold\": 0");
        assert!(codes(&parse_err(&doc)).contains(&("E-THRESHOLD", "/config/effort_threshold")));
    }

    #[test]
    fn unknown_leaf_reference_and_resulting_orphan() {
        let doc = CLEAN.replace("          \"t-b\"\n", "          \"t-x\"\n");
        let findings = parse_err(&doc);
        let got = codes(&findings);
        assert!(got.contains(&("E-ORPHAN-THREAT", "/threats/1")));
        assert!(got.contains(&("E-BAD-REF", "/tree/children/0/threats/1")));
    }

    #[test]
    fn threat_grouped_twice_is_flagged_at_second_occurrence() {
        let doc = CLEAN.replace(
            "          \"t-b\"\n",
            "          \"t-b\",\n          \"t-a\"\n",
        );
        assert!(codes(&parse_err(&doc)).contains(&("E-DUP-LEAF", "/tree/children/0/threats/2")));
    }

    #[test]
    fn duplicate_ids_are_per_namespace() {
        // A node sharing a threat's id is fine; two threats sharing one is not.
        let doc = CLEAN.replace("\"id\": \"n-leaf\",", "\"id\": \"t-a\",");
        assert!(parse_model(&doc).is_ok());

        let doc = CLEAN.replace("\"id\": \"t-b\",", "\"id\": \"t-a\",");
        assert!(codes(&parse_err(&doc)).contains(&("E-DUP-ID", "/threats/1/id")));
    }

    #[test]
    fn uppercase_id_is_rejected() {
        let doc = CLEAN.replace("\"id\": \"m-a\",", "\"id\": \"M-A\",");
        assert!(codes(&parse_err(&doc)).contains(&("E-BAD-ID", "/countermeasures/0/id")));
    }

    #[test]
    fn duplicate_mitigation_is_flagged() {
        let doc = CLEAN.replace(
            "\"threat\": \"t-b\",\n          \"factor\": 1",
            "\"threat\": \"t-a\",\n          \"factor\": 1",
        );
        let findings = parse_err(&doc);
        let got = codes(&findings);
        assert!(got.contains(&("E-DUP-MITIGATION", "/countermeasures/0/mitigates/1")));
        // t-b is now uncovered, but that alone is a warning, not an error.
        assert!(got.contains(&("W-UNCOVERED", "/threats/1")));
    }

    #[test]
    fn uncovered_threat_is_only_a_warning() {
        let doc = CLEAN.replace(
            ",\n        {\n          \"threat\": \"t-b\",\n          \"factor\": 1\n        }",
            "",
        );
        let parsed = parse_ok(&doc);
        assert_eq!(codes(&parsed.warnings), vec![("W-UNCOVERED", "/threats/1")]);
    }

    #[test]
    fn blank_notes_are_a_warning() {
        let doc = CLEAN.replace("\"notes\": \"cheap to ignore\"", "\"notes\": \"\"");
        let parsed = parse_ok(&doc);
        assert_eq!(
            codes(&parsed.warnings),
            vec![("W-EMPTY-NOTES", "/threats/1/notes")]
        );
    }

    #[test]
    fn empty_refinement_is_rejected() {
        let doc = CLEAN.replace(
            "\"threats\": [\n          \"t-a\",\n          \"t-b\"\n        ]",
            "\"children\": []",
        );
        let findings = parse_err(&doc);
        let got = codes(&findings);
        assert!(got.contains(&("E-EMPTY-NODE", "/tree/children/0")));
    }

    #[test]
    fn findings_sort_in_document_order() {
        let doc = CLEAN
            .replace("\"version\": 1,", "\"version\": 3,")
            .replace("\"attacker_effort\": 30", "\"attacker_effort\": 30.5")
            .replace("\"factor\": 0.5", "\"factor\": 7");
        let findings = parse_err(&doc);
        let got: Vec<&str> = findings.iter().map(|f| f.code.as_str()).collect();
        assert_eq!(got, vec!["E-VERSION", "E-TYPE", "E-FACTOR-RANGE"]);
    }

    #[test]
    fn finding_line_format() {
        let f = Finding::new(FindingCode::BadRef, "/x/y", "nope");
        assert_eq!(f.to_string(), "ERROR E-BAD-REF /x/y nope");
    }
}
