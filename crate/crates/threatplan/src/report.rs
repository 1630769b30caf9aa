//! Rendering of analysis results, selection plans, and findings.
//!
//! Three audiences, three formats. `Text` is for terminals: aligned
//! tables and a quadrant matrix. `Json` is for pipelines: fixed key
//! order, exact rationals as `"num/den"` strings with a rounded
//! 4-decimal convenience twin, so output is byte-stable and re-parses
//! losslessly. `Csv` is for spreadsheets: one documented header per
//! report kind, RFC 4180 quoting.
//!
//! All scaffolding is ASCII and nothing consults the locale, so a given
//! input renders to identical bytes on every platform.

use std::fmt::Write as _;

use crate::ingest::Finding;
use crate::ratio::{decimal4, format_ratio};
use crate::risk::RiskReport;
use crate::select::{SelectionMode, SelectionPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
    Csv,
}

/// Anything the renderer knows how to present.
#[derive(Debug, Clone, Copy)]
pub enum Renderable<'a> {
    Risk(&'a RiskReport),
    Plan(&'a SelectionPlan),
    Findings(&'a [Finding]),
}

impl<'a> From<&'a RiskReport> for Renderable<'a> {
    fn from(r: &'a RiskReport) -> Self {
        Renderable::Risk(r)
    }
}

impl<'a> From<&'a SelectionPlan> for Renderable<'a> {
    fn from(p: &'a SelectionPlan) -> Self {
        Renderable::Plan(p)
    }
}

impl<'a> From<&'a [Finding]> for Renderable<'a> {
    fn from(f: &'a [Finding]) -> Self {
        Renderable::Findings(f)
    }
}

impl<'a> From<&'a Vec<Finding>> for Renderable<'a> {
    fn from(f: &'a Vec<Finding>) -> Self {
        Renderable::Findings(f.as_slice())
    }
}

/// Renders `input` in `format`. Output is deterministic: the same input
/// always yields the same bytes, and everything but embedded model text
/// is ASCII.
pub fn render_report<'a>(input: impl Into<Renderable<'a>>, format: RenderFormat) -> String {
    match (input.into(), format) {
        (Renderable::Risk(r), RenderFormat::Text) => risk_text(r),
        (Renderable::Risk(r), RenderFormat::Json) => risk_json(r),
        (Renderable::Risk(r), RenderFormat::Csv) => risk_csv(r),
        (Renderable::Plan(p), RenderFormat::Text) => plan_text(p),
        (Renderable::Plan(p), RenderFormat::Json) => plan_json(p),
        (Renderable::Plan(p), RenderFormat::Csv) => plan_csv(p),
        (Renderable::Findings(f), RenderFormat::Text) => findings_text(f),
        (Renderable::Findings(f), RenderFormat::Json) => findings_json(f),
        (Renderable::Findings(f), RenderFormat::Csv) => findings_csv(f),
    }
}

// ---------------------------------------------------------------------------
// Text
// ---------------------------------------------------------------------------

/// Column-aligned table: headers, left/right alignment per column,
/// widths from content. Lines are trimmed so padding never leaves
/// trailing spaces.
struct Table {
    right: Vec<bool>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str], right: &[bool]) -> Table {
        Table {
            right: right.to_vec(),
            rows: vec![headers.iter().map(|h| h.to_string()).collect()],
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let cols = self.right.len();
        let mut width = vec![0usize; cols];
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                width[i] = width[i].max(cell.len());
            }
        }
        for row in &self.rows {
            let mut line = String::from(" ");
            for (i, cell) in row.iter().enumerate() {
                let pad = width[i] - cell.len();
                line.push(' ');
                if self.right[i] {
                    line.push_str(&" ".repeat(pad));
                    line.push_str(cell);
                } else {
                    line.push_str(cell);
                    line.push_str(&" ".repeat(pad));
                }
                line.push(' ');
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }
}

/// `"num/den (d.dddd)"` — the exact value with its rounded reading.
fn ratio_pair(r: &num_rational::BigRational) -> String {
    format!("{} ({})", format_ratio(r), decimal4(r))
}

fn risk_text(r: &RiskReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Risk report ({})", r.currency);
    let _ = writeln!(
        out,
        "Thresholds: damage {} and up is high loss; attacker effort under {} is a cheap attack",
        r.config.damage_threshold, r.config.effort_threshold
    );
    out.push('\n');

    // 2x2 quadrant matrix: damage rows, effort columns.
    let eff_lt = format!("effort < {}", r.config.effort_threshold);
    let eff_ge = format!("effort >= {}", r.config.effort_threshold);
    let dmg_ge = format!("damage >= {}", r.config.damage_threshold);
    let dmg_lt = format!("damage < {}", r.config.damage_threshold);
    let mut matrix = Table::new(&["", &eff_lt, &eff_ge], &[false, false, false]);
    matrix.row(vec![
        dmg_ge,
        format!("critical: {}", r.counts.critical),
        format!("strategic: {}", r.counts.strategic),
    ]);
    matrix.row(vec![
        dmg_lt,
        format!("nuisance: {}", r.counts.nuisance),
        format!("negligible: {}", r.counts.negligible),
    ]);
    matrix.render(&mut out);
    out.push('\n');

    let _ = writeln!(out, "Threats by risk:");
    let mut table = Table::new(
        &["ID", "TITLE", "DAMAGE", "EFFORT", "RISK", "QUADRANT"],
        &[false, false, true, true, true, false],
    );
    for row in &r.rows {
        table.row(vec![
            row.threat_id.clone(),
            row.title.clone(),
            row.damage.to_string(),
            row.attacker_effort.to_string(),
            decimal4(&row.risk),
            row.quadrant.as_str().to_string(),
        ]);
    }
    table.render(&mut out);
    out.push('\n');
    let _ = writeln!(out, "Total risk: {}", ratio_pair(&r.total_risk));

    if !r.rollups.is_empty() {
        out.push('\n');
        let _ = writeln!(out, "Tree rollups:");
        let mut table = Table::new(
            &["NODE", "LABEL", "WORST DAMAGE", "LEAST EFFORT", "MAX RISK", "EXPOSURE"],
            &[false, false, true, true, true, true],
        );
        for n in &r.rollups {
            table.row(vec![
                n.node_id.clone(),
                n.label.clone(),
                n.worst_damage.to_string(),
                n.least_effort.to_string(),
                decimal4(&n.max_risk),
                n.total_exposure.to_string(),
            ]);
        }
        table.render(&mut out);
    }
    out
}

fn plan_text(p: &SelectionPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Selection plan ({})", p.currency);
    match &p.mode {
        SelectionMode::Budget(limit) => {
            let _ = writeln!(out, "Mode: budget, limit {}", limit);
        }
        SelectionMode::Assurance(max) => {
            let _ = writeln!(out, "Mode: assurance, max residual {}", ratio_pair(max));
        }
    }
    let _ = writeln!(out, "Method: {}", p.method.as_str());
    if !p.assumed.is_empty() {
        let _ = writeln!(out, "Assumed in place: {}", p.assumed.join(", "));
    }
    out.push('\n');

    if p.chosen.is_empty() {
        let _ = writeln!(out, "No countermeasures selected.");
    } else {
        let _ = writeln!(out, "Chosen countermeasures:");
        let mut table = Table::new(&["ID", "COST"], &[false, true]);
        for c in &p.chosen {
            table.row(vec![c.id.clone(), c.cost.to_string()]);
        }
        table.render(&mut out);
    }
    out.push('\n');
    let _ = writeln!(out, "Total cost:     {}", p.total_cost);
    let _ = writeln!(out, "Total risk:     {}", ratio_pair(&p.total_risk));
    let _ = writeln!(out, "Mitigated risk: {}", ratio_pair(&p.mitigated_risk));
    let _ = writeln!(out, "Residual risk:  {}", ratio_pair(&p.residual_risk));
    out.push('\n');
    let _ = writeln!(out, "Per-threat residual:");
    let mut table = Table::new(
        &["THREAT", "BASE RISK", "MITIGATION", "RESIDUAL"],
        &[false, true, true, true],
    );
    for row in &p.per_threat {
        table.row(vec![
            row.threat_id.clone(),
            decimal4(&row.base_risk),
            decimal4(&row.mitigation),
            decimal4(&row.residual),
        ]);
    }
    table.render(&mut out);
    out
}

fn findings_text(findings: &[Finding]) -> String {
    let mut out = String::new();
    for f in findings {
        let _ = writeln!(out, "{f}");
    }
    out
}

// ---------------------------------------------------------------------------
// Json
// ---------------------------------------------------------------------------

/// Line-oriented JSON writer with 2-space indentation. Commas are the
/// caller's problem, which keeps the fixed layouts readable.
struct Out {
    buf: String,
    depth: usize,
}

impl Out {
    fn new() -> Out {
        Out {
            buf: String::new(),
            depth: 0,
        }
    }

    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        self.buf.push_str(text);
        self.buf.push('\n');
    }

    fn open(&mut self, text: &str) {
        self.line(text);
        self.depth += 1;
    }

    fn close(&mut self, text: &str) {
        self.depth -= 1;
        self.line(text);
    }
}

fn jstr(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// `"key": "num/den",` plus the `_decimal` twin.
fn ratio_lines(out: &mut Out, key: &str, r: &num_rational::BigRational, comma: bool) {
    out.line(&format!("\"{key}\": {},", jstr(&format_ratio(r))));
    let tail = if comma { "," } else { "" };
    out.line(&format!("\"{key}_decimal\": {}{tail}", jstr(&decimal4(r))));
}

fn risk_json(r: &RiskReport) -> String {
    let mut out = Out::new();
    out.open("{");
    out.line(&format!("\"currency\": {},", jstr(&r.currency)));
    out.open("\"config\": {");
    out.line(&format!(
        "\"damage_threshold\": {},",
        r.config.damage_threshold
    ));
    out.line(&format!("\"effort_threshold\": {}", r.config.effort_threshold));
    out.close("},");
    out.open("\"counts\": {");
    out.line(&format!("\"critical\": {},", r.counts.critical));
    out.line(&format!("\"strategic\": {},", r.counts.strategic));
    out.line(&format!("\"nuisance\": {},", r.counts.nuisance));
    out.line(&format!("\"negligible\": {}", r.counts.negligible));
    out.close("},");
    ratio_lines(&mut out, "total_risk", &r.total_risk, true);
    if r.rows.is_empty() {
        out.line("\"rows\": [],");
    } else {
        out.open("\"rows\": [");
        for (i, row) in r.rows.iter().enumerate() {
            out.open("{");
            out.line(&format!("\"id\": {},", jstr(&row.threat_id)));
            out.line(&format!("\"title\": {},", jstr(&row.title)));
            out.line(&format!("\"damage\": {},", row.damage));
            out.line(&format!("\"attacker_effort\": {},", row.attacker_effort));
            ratio_lines(&mut out, "risk", &row.risk, true);
            out.line(&format!("\"quadrant\": {}", jstr(row.quadrant.as_str())));
            out.close(if i + 1 == r.rows.len() { "}" } else { "}," });
        }
        out.close("],");
    }
    if r.rollups.is_empty() {
        out.line("\"rollups\": []");
    } else {
        out.open("\"rollups\": [");
        for (i, n) in r.rollups.iter().enumerate() {
            out.open("{");
            out.line(&format!("\"id\": {},", jstr(&n.node_id)));
            out.line(&format!("\"label\": {},", jstr(&n.label)));
            out.line(&format!("\"worst_damage\": {},", n.worst_damage));
            out.line(&format!("\"least_effort\": {},", n.least_effort));
            ratio_lines(&mut out, "max_risk", &n.max_risk, true);
            out.line(&format!("\"total_exposure\": {}", n.total_exposure));
            out.close(if i + 1 == r.rollups.len() { "}" } else { "}," });
        }
        out.close("]");
    }
    out.close("}");
    out.buf
}

fn plan_json(p: &SelectionPlan) -> String {
    let mut out = Out::new();
    out.open("{");
    match &p.mode {
        SelectionMode::Budget(limit) => {
            out.line("\"mode\": \"budget\",");
            out.line(&format!("\"limit\": {limit},"));
        }
        SelectionMode::Assurance(max) => {
            out.line("\"mode\": \"assurance\",");
            ratio_lines(&mut out, "max_residual", max, true);
        }
    }
    out.line(&format!("\"method\": {},", jstr(p.method.as_str())));
    out.line(&format!("\"currency\": {},", jstr(&p.currency)));
    if p.assumed.is_empty() {
        out.line("\"assumed\": [],");
    } else {
        out.open("\"assumed\": [");
        for (i, id) in p.assumed.iter().enumerate() {
            let tail = if i + 1 == p.assumed.len() { "" } else { "," };
            out.line(&format!("{}{tail}", jstr(id)));
        }
        out.close("],");
    }
    if p.chosen.is_empty() {
        out.line("\"chosen\": [],");
    } else {
        out.open("\"chosen\": [");
        for (i, c) in p.chosen.iter().enumerate() {
            out.open("{");
            out.line(&format!("\"id\": {},", jstr(&c.id)));
            out.line(&format!("\"cost\": {}", c.cost));
            out.close(if i + 1 == p.chosen.len() { "}" } else { "}," });
        }
        out.close("],");
    }
    out.line(&format!("\"total_cost\": {},", p.total_cost));
    ratio_lines(&mut out, "total_risk", &p.total_risk, true);
    ratio_lines(&mut out, "mitigated_risk", &p.mitigated_risk, true);
    ratio_lines(&mut out, "residual_risk", &p.residual_risk, true);
    if p.per_threat.is_empty() {
        out.line("\"per_threat\": []");
    } else {
        out.open("\"per_threat\": [");
        for (i, row) in p.per_threat.iter().enumerate() {
            out.open("{");
            out.line(&format!("\"id\": {},", jstr(&row.threat_id)));
            ratio_lines(&mut out, "base_risk", &row.base_risk, true);
            ratio_lines(&mut out, "mitigation", &row.mitigation, true);
            ratio_lines(&mut out, "residual", &row.residual, false);
            out.close(if i + 1 == p.per_threat.len() { "}" } else { "}," });
        }
        out.close("]");
    }
    out.close("}");
    out.buf
}

fn findings_json(findings: &[Finding]) -> String {
    let mut out = Out::new();
    if findings.is_empty() {
        out.line("[]");
        return out.buf;
    }
    out.open("[");
    for (i, f) in findings.iter().enumerate() {
        out.open("{");
        out.line(&format!("\"severity\": {},", jstr(f.severity.as_lower())));
        out.line(&format!("\"code\": {},", jstr(f.code.as_str())));
        out.line(&format!("\"path\": {},", jstr(&f.path)));
        out.line(&format!("\"message\": {}", jstr(&f.message)));
        out.close(if i + 1 == findings.len() { "}" } else { "}," });
    }
    out.close("]");
    out.buf
}

// ---------------------------------------------------------------------------
// Csv
// ---------------------------------------------------------------------------

/// RFC 4180: quote a field if it holds a comma, quote, or line break;
/// double embedded quotes.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_row(out: &mut String, cells: &[String]) {
    let quoted: Vec<String> = cells.iter().map(|c| csv_field(c)).collect();
    out.push_str(&quoted.join(","));
    out.push('\n');
}

fn risk_csv(r: &RiskReport) -> String {
    let mut out = String::from("id,title,damage,effort,risk,risk_decimal,quadrant\n");
    for row in &r.rows {
        csv_row(
            &mut out,
            &[
                row.threat_id.clone(),
                row.title.clone(),
                row.damage.to_string(),
                row.attacker_effort.to_string(),
                format_ratio(&row.risk),
                decimal4(&row.risk),
                row.quadrant.as_str().to_string(),
            ],
        );
    }
    out
}

fn plan_csv(p: &SelectionPlan) -> String {
    let mut out = String::from("id,cost\n");
    for c in &p.chosen {
        csv_row(&mut out, &[c.id.clone(), c.cost.to_string()]);
    }
    out
}

fn findings_csv(findings: &[Finding]) -> String {
    let mut out = String::from("severity,code,path,message\n");
    for f in findings {
        csv_row(
            &mut out,
            &[
                f.severity.token().to_string(),
                f.code.as_str().to_string(),
                f.path.clone(),
                f.message.clone(),
            ],
        );
    }
    out
}

// ---------------------------------------------------------------------------
