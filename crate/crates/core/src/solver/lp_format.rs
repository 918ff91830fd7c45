//! CPLEX LP text format: writer and a reader for the subset it emits.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Column, LinearConstraint, MilpProblem, Sense};

const WRAP: usize = 78;

#[derive(Debug, Error, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing section: {0}")]
    MissingSection(&'static str),
    #[error("general integer variables are not supported: {0}")]
    Unsupported(String),
}

fn syntax(line: usize, message: impl Into<String>) -> LpParseError {
    LpParseError::Syntax {
        line,
        message: message.into(),
    }
}

struct Writer {
    out: String,
    line_len: usize,
}

impl Writer {
    fn new() -> Self {
        Self {
            out: String::new(),
            line_len: 0,
        }
    }

    fn token(&mut self, tok: &str) {
        if self.line_len > 0 && self.line_len + 1 + tok.len() > WRAP {
            self.out.push_str("\n   ");
            self.line_len = 3;
        }
        if self.line_len > 0 {
            self.out.push(' ');
            self.line_len += 1;
        }
        self.out.push_str(tok);
        self.line_len += tok.len();
    }

    fn start(&mut self, text: &str) {
        self.out.push_str(text);
        self.line_len = text.len();
    }

    fn end_line(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }

    fn rows(&mut self, rows: &[LinearConstraint], columns: &[Column]) {
        for row in rows {
            self.start(&format!(" {}:", row.name));
            self.terms(&row.coefficients, columns);
            self.token(&row.sense.to_string());
            self.token(&number(row.rhs));
            self.end_line();
        }
    }

    fn terms(&mut self, terms: &[(usize, f64)], columns: &[Column]) {
        if terms.is_empty() {
            // An empty expression is written as a zero multiple of the first column.
            self.token("0");
            self.token(&columns[0].name);
            return;
        }
        for (i, &(j, a)) in terms.iter().enumerate() {
            let name = &columns[j].name;
            let sign = if a < 0.0 { "-" } else { "+" };
            let mag = a.abs();
            let body = if mag == 1.0 {
                name.clone()
            } else {
                format!("{mag} {name}")
            };
            let tok = if i == 0 && sign == "+" {
                body
            } else {
                format!("{sign} {body}")
            };
            self.token(&tok);
        }
    }
}

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Writes the model in CPLEX LP format. Output depends only on the model, so
/// repeated exports are byte-identical. Every column appears in `Bounds`, in
/// column order, which lets [`parse_lp`] restore the original layout.
pub fn export_lp<P: AsRef<MilpProblem> + ?Sized>(model: &P) -> String {
    let p = model.as_ref();
    let mut w = Writer::new();
    let _ = writeln!(w.out, "\\ Problem name: {}", p.name);
    w.out.push_str("Maximize\n");
    w.start(" obj:");
    w.terms(&p.objective, &p.columns);
    w.end_line();
    w.out.push_str("Subject To\n");
    w.rows(&p.constraints, &p.columns);
    if !p.cuts.is_empty() {
        w.out.push_str("User Cuts\n");
        w.rows(&p.cuts, &p.columns);
    }
    w.out.push_str("Bounds\n");
    for col in &p.columns {
        let (lo, hi) = (col.lower, col.upper);
        let line = if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            format!(" {} free", col.name)
        } else if lo == hi {
            format!(" {} = {}", col.name, number(lo))
        } else {
            format!(" {} <= {} <= {}", number(lo), col.name, number(hi))
        };
        w.out.push_str(&line);
        w.out.push('\n');
    }
    let binaries: Vec<&Column> = p.columns.iter().filter(|c| c.binary).collect();
    if !binaries.is_empty() {
        w.out.push_str("Binaries\n");
        for col in binaries {
            w.token(&col.name);
        }
        w.end_line();
    }
    w.out.push_str("End\n");
    w.out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Cuts,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_of(line: &str) -> Option<(Section, bool)> {
    match line.to_ascii_lowercase().as_str() {
        "maximize" | "maximum" | "max" => Some((Section::Objective, true)),
        "minimize" | "minimum" | "min" => Some((Section::Objective, false)),
        "subject to" | "such that" | "st" | "s.t." => Some((Section::Constraints, true)),
        "user cuts" => Some((Section::Cuts, true)),
        "bounds" | "bound" => Some((Section::Bounds, true)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, true)),
        "generals" | "general" | "gen" => Some((Section::Generals, true)),
        "end" => Some((Section::End, true)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Parsed contents of an LP file, keyed by variable name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpDocument {
    pub name: String,
    pub maximize: bool,
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<ParsedRow>,
    pub cuts: Vec<ParsedRow>,
    /// Explicit bounds, in file order.
    pub bounds: Vec<(String, f64, f64)>,
    pub binaries: Vec<String>,
}

fn parse_number(tok: &str) -> Option<f64> {
    let lower = tok.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => return Some(f64::INFINITY),
        "-inf" | "-infinity" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    let body = tok.trim_start_matches(['+', '-']);
    if body.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        tok.parse().ok()
    } else {
        None
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Tokens with their source line numbers.
type Tokens = Vec<(usize, String)>;

fn split_tokens(line_no: usize, line: &str, out: &mut Tokens) {
    // Separate relational operators and colons glued to names or numbers.
    let mut spaced = String::with_capacity(line.len() + 8);
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '<' | '>' | '=' => {
                spaced.push(' ');
                spaced.push(c);
                if let Some(&n) = chars.peek() {
                    if matches!(n, '<' | '>' | '=') {
                        spaced.push(n);
                        chars.next();
                    }
                }
                spaced.push(' ');
            }
            ':' => spaced.push_str(" : "),
            _ => spaced.push(c),
        }
    }
    out.extend(spaced.split_whitespace().map(|t| (line_no, t.to_string())));
}

/// Reads a linear expression, stopping before a relational operator.
fn parse_terms(tokens: &[(usize, String)], pos: &mut usize) -> Result<Vec<(String, f64)>, LpParseError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while let Some((line, tok)) = tokens.get(*pos) {
        if parse_sense(tok).is_some() {
            break;
        }
        *pos += 1;
        match tok.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Some(v) = parse_number(tok) {
                    if coef.is_some() {
                        return Err(syntax(*line, format!("two numbers in a row near '{tok}'")));
                    }
                    coef = Some(v);
                } else {
                    terms.push((tok.clone(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if coef.is_some() {
        let line = tokens.get(pos.saturating_sub(1)).map_or(0, |t| t.0);
        return Err(syntax(line, "dangling constant in expression"));
    }
    Ok(terms)
}

fn parse_bound_line(line_no: usize, toks: &[String]) -> Result<(String, f64, f64), LpParseError> {
    let t: Vec<&str> = toks.iter().map(String::as_str).collect();
    let num = |s: &str| parse_number(s).ok_or_else(|| syntax(line_no, format!("expected a number, got '{s}'")));
    match t.as_slice() {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            Ok((name.to_string(), f64::NEG_INFINITY, f64::INFINITY))
        }
        [lo, "<=", name, "<=", hi] => Ok((name.to_string(), num(lo)?, num(hi)?)),
        [name, op, v] => {
            let v = num(v)?;
            match parse_sense(op) {
                Some(Sense::Le) => Ok((name.to_string(), 0.0, v)),
                Some(Sense::Ge) => Ok((name.to_string(), v, f64::INFINITY)),
                Some(Sense::Eq) => Ok((name.to_string(), v, v)),
                None => Err(syntax(line_no, format!("bad bound operator '{op}'"))),
            }
        }
        _ => Err(syntax(line_no, "unrecognized bound")),
    }
}

fn parse_rows(tokens: &[(usize, String)]) -> Result<Vec<ParsedRow>, LpParseError> {
    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let name = if tokens.get(pos + 1).is_some_and(|t| t.1 == ":") {
            pos += 2;
            tokens[pos - 2].1.clone()
        } else {
            format!("R{}", rows.len() + 1)
        };
        let terms = parse_terms(tokens, &mut pos)?;
        let (line, op) = tokens
            .get(pos)
            .cloned()
            .ok_or_else(|| syntax(tokens.last().map_or(0, |t| t.0), "constraint without operator"))?;
        let sense = parse_sense(&op).ok_or_else(|| syntax(line, "expected operator"))?;
        pos += 1;
        let rhs = tokens
            .get(pos)
            .and_then(|t| parse_number(&t.1))
            .ok_or_else(|| syntax(line, "expected right-hand side"))?;
        pos += 1;
        rows.push(ParsedRow {
            name,
            terms,
            sense,
            rhs,
        });
    }
    Ok(rows)
}

/// Parses the LP subset written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<LpDocument, LpParseError> {
    let mut doc = LpDocument::default();
    let mut section: Option<Section> = None;
    let mut seen_objective = false;
    let mut objective_tokens: Tokens = Vec::new();
    let mut row_tokens: Tokens = Vec::new();
    let mut cut_tokens: Tokens = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(rest) = raw.trim_start().strip_prefix("\\ Problem name:") {
            doc.name = rest.trim().to_string();
            continue;
        }
        let line = match raw.find('\\') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some((s, max)) = section_of(line) {
            if s == Section::Objective {
                doc.maximize = max;
                seen_objective = true;
            }
            section = Some(s);
            continue;
        }
        match section {
            None => return Err(syntax(line_no, "content before the objective section")),
            Some(Section::Objective) => split_tokens(line_no, line, &mut objective_tokens),
            Some(Section::Constraints) => split_tokens(line_no, line, &mut row_tokens),
            Some(Section::Cuts) => split_tokens(line_no, line, &mut cut_tokens),
            Some(Section::Bounds) => {
                let mut toks = Vec::new();
                split_tokens(line_no, line, &mut toks);
                let toks: Vec<String> = toks.into_iter().map(|t| t.1).collect();
                doc.bounds.push(parse_bound_line(line_no, &toks)?);
            }
            Some(Section::Binaries) => {
                doc.binaries.extend(line.split_whitespace().map(str::to_string));
            }
            Some(Section::Generals) => return Err(LpParseError::Unsupported(line.to_string())),
            Some(Section::End) => return Err(syntax(line_no, "content after End")),
        }
    }
    if !seen_objective {
        return Err(LpParseError::MissingSection("Maximize/Minimize"));
    }

    let mut pos = 0;
    if objective_tokens.get(1).is_some_and(|t| t.1 == ":") {
        pos = 2;
    }
    doc.objective = parse_terms(&objective_tokens, &mut pos)?;
    if pos < objective_tokens.len() {
        return Err(syntax(objective_tokens[pos].0, "relational operator in objective"));
    }

    doc.constraints = parse_rows(&row_tokens)?;
    doc.cuts = parse_rows(&cut_tokens)?;
    Ok(doc)
}

/// Constraint family label from a row name: `C9b_1_2` gives `C9-b`.
fn tag_from_name(name: &str) -> String {
    let head = name.split('_').next().unwrap_or(name);
    let mut chars: Vec<char> = head.chars().collect();
    match chars.as_slice() {
        [.., d, l] if d.is_ascii_digit() && l.is_ascii_lowercase() => {
            let l = chars.pop().expect("nonempty");
            let mut s: String = chars.into_iter().collect();
            s.push('-');
            s.push(l);
            s
        }
        _ => head.to_string(),
    }
}

impl LpDocument {
    /// Rebuilds a maximization problem. Columns are ordered by first
    /// appearance in `Bounds`, then objective, rows and `Binaries`.
    pub fn into_problem(self) -> MilpProblem {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut columns: Vec<Column> = Vec::new();
        let mut intern = |name: &str, columns: &mut Vec<Column>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                columns.push(Column::continuous(name, 0.0, f64::INFINITY));
                columns.len() - 1
            })
        };
        for (name, lo, hi) in &self.bounds {
            let j = intern(name, &mut columns);
            columns[j].lower = *lo;
            columns[j].upper = *hi;
        }
        let sign = if self.maximize { 1.0 } else { -1.0 };
        let mut objective: Vec<(usize, f64)> = self
            .objective
            .iter()
            .map(|(n, c)| (intern(n, &mut columns), sign * c))
            .collect();
        objective.sort_by_key(|t| t.0);
        let mut rebuild = |rows: &[ParsedRow], columns: &mut Vec<Column>| -> Vec<LinearConstraint> {
            rows.iter()
                .map(|r| {
                    let terms: Vec<(usize, f64)> = r.terms.iter().map(|(n, c)| (intern(n, columns), *c)).collect();
                    LinearConstraint::new(r.name.clone(), tag_from_name(&r.name), terms, r.sense, r.rhs)
                })
                .collect()
        };
        let constraints = rebuild(&self.constraints, &mut columns);
        let cuts = rebuild(&self.cuts, &mut columns);
        for name in &self.binaries {
            let j = intern(name, &mut columns);
            columns[j].binary = true;
        }
        MilpProblem {
            name: self.name,
            columns,
            constraints,
            objective: objective.into_iter().filter(|t| t.1 != 0.0).collect(),
            cuts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MilpProblem {
        MilpProblem {
            name: "small".into(),
            columns: vec![
                Column::binary("z_1_1"),
                Column::continuous("beta_1_1_1", 0.0, 1.0),
                Column::continuous("theta", f64::NEG_INFINITY, f64::INFINITY),
            ],
            constraints: vec![
                LinearConstraint::new("C7b_1_1_1", "C7-b", [(0, -1.0), (1, 1.0)], Sense::Ge, 1e-6 - 1.0),
                LinearConstraint::new("C8b", "C8-b", [(2, 1.0), (1, -2.5)], Sense::Le, 0.0),
            ],
            objective: vec![(1, 1e-4), (2, 1.0)],
            cuts: vec![LinearConstraint::new("Cap_1_1_1", "Cap", [(1, 1.0), (0, -1.0)], Sense::Le, 0.0)],
        }
    }

    #[test]
    fn tags_from_names() {
        assert_eq!(tag_from_name("C9b_1_1_1_1"), "C9-b");
        assert_eq!(tag_from_name("C8a"), "C8-a");
        assert_eq!(tag_from_name("C3_2"), "C3");
    }

    #[test]
    fn round_trip_and_binaries_section() {
        let p = small();
        let text = export_lp(&p);
        assert!(text.contains("Binaries\nz_1_1\n"), "{text}");
        assert!(text.contains(" theta free\n"));
        let back = parse_lp(&text).unwrap().into_problem();
        assert_eq!(back, p);
        assert_eq!(export_lp(&back), text);
    }

    #[test]
    fn reads_glued_operators_and_minimize() {
        let doc = parse_lp("Minimize\n obj: 2 x + 3 y\nSubject To\n c1: x + y>=1\nBounds\n x <= 4\nEnd\n").unwrap();
        assert!(!doc.maximize);
        let p = doc.into_problem();
        assert_eq!(p.columns[0].upper, 4.0);
        assert_eq!(p.objective, vec![(0, -2.0), (1, -3.0)]);
        assert_eq!(p.constraints[0].sense, Sense::Ge);
    }
}
