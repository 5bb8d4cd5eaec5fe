//! Preprocessor directive scanning.
//!
//! This is not a preprocessor. It strips comments, tracks `#if` nesting and
//! recognizes include guards, which is enough to list `#include` directives,
//! flag the ones that sit under configuration conditionals and count macro
//! definitions for the sanitizer.

use serde::{Deserialize, Serialize};

/// One `#include` (or `#import`) directive as written.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IncludeDirective {
    pub spelled_path: String,
    pub angle_form: bool,
    /// 1-based line of the `#`.
    pub line: u32,
    /// Inside an `#if`-family region other than the file's include guard.
    pub conditional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    MissingDelimiter,
    EmptyPath,
    ComputedInclude,
    UnsupportedDirective,
    UnbalancedConditional,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScanDiagnostic {
    pub line: u32,
    pub kind: DiagnosticKind,
    pub text: String,
}

/// How a header protects itself against repeated inclusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "macro")]
pub enum Guard {
    None,
    Macro(String),
    PragmaOnce,
}

impl Guard {
    pub fn is_present(&self) -> bool {
        !matches!(self, Guard::None)
    }
}

/// Counts used to decide whether a header is predominantly macros.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroStats {
    /// `#define` directives, not counting the include guard's own define.
    pub macro_defs: u32,
    /// Non-blank lines that are neither comments nor directives.
    pub decl_lines: u32,
    /// The subset of `macro_defs` inside a conditional region.
    pub conditional_defs: u32,
}

impl MacroStats {
    /// `macro_defs / max(1, macro_defs + decl_lines)`.
    pub fn macro_ratio(&self) -> f64 {
        let total = (self.macro_defs + self.decl_lines).max(1);
        f64::from(self.macro_defs) / f64::from(total)
    }
}

/// Everything a single pass over a source file yields.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScan {
    pub includes: Vec<IncludeDirective>,
    pub diagnostics: Vec<ScanDiagnostic>,
    pub guard: Guard,
    pub macro_stats: MacroStats,
    /// Physical line count.
    pub line_count: u32,
}

/// Lists the `#include` directives of `source` in lexical order.
pub fn scan_includes(source: &str) -> Vec<IncludeDirective> {
    scan_source(source).includes
}

pub fn scan_source(source: &str) -> SourceScan {
    let lines = logical_lines(source);
    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    let mut decl_lines = 0u32;

    for line in &lines {
        let trimmed = line.code.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.strip_prefix('#') {
            Some(rest) => {
                if let Some(event) = parse_directive(rest.trim_start(), line.number, &mut diagnostics) {
                    events.push(event);
                }
            }
            None => decl_lines += 1,
        }
    }

    let guard_span = detect_guard(&events);
    let mut guard = match &guard_span {
        Some((_, name, _)) => Guard::Macro(name.clone()),
        None => Guard::None,
    };
    if events.iter().any(|e| matches!(e.kind, EventKind::PragmaOnce)) && guard == Guard::None {
        guard = Guard::PragmaOnce;
    }

    let mut includes = Vec::new();
    let mut stats = MacroStats {
        decl_lines,
        ..MacroStats::default()
    };
    let mut depth: u32 = 0;
    for (idx, event) in events.iter().enumerate() {
        let is_guard_edge = guard_span
            .as_ref()
            .is_some_and(|(open, _, close)| idx == *open || idx == *close);
        match &event.kind {
            EventKind::If(_) => {
                if !is_guard_edge {
                    depth += 1;
                }
            }
            EventKind::Endif => {
                if is_guard_edge {
                    continue;
                }
                if depth == 0 {
                    diagnostics.push(ScanDiagnostic {
                        line: event.line,
                        kind: DiagnosticKind::UnbalancedConditional,
                        text: "#endif without matching #if".to_string(),
                    });
                } else {
                    depth -= 1;
                }
            }
            EventKind::Define(_) => {
                let guard_define = guard_span.is_some() && idx == 1;
                if !guard_define {
                    stats.macro_defs += 1;
                    if depth > 0 {
                        stats.conditional_defs += 1;
                    }
                }
            }
            EventKind::Include { path, angle } => includes.push(IncludeDirective {
                spelled_path: path.clone(),
                angle_form: *angle,
                line: event.line,
                conditional: depth > 0,
            }),
            EventKind::Else | EventKind::PragmaOnce | EventKind::Other => {}
        }
    }
    if depth > 0 {
        diagnostics.push(ScanDiagnostic {
            line: lines.last().map_or(1, |l| l.number),
            kind: DiagnosticKind::UnbalancedConditional,
            text: format!("{depth} unterminated conditional region(s)"),
        });
    }
    diagnostics.sort();

    SourceScan {
        includes,
        diagnostics,
        guard,
        macro_stats: stats,
        line_count: physical_line_count(source),
    }
}

fn physical_line_count(source: &str) -> u32 {
    let newlines = source.bytes().filter(|&b| b == b'\n').count();
    let partial = usize::from(!source.is_empty() && !source.ends_with('\n'));
    u32::try_from(newlines + partial).unwrap_or(u32::MAX)
}

#[derive(Debug)]
struct Event {
    line: u32,
    kind: EventKind,
}

#[derive(Debug)]
enum EventKind {
    /// `#if`, `#ifdef`, `#ifndef`; carries the guard candidate macro, if any.
    If(Option<String>),
    Else,
    Endif,
    Define(String),
    Include { path: String, angle: bool },
    PragmaOnce,
    Other,
}

/// Names the macro tested by `#ifndef X` or `#if !defined(X)`.
fn guard_candidate(keyword: &str, rest: &str) -> Option<String> {
    match keyword {
        "ifndef" => leading_identifier(rest.trim_start()).map(str::to_string),
        "if" => {
            let rest = rest.trim_start().strip_prefix('!')?.trim_start();
            let rest = rest.strip_prefix("defined")?.trim_start();
            let (inner, tail) = match rest.strip_prefix('(') {
                Some(inside) => {
                    let close = inside.find(')')?;
                    (&inside[..close], &inside[close + 1..])
                }
                None => {
                    let ident = leading_identifier(rest)?;
                    (ident, &rest[ident.len()..])
                }
            };
            let ident = leading_identifier(inner.trim())?;
            if !tail.trim().is_empty() || ident.len() != inner.trim().len() {
                return None;
            }
            Some(ident.to_string())
        }
        _ => None,
    }
}

/// Returns `(open_index, macro, close_index)` when the first two directives
/// are a guard test and its define, and the guard's `#endif` is the last
/// directive in the file.
fn detect_guard(events: &[Event]) -> Option<(usize, String, usize)> {
    let (EventKind::If(Some(candidate)), EventKind::Define(defined)) =
        (&events.first()?.kind, &events.get(1)?.kind)
    else {
        return None;
    };
    if candidate != defined {
        return None;
    }
    let mut depth = 0i64;
    for (idx, event) in events.iter().enumerate() {
        match event.kind {
            EventKind::If(_) => depth += 1,
            EventKind::Endif => {
                depth -= 1;
                if depth == 0 {
                    return (idx == events.len() - 1).then(|| (0, candidate.clone(), idx));
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_directive(text: &str, line: u32, diagnostics: &mut Vec<ScanDiagnostic>) -> Option<Event> {
    let keyword = leading_identifier(text).unwrap_or("");
    let rest = &text[keyword.len()..];
    let kind = match keyword {
        "if" | "ifdef" | "ifndef" => EventKind::If(guard_candidate(keyword, rest)),
        "elif" | "elifdef" | "elifndef" | "else" => EventKind::Else,
        "endif" => EventKind::Endif,
        "define" => EventKind::Define(leading_identifier(rest.trim_start()).unwrap_or("").to_string()),
        "pragma" if rest.split_whitespace().next() == Some("once") => EventKind::PragmaOnce,
        "include" | "import" => match parse_include_operand(rest.trim()) {
            Ok((path, angle)) => EventKind::Include { path, angle },
            Err(kind) => {
                diagnostics.push(ScanDiagnostic {
                    line,
                    kind,
                    text: format!("#{keyword}{rest}").trim_end().to_string(),
                });
                return None;
            }
        },
        "include_next" => {
            diagnostics.push(ScanDiagnostic {
                line,
                kind: DiagnosticKind::UnsupportedDirective,
                text: format!("#include_next{rest}").trim_end().to_string(),
            });
            return None;
        }
        _ => EventKind::Other,
    };
    Some(Event { line, kind })
}

fn parse_include_operand(operand: &str) -> Result<(String, bool), DiagnosticKind> {
    let (close, angle) = match operand.chars().next() {
        Some('"') => ('"', false),
        Some('<') => ('>', true),
        Some(_) => return Err(DiagnosticKind::ComputedInclude),
        None => return Err(DiagnosticKind::EmptyPath),
    };
    let body = &operand[1..];
    let end = body.find(close).ok_or(DiagnosticKind::MissingDelimiter)?;
    let path = &body[..end];
    if path.is_empty() {
        return Err(DiagnosticKind::EmptyPath);
    }
    Ok((path.to_string(), angle))
}

fn leading_identifier(text: &str) -> Option<&str> {
    let end = text
        .char_indices()
        .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
        .map_or(text.len(), |(i, _)| i);
    (end > 0).then(|| &text[..end])
}

struct LogicalLine {
    number: u32,
    /// Source text with comments replaced by a single space.
    code: String,
}

/// Splices backslash continuations and strips comments, keeping string and
/// character literals intact.
fn logical_lines(source: &str) -> Vec<LogicalLine> {
    let mut out = Vec::new();
    let mut in_block = false;
    let mut pending: Option<(u32, String)> = None;

    for (idx, raw) in source.split('\n').enumerate() {
        let number = u32::try_from(idx + 1).unwrap_or(u32::MAX);
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let (start, mut text) = pending.take().unwrap_or((number, String::new()));
        let continued = raw.ends_with('\\') && !in_block_after(raw, in_block);
        let body = if continued { &raw[..raw.len() - 1] } else { raw };
        text.push_str(&strip_comments(body, &mut in_block));
        if continued {
            pending = Some((start, text));
        } else {
            out.push(LogicalLine { number: start, code: text });
        }
    }
    if let Some((number, code)) = pending {
        out.push(LogicalLine { number, code });
    }
    out
}

/// Whether the line ends inside a block comment (continuations do not apply
/// there).
fn in_block_after(raw: &str, in_block: bool) -> bool {
    let mut state = in_block;
    strip_comments(raw, &mut state);
    state
}

fn strip_comments(line: &str, in_block: &mut bool) -> String {
    let bytes = line.as_bytes();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    let mut literal: Option<u8> = None;
    let mut seg_start = 0;

    while i < bytes.len() {
        let b = bytes[i];
        if *in_block {
            if b == b'*' && bytes.get(i + 1) == Some(&b'/') {
                *in_block = false;
                i += 2;
                seg_start = i;
                out.push(' ');
            } else {
                i += 1;
            }
            continue;
        }
        if let Some(quote) = literal {
            if b == b'\\' {
                i += 2;
                continue;
            }
            if b == quote {
                literal = None;
            }
            i += 1;
            continue;
        }
        match b {
            b'"' => literal = Some(b'"'),
            // A quote after an identifier character is a digit separator.
            b'\'' if i == 0 || !bytes[i - 1].is_ascii_alphanumeric() => literal = Some(b'\''),
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                out.push_str(&line[seg_start..i]);
                return out;
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                out.push_str(&line[seg_start..i]);
                *in_block = true;
                i += 2;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    if !*in_block {
        out.push_str(&line[seg_start.min(line.len())..]);
    }
    out
}
