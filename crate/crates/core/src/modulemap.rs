//! Modulemap documents: generation from classified headers, byte-exact
//! rendering, and parsing of the rendered subset of the grammar.
//!
//! Each library becomes one module; each surviving interface header becomes
//! a submodule named after the file:
//!
//! ```text
//! module DataFormatsTrackerCommon_xr {
//!   module "TrackerTopology" {header "DataFormats/TrackerCommon/interface/TrackerTopology.h" export *}
//!   textual header "DataFormats/TrackerCommon/interface/Macros.h"
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::LibraryManifest;
use crate::path::CanonPath;
use crate::sanitizer::{Classification, HeaderRecord};

pub const DEFAULT_SUFFIX: &str = "_xr";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulemapDocument {
    pub modules: Vec<ModuleDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDef {
    pub name: String,
    pub entries: Vec<HeaderEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Normal,
    Textual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderEntry {
    /// For textual entries this is always the header's file stem; the
    /// rendered form carries no name.
    pub submodule_name: String,
    pub header_path: String,
    pub kind: EntryKind,
    pub export_all: bool,
}

impl HeaderEntry {
    pub fn normal(submodule_name: &str, header_path: &str) -> Self {
        HeaderEntry {
            submodule_name: submodule_name.to_string(),
            header_path: header_path.to_string(),
            kind: EntryKind::Normal,
            export_all: true,
        }
    }

    pub fn textual(header_path: &str) -> Self {
        HeaderEntry {
            submodule_name: CanonPath::new(header_path).file_stem().to_string(),
            header_path: header_path.to_string(),
            kind: EntryKind::Textual,
            export_all: false,
        }
    }
}

/// Strips `/`, `-` and `.` from a library name. `None` when what is left is
/// not a C identifier.
pub fn sanitize_module_name(library: &str) -> Option<String> {
    let name: String = library.chars().filter(|c| !matches!(c, '/' | '-' | '.')).collect();
    let mut chars = name.chars();
    let first = chars.next()?;
    let valid = (first == '_' || first.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric());
    valid.then_some(name)
}

/// A classified header left out of the modulemap, and why.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OmittedHeader {
    pub header: String,
    pub library: String,
    pub classification: Classification,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedModulemap {
    pub document: ModulemapDocument,
    pub omitted: Vec<OmittedHeader>,
}

/// Builds the modulemap for every library of `manifest`.
///
/// Include cycles must stay inside one library; a cycle spanning libraries
/// is a layering violation and fails generation.
pub fn generate_modulemap(
    manifest: &LibraryManifest,
    records: &[HeaderRecord],
    sccs: &[Vec<CanonPath>],
    suffix: &str,
) -> Result<GeneratedModulemap> {
    for scc in sccs {
        let libraries: BTreeSet<usize> = scc.iter().filter_map(|m| manifest.owning_library(m)).collect();
        if libraries.len() > 1 {
            return Err(Error::LayeringViolation {
                libraries: libraries
                    .iter()
                    .map(|&i| manifest.libraries[i].name.clone())
                    .collect(),
                members: scc.clone(),
            });
        }
    }

    let mut per_library: Vec<Vec<&HeaderRecord>> = vec![Vec::new(); manifest.libraries.len()];
    for record in records {
        if let Some(lib) = manifest.owning_library(&record.path) {
            per_library[lib].push(record);
        }
    }

    let mut modules = Vec::with_capacity(manifest.libraries.len());
    let mut omitted = Vec::new();
    for (lib, members) in manifest.libraries.iter().zip(per_library) {
        let base = sanitize_module_name(&lib.name).ok_or_else(|| {
            Error::Manifest(format!("library name {:?} is not a valid module name", lib.name))
        })?;
        let module_name = format!("{base}{suffix}");
        let mut entries = Vec::new();
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        for record in members {
            let header_path = manifest.include_spelling(&record.path);
            let entry = match record.classification {
                Classification::Standalone | Classification::Incomplete | Classification::Cyclic => {
                    let sub = record.path.file_stem().to_string();
                    if let Some(first) = names.insert(sub.clone(), header_path.clone()) {
                        return Err(Error::DuplicateSubmodule {
                            module: module_name,
                            name: sub,
                            first,
                            second: header_path,
                        });
                    }
                    HeaderEntry::normal(&sub, &header_path)
                }
                Classification::Macro => HeaderEntry::textual(&header_path),
                Classification::Broken | Classification::TokenGenerating => {
                    omitted.push(OmittedHeader {
                        header: header_path,
                        library: lib.name.clone(),
                        classification: record.classification,
                        reason: omission_reason(record.classification).to_string(),
                    });
                    continue;
                }
            };
            entries.push(entry);
        }
        entries.sort_by(|a, b| a.header_path.cmp(&b.header_path));
        modules.push(ModuleDef {
            name: module_name,
            entries,
        });
    }
    omitted.sort();
    Ok(GeneratedModulemap {
        document: ModulemapDocument { modules },
        omitted,
    })
}

fn omission_reason(class: Classification) -> &'static str {
    match class {
        Classification::Broken => "never included by any translation unit",
        Classification::TokenGenerating => "token-generating header, excluded from modules",
        _ => "",
    }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Renders the document. Two-space indent, LF endings, one trailing LF; an
/// empty document renders as the empty string.
pub fn render_modulemap(doc: &ModulemapDocument) -> String {
    let mut out = String::new();
    for module in &doc.modules {
        out.push_str(&format!("module {} {{\n", module.name));
        for entry in &module.entries {
            match entry.kind {
                EntryKind::Normal => {
                    let export = if entry.export_all { " export *" } else { "" };
                    out.push_str(&format!(
                        "  module {} {{header {}{export}}}\n",
                        quote(&entry.submodule_name),
                        quote(&entry.header_path)
                    ));
                }
                EntryKind::Textual => {
                    out.push_str(&format!("  textual header {}\n", quote(&entry.header_path)));
                }
            }
        }
        out.push_str("}\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Str(String),
    Open,
    Close,
    Star,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Str(s) => format!("string {s:?}"),
            Token::Open => "`{`".into(),
            Token::Close => "`}`".into(),
            Token::Star => "`*`".into(),
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::ModulemapParse {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            '{' => tokens.push((line, Token::Open)),
            '}' => tokens.push((line, Token::Close)),
            '*' => tokens.push((line, Token::Star)),
            '/' if chars.peek() == Some(&'/') => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                chars.next();
                let start = line;
                let mut prev = ' ';
                loop {
                    match chars.next() {
                        Some('/') if prev == '*' => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            prev = c;
                        }
                        None => return Err(parse_error(start, "unterminated comment")),
                    }
                }
            }
            '"' => {
                let start = line;
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(escaped) => value.push(escaped),
                            None => return Err(parse_error(start, "unterminated string")),
                        },
                        Some('\n') | None => return Err(parse_error(start, "unterminated string")),
                        Some(c) => value.push(c),
                    }
                }
                tokens.push((start, Token::Str(value)));
            }
            c if c == '_' || c.is_ascii_alphanumeric() => {
                let mut ident = c.to_string();
                while let Some(&next) = chars.peek() {
                    if next == '_' || next.is_ascii_alphanumeric() {
                        ident.push(next);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push((line, Token::Ident(ident)));
            }
            other => return Err(parse_error(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Token)> {
        self.tokens.get(self.pos)
    }

    fn last_line(&self) -> usize {
        self.tokens.last().map_or(1, |(l, _)| *l)
    }

    fn next(&mut self, wanted: &str) -> Result<(usize, Token)> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| parse_error(self.last_line(), format!("unexpected end of input, expected {wanted}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        match self.next(&format!("`{word}`"))? {
            (_, Token::Ident(w)) if w == word => Ok(()),
            (line, tok) => Err(parse_error(line, format!("expected `{word}`, found {}", tok.describe()))),
        }
    }

    fn string(&mut self) -> Result<String> {
        match self.next("a quoted string")? {
            (_, Token::Str(s)) => Ok(s),
            (line, tok) => Err(parse_error(line, format!("expected a quoted string, found {}", tok.describe()))),
        }
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        let (line, tok) = self.next(&want.describe())?;
        if tok == want {
            Ok(())
        } else {
            Err(parse_error(line, format!("expected {}, found {}", want.describe(), tok.describe())))
        }
    }

    fn module(&mut self) -> Result<ModuleDef> {
        self.keyword("module")?;
        let name = match self.next("a module name")? {
            (_, Token::Ident(n)) => n,
            (line, tok) => return Err(parse_error(line, format!("expected a module name, found {}", tok.describe()))),
        };
        let (open_line, _) = self.peek().cloned().unwrap_or((self.last_line(), Token::Open));
        self.expect(Token::Open)?;
        let mut entries = Vec::new();
        loop {
            match self.peek() {
                None => return Err(parse_error(open_line, format!("unbalanced braces: module {name} is never closed"))),
                Some((_, Token::Close)) => {
                    self.pos += 1;
                    break;
                }
                Some((_, Token::Ident(w))) if w == "module" => entries.push(self.submodule()?),
                Some((_, Token::Ident(w))) if w == "textual" => {
                    self.pos += 1;
                    self.keyword("header")?;
                    entries.push(HeaderEntry::textual(&self.string()?));
                }
                Some((line, tok)) => {
                    return Err(parse_error(*line, format!("unknown construct {}", tok.describe())))
                }
            }
        }
        Ok(ModuleDef { name, entries })
    }

    fn submodule(&mut self) -> Result<HeaderEntry> {
        self.keyword("module")?;
        let sub = self.string()?;
        self.expect(Token::Open)?;
        self.keyword("header")?;
        let path = self.string()?;
        let mut export_all = false;
        if let Some((_, Token::Ident(w))) = self.peek() {
            if w == "export" {
                self.pos += 1;
                self.expect(Token::Star)?;
                export_all = true;
            }
        }
        self.expect(Token::Close)?;
        Ok(HeaderEntry {
            submodule_name: sub,
            header_path: path,
            kind: EntryKind::Normal,
            export_all,
        })
    }
}

/// Parses the grammar subset [`render_modulemap`] produces. Whitespace and
/// comments between tokens are ignored.
pub fn parse_modulemap(text: &str) -> Result<ModulemapDocument> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let mut modules = Vec::new();
    while let Some((line, tok)) = parser.peek() {
        match tok {
            Token::Ident(w) if w == "module" => modules.push(parser.module()?),
            Token::Close => return Err(parse_error(*line, "unbalanced braces: unexpected `}`")),
            other => return Err(parse_error(*line, format!("unknown construct {}", other.describe()))),
        }
    }
    Ok(ModulemapDocument { modules })
}
