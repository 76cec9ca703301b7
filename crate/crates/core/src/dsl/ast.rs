use std::fmt;

use serde::{Deserialize, Serialize};

/// 1-based source location of a token or node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Element of a parenthesized tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TupleItem {
    Num(f64),
    Bool(bool),
}

impl fmt::Display for TupleItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TupleItem::Num(n) => write!(f, "{n}"),
            TupleItem::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Str(String),
    Num(f64),
    Bool(bool),
    Ident(String),
    Tuple(Vec<TupleItem>),
}

/// Override compatibility class. Quoted strings and bare identifiers are both text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Text,
    Number,
    Bool,
    Tuple,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Bool => "boolean",
            ValueKind::Tuple => "tuple",
        })
    }
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Str(_) | Value::Ident(_) => ValueKind::Text,
            Value::Num(_) => ValueKind::Number,
            Value::Bool(_) => ValueKind::Bool,
            Value::Tuple(_) => ValueKind::Tuple,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Str(s) | Value::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    /// Tag used by the scene document to keep the value reconstructable.
    pub fn tag(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Num(_) => "number",
            Value::Bool(_) => "bool",
            Value::Ident(_) => "ident",
            Value::Tuple(_) => "tuple",
        }
    }

    /// Plain rendering without DSL quoting, as used in scene attributes.
    pub fn plain(&self) -> String {
        match self {
            Value::Str(s) | Value::Ident(s) => s.clone(),
            Value::Num(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Tuple(items) => items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        }
    }
}

impl fmt::Display for Value {
    /// DSL source rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Num(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ident(s) => f.write_str(s),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub span: Span,
}

/// Contents of a scenario or block: ordered entries and nested blocks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Body {
    pub entries: Vec<Entry>,
    pub blocks: Vec<Block>,
}

impl Body {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.blocks.is_empty()
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn block(&self, name: &str, label: Option<&str>) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name && b.label.as_deref() == label)
    }

    pub fn block_mut(&mut self, name: &str, label: Option<&str>) -> Option<&mut Block> {
        self.blocks.iter_mut().find(|b| b.name == name && b.label.as_deref() == label)
    }

    pub fn remove_entry(&mut self, key: &str) -> Option<Entry> {
        let idx = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(idx))
    }

    /// Looks up an entry by a dotted block path, e.g. `Test.Speed`.
    pub fn lookup(&self, path: &str) -> Option<&Value> {
        let mut parts: Vec<&str> = path.split('.').collect();
        let key = parts.pop()?;
        let mut body = self;
        for name in parts {
            body = &body.block(name, None)?.body;
        }
        body.entry(key).map(|e| &e.value)
    }

    /// Drops every block whose body is empty, bottom-up.
    pub fn prune_empty(&mut self) {
        for block in &mut self.blocks {
            block.body.prune_empty();
        }
        self.blocks.retain(|b| !b.body.is_empty());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    /// Optional instance name, e.g. the `VehicleUnderTest` in `Player VehicleUnderTest { .. }`.
    pub label: Option<String>,
    pub body: Body,
    pub span: Span,
}

impl Block {
    pub fn key(&self) -> (&str, Option<&str>) {
        (&self.name, self.label.as_deref())
    }

    pub fn display_name(&self) -> String {
        match &self.label {
            Some(l) => format!("{} {}", self.name, l),
            None => self.name.clone(),
        }
    }
}

/// One parsed `scenario` declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DslAst {
    pub scenario_name: String,
    pub parent_name: Option<String>,
    pub body: Body,
    pub span: Span,
}

impl DslAst {
    /// Pretty-prints the AST back into DSL source.
    pub fn to_source(&self) -> String {
        let mut out = format!("scenario {}", self.scenario_name);
        if let Some(p) = &self.parent_name {
            out.push_str(" extends ");
            out.push_str(p);
        }
        out.push_str(" {\n");
        write_body(&mut out, &self.body, 1);
        out.push_str("}\n");
        out
    }
}

fn write_body(out: &mut String, body: &Body, depth: usize) {
    let pad = "  ".repeat(depth);
    for e in &body.entries {
        out.push_str(&format!("{pad}{} = {}\n", e.key, e.value));
    }
    for b in &body.blocks {
        out.push_str(&format!("{pad}{} {{\n", b.display_name()));
        write_body(out, &b.body, depth + 1);
        out.push_str(&format!("{pad}}}\n"));
    }
}
