//! `extends` resolution and extraction of the typed scene model.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ast::{Block, Body, DslAst, Entry, Span, TupleItem, Value};
use super::error::DslError;
use super::parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    External,
    Internal,
}

impl Control {
    pub fn as_str(self) -> &'static str {
        match self {
            Control::External => "external",
            Control::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub relative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub name: String,
    pub driver: Option<String>,
    pub control: Control,
    pub vehicle_type: Option<String>,
    pub initial_pose: Pose,
}

/// Fully merged scenario with its recognized parts extracted.
///
/// `misc` holds every merged entry that has no typed field here, in its
/// original block structure. Blocks left empty after extraction are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedScenario {
    pub name: String,
    pub layout_database: String,
    pub players: Vec<Player>,
    pub misc: Body,
}

impl ResolvedScenario {
    /// The single externally controlled player.
    pub fn vut(&self) -> Result<&Player, DslError> {
        self.players
            .iter()
            .find(|p| p.control == Control::External)
            .ok_or_else(|| DslError::NoVut { scenario: self.name.clone() })
    }

    /// First internally controlled player, taken as the target vehicle.
    pub fn target(&self) -> Option<&Player> {
        self.players.iter().find(|p| p.control == Control::Internal)
    }

    /// Longitudinal distance from VUT to target, when both are placed.
    pub fn initial_gap(&self) -> Option<f64> {
        let vut = self.vut().ok()?;
        let target = self.target()?;
        Some(target.initial_pose.x - vut.initial_pose.x)
    }

    /// Numeric entry from `misc` by dotted path.
    pub fn misc_number(&self, path: &str) -> Option<f64> {
        self.misc.lookup(path).and_then(Value::as_number)
    }

    /// Rebuilds a self-contained scenario (no `extends`) equivalent to `self`.
    pub fn to_ast(&self) -> DslAst {
        let mut body = Body::default();
        let span = Span::default();
        let entry = |key: &str, value: Value| Entry { key: key.into(), value, span };
        let block = |name: &str, label: Option<&str>, body: Body| Block {
            name: name.into(),
            label: label.map(Into::into),
            body,
            span,
        };
        body.blocks.push(block(
            "Layout",
            None,
            Body { entries: vec![entry("Database", Value::Str(self.layout_database.clone()))], blocks: vec![] },
        ));
        if !self.players.is_empty() {
            let mut traffic = Body::default();
            for p in &self.players {
                let mut desc = Body::default();
                if let Some(d) = &p.driver {
                    desc.entries.push(entry("Driver", text_value(d)));
                }
                desc.entries.push(entry("Control", Value::Ident(p.control.as_str().into())));
                if let Some(t) = &p.vehicle_type {
                    desc.entries.push(entry("Type", text_value(t)));
                }
                let pose = p.initial_pose;
                let init = Body {
                    entries: vec![entry(
                        "PosAbsolute",
                        Value::Tuple(vec![
                            TupleItem::Num(pose.x),
                            TupleItem::Num(pose.y),
                            TupleItem::Num(pose.heading),
                            TupleItem::Bool(pose.relative),
                        ]),
                    )],
                    blocks: vec![],
                };
                traffic.blocks.push(block(
                    "Player",
                    Some(&p.name),
                    Body { entries: vec![], blocks: vec![block("Description", None, desc), block("Init", None, init)] },
                ));
            }
            body.blocks.push(block("TrafficElements", None, traffic));
        }
        let body = merge_bodies(&body, &self.misc, "").expect("misc never conflicts with extracted keys");
        DslAst { scenario_name: self.name.clone(), parent_name: None, body, span }
    }
}

fn text_value(s: &str) -> Value {
    let is_ident = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "true" | "false" | "scenario" | "extends");
    if is_ident {
        Value::Ident(s.into())
    } else {
        Value::Str(s.into())
    }
}

/// Named collection of parsed scenarios that children may extend.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    scenarios: BTreeMap<String, DslAst>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ast: DslAst) -> Result<(), DslError> {
        if self.scenarios.contains_key(&ast.scenario_name) {
            return Err(DslError::DuplicateScenario { name: ast.scenario_name });
        }
        self.scenarios.insert(ast.scenario_name.clone(), ast);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&DslAst> {
        self.scenarios.get(name)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Loads every `*.scn` file in `dir` (non-recursive).
    pub fn load_dir(dir: &Path) -> Result<Self, DslError> {
        let io = |e: std::io::Error| DslError::Io { path: dir.display().to_string(), message: e.to_string() };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "scn"))
            .collect();
        paths.sort();
        let mut registry = Self::new();
        for path in paths {
            let text = std::fs::read(&path)
                .map_err(|e| DslError::Io { path: path.display().to_string(), message: e.to_string() })?;
            let ast = super::parser::parse_bytes(&text)
                .map_err(|e| DslError::File { path: path.display().to_string(), source: Box::new(e) })?;
            registry.insert(ast)?;
        }
        Ok(registry)
    }

    /// Parses `sources` and registers each.
    pub fn from_sources<'a>(sources: impl IntoIterator<Item = &'a str>) -> Result<Self, DslError> {
        let mut registry = Self::new();
        for src in sources {
            registry.insert(parse(src)?)?;
        }
        Ok(registry)
    }
}

/// Merges `child` onto its ancestry and extracts the typed scene model.
pub fn resolve(child: &DslAst, registry: &Registry) -> Result<ResolvedScenario, DslError> {
    let merged = merged_body(child, registry)?;
    extract(&child.scenario_name, merged)
}

/// Root-to-child merge of the ancestry of `child`, before extraction.
pub fn merged_body(child: &DslAst, registry: &Registry) -> Result<Body, DslError> {
    let mut chain = vec![child];
    let mut seen: HashSet<&str> = HashSet::from([child.scenario_name.as_str()]);
    let mut names = vec![child.scenario_name.clone()];
    let mut current = child;
    while let Some(parent) = &current.parent_name {
        names.push(parent.clone());
        if !seen.insert(parent.as_str()) {
            return Err(DslError::CyclicExtends { chain: names });
        }
        let next = registry.get(parent).ok_or_else(|| DslError::UnknownParent {
            scenario: current.scenario_name.clone(),
            parent: parent.clone(),
        })?;
        chain.push(next);
        current = next;
    }
    let mut iter = chain.into_iter().rev();
    let root = iter.next().expect("chain holds the child");
    let mut body = root.body.clone();
    for layer in iter {
        body = merge_bodies(&body, &layer.body, "")?;
    }
    Ok(body)
}

/// Overlays `overlay` onto `base`: overlay entries replace same-key entries,
/// blocks with the same (name, label) merge recursively, the rest is kept.
pub fn merge_bodies(base: &Body, overlay: &Body, path: &str) -> Result<Body, DslError> {
    let mut out = base.clone();
    for entry in &overlay.entries {
        let entry_path = join(path, &entry.key);
        match out.entries.iter_mut().find(|e| e.key == entry.key) {
            Some(existing) => {
                let (expected, found) = (existing.value.kind(), entry.value.kind());
                if expected != found {
                    return Err(DslError::TypeMismatch { path: entry_path, span: entry.span, expected, found });
                }
                *existing = entry.clone();
            }
            None => out.entries.push(entry.clone()),
        }
    }
    for block in &overlay.blocks {
        let block_path = join(path, &block.display_name());
        match out.block_mut(&block.name, block.label.as_deref()) {
            Some(existing) => {
                existing.body = merge_bodies(&existing.body, &block.body, &block_path)?;
            }
            None => out.blocks.push(block.clone()),
        }
    }
    Ok(out)
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn extract(name: &str, mut body: Body) -> Result<ResolvedScenario, DslError> {
    let missing = |path: &str| DslError::MissingKey { scenario: name.into(), path: path.into() };

    let layout = body.block_mut("Layout", None).ok_or_else(|| missing("Layout.Database"))?;
    let db = layout.body.remove_entry("Database").ok_or_else(|| missing("Layout.Database"))?;
    let layout_database = db
        .value
        .as_text()
        .ok_or_else(|| invalid("Layout.Database", db.span, "expected a file path string"))?
        .to_string();

    let mut players = Vec::new();
    if let Some(traffic) = body.block_mut("TrafficElements", None) {
        for block in traffic.body.blocks.iter_mut().filter(|b| b.name == "Player") {
            players.push(extract_player(name, block)?);
        }
    }

    let vuts: Vec<String> = players.iter().filter(|p| p.control == Control::External).map(|p| p.name.clone()).collect();
    if vuts.len() > 1 {
        return Err(DslError::MultipleVut { scenario: name.into(), players: vuts });
    }

    body.prune_empty();
    Ok(ResolvedScenario { name: name.into(), layout_database, players, misc: body })
}

fn invalid(path: &str, span: Span, message: &str) -> DslError {
    DslError::InvalidValue { path: path.into(), span, message: message.into() }
}

fn extract_player(scenario: &str, block: &mut Block) -> Result<Player, DslError> {
    let player_name = block
        .label
        .clone()
        .ok_or_else(|| invalid("TrafficElements.Player", block.span, "player blocks need a name"))?;
    let base = format!("TrafficElements.Player {player_name}");
    let text = |entry: Option<Entry>, key: &str| -> Result<Option<String>, DslError> {
        match entry {
            None => Ok(None),
            Some(e) => e
                .value
                .as_text()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| invalid(&format!("{base}.Description.{key}"), e.span, "expected text")),
        }
    };

    let (driver, control, vehicle_type) = match block.body.block_mut("Description", None) {
        Some(desc) => {
            let driver = text(desc.body.remove_entry("Driver"), "Driver")?;
            let control = match desc.body.remove_entry("Control") {
                None => Control::Internal,
                Some(e) => match e.value.as_text() {
                    Some("external") => Control::External,
                    Some("internal") => Control::Internal,
                    _ => {
                        return Err(invalid(
                            &format!("{base}.Description.Control"),
                            e.span,
                            "expected `external` or `internal`",
                        ))
                    }
                },
            };
            let vehicle_type = text(desc.body.remove_entry("Type"), "Type")?;
            (driver, control, vehicle_type)
        }
        None => (None, Control::Internal, None),
    };

    let pose_path = format!("{base}.Init.PosAbsolute");
    let missing = || DslError::MissingKey { scenario: scenario.into(), path: pose_path.clone() };
    let init = block.body.block_mut("Init", None).ok_or_else(missing)?;
    let pos = init.body.remove_entry("PosAbsolute").ok_or_else(missing)?;
    let initial_pose = pose_from(&pos, &pose_path)?;

    Ok(Player { name: player_name, driver, control, vehicle_type, initial_pose })
}

fn pose_from(entry: &Entry, path: &str) -> Result<Pose, DslError> {
    let bad = || invalid(path, entry.span, "expected (x, y, heading) or (x, y, heading, relative)");
    let Value::Tuple(items) = &entry.value else {
        return Err(bad());
    };
    let num = |i: usize| match items.get(i) {
        Some(TupleItem::Num(n)) => Ok(*n),
        _ => Err(bad()),
    };
    let relative = match items.len() {
        3 => false,
        4 => match items[3] {
            TupleItem::Bool(b) => b,
            TupleItem::Num(_) => return Err(bad()),
        },
        _ => return Err(bad()),
    };
    Ok(Pose { x: num(0)?, y: num(1)?, heading: num(2)?, relative })
}
