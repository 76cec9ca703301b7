//! Scene document writer.
//!
//! The dialect is small and self-contained:
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <scene name="CCRs_25kmh">
//!   <layout database="test.xodr"/>
//!   <players>
//!     <player control="external" driver="DefaultDriver" name="VehicleUnderTest" pose="0 0 0" relative="true" type="Brand_VehicleProject"/>
//!   </players>
//!   <misc>
//!     <block name="VehicleList">
//!       <entry key="ConfigFile" kind="string" value="cfg.xml"/>
//!     </block>
//!   </misc>
//! </scene>
//! ```
//!
//! Attributes are written in name order, players sorted by name, misc
//! entries by key and misc blocks by (name, label). Identical inputs give
//! identical bytes.

use std::fmt::Write as _;

use super::ast::{Block, Body};
use super::resolve::ResolvedScenario;

pub fn generate_scene(rs: &ResolvedScenario) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<scene name=\"{}\">", escape(&rs.name));
    let _ = writeln!(out, "  <layout database=\"{}\"/>", escape(&rs.layout_database));

    let mut players: Vec<_> = rs.players.iter().collect();
    players.sort_by(|a, b| a.name.cmp(&b.name));
    if players.is_empty() {
        out.push_str("  <players/>\n");
    } else {
        out.push_str("  <players>\n");
        for p in players {
            let pose = p.initial_pose;
            let mut attrs: Vec<(&str, String)> = vec![
                ("control", p.control.as_str().to_string()),
                ("name", p.name.clone()),
                ("pose", format!("{} {} {}", pose.x, pose.y, pose.heading)),
                ("relative", pose.relative.to_string()),
            ];
            if let Some(d) = &p.driver {
                attrs.push(("driver", d.clone()));
            }
            if let Some(t) = &p.vehicle_type {
                attrs.push(("type", t.clone()));
            }
            attrs.sort_by(|a, b| a.0.cmp(b.0));
            out.push_str("    <player");
            for (k, v) in attrs {
                let _ = write!(out, " {k}=\"{}\"", escape(&v));
            }
            out.push_str("/>\n");
        }
        out.push_str("  </players>\n");
    }

    if rs.misc.is_empty() {
        out.push_str("  <misc/>\n");
    } else {
        out.push_str("  <misc>\n");
        write_body(&mut out, &rs.misc, 2);
        out.push_str("  </misc>\n");
    }
    out.push_str("</scene>\n");
    out
}

fn write_body(out: &mut String, body: &Body, depth: usize) {
    let pad = "  ".repeat(depth);
    let mut entries: Vec<_> = body.entries.iter().collect();
    entries.sort_by(|a, b| a.key.cmp(&b.key));
    for e in entries {
        let _ = writeln!(
            out,
            "{pad}<entry key=\"{}\" kind=\"{}\" value=\"{}\"/>",
            escape(&e.key),
            e.value.tag(),
            escape(&e.value.plain())
        );
    }
    let mut blocks: Vec<&Block> = body.blocks.iter().collect();
    blocks.sort_by(|a, b| a.key().cmp(&b.key()));
    for b in blocks {
        let label = b.label.as_ref().map(|l| format!(" label=\"{}\"", escape(l))).unwrap_or_default();
        if b.body.is_empty() {
            let _ = writeln!(out, "{pad}<block{label} name=\"{}\"/>", escape(&b.name));
        } else {
            let _ = writeln!(out, "{pad}<block{label} name=\"{}\">", escape(&b.name));
            write_body(out, &b.body, depth + 1);
            let _ = writeln!(out, "{pad}</block>");
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}
