//! Diagram file format and Graphviz export.
//!
//! A `.vssdd` file is self-contained: a vtree section followed by the
//! structure section, so query commands need no side files. Structure ids
//! are renumbered on write (terminals 0..=3, decompositions from 4 in
//! child-first order), which makes serialization deterministic and
//! round trips bit-exact.

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vssdd::{
    Element, Mode, StructId, VsManager, VsPayload, VsSdd, VS_FALSE, VS_NEG, VS_POS, VS_TRUE,
};
use crate::vtree::Vtree;

pub fn serialize_diagram(mgr: &VsManager, f: VsSdd) -> String {
    let mut order: Vec<StructId> = Vec::new();
    let mut seen: HashMap<StructId, u32> = HashMap::new();
    seen.insert(VS_FALSE, 0);
    seen.insert(VS_TRUE, 1);
    seen.insert(VS_POS, 2);
    seen.insert(VS_NEG, 3);

    fn visit(
        mgr: &VsManager,
        s: StructId,
        seen: &mut HashMap<StructId, u32>,
        order: &mut Vec<StructId>,
    ) {
        if seen.contains_key(&s) {
            return;
        }
        for el in mgr.elements(s).unwrap().to_vec() {
            visit(mgr, el.prime, seen, order);
            visit(mgr, el.sub, seen, order);
        }
        seen.insert(s, 4 + order.len() as u32);
        order.push(s);
    }
    visit(mgr, f.structure, &mut seen, &mut order);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "c mode {} compress {}",
        match mgr.mode() {
            Mode::Trimmed => "trimmed",
            Mode::Normalized => "normalized",
        },
        if mgr.compression() { "on" } else { "off" }
    );
    out.push_str(&mgr.vtree().serialize());
    let _ = writeln!(out, "vssdd {}", 4 + order.len());
    let _ = writeln!(out, "T 0 0");
    let _ = writeln!(out, "T 1 1");
    let _ = writeln!(out, "V 2");
    let _ = writeln!(out, "NV 3");
    for &s in &order {
        let elems = mgr.elements(s).unwrap();
        let _ = write!(out, "D {} {} {}", seen[&s], mgr.class_of(s), elems.len());
        for el in elems {
            let _ = write!(out, " {} {} {} {}", seen[&el.prime], el.d, seen[&el.sub], el.e);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "root {} {}", seen[&f.structure], f.offset);
    out
}

/// Parses a diagram file into a fresh manager configured from the file's
/// mode line.
pub fn parse_diagram(text: &str) -> Result<(VsManager, VsSdd)> {
    let (mode, compress) = parse_mode_line(text)?;
    let vtree = Arc::new(parse_inline_vtree(text)?);
    let mut mgr = VsManager::new(vtree, mode, compress);
    let root = parse_diagram_into(text, &mut mgr)?;
    Ok((mgr, root))
}

/// Parses a diagram file into an existing manager. The file's vtree must
/// match the manager's; structures are re-interned, so equal functions from
/// different files get identical handles.
pub fn parse_diagram_into(text: &str, mgr: &mut VsManager) -> Result<VsSdd> {
    let vtree = parse_inline_vtree(text)?;
    if vtree.shape_of(vtree.root()) != mgr.vtree().shape_of(mgr.vtree().root()) {
        return Err(Error::InvalidInput(
            "diagram vtree does not match the manager's vtree".into(),
        ));
    }

    let mut ids: HashMap<u32, StructId> = HashMap::new();
    let mut expected: Option<usize> = None;
    let mut declared = 0usize;
    let mut root: Option<VsSdd> = None;
    let mut in_section = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let head = tok.next().unwrap();
        if !in_section {
            if head == "vssdd" {
                in_section = true;
                expected = Some(
                    tok.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::parse(lineno, "malformed vssdd header"))?,
                );
            }
            continue;
        }
        match head {
            "T" => {
                let id = take::<u32>(&mut tok, lineno, "terminal id")?;
                let val = take::<u32>(&mut tok, lineno, "terminal value")?;
                ids.insert(id, if val == 0 { VS_FALSE } else { VS_TRUE });
                declared += 1;
            }
            "V" => {
                ids.insert(take::<u32>(&mut tok, lineno, "literal id")?, VS_POS);
                declared += 1;
            }
            "NV" => {
                ids.insert(take::<u32>(&mut tok, lineno, "literal id")?, VS_NEG);
                declared += 1;
            }
            "D" => {
                let id = take::<u32>(&mut tok, lineno, "node id")?;
                let class = take::<u32>(&mut tok, lineno, "class id")?;
                let n = take::<u32>(&mut tok, lineno, "element count")? as usize;
                let mut elements = Vec::with_capacity(n);
                for _ in 0..n {
                    let prime_file = take::<u32>(&mut tok, lineno, "prime id")?;
                    let d = take::<i32>(&mut tok, lineno, "prime delta")?;
                    let sub_file = take::<u32>(&mut tok, lineno, "sub id")?;
                    let e = take::<i32>(&mut tok, lineno, "sub delta")?;
                    let prime = *ids
                        .get(&prime_file)
                        .ok_or_else(|| Error::parse(lineno, format!("undefined structure {prime_file}")))?;
                    let sub = *ids
                        .get(&sub_file)
                        .ok_or_else(|| Error::parse(lineno, format!("undefined structure {sub_file}")))?;
                    elements.push(Element { prime, d, sub, e });
                }
                let interned = mgr
                    .intern_raw(class, elements)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
                ids.insert(id, interned);
                declared += 1;
            }
            "root" => {
                let id = take::<u32>(&mut tok, lineno, "root id")?;
                let offset = take::<u32>(&mut tok, lineno, "root offset")?;
                let structure = *ids
                    .get(&id)
                    .ok_or_else(|| Error::parse(lineno, format!("undefined structure {id}")))?;
                root = Some(VsSdd { structure, offset });
            }
            _ => return Err(Error::parse(lineno, format!("unexpected line `{head}`"))),
        }
    }

    if let Some(exp) = expected {
        if exp != declared {
            return Err(Error::parse(0, format!("header declared {exp} structures, found {declared}")));
        }
    } else {
        return Err(Error::parse(0, "missing vssdd section"));
    }
    root.ok_or_else(|| Error::parse(0, "missing root line"))
}

fn take<'a, T: std::str::FromStr>(
    tok: &mut impl Iterator<Item = &'a str>,
    lineno: usize,
    what: &str,
) -> Result<T> {
    tok.next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(lineno, format!("missing or invalid {what}")))
}

fn parse_mode_line(text: &str) -> Result<(Mode, bool)> {
    for line in text.lines() {
        let toks: Vec<&str> = line.trim().split_whitespace().collect();
        if let ["c", "mode", mode, "compress", comp] = toks.as_slice() {
            let mode = match *mode {
                "trimmed" => Mode::Trimmed,
                "normalized" => Mode::Normalized,
                other => {
                    return Err(Error::InvalidInput(format!("unknown mode `{other}`")));
                }
            };
            return Ok((mode, *comp == "on"));
        }
    }
    // Default for files written by other tools.
    Ok((Mode::Trimmed, true))
}

/// Extracts and parses the vtree section of a diagram file.
fn parse_inline_vtree(text: &str) -> Result<Vtree> {
    let mut section = String::new();
    let mut in_vtree = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("vtree ") {
            in_vtree = true;
        } else if trimmed.starts_with("vssdd ") {
            break;
        } else if !in_vtree {
            continue;
        }
        section.push_str(trimmed);
        section.push('\n');
    }
    if section.is_empty() {
        return Err(Error::parse(0, "missing vtree section"));
    }
    Vtree::parse(&section)
}

/// Graphviz DOT rendering: one record node per decomposition with a cell
/// per element half, child edges labeled with their deltas, and the root
/// annotated with its offset.
pub fn export_dot(mgr: &VsManager, f: VsSdd) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph vssdd {{");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  root [shape=none, label=\"offset {}\"];", f.offset);
    let _ = writeln!(out, "  root -> n{};", f.structure);

    let mut stack = vec![f.structure];
    let mut seen = std::collections::HashSet::new();
    while let Some(s) = stack.pop() {
        if !seen.insert(s) {
            continue;
        }
        match mgr.payload(s) {
            VsPayload::False => {
                let _ = writeln!(out, "  n{s} [shape=box, label=\"F\"];");
            }
            VsPayload::True => {
                let _ = writeln!(out, "  n{s} [shape=box, label=\"T\"];");
            }
            VsPayload::PosLit => {
                let _ = writeln!(out, "  n{s} [shape=box, label=\"v\"];");
            }
            VsPayload::NegLit => {
                let _ = writeln!(out, "  n{s} [shape=box, label=\"~v\"];");
            }
            VsPayload::Decomposition(elements) => {
                let cells: Vec<String> = (0..elements.len())
                    .map(|i| format!("{{<p{i}>p|<s{i}>s}}"))
                    .collect();
                let _ = writeln!(out, "  n{s} [shape=record, label=\"{}\"];", cells.join("|"));
                for (i, el) in elements.to_vec().into_iter().enumerate() {
                    let _ = writeln!(out, "  n{s}:p{i} -> n{} [label=\"{}\"];", el.prime, el.d);
                    let _ = writeln!(out, "  n{s}:s{i} -> n{} [label=\"{}\"];", el.sub, el.e);
                    stack.push(el.prime);
                    stack.push(el.sub);
                }
            }
        }
    }
    let _ = writeln!(out, "}}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Op;
    use crate::vtree::Vtree;

    fn running_example(m: &mut VsManager) -> VsSdd {
        let a = m.literal(1, true).unwrap();
        let b = m.literal(2, true).unwrap();
        let c = m.literal(3, true).unwrap();
        let d = m.literal(4, true).unwrap();
        let ab = m.apply(a, b, Op::And).unwrap();
        let bc = m.apply(b, c, Op::And).unwrap();
        let cd = m.apply(c, d, Op::And).unwrap();
        let t = m.apply(ab, bc, Op::Or).unwrap();
        m.apply(t, cd, Op::Or).unwrap()
    }

    fn mgr4() -> VsManager {
        VsManager::new(
            Arc::new(Vtree::build_balanced(&[1, 2, 3, 4]).unwrap()),
            Mode::Trimmed,
            true,
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let text = serialize_diagram(&m, f);
        let (m2, f2) = parse_diagram(&text).unwrap();
        assert_eq!(serialize_diagram(&m2, f2), text);
        assert_eq!(
            crate::oracle::table_of_vs(&m, f).unwrap(),
            crate::oracle::table_of_vs(&m2, f2).unwrap()
        );
    }

    #[test]
    fn constants_round_trip() {
        let m = mgr4();
        let text = serialize_diagram(&m, m.constant(true));
        let (m2, f2) = parse_diagram(&text).unwrap();
        assert_eq!(f2, m2.constant(true));
    }

    #[test]
    fn two_files_share_handles_in_one_manager() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let text = serialize_diagram(&m, f);
        let (mut m2, f2) = parse_diagram(&text).unwrap();
        let again = parse_diagram_into(&text, &mut m2).unwrap();
        assert_eq!(f2, again);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_diagram("hello\n").is_err());
        let m = mgr4();
        let text = serialize_diagram(&m, m.constant(true));
        let broken = text.replace("root 1 0", "root 77 0");
        assert!(parse_diagram(&broken).is_err());
        let mut other = VsManager::new(
            Arc::new(Vtree::build_balanced(&[1, 2]).unwrap()),
            Mode::Trimmed,
            true,
        );
        assert!(parse_diagram_into(&text, &mut other).is_err());
    }

    #[test]
    fn dot_export_shows_shared_deltas() {
        let mut m = mgr4();
        let f = running_example(&mut m);
        let dot = export_dot(&m, f);
        assert!(dot.starts_with("digraph vssdd {"));
        assert!(dot.contains("offset 1"));
        assert!(dot.contains("[label=\"1\"]"));
        assert!(dot.contains("[label=\"4\"]"));
        let top = export_dot(&m, m.constant(true));
        assert!(top.contains("label=\"T\""));
    }
}
