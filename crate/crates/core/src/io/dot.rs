use super::FormatError;
use crate::pim::{validate_pim, Pim};

const KEYWORDS: [&str; 6] = ["node", "edge", "graph", "digraph", "subgraph", "strict"];

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// State names are identifiers already; only DOT keywords need quoting.
fn node_id(name: &str) -> String {
    if KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(name)) {
        quote(name)
    } else {
        name.to_owned()
    }
}

/// Renders the PIM as a Graphviz digraph. The initial state has a double border.
pub fn export_dot(pim: &Pim) -> Result<Vec<u8>, FormatError> {
    let violations = validate_pim(pim);
    if !violations.is_empty() {
        return Err(FormatError::InvalidPim(violations));
    }
    let pim = pim.canonical();
    let mut out = format!("digraph {} {{\n", quote(&pim.name));
    for state in &pim.states {
        if state.name == pim.initial {
            out.push_str(&format!("  {} [peripheries=2];\n", node_id(&state.name)));
        } else {
            out.push_str(&format!("  {};\n", node_id(&state.name)));
        }
    }
    for t in &pim.transitions {
        out.push_str(&format!(
            "  {} -> {} [label={}];\n",
            node_id(&t.source),
            node_id(&t.target),
            quote(&t.behaviour)
        ));
    }
    out.push_str("}\n");
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_pim_text;

    #[test]
    fn chain() {
        let pim = parse_pim_text(
            b"pim chain\ninitial A\nstate A\n  widget go ActionControl\n    i I_B -> B\nstate B\n",
        )
        .unwrap();
        let dot = String::from_utf8(export_dot(&pim).unwrap()).unwrap();
        assert_eq!(
            dot,
            "digraph \"chain\" {\n  A [peripheries=2];\n  B;\n  A -> B [label=\"I_B\"];\n}\n"
        );
    }

    #[test]
    fn nodes_only_and_keywords() {
        let pim = parse_pim_text(b"pim say \"hi\"\ninitial Node\nstate Node\n").unwrap();
        let dot = String::from_utf8(export_dot(&pim).unwrap()).unwrap();
        assert_eq!(
            dot,
            "digraph \"say \\\"hi\\\"\" {\n  \"Node\" [peripheries=2];\n}\n"
        );
    }
}
