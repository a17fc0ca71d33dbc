//! Independent reference computations used to check the engine.
//!
//! Nothing here calls into the converter or analyzer; the oracles work from
//! the raw project structure or the PIM's state/transition lists.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use pimp_core::{Pim, Project};

/// Number of distinct (source screen, target screen) pairs joined by at least one link.
pub fn distinct_linked_pairs(project: &Project) -> usize {
    let mut pairs = HashSet::new();
    for screen in project.screens() {
        for h in &screen.hotspots {
            if let Some(target) = &h.link_target {
                pairs.insert((screen.id.clone(), target.clone()));
            }
        }
    }
    pairs.len()
}

fn matrix(pim: &Pim) -> (Vec<String>, Vec<Vec<bool>>) {
    let names: Vec<String> = pim.states.iter().map(|s| s.name.clone()).collect();
    let idx: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = names.len();
    let mut adj = vec![vec![false; n]; n];
    for t in &pim.transitions {
        adj[idx[t.source.as_str()]][idx[t.target.as_str()]] = true;
    }
    (names, adj)
}

/// Reachable states via transitive closure by repeated boolean matrix products:
/// R_{k+1} = R_k OR R_k * A, starting from R_0 = I, until a fixpoint.
pub fn closure_reachable(pim: &Pim) -> BTreeSet<String> {
    let (names, adj) = matrix(pim);
    let n = names.len();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    for _ in 0..n {
        let mut next = reach.clone();
        for i in 0..n {
            for k in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if adj[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        if next == reach {
            break;
        }
        reach = next;
    }
    let init = names.iter().position(|s| *s == pim.initial).unwrap();
    (0..n)
        .filter(|&j| reach[init][j])
        .map(|j| names[j].clone())
        .collect()
}

/// Every simple path (no repeated state) from the initial state to `target`.
pub fn simple_paths(pim: &Pim, target: &str) -> Vec<Vec<String>> {
    let (names, adj) = matrix(pim);
    let n = names.len();
    let start = names.iter().position(|s| *s == pim.initial).unwrap();
    let goal = names.iter().position(|s| s == target).unwrap();
    let mut out = Vec::new();
    let mut path = vec![start];
    let mut on_path = vec![false; n];
    on_path[start] = true;

    fn dfs(
        u: usize,
        goal: usize,
        adj: &[Vec<bool>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if u == goal {
            out.push(path.clone());
            return;
        }
        for v in 0..adj.len() {
            if adj[u][v] && !on_path[v] {
                on_path[v] = true;
                path.push(v);
                dfs(v, goal, adj, path, on_path, out);
                path.pop();
                on_path[v] = false;
            }
        }
    }
    let mut raw = Vec::new();
    dfs(start, goal, &adj, &mut path, &mut on_path, &mut raw);
    for p in raw {
        out.push(p.into_iter().map(|i| names[i].clone()).collect());
    }
    out
}

/// (holds, vacuous) for "every path from initial to target visits gate".
pub fn must_pass_by_enumeration(pim: &Pim, gate: &str, target: &str) -> (bool, bool) {
    let paths = simple_paths(pim, target);
    if paths.is_empty() {
        return (true, true);
    }
    (paths.iter().all(|p| p.iter().any(|s| s == gate)), false)
}

/// Transitions whose source is reachable, as (source, behaviour) pairs.
pub fn reachable_transitions(pim: &Pim) -> BTreeSet<(String, String)> {
    let reach = closure_reachable(pim);
    pim.transitions
        .iter()
        .filter(|t| reach.contains(&t.source))
        .map(|t| (t.source.clone(), t.behaviour.clone()))
        .collect()
}

/// (source, target, label)
pub type DotEdge = (String, String, Option<String>);

/// Minimal DOT grammar checker for the subset a digraph export may use:
///
/// ```text
/// graph     : 'digraph' ID? '{' stmt* '}'
/// stmt      : (node_stmt | edge_stmt | attr_assign) ';'?
/// node_stmt : ID attr_list?
/// edge_stmt : ID ('->' ID)+ attr_list?
/// attr_list : '[' (ID '=' ID (','|';')?)* ']'
/// ID        : [A-Za-z_][A-Za-z0-9_]* | numeral | "quoted string"
/// ```
///
/// Returns the declared node ids and edges on success.
pub fn check_dot(text: &str) -> Result<(BTreeSet<String>, Vec<DotEdge>), String> {
    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Id(String, bool),
        Sym(&'static str),
    }
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('\\') if chars.get(i + 1) == Some(&'"') => {
                        s.push('"');
                        i += 2;
                    }
                    Some('\\') if chars.get(i + 1) == Some(&'\\') => {
                        s.push('\\');
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            toks.push(Tok::Id(s, true));
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word.starts_with(|c: char| c.is_ascii_digit())
                && !word.chars().all(|c| c.is_ascii_digit())
            {
                return Err(format!("invalid ID {word}"));
            }
            toks.push(Tok::Id(word, false));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push(Tok::Sym("->"));
            i += 2;
        } else {
            let sym = match c {
                '{' => "{",
                '}' => "}",
                '[' => "[",
                ']' => "]",
                '=' => "=",
                ';' => ";",
                ',' => ",",
                other => return Err(format!("unexpected character {other:?}")),
            };
            toks.push(Tok::Sym(sym));
            i += 1;
        }
    }

    const KEYWORDS: [&str; 6] = ["node", "edge", "graph", "digraph", "subgraph", "strict"];
    let id = |pos: &mut usize| -> Result<String, String> {
        match toks.get(*pos) {
            Some(Tok::Id(s, quoted)) => {
                if !quoted && KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s)) {
                    return Err(format!("keyword {s} used as ID"));
                }
                *pos += 1;
                Ok(s.clone())
            }
            other => Err(format!("expected ID, got {other:?}")),
        }
    };
    let sym = |pos: &mut usize, s: &'static str| -> bool {
        if toks.get(*pos) == Some(&Tok::Sym(s)) {
            *pos += 1;
            true
        } else {
            false
        }
    };

    let mut pos = match toks.first() {
        Some(Tok::Id(s, false)) if s == "digraph" => 1,
        _ => return Err("expected `digraph`".into()),
    };
    if !matches!(toks.get(pos), Some(Tok::Sym("{"))) {
        id(&mut pos)?;
    }
    if !sym(&mut pos, "{") {
        return Err("expected `{`".into());
    }
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    loop {
        if sym(&mut pos, "}") {
            break;
        }
        let first = id(&mut pos)?;
        if sym(&mut pos, "=") {
            id(&mut pos)?;
        } else {
            let mut chain = vec![first];
            while sym(&mut pos, "->") {
                chain.push(id(&mut pos)?);
            }
            let mut label = None;
            if sym(&mut pos, "[") {
                while !sym(&mut pos, "]") {
                    let key = id(&mut pos)?;
                    if !sym(&mut pos, "=") {
                        return Err("expected `=` in attribute list".into());
                    }
                    let value = id(&mut pos)?;
                    if key == "label" {
                        label = Some(value);
                    }
                    let _ = sym(&mut pos, ",") || sym(&mut pos, ";");
                }
            }
            if chain.len() == 1 {
                nodes.insert(chain.pop().unwrap());
            } else {
                for w in chain.windows(2) {
                    edges.push((w[0].clone(), w[1].clone(), label.clone()));
                }
            }
        }
        let _ = sym(&mut pos, ";");
    }
    if pos != toks.len() {
        return Err("trailing tokens after graph".into());
    }
    Ok((nodes, edges))
}
