//! Line-oriented PIM text.
//!
//! ```text
//! pim Alarm clock
//! initial Home
//! state Home
//!   widget hotspot_1 ActionControl
//!     i I_Settings -> Settings
//!     s S_beep
//! state Settings
//! ```
//!
//! States and widgets are written sorted by name; behaviours keep their order.
//! Transitions are not stored: they are derived from the I-behaviour lines.

use super::{decode_utf8, FormatError};
use crate::pim::{validate_pim, Behaviour, Pim, PresentationModel, Widget, WidgetCategory};

const WIDGET_INDENT: &str = "  ";
const BEHAVIOUR_INDENT: &str = "    ";

pub fn export_pim_text(pim: &Pim) -> Result<Vec<u8>, FormatError> {
    let violations = validate_pim(pim);
    if !violations.is_empty() {
        return Err(FormatError::InvalidPim(violations));
    }
    let pim = pim.canonical();
    let mut out = String::new();
    out.push_str(&format!("pim {}\ninitial {}\n", pim.name, pim.initial));
    for state in &pim.states {
        out.push_str(&format!("state {}\n", state.name));
        for widget in &state.widgets {
            out.push_str(&format!(
                "{WIDGET_INDENT}widget {} {}\n",
                widget.name, widget.category
            ));
            for b in &widget.behaviours {
                match b {
                    Behaviour::Interaction { name, target } => {
                        out.push_str(&format!("{BEHAVIOUR_INDENT}i {name} -> {target}\n"))
                    }
                    Behaviour::System { name } => {
                        out.push_str(&format!("{BEHAVIOUR_INDENT}s {name}\n"))
                    }
                }
            }
        }
    }
    Ok(out.into_bytes())
}

struct Line<'a> {
    number: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn error(&self, column: usize, message: impl Into<String>) -> FormatError {
        FormatError::Parse {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    /// Splits the remainder after `skip` bytes into single-space separated tokens
    /// with their 1-based columns.
    fn tokens(&self, skip: usize) -> Result<Vec<(usize, &'a str)>, FormatError> {
        let mut out = Vec::new();
        let mut col = self.text[..skip].chars().count() + 1;
        for (i, tok) in self.text[skip..].split(' ').enumerate() {
            if tok.is_empty() {
                let msg = if i == 0 {
                    "unexpected space"
                } else {
                    "empty token (double or trailing space)"
                };
                return Err(self.error(col, msg));
            }
            out.push((col, tok));
            col += tok.chars().count() + 1;
        }
        Ok(out)
    }

    fn expect_count(
        &self,
        tokens: &[(usize, &str)],
        n: usize,
        what: &str,
    ) -> Result<(), FormatError> {
        if tokens.len() == n {
            Ok(())
        } else {
            let col = tokens.get(n).map_or(self.text.chars().count() + 1, |t| t.0);
            Err(self.error(col, format!("expected {what}")))
        }
    }
}

pub fn parse_pim_text(bytes: &[u8]) -> Result<Pim, FormatError> {
    let text = decode_utf8(bytes)?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n').enumerate().map(|(i, text)| Line {
        number: i + 1,
        text,
    });

    for line in body.split('\n').enumerate() {
        if let Some(col) = line.1.find('\r') {
            return Err(FormatError::Parse {
                line: line.0 + 1,
                column: line.1[..col].chars().count() + 1,
                message: "carriage return; files must use LF line endings".into(),
            });
        }
    }

    let header = lines.next().expect("split yields at least one item");
    let name = header
        .text
        .strip_prefix("pim ")
        .ok_or_else(|| header.error(1, "expected `pim <name>`"))?;
    if name.is_empty() {
        return Err(header.error(5, "missing PIM name"));
    }

    let line = lines.next().ok_or_else(|| FormatError::Parse {
        line: 2,
        column: 1,
        message: "expected `initial <state>`".into(),
    })?;
    if !line.text.starts_with("initial ") {
        return Err(line.error(1, "expected `initial <state>`"));
    }
    let toks = line.tokens("initial ".len())?;
    line.expect_count(&toks, 1, "a single state name")?;
    let initial = toks[0].1.to_owned();

    let mut states: Vec<PresentationModel> = Vec::new();
    for line in lines {
        if line.text.is_empty() {
            continue;
        }
        if let Some(rest) = line.text.strip_prefix(BEHAVIOUR_INDENT) {
            let widget = states
                .last_mut()
                .and_then(|s| s.widgets.last_mut())
                .ok_or_else(|| line.error(1, "behaviour outside of a widget"))?;
            let toks = line.tokens(BEHAVIOUR_INDENT.len())?;
            match rest.split(' ').next() {
                Some("i") => {
                    line.expect_count(&toks, 4, "`i <I_name> -> <target>`")?;
                    if toks[2].1 != "->" {
                        return Err(line.error(toks[2].0, "expected `->`"));
                    }
                    widget
                        .behaviours
                        .push(Behaviour::interaction(toks[1].1, toks[3].1));
                }
                Some("s") => {
                    line.expect_count(&toks, 2, "`s <S_name>`")?;
                    widget.behaviours.push(Behaviour::system(toks[1].1));
                }
                _ => return Err(line.error(5, "expected `i` or `s`")),
            }
        } else if line.text.starts_with(WIDGET_INDENT) {
            let state = states
                .last_mut()
                .ok_or_else(|| line.error(1, "widget outside of a state"))?;
            if !line.text[WIDGET_INDENT.len()..].starts_with("widget ") {
                return Err(line.error(3, "expected `widget <name> <category>`"));
            }
            let toks = line.tokens(WIDGET_INDENT.len() + "widget ".len())?;
            line.expect_count(&toks, 2, "`widget <name> <category>`")?;
            let category = WidgetCategory::parse(toks[1].1).ok_or_else(|| {
                line.error(
                    toks[1].0,
                    format!("unknown widget category {:?}", toks[1].1),
                )
            })?;
            state.widgets.push(Widget {
                name: toks[0].1.to_owned(),
                category,
                behaviours: Vec::new(),
            });
        } else if line.text.starts_with("state ") {
            let toks = line.tokens("state ".len())?;
            line.expect_count(&toks, 1, "a single state name")?;
            states.push(PresentationModel {
                name: toks[0].1.to_owned(),
                widgets: Vec::new(),
            });
        } else {
            return Err(line.error(1, "expected `state`, `widget` or a behaviour line"));
        }
    }

    let pim = Pim {
        name: name.to_owned(),
        transitions: Pim::derive_transitions(&states),
        states,
        initial,
    };
    let violations = validate_pim(&pim);
    if violations.is_empty() {
        Ok(pim)
    } else {
        Err(FormatError::PimInvariant(violations))
    }
}
