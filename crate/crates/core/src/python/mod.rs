//! Python-subset front end: magic stripping, tokenizer and parser.

pub mod ast;
mod lexer;
mod parser;

use alloc::string::String;

pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{is_keyword, parse_expression, parse_module, ParseError, KEYWORDS};

/// Cell magics whose body is still Python.
const PYTHON_CELL_MAGICS: &[&str] = &["time", "timeit", "capture", "prun", "debug"];

/// Removes IPython syntax so the remainder parses as plain Python.
///
/// Line magics (`%matplotlib inline`), shell escapes (`!pip install x`) and
/// help queries (`df?`) are blanked out. `x = !ls` keeps the binding as
/// `x = None`. A cell magic for a non-Python language blanks the whole cell.
/// Line numbering is preserved.
pub fn strip_magics(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for (i, line) in src.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let trimmed = line.trim_start();
        if i == 0 {
            if let Some(magic) = trimmed.strip_prefix("%%") {
                let name = magic.split_whitespace().next().unwrap_or("");
                if !PYTHON_CELL_MAGICS.contains(&name) {
                    return String::new();
                }
                continue;
            }
        }
        if trimmed.starts_with('%') || trimmed.starts_with('!') {
            continue;
        }
        if !trimmed.starts_with('#') && trimmed.trim_end().ends_with('?') && !trimmed.contains(['\'', '"']) {
            continue;
        }
        if let Some((lhs, rhs)) = line.split_once('=') {
            let rhs = rhs.trim_start();
            let lhs_ok = !lhs.trim().is_empty()
                && lhs.trim().chars().all(|c| c == '_' || c == ',' || c == ' ' || c.is_alphanumeric());
            if lhs_ok && (rhs.starts_with('!') || rhs.starts_with('%')) && !rhs.starts_with("!=") {
                out.push_str(lhs);
                out.push_str("= None");
                continue;
            }
        }
        out.push_str(line);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_magics_and_shell_are_removed() {
        let s = strip_magics("%matplotlib inline\n!pip install x\nimport os\ndf?\n");
        assert_eq!(s, "\n\nimport os\n\n");
    }

    #[test]
    fn shell_assignment_keeps_binding() {
        assert_eq!(strip_magics("files = !ls"), "files = None");
    }

    #[test]
    fn foreign_cell_magic_blanks_cell() {
        assert_eq!(strip_magics("%%bash\nls -la\n"), "");
        assert_eq!(strip_magics("%%time\nx = 1"), "\nx = 1");
    }

    #[test]
    fn comparisons_are_not_shell_escapes() {
        assert_eq!(strip_magics("ok = a != b"), "ok = a != b");
    }
}
