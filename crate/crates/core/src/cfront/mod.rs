//! C front end: tokenizer and statement-granular function parser.

mod lexer;
mod parser;

pub use lexer::{is_keyword, tokenize, Token, TokenKind, KEYWORDS, MULTI_CHAR_OPS};
pub use parser::{join_texts, parse_function, Access, Ast, AstNode, Def, NodeId, NodeKind, Role, StmtId, Use};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontError {
    #[error("unterminated literal starting at {line}:{col}")]
    UnterminatedLiteral { line: u32, col: u32 },
    #[error("unterminated comment starting at {line}:{col}")]
    UnterminatedComment { line: u32, col: u32 },
    #[error("no function definition found")]
    NotAFunction,
    #[error("braces do not nest")]
    UnbalancedBraces,
    #[error("tokens after the end of the function body")]
    TrailingTokens,
}

/// Tokenizes and parses a single function.
pub fn parse_source(source: &str) -> Result<Ast, FrontError> {
    parse_function(tokenize(source)?)
}

/// Lays tokens out as readable C: one statement per line, braces on their own
/// lines, four-space indentation. Tokens are always separated so the output
/// re-tokenizes to the same sequence.
pub fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut indent = 0usize;
    let mut paren = 0i32;
    let mut line_start = true;
    for (i, t) in tokens.iter().enumerate() {
        let text = t.text.as_str();
        if text == "}" {
            indent = indent.saturating_sub(1);
            if !line_start {
                out.push('\n');
                line_start = true;
            }
        }
        if line_start {
            out.push_str(&"    ".repeat(indent));
        } else {
            out.push(' ');
        }
        out.push_str(text);
        line_start = false;
        match text {
            "(" => paren += 1,
            ")" => paren -= 1,
            "{" => {
                indent += 1;
                out.push('\n');
                line_start = true;
            }
            "}" => {
                let joins = tokens.get(i + 1).is_some_and(|n| matches!(n.text.as_str(), "else" | "while" | ";"));
                if !joins {
                    out.push('\n');
                    line_start = true;
                }
            }
            ";" if paren == 0 => {
                out.push('\n');
                line_start = true;
            }
            _ => {}
        }
    }
    if !line_start {
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips_tokens() {
        let src = "int f(int a){if(a>1){a=2;}else a--;for(;;){break;}return a;}";
        let toks = tokenize(src).unwrap();
        let text = render_tokens(&toks);
        assert_eq!(tokenize(&text).unwrap().iter().map(|t| &t.text).collect::<Vec<_>>(), toks.iter().map(|t| &t.text).collect::<Vec<_>>());
        assert!(text.contains("\n    if ( a > 1 ) {\n        a = 2 ;\n    }"));
    }
}
