//! Tokenizer for the supported C subset.
//!
//! Comments and whitespace are dropped. Punctuation is emitted one character
//! at a time except for the multi-character operators in [`MULTI_CHAR_OPS`].

use serde::{Deserialize, Serialize};

use super::FrontError;

/// Operators that are kept as a single token.
pub const MULTI_CHAR_OPS: [&str; 11] = [
    "==", "!=", "<=", ">=", "->", "&&", "||", "++", "--", "+=", "-=",
];

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch",
    "typedef", "union", "unsigned", "void", "volatile", "while", "_Bool",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    StringLiteral,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in characters.
    pub col: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Identifier
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line: 1, col: 1, _src: src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits C source into tokens.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontError> {
    let mut cur = Cursor::new(source);
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            let (line, col) = (cur.line, cur.col);
            cur.bump();
            cur.bump();
            let mut closed = false;
            while let Some(c) = cur.bump() {
                if c == '*' && cur.peek() == Some('/') {
                    cur.bump();
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(FrontError::UnterminatedComment { line, col });
            }
            continue;
        }

        let (line, col) = (cur.line, cur.col);
        let mut text = String::new();
        let kind = if c == '"' || c == '\'' {
            lex_quoted(&mut cur, c, &mut text, line, col)?;
            TokenKind::StringLiteral
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            while let Some(c) = cur.peek() {
                let exponent_sign = (c == '+' || c == '-')
                    && matches!(text.chars().last(), Some('e' | 'E' | 'p' | 'P'))
                    && !text.starts_with("0x")
                    && !text.starts_with("0X");
                if c.is_ascii_alphanumeric() || c == '.' || c == '_' || exponent_sign {
                    text.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else if c.is_alphabetic() || c == '_' || c == '$' {
            while let Some(c) = cur.peek() {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    text.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            if is_keyword(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else {
            let two: String = [Some(c), cur.peek_at(1)].iter().flatten().collect();
            if MULTI_CHAR_OPS.contains(&two.as_str()) {
                cur.bump();
                cur.bump();
                text = two;
            } else {
                cur.bump();
                text.push(c);
            }
            TokenKind::Punctuation
        };
        out.push(Token { text, kind, line, col });
    }
    Ok(out)
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, text: &mut String, line: u32, col: u32) -> Result<(), FrontError> {
    text.push(quote);
    cur.bump();
    loop {
        match cur.bump() {
            None | Some('\n') => return Err(FrontError::UnterminatedLiteral { line, col }),
            Some('\\') => {
                text.push('\\');
                match cur.bump() {
                    Some(e) if e != '\n' => text.push(e),
                    _ => return Err(FrontError::UnterminatedLiteral { line, col }),
                }
            }
            Some(c) if c == quote => {
                text.push(c);
                return Ok(());
            }
            Some(c) => text.push(c),
        }
    }
}
