//! Tokenizer for the CwC source language.

use crate::span::Span;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Int,
    Char,
    Void,
    Struct,
    Typedef,
    If,
    Else,
    While,
    For,
    Return,
    Goto,
    Sizeof,
    Code,
    ReturnCont,
    Environment,
}

impl Keyword {
    pub const ALL: [Keyword; 15] = [
        Keyword::Int,
        Keyword::Char,
        Keyword::Void,
        Keyword::Struct,
        Keyword::Typedef,
        Keyword::If,
        Keyword::Else,
        Keyword::While,
        Keyword::For,
        Keyword::Return,
        Keyword::Goto,
        Keyword::Sizeof,
        Keyword::Code,
        Keyword::ReturnCont,
        Keyword::Environment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Int => "int",
            Keyword::Char => "char",
            Keyword::Void => "void",
            Keyword::Struct => "struct",
            Keyword::Typedef => "typedef",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::For => "for",
            Keyword::Return => "return",
            Keyword::Goto => "goto",
            Keyword::Sizeof => "sizeof",
            Keyword::Code => "__code",
            Keyword::ReturnCont => "__return",
            Keyword::Environment => "__environment",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL.iter().copied().find(|k| k.as_str() == word)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword(Keyword),
    IntLit,
    StrLit,
    Punct,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_keyword(&self, k: Keyword) -> bool {
        self.kind == TokenKind::Keyword(k)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{span}: lex error: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

// Longest first so that maximal munch falls out of a linear scan.
const PUNCTUATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "(", ")", "{", "}", "[", "]", ";", ",", ".", "+",
    "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?", ":",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span::new(self.pos, self.pos, self.line, self.col)
    }
}

/// Splits `source` into tokens, dropping whitespace and comments. The
/// returned stream always ends with a single `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let start = cur.here();
        let Some(c) = cur.peek() else {
            out.push(Token { kind: TokenKind::Eof, text: String::new(), span: start });
            return Ok(out);
        };
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            match Keyword::lookup(&source[start.start..cur.pos]) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident,
            }
        } else if c.is_ascii_digit() {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric()) {
                cur.bump();
            }
            TokenKind::IntLit
        } else if c == '"' || c == '\'' {
            lex_quoted(&mut cur, c, start)?;
            if c == '"' {
                TokenKind::StrLit
            } else {
                TokenKind::IntLit
            }
        } else if let Some(p) = PUNCTUATORS.iter().find(|p| source[cur.pos..].starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct
        } else {
            return Err(LexError { span: start, message: format!("illegal character {c:?}") });
        };
        let span = Span::new(start.start, cur.pos, start.line, start.col);
        out.push(Token { kind, text: source[span.start..span.end].to_string(), span });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), LexError> {
    loop {
        match (cur.peek(), cur.peek_at(1)) {
            (Some(c), _) if c.is_whitespace() => {
                cur.bump();
            }
            (Some('/'), Some('/')) => {
                while !matches!(cur.peek(), None | Some('\n')) {
                    cur.bump();
                }
            }
            (Some('/'), Some('*')) => {
                let start = cur.here();
                cur.bump();
                cur.bump();
                loop {
                    match cur.peek() {
                        None => {
                            return Err(LexError {
                                span: start,
                                message: "unterminated comment".into(),
                            })
                        }
                        Some('*') if cur.peek_at(1) == Some('/') => {
                            cur.bump();
                            cur.bump();
                            break;
                        }
                        Some(_) => {
                            cur.bump();
                        }
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: char, start: Span) -> Result<(), LexError> {
    cur.bump();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                let what = if quote == '"' { "string" } else { "character" };
                return Err(LexError { span: start, message: format!("unterminated {what} literal") });
            }
            Some('\\') => {
                if cur.bump().is_none() {
                    return Err(LexError { span: start, message: "unterminated escape".into() });
                }
            }
            Some(c) if c == quote => return Ok(()),
            Some(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn code_segment_header() {
        let toks = kinds("__code f(int i){}");
        let expect = vec![
            (TokenKind::Keyword(Keyword::Code), "__code"),
            (TokenKind::Ident, "f"),
            (TokenKind::Punct, "("),
            (TokenKind::Keyword(Keyword::Int), "int"),
            (TokenKind::Ident, "i"),
            (TokenKind::Punct, ")"),
            (TokenKind::Punct, "{"),
            (TokenKind::Punct, "}"),
            (TokenKind::Eof, ""),
        ];
        let expect: Vec<_> = expect.into_iter().map(|(k, s)| (k, s.to_string())).collect();
        assert_eq!(toks, expect);
    }

    #[test]
    fn empty_input_is_just_eof() {
        assert_eq!(kinds(""), vec![(TokenKind::Eof, String::new())]);
    }

    #[test]
    fn comments_and_maximal_munch() {
        let toks = kinds("a->b // tail\n /* x */ c-->0 <<= ...");
        let texts: Vec<_> = toks.iter().map(|t| t.1.as_str()).collect();
        assert_eq!(texts, ["a", "->", "b", "c", "--", ">", "0", "<<=", "...", ""]);
    }

    #[test]
    fn string_with_escapes() {
        let toks = kinds(r#"printf("hi \"x\"\n");"#);
        assert_eq!(toks[2], (TokenKind::StrLit, r#""hi \"x\"\n""#.to_string()));
    }

    #[test]
    fn errors() {
        assert!(tokenize("\"abc").unwrap_err().message.contains("unterminated string"));
        assert!(tokenize("/* abc").unwrap_err().message.contains("unterminated comment"));
        let e = tokenize("int @x;").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (1, 5));
    }

    #[test]
    fn spans_strictly_increase() {
        let toks = tokenize("int main() {\n  return 1 + 2;\n}\n").unwrap();
        for w in toks.windows(2) {
            assert!(w[0].span.end <= w[1].span.start);
            assert!(w[0].span.start < w[1].span.start);
        }
        assert_eq!(toks[5].span.line, 2);
    }
}
