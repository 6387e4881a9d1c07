//! Tokenizer for the `.carm` DSL.
//!
//! Words may contain internal hyphens when followed by a letter, so keywords
//! like `identified-by` and `end-of-editing` lex as single words while `--`
//! (the cardinality separator) stays a distinct token.

use std::fmt;

use crate::diag::{codes, Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Int(u32),
    Str(String),
    LBrace,
    RBrace,
    Lt,
    Gt,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Plus,
    Eq,
    Dot,
    Colon,
    Pipe,
    Comma,
    DashDash,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::DashDash => write!(f, "`--`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Tokenize a source file. Lexical errors are collected; the scan continues
/// at the next character so later errors are still found.
pub fn lex(source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            tokens.push(Token { tok: $tok, pos: $pos })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '{' => { push!(Tok::LBrace, pos); i += 1; col += 1; }
            '}' => { push!(Tok::RBrace, pos); i += 1; col += 1; }
            '<' => { push!(Tok::Lt, pos); i += 1; col += 1; }
            '>' => { push!(Tok::Gt, pos); i += 1; col += 1; }
            '[' => { push!(Tok::LBracket, pos); i += 1; col += 1; }
            ']' => { push!(Tok::RBracket, pos); i += 1; col += 1; }
            '(' => { push!(Tok::LParen, pos); i += 1; col += 1; }
            ')' => { push!(Tok::RParen, pos); i += 1; col += 1; }
            '+' => { push!(Tok::Plus, pos); i += 1; col += 1; }
            '=' => { push!(Tok::Eq, pos); i += 1; col += 1; }
            '.' => { push!(Tok::Dot, pos); i += 1; col += 1; }
            ':' => { push!(Tok::Colon, pos); i += 1; col += 1; }
            '|' => { push!(Tok::Pipe, pos); i += 1; col += 1; }
            ',' => { push!(Tok::Comma, pos); i += 1; col += 1; }
            '-' if chars.get(i + 1) == Some(&'-') => {
                push!(Tok::DashDash, pos);
                i += 2;
                col += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                let mut closed = false;
                while i < chars.len() {
                    let d = chars[i];
                    if d == '"' {
                        i += 1;
                        col += 1;
                        closed = true;
                        break;
                    }
                    if d == '\n' {
                        break;
                    }
                    s.push(d);
                    i += 1;
                    col += 1;
                }
                if !closed {
                    diags.push(Diagnostic::error(pos, codes::SYNTAX, "unterminated string"));
                }
                push!(Tok::Str(s), pos);
            }
            _ if c.is_ascii_digit() => {
                let mut n: u64 = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    n = n.saturating_mul(10).saturating_add((chars[i] as u64) - ('0' as u64));
                    i += 1;
                    col += 1;
                }
                push!(Tok::Int(n.min(u32::MAX as u64) as u32), pos);
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut w = String::new();
                while i < chars.len() {
                    let d = chars[i];
                    if d.is_ascii_alphanumeric() || d == '_' {
                        w.push(d);
                        i += 1;
                        col += 1;
                    } else if d == '-'
                        && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic())
                    {
                        w.push(d);
                        i += 1;
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Word(w), pos);
            }
            _ => {
                diags.push(Diagnostic::error(
                    pos,
                    codes::SYNTAX,
                    format!("unexpected character `{c}`"),
                ));
                i += 1;
                col += 1;
            }
        }
    }

    (tokens, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let (tokens, diags) = lex(src);
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
        tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn hyphenated_keywords_are_single_words() {
        assert_eq!(
            toks("identified-by end-of-editing"),
            vec![
                Tok::Word("identified-by".into()),
                Tok::Word("end-of-editing".into())
            ]
        );
    }

    #[test]
    fn cardinality_tokens() {
        assert_eq!(
            toks("0:M -- 1:1"),
            vec![
                Tok::Int(0),
                Tok::Colon,
                Tok::Word("M".into()),
                Tok::DashDash,
                Tok::Int(1),
                Tok::Colon,
                Tok::Int(1)
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let (tokens, diags) = lex("// a comment\nevent SALE1");
        assert!(diags.is_empty());
        assert_eq!(tokens[0].pos, Pos::new(2, 1));
        assert_eq!(tokens[1].tok, Tok::Word("SALE1".into()));
    }

    #[test]
    fn unterminated_string_reported() {
        let (_, diags) = lex("\"oops");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::SYNTAX);
    }
}
