use std::fmt;

use super::{Action, LangError, Predicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Def,
    Run,
    While,
    Repeat,
    If,
    IfElse,
    Else,
    Not,
    Action(Action),
    Pred(Predicate),
    Int(u32),
    LParen,
    RParen,
    Colon,
    Semi,
    LBrace,
    RBrace,
}

impl Token {
    /// Parses a single terminal name as it appears in token streams.
    pub fn from_terminal(text: &str) -> Option<Token> {
        let tok = match text {
            "def" => Token::Def,
            "run" => Token::Run,
            "while" => Token::While,
            "repeat" => Token::Repeat,
            "if" => Token::If,
            "ifelse" => Token::IfElse,
            "else" => Token::Else,
            "not" => Token::Not,
            "(" => Token::LParen,
            ")" => Token::RParen,
            ":" => Token::Colon,
            ";" => Token::Semi,
            "{" => Token::LBrace,
            "}" => Token::RBrace,
            _ => {
                if let Some(a) = Action::from_name(text) {
                    Token::Action(a)
                } else if let Some(p) = Predicate::from_name(text) {
                    Token::Pred(p)
                } else if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
                    Token::Int(text.parse().ok()?)
                } else {
                    return None;
                }
            }
        };
        Some(tok)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Def => f.write_str("def"),
            Token::Run => f.write_str("run"),
            Token::While => f.write_str("while"),
            Token::Repeat => f.write_str("repeat"),
            Token::If => f.write_str("if"),
            Token::IfElse => f.write_str("ifelse"),
            Token::Else => f.write_str("else"),
            Token::Not => f.write_str("not"),
            Token::Action(a) => f.write_str(a.name()),
            Token::Pred(p) => f.write_str(p.name()),
            Token::Int(n) => write!(f, "{n}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Colon => f.write_str(":"),
            Token::Semi => f.write_str(";"),
            Token::LBrace => f.write_str("{"),
            Token::RBrace => f.write_str("}"),
        }
    }
}

/// A token stream. Displayed (and stored in dataset files) as
/// whitespace-separated terminal names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TokenSeq(pub Vec<Token>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }

    pub fn terminals(&self) -> Vec<String> {
        self.0.iter().map(Token::to_string).collect()
    }

    /// Parses a whitespace-separated terminal stream.
    pub fn from_terminals<'a, I>(terminals: I) -> Result<TokenSeq, LangError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        terminals
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                Token::from_terminal(t).ok_or_else(|| LangError::Parse {
                    pos: i,
                    message: format!("unknown terminal `{t}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(TokenSeq)
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Lexes source text; returns tokens paired with their byte offsets.
pub(crate) fn lex_spanned(src: &str) -> Result<Vec<(Token, usize)>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let punct = match b {
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            b':' => Some(Token::Colon),
            b';' => Some(Token::Semi),
            b'{' => Some(Token::LBrace),
            b'}' => Some(Token::RBrace),
            _ => None,
        };
        if let Some(tok) = punct {
            out.push((tok, i));
            i += 1;
            continue;
        }
        let start = i;
        if b.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse::<u32>().map_err(|_| LangError::Parse {
                pos: start,
                message: "integer literal out of range".into(),
            })?;
            out.push((Token::Int(n), start));
            continue;
        }
        if b.is_ascii_alphabetic() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word = &src[start..i];
            let tok = Token::from_terminal(word).ok_or_else(|| LangError::Parse {
                pos: start,
                message: format!("unknown identifier `{word}`"),
            })?;
            out.push((tok, start));
            continue;
        }
        return Err(LangError::Parse {
            pos: start,
            message: format!("unexpected character `{}`", src[start..].chars().next().unwrap()),
        });
    }
    Ok(out)
}

pub(crate) fn lex(src: &str) -> Result<TokenSeq, LangError> {
    Ok(TokenSeq(lex_spanned(src)?.into_iter().map(|(t, _)| t).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_move_program() {
        let toks = lex("def run(): move()").unwrap();
        assert_eq!(toks.to_string(), "def run ( ) : move ( )");
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = lex("def run(): jump()").unwrap_err();
        assert_eq!(
            err,
            LangError::Parse { pos: 11, message: "unknown identifier `jump`".into() }
        );
    }

    #[test]
    fn terminals_round_trip() {
        let toks = lex("def run(): repeat(12): { turnLeft(); pickMarker() }").unwrap();
        let text = toks.to_string();
        assert_eq!(TokenSeq::from_terminals(text.split_whitespace()).unwrap(), toks);
        assert!(TokenSeq::from_terminals(["def", "jump"]).is_err());
    }
}
