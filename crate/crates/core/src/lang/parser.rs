use super::lexer::{lex_spanned, Token, TokenSeq};
use super::{Block, Cond, LangError, Program, Stmt, MAX_REPEAT};

/// Parses program text. Accepts any whitespace layout and optional braces
/// around single-statement blocks; the result is validated.
pub fn parse(src: &str) -> Result<Program, LangError> {
    let tokens = lex_spanned(src)?;
    Parser { tokens, at: 0, end: src.len() }.program()
}

/// Parses a token stream, e.g. one read from a dataset file or returned by a
/// remote synthesizer.
pub fn parse_tokens(tokens: &TokenSeq) -> Result<Program, LangError> {
    let spanned: Vec<_> = tokens.iter().copied().enumerate().map(|(i, t)| (t, i)).collect();
    let end = spanned.len();
    Parser { tokens: spanned, at: 0, end }.program()
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |&(_, p)| p)
    }

    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.at).map(|&(t, _)| t)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Parse { pos: self.pos(), message: message.into() })
    }

    fn expect(&mut self, want: Token) -> Result<(), LangError> {
        match self.peek() {
            Some(t) if t == want => {
                self.at += 1;
                Ok(())
            }
            Some(t) => self.error(format!("expected `{want}`, found `{t}`")),
            None => self.error(format!("expected `{want}`, found end of input")),
        }
    }

    fn program(mut self) -> Result<Program, LangError> {
        self.expect(Token::Def)?;
        self.expect(Token::Run)?;
        self.expect(Token::LParen)?;
        self.expect(Token::RParen)?;
        self.expect(Token::Colon)?;
        let body = self.block()?;
        if let Some(t) = self.peek() {
            return self.error(format!("unexpected trailing `{t}`"));
        }
        let program = Program { body };
        program.validate()?;
        Ok(program)
    }

    fn block(&mut self) -> Result<Block, LangError> {
        if self.peek() != Some(Token::LBrace) {
            return Ok(vec![self.stmt()?]);
        }
        self.at += 1;
        let mut body = vec![self.stmt()?];
        loop {
            match self.peek() {
                Some(Token::Semi) => {
                    self.at += 1;
                    body.push(self.stmt()?);
                }
                Some(Token::RBrace) => {
                    self.at += 1;
                    return Ok(body);
                }
                Some(t) => return self.error(format!("expected `;` or `}}`, found `{t}`")),
                None => return self.error("unclosed `{`"),
            }
        }
    }

    fn call_parens(&mut self) -> Result<(), LangError> {
        self.expect(Token::LParen)?;
        self.expect(Token::RParen)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let Some(tok) = self.peek() else {
            return self.error("expected a statement, found end of input");
        };
        self.at += 1;
        match tok {
            Token::Action(a) => {
                self.call_parens()?;
                Ok(Stmt::Action(a))
            }
            Token::While | Token::If | Token::IfElse => {
                self.expect(Token::LParen)?;
                let cond = self.cond()?;
                self.expect(Token::RParen)?;
                self.expect(Token::Colon)?;
                let body = self.block()?;
                match tok {
                    Token::While => Ok(Stmt::While { cond, body }),
                    Token::If => Ok(Stmt::If { cond, body }),
                    _ => {
                        self.expect(Token::Else)?;
                        self.expect(Token::Colon)?;
                        let else_body = self.block()?;
                        Ok(Stmt::IfElse { cond, then_body: body, else_body })
                    }
                }
            }
            Token::Repeat => {
                self.expect(Token::LParen)?;
                let Some(Token::Int(n)) = self.peek() else {
                    return self.error("expected a repeat count");
                };
                if n > MAX_REPEAT as u32 {
                    return Err(LangError::Validation(format!(
                        "repeat count {n} exceeds {MAX_REPEAT}"
                    )));
                }
                self.at += 1;
                self.expect(Token::RParen)?;
                self.expect(Token::Colon)?;
                let body = self.block()?;
                Ok(Stmt::Repeat { count: n as u8, body })
            }
            other => {
                self.at -= 1;
                self.error(format!("expected a statement, found `{other}`"))
            }
        }
    }

    fn cond(&mut self) -> Result<Cond, LangError> {
        let mut negations = 0u8;
        while self.peek() == Some(Token::Not) {
            self.at += 1;
            negations = negations
                .checked_add(1)
                .ok_or_else(|| LangError::Validation("too many negations".into()))?;
        }
        match self.peek() {
            Some(Token::Pred(pred)) => {
                self.at += 1;
                self.call_parens()?;
                Ok(Cond { pred, negations })
            }
            Some(t) => self.error(format!("expected a condition, found `{t}`")),
            None => self.error("expected a condition, found end of input"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{Action, Predicate};

    #[test]
    fn parses_single_action() {
        let p = parse("def run(): move()").unwrap();
        assert_eq!(p.body, vec![Stmt::Action(Action::Move)]);
    }

    #[test]
    fn repeat_over_nineteen_is_validation_error() {
        assert!(matches!(
            parse("def run(): repeat(20): move()"),
            Err(LangError::Validation(_))
        ));
        assert!(parse("def run(): repeat(19): move()").is_ok());
        assert!(parse("def run(): repeat(0): move()").is_ok());
    }

    #[test]
    fn semicolon_binds_to_enclosing_braces() {
        let p = parse("def run(): { while(frontIsClear()): move(); turnLeft() }").unwrap();
        assert_eq!(p.body.len(), 2);
        assert_eq!(
            p.body[0],
            Stmt::While {
                cond: Cond::new(Predicate::FrontIsClear),
                body: vec![Stmt::Action(Action::Move)]
            }
        );
    }

    #[test]
    fn bare_top_level_sequence_is_rejected() {
        let err = parse("def run(): move(); move()").unwrap_err();
        assert!(matches!(err, LangError::Parse { pos: 17, .. }), "{err:?}");
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("def run() move()"), Err(LangError::Parse { pos: 10, .. })));
        assert!(matches!(parse("def run(): if(move()): move()"), Err(LangError::Parse { .. })));
        assert!(matches!(parse("def run(): { move()"), Err(LangError::Parse { .. })));
        assert!(matches!(parse(""), Err(LangError::Parse { pos: 0, .. })));
        assert!(parse("def run(): ifelse(markersPresent()): move()").is_err());
    }

    #[test]
    fn accepts_braced_single_statement_and_nested_nots() {
        let p = parse("def run(): if(not not rightIsClear()): { turnRight() }").unwrap();
        assert_eq!(p.emit(), "def run(): if(not not rightIsClear()): turnRight()");
    }

    #[test]
    fn parse_tokens_matches_text_parse() {
        let p = parse("def run(): ifelse(markersPresent()): pickMarker() else: { putMarker(); move() }")
            .unwrap();
        assert_eq!(parse_tokens(&p.tokenize()).unwrap(), p);
    }
}
