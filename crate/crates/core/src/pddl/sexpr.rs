//! Minimal s-expression reader for PDDL sources.
//!
//! Symbols are lowercased on read. `;` starts a comment running to the end
//! of the line.

use super::PddlError;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Symbol(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Symbol(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Symbol(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Symbol(..) => None,
        }
    }

    /// First element of a list when it is a symbol, e.g. `and`, `:action`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_symbol)
    }
}

enum Token {
    Open(Pos),
    Close(Pos),
    Symbol(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;

    macro_rules! flush {
        () => {
            if let Some((sym, pos)) = current.take() {
                tokens.push(Token::Symbol(sym, pos));
            }
        };
    }

    while let Some(c) = chars.next() {
        let pos = Pos { line, col };
        match c {
            '(' => {
                flush!();
                tokens.push(Token::Open(pos));
            }
            ')' => {
                flush!();
                tokens.push(Token::Close(pos));
            }
            ';' => {
                flush!();
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            c if c.is_whitespace() => flush!(),
            c => match current.as_mut() {
                Some((sym, _)) => sym.extend(c.to_lowercase()),
                None => current = Some((c.to_lowercase().collect(), pos)),
            },
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    flush!();
    tokens
}

/// Reads exactly one top-level expression; trailing non-comment content is an error.
pub fn read(text: &str) -> Result<Sexpr, PddlError> {
    let tokens = tokenize(text);
    let mut stack: Vec<(Vec<Sexpr>, Pos)> = Vec::new();
    let mut result: Option<Sexpr> = None;

    for token in tokens {
        if result.is_some() {
            let pos = match token {
                Token::Open(p) | Token::Close(p) | Token::Symbol(_, p) => p,
            };
            return Err(PddlError::syntax(pos, "unexpected content after the top-level expression"));
        }
        match token {
            Token::Open(pos) => stack.push((Vec::new(), pos)),
            Token::Close(pos) => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| PddlError::syntax(pos, "unbalanced ')'"))?;
                let list = Sexpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            Token::Symbol(sym, pos) => match stack.last_mut() {
                Some((parent, _)) => parent.push(Sexpr::Symbol(sym, pos)),
                None => return Err(PddlError::syntax(pos, "expected '('")),
            },
        }
    }

    if let Some((_, open)) = stack.last() {
        return Err(PddlError::syntax(*open, "unclosed '('"));
    }
    result.ok_or_else(|| PddlError::syntax(Pos { line: 1, col: 1 }, "empty input"))
}
