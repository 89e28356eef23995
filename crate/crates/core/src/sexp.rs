//! Minimal s-expression reader shared by the expression and rule parsers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sexp {
    Atom { text: String, pos: usize },
    List { items: Vec<Sexp>, pos: usize },
}

impl Sexp {
    pub fn pos(&self) -> usize {
        match self {
            Sexp::Atom { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(usize),
    Close(usize),
    Atom(String, usize),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '(' => {
                tokens.push(Token::Open(i));
                chars.next();
            }
            ')' => {
                tokens.push(Token::Close(i));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let start = i;
                let mut end = i;
                while let Some(&(j, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    end = j + c.len_utf8();
                    chars.next();
                }
                tokens.push(Token::Atom(text[start..end].to_string(), start));
            }
        }
    }
    tokens
}

/// Reads a sequence of top-level s-expressions.
pub(crate) fn read_all(text: &str) -> Result<Vec<Sexp>> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        out.push(read_one(&tokens, &mut pos, text.len())?);
    }
    Ok(out)
}

/// Reads exactly one s-expression spanning the whole input.
pub(crate) fn read(text: &str) -> Result<Sexp> {
    let mut all = read_all(text)?;
    match all.len() {
        0 => Err(Error::Parse {
            pos: 0,
            msg: "empty input".into(),
        }),
        1 => Ok(all.pop().unwrap()),
        _ => Err(Error::Parse {
            pos: all[1].pos(),
            msg: "trailing input after expression".into(),
        }),
    }
}

fn read_one(tokens: &[Token], pos: &mut usize, end: usize) -> Result<Sexp> {
    match tokens.get(*pos) {
        None => Err(Error::Parse {
            pos: end,
            msg: "unexpected end of input".into(),
        }),
        Some(Token::Close(p)) => Err(Error::Parse {
            pos: *p,
            msg: "unexpected `)`".into(),
        }),
        Some(Token::Atom(text, p)) => {
            *pos += 1;
            Ok(Sexp::Atom {
                text: text.clone(),
                pos: *p,
            })
        }
        Some(Token::Open(p)) => {
            let open = *p;
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => {
                        return Err(Error::Parse {
                            pos: end,
                            msg: format!("unclosed `(` opened at byte {open}"),
                        })
                    }
                    Some(Token::Close(_)) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => items.push(read_one(tokens, pos, end)?),
                }
            }
            Ok(Sexp::List { items, pos: open })
        }
    }
}
