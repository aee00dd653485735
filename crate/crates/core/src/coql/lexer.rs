use std::fmt;

use crate::error::{Error, Position, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Concept,
    Identity,
    Entity,
    Given,
    Get,
    Where,
    And,
    Or,
    Not,
    Count,
    Sum,
    Null,
}

impl Keyword {
    const ALL: [(Keyword, &'static str); 12] = [
        (Keyword::Concept, "CONCEPT"),
        (Keyword::Identity, "IDENTITY"),
        (Keyword::Entity, "ENTITY"),
        (Keyword::Given, "GIVEN"),
        (Keyword::Get, "GET"),
        (Keyword::Where, "WHERE"),
        (Keyword::And, "AND"),
        (Keyword::Or, "OR"),
        (Keyword::Not, "NOT"),
        (Keyword::Count, "COUNT"),
        (Keyword::Sum, "SUM"),
        (Keyword::Null, "NULL"),
    ];

    fn lookup(word: &str) -> Option<Keyword> {
        Self::ALL
            .iter()
            .find(|(_, text)| text.eq_ignore_ascii_case(word))
            .map(|(k, _)| *k)
    }

    pub fn as_str(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).unwrap().1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Number(String),
    Keyword(Keyword),
    LParen,
    RParen,
    Comma,
    Dot,
    Pipe,
    Semicolon,
    /// `->`
    Arrow,
    /// `<-`
    BackArrow,
    /// `*->`
    StarArrow,
    /// `<-*`
    BackStar,
    /// `<-*->`, also spelled `<-*-*>`
    Infer,
    EqEq,
    /// `=`: comparison synonym of `==`, or definition
    Assign,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Str(s) => write!(f, "string '{s}'"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            other => write!(f, "`{}`", symbol(other)),
        }
    }
}

fn symbol(kind: &TokenKind) -> &'static str {
    match kind {
        TokenKind::LParen => "(",
        TokenKind::RParen => ")",
        TokenKind::Comma => ",",
        TokenKind::Dot => ".",
        TokenKind::Pipe => "|",
        TokenKind::Semicolon => ";",
        TokenKind::Arrow => "->",
        TokenKind::BackArrow => "<-",
        TokenKind::StarArrow => "*->",
        TokenKind::BackStar => "<-*",
        TokenKind::Infer => "<-*->",
        TokenKind::EqEq => "==",
        TokenKind::Assign => "=",
        TokenKind::Ne => "!=",
        TokenKind::Lt => "<",
        TokenKind::Le => "<=",
        TokenKind::Gt => ">",
        TokenKind::Ge => ">=",
        _ => "",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
}

/// Longest match first.
const OPERATORS: [(&str, TokenKind); 17] = [
    ("<-*-*>", TokenKind::Infer),
    ("<-*->", TokenKind::Infer),
    ("<-*", TokenKind::BackStar),
    ("<-", TokenKind::BackArrow),
    ("<=", TokenKind::Le),
    ("<", TokenKind::Lt),
    ("*->", TokenKind::StarArrow),
    ("->", TokenKind::Arrow),
    (">=", TokenKind::Ge),
    (">", TokenKind::Gt),
    ("==", TokenKind::EqEq),
    ("=", TokenKind::Assign),
    ("!=", TokenKind::Ne),
    ("(", TokenKind::LParen),
    (")", TokenKind::RParen),
    (",", TokenKind::Comma),
    ("|", TokenKind::Pipe),
];

struct Cursor<'a> {
    text: &'a str,
    offset: usize,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.text[self.offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
            offset: self.offset,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn advance(&mut self, bytes: usize) {
        let end = self.offset + bytes;
        while self.offset < end {
            self.bump();
        }
    }
}

/// Splits text into tokens, skipping whitespace and `//` comments.
pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor {
        text,
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.rest().starts_with("//") {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        let pos = cur.pos();
        let kind = if c == '\'' || c == '"' {
            lex_string(&mut cur, c)?
        } else if c.is_ascii_digit()
            || (c == '-' && cur.rest()[1..].starts_with(|d: char| d.is_ascii_digit()))
        {
            lex_number(&mut cur)
        } else if c.is_alphabetic() || c == '_' {
            let start = cur.offset;
            while cur.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &text[start..cur.offset];
            match Keyword::lookup(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c == '.' {
            cur.bump();
            TokenKind::Dot
        } else if c == ';' {
            cur.bump();
            TokenKind::Semicolon
        } else if let Some((op, kind)) = OPERATORS.iter().find(|(op, _)| cur.rest().starts_with(op)) {
            cur.advance(op.len());
            kind.clone()
        } else {
            return Err(Error::Lex {
                pos,
                message: format!("unexpected character `{c}`"),
            });
        };
        out.push(Token { kind, pos });
    }
    Ok(out)
}

fn lex_string(cur: &mut Cursor<'_>, quote: char) -> Result<TokenKind> {
    let start = cur.pos();
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.bump() {
            Some(c) if c == quote => {
                if cur.peek() == Some(quote) {
                    cur.bump();
                    value.push(quote);
                } else {
                    return Ok(TokenKind::Str(value));
                }
            }
            Some(c) => value.push(c),
            None => {
                return Err(Error::Lex {
                    pos: start,
                    message: "unterminated string literal".into(),
                })
            }
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    let start = cur.offset;
    if cur.peek() == Some('-') {
        cur.bump();
    }
    let digits = |cur: &mut Cursor<'_>| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    };
    digits(cur);
    let rest = cur.rest();
    if rest.starts_with('.') && rest[1..].starts_with(|c: char| c.is_ascii_digit()) {
        cur.bump();
        digits(cur);
    }
    TokenKind::Number(cur.text[start..cur.offset].to_string())
}
