use super::ast::*;
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use crate::error::{Error, Position, Result};
use crate::predicate::CmpOp;

const MAX_DEPTH: usize = 128;

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
    end: Position,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &str, tokens: &'a [Token]) -> Self {
        let end = end_position(text);
        Parser {
            tokens,
            at: 0,
            end,
            depth: 0,
        }
    }

    fn peek(&self) -> Option<&'a TokenKind> {
        self.tokens.get(self.at).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'a TokenKind> {
        self.tokens.get(self.at + n).map(|t| &t.kind)
    }

    fn pos(&self) -> Position {
        self.tokens.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.at);
        self.at += t.is_some() as usize;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(k))
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        let found = match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".to_string(),
        };
        Err(Error::Parse {
            pos: self.pos(),
            message: format!("expected {expected}, found {found}"),
        })
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let loc = Loc(self.pos());
                self.at += 1;
                Ok(Ident {
                    name: name.clone(),
                    loc,
                })
            }
            _ => self.error(what),
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Error::Parse {
                pos: self.pos(),
                message: "expression nested too deeply".into(),
            });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(_) => self.error("end of query"),
        }
    }

    fn query(&mut self) -> Result<Query> {
        if self.eat_keyword(Keyword::Given) {
            let anchor = self.set_expr()?;
            if !self.eat_keyword(Keyword::Get) {
                return self.error("`GET`");
            }
            let target = self.set_expr()?;
            return Ok(Query {
                anchor: Anchor::Set(anchor),
                steps: vec![Step::Infer(target)],
            });
        }
        let anchor = self.anchor()?;
        let mut steps = Vec::new();
        while let Some(step) = self.step()? {
            steps.push(step);
        }
        Ok(Query { anchor, steps })
    }

    fn anchor(&mut self) -> Result<Anchor> {
        match self.peek() {
            Some(TokenKind::LParen) => Ok(Anchor::Set(self.set_expr()?)),
            Some(TokenKind::Str(_) | TokenKind::Number(_) | TokenKind::Keyword(Keyword::Null)) => {
                let loc = Loc(self.pos());
                let mut lits = vec![self.literal()?];
                while self.eat(&TokenKind::Comma) {
                    lits.push(self.literal()?);
                }
                Ok(Anchor::Literals(lits, loc))
            }
            _ => self.error("`(` or a literal"),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let lit = match self.peek() {
            Some(TokenKind::Str(s)) => Literal::Str(s.clone()),
            Some(TokenKind::Number(n)) => Literal::Number(n.clone()),
            Some(TokenKind::Keyword(Keyword::Null)) => Literal::Null,
            _ => return self.error("a literal"),
        };
        self.at += 1;
        Ok(lit)
    }

    fn step(&mut self) -> Result<Option<Step>> {
        let step = match self.peek() {
            Some(TokenKind::Arrow) => {
                self.at += 1;
                Step::Project(self.hops(&TokenKind::Arrow)?)
            }
            Some(TokenKind::BackArrow) => {
                self.at += 1;
                Step::Deproject(self.hops(&TokenKind::BackArrow)?)
            }
            Some(TokenKind::StarArrow) => {
                self.at += 1;
                Step::StarProject(self.set_expr()?)
            }
            Some(TokenKind::BackStar) => {
                self.at += 1;
                Step::StarDeproject(self.set_expr()?)
            }
            Some(TokenKind::Infer) => {
                self.at += 1;
                Step::Infer(self.set_expr()?)
            }
            _ => return Ok(None),
        };
        Ok(Some(step))
    }

    fn hops(&mut self, arrow: &TokenKind) -> Result<Vec<Hop>> {
        let mut hops = Vec::new();
        loop {
            match self.peek() {
                Some(TokenKind::Ident(_)) => {
                    let dim = self.ident("a dimension")?;
                    if self.peek() == Some(arrow) && self.peek_at(1) == Some(&TokenKind::LParen) {
                        self.at += 1;
                        hops.push(Hop::DimSet(dim, self.set_expr()?));
                    } else {
                        hops.push(Hop::Dim(dim));
                    }
                }
                Some(TokenKind::LParen) => hops.push(Hop::Set(self.set_expr()?)),
                _ if hops.is_empty() => return self.error("a dimension or `(`"),
                _ => return Ok(hops),
            }
        }
    }

    fn set_expr(&mut self) -> Result<SetExpr> {
        self.enter()?;
        let loc = Loc(self.pos());
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut factors = vec![self.factor()?];
        while self.eat(&TokenKind::Comma) {
            factors.push(self.factor()?);
        }
        let predicate = if self.eat(&TokenKind::Pipe) || self.eat_keyword(Keyword::Where) {
            Some(self.predicate()?)
        } else {
            None
        };
        self.expect(&TokenKind::RParen, "`)`")?;
        self.depth -= 1;
        Ok(SetExpr {
            factors,
            predicate,
            loc,
        })
    }

    fn factor(&mut self) -> Result<Factor> {
        let collection = self.ident("a collection name")?;
        let alias = match self.peek() {
            Some(TokenKind::Ident(_)) => Some(self.ident("an alias")?),
            _ => None,
        };
        Ok(Factor { collection, alias })
    }

    fn predicate(&mut self) -> Result<Predicate> {
        self.enter()?;
        let mut ors = vec![self.conjunction()?];
        while self.eat_keyword(Keyword::Or) {
            ors.push(self.conjunction()?);
        }
        self.depth -= 1;
        Ok(Predicate(ors))
    }

    fn conjunction(&mut self) -> Result<Conjunction> {
        let mut ands = vec![self.negation()?];
        while self.eat_keyword(Keyword::And) {
            ands.push(self.negation()?);
        }
        Ok(Conjunction(ands))
    }

    fn negation(&mut self) -> Result<Negation> {
        let negated = self.eat_keyword(Keyword::Not);
        let lhs = self.term()?;
        let op = match self.peek() {
            Some(TokenKind::EqEq | TokenKind::Assign) => Some(CmpOp::Eq),
            Some(TokenKind::Ne) => Some(CmpOp::Ne),
            Some(TokenKind::Lt) => Some(CmpOp::Lt),
            Some(TokenKind::Le) => Some(CmpOp::Le),
            Some(TokenKind::Gt) => Some(CmpOp::Gt),
            Some(TokenKind::Ge) => Some(CmpOp::Ge),
            _ => None,
        };
        let rhs = match op {
            Some(op) => {
                self.at += 1;
                Some((op, self.term()?))
            }
            None => None,
        };
        Ok(Negation {
            negated,
            cmp: Comparison { lhs, rhs },
        })
    }

    fn term(&mut self) -> Result<Term> {
        let loc = Loc(self.pos());
        match self.peek() {
            Some(TokenKind::Ident(_)) => Ok(Term::Path(self.path()?)),
            Some(TokenKind::Str(_) | TokenKind::Number(_) | TokenKind::Keyword(Keyword::Null)) => {
                Ok(Term::Literal(self.literal()?, loc))
            }
            Some(TokenKind::Keyword(k @ (Keyword::Count | Keyword::Sum))) => {
                let func = if *k == Keyword::Count {
                    AggFn::Count
                } else {
                    AggFn::Sum
                };
                self.at += 1;
                self.expect(&TokenKind::LParen, "`(`")?;
                let dimension = self.ident("a dimension")?;
                self.expect(&TokenKind::BackArrow, "`<-`")?;
                let set = self.set_expr()?;
                let path = if self.eat(&TokenKind::Comma) {
                    Some(self.path()?)
                } else {
                    None
                };
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(Term::Aggregate(Box::new(Aggregate {
                    func,
                    dimension,
                    set,
                    path,
                    loc,
                })))
            }
            Some(TokenKind::LParen) => {
                self.at += 1;
                let inner = self.predicate()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(Term::Group(Box::new(inner), loc))
            }
            _ => self.error("a path, literal, aggregate or `(`"),
        }
    }

    fn path(&mut self) -> Result<Vec<Ident>> {
        let mut path = vec![self.ident("a dimension")?];
        while self.eat(&TokenKind::Dot) {
            path.push(self.ident("a dimension")?);
        }
        Ok(path)
    }

    fn statement(&mut self) -> Result<Statement> {
        if let (Some(TokenKind::Ident(_)), Some(TokenKind::Assign)) = (self.peek(), self.peek_at(1)) {
            let name = self.ident("a name")?;
            self.at += 1;
            let set = self.set_expr()?;
            return Ok(Statement::Define { name, set });
        }
        Ok(Statement::Query(self.query()?))
    }

    fn concept(&mut self) -> Result<ConceptDef> {
        if !self.eat_keyword(Keyword::Concept) {
            return self.error("`CONCEPT`");
        }
        let name = self.ident("a concept name")?;
        if !self.eat_keyword(Keyword::Identity) {
            return self.error("`IDENTITY`");
        }
        let identity = self.fields()?;
        let entity = if self.eat_keyword(Keyword::Entity) {
            self.fields()?
        } else {
            Vec::new()
        };
        Ok(ConceptDef {
            name,
            identity,
            entity,
        })
    }

    fn fields(&mut self) -> Result<Vec<FieldDef>> {
        let mut fields = Vec::new();
        while let Some(TokenKind::Ident(_)) = self.peek() {
            let type_name = self.ident("a type")?;
            let length = if self.eat(&TokenKind::LParen) {
                let n = match self.bump().map(|t| &t.kind) {
                    Some(TokenKind::Number(n)) => n.parse::<u32>().ok(),
                    _ => None,
                };
                let Some(n) = n else {
                    self.at -= 1;
                    return self.error("a length");
                };
                // DECIMAL(p, s): the scale is accepted and ignored
                if self.eat(&TokenKind::Comma)
                    && !matches!(self.bump().map(|t| &t.kind), Some(TokenKind::Number(_)))
                {
                    self.at -= 1;
                    return self.error("a scale");
                }
                self.expect(&TokenKind::RParen, "`)`")?;
                Some(n)
            } else {
                None
            };
            let name = self.ident("a field name")?;
            let nullable = self.eat_keyword(Keyword::Null);
            fields.push(FieldDef {
                type_name,
                length,
                name,
                nullable,
            });
            self.eat(&TokenKind::Comma);
        }
        Ok(fields)
    }
}

fn end_position(text: &str) -> Position {
    let line = text.matches('\n').count() as u32 + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
    Position {
        line,
        column,
        offset: text.len(),
    }
}

pub fn parse_query(text: &str) -> Result<Query> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(text, &tokens);
    let q = p.query()?;
    p.finish()?;
    Ok(q)
}

/// A query or a product definition.
pub fn parse_statement(text: &str) -> Result<Statement> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(text, &tokens);
    let s = p.statement()?;
    p.finish()?;
    Ok(s)
}

/// Statements separated by `;`. Empty statements are skipped.
pub fn parse_script(text: &str) -> Result<Vec<Statement>> {
    let tokens = tokenize(text)?;
    let mut out = Vec::new();
    for chunk in tokens.split(|t| t.kind == TokenKind::Semicolon) {
        if chunk.is_empty() {
            continue;
        }
        let mut p = Parser::new(text, chunk);
        p.end = chunk.last().map_or(p.end, |t| t.pos);
        out.push(p.statement()?);
        p.finish()?;
    }
    Ok(out)
}

/// Source text of each `;`-separated statement, trimmed, empty ones dropped.
pub fn split_statements(text: &str) -> Result<Vec<&str>> {
    let tokens = tokenize(text)?;
    let mut out = Vec::new();
    let mut start = 0;
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Semicolon) {
        out.push(text[start..t.pos.offset].trim());
        start = t.pos.offset + 1;
    }
    out.push(text[start..].trim());
    out.retain(|s| !s.is_empty() && tokenize(s).is_ok_and(|t| !t.is_empty()));
    Ok(out)
}

pub fn parse_schema(text: &str) -> Result<Vec<ConceptDef>> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(text, &tokens);
    let mut concepts = Vec::new();
    while p.peek().is_some() {
        concepts.push(p.concept()?);
        p.eat(&TokenKind::Semicolon);
    }
    Ok(concepts)
}
