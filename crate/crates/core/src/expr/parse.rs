use super::{BinOp, Func, Node, NodeKind, Span};
use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

fn err(pos: usize, message: impl Into<String>) -> GeomError {
    GeomError::Parse { pos, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| err(start, format!("malformed number `{lit}`")))?;
            if !v.is_finite() {
                return Err(err(start, format!("number `{lit}` is out of range")));
            }
            Tok::Num(v)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(text[start..i].to_string())
        } else {
            i += 1;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b',' => Tok::Comma,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(err(start, format!("unexpected character `{ch}`")));
                }
            }
        };
        out.push(Token { tok, span: Span { start, end: i } });
    }
    out.push(Token { tok: Tok::End, span: Span { start: text.len(), end: text.len() } });
    Ok(out)
}

const PREFIX_BP: u8 = 5;

fn infix_bp(op: char) -> Option<(u8, u8, BinOp)> {
    Some(match op {
        '+' => (1, 2, BinOp::Add),
        '-' => (1, 2, BinOp::Sub),
        '*' => (3, 4, BinOp::Mul),
        '/' => (3, 4, BinOp::Div),
        '^' => (8, 7, BinOp::Pow),
        _ => return None,
    })
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    chart: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node> {
        let mut lhs = self.prefix()?;
        loop {
            let Tok::Op(op) = self.peek().tok else { break };
            let Some((l_bp, r_bp, bin)) = infix_bp(op) else { break };
            if l_bp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(r_bp)?;
            let span = Span { start: lhs.span.start, end: rhs.span.end };
            lhs = Node::new(NodeKind::Binary(bin, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok(Node::new(NodeKind::Const(v), t.span)),
            Tok::Op('-') => {
                let operand = self.expr(PREFIX_BP)?;
                let span = Span { start: t.span.start, end: operand.span.end };
                Ok(Node::new(NodeKind::Neg(Box::new(operand)), span))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    return self.call(f, t.span);
                }
                match self.chart.iter().position(|c| *c == name) {
                    Some(i) => Ok(Node::new(NodeKind::Var(i), t.span)),
                    None => Err(GeomError::UnknownVariable { name, chart: self.chart.join(", ") }),
                }
            }
            Tok::End => Err(err(t.span.start, "unexpected end of input, expected an operand")),
            _ => Err(err(t.span.start, "expected a number, variable, function call or `(`")),
        }
    }

    fn call(&mut self, f: Func, name_span: Span) -> Result<Node> {
        let open = self.next();
        if open.tok != Tok::LParen {
            return Err(err(open.span.start, format!("expected `(` after `{}`", f.name())));
        }
        let mut args = vec![self.expr(0)?];
        while self.peek().tok == Tok::Comma {
            self.next();
            args.push(self.expr(0)?);
        }
        let close = self.expect_rparen()?;
        if args.len() != f.arity() {
            return Err(err(
                name_span.start,
                format!("`{}` takes {} argument(s), got {}", f.name(), f.arity(), args.len()),
            ));
        }
        let span = Span { start: name_span.start, end: close.end };
        Ok(Node::new(NodeKind::Call(f, Box::new(args.remove(0))), span))
    }

    fn expect_rparen(&mut self) -> Result<Span> {
        let t = self.next();
        if t.tok == Tok::RParen {
            Ok(t.span)
        } else {
            Err(err(t.span.start, "expected `)`"))
        }
    }
}

pub(super) fn parse(text: &str, chart: &[String]) -> Result<Node> {
    if text.trim().is_empty() {
        return Err(err(0, "empty expression"));
    }
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, chart };
    let node = p.expr(0)?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(err(t.span.start, "expected an operator or end of input"));
    }
    Ok(node)
}
