//! Generator expressions for point sequences.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'm' | 'e' digits | 'd' | '(' expr ')'
//! ```
//!
//! `m` is the running index, `eK` the K-th basis vector (1-based) and `d`
//! the unit diagonal `(1,…,1)/√n`. Numbers are plain decimals, and
//! products need an explicit `*`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Index,
    Basis(usize),
    Diagonal,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    S(f64),
    V(Vec<f64>),
}

/// A parsed generator, evaluated per index.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    root: Node,
    dim: usize,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn syntax(reason: impl Into<String>) -> Error {
    Error::param("generator", reason)
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(syntax(format!("expected ')' at offset {}", self.pos)));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'm') => {
                self.pos += 1;
                Ok(Node::Index)
            }
            Some(b'd') => {
                self.pos += 1;
                Ok(Node::Diagonal)
            }
            Some(b'e') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let k: usize = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| syntax(format!("basis vector without index at offset {start}")))?;
                if k == 0 {
                    return Err(syntax("basis vectors are numbered from e1"));
                }
                Ok(Node::Basis(k))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                text.parse()
                    .map(Node::Num)
                    .map_err(|_| syntax(format!("bad number `{text}`")))
            }
            Some(c) => Err(syntax(format!("unexpected `{}` at offset {}", c as char, self.pos))),
            None => Err(syntax("unexpected end of expression")),
        }
    }
}

fn mul(a: Val, b: Val) -> Result<Val> {
    match (a, b) {
        (Val::S(x), Val::S(y)) => Ok(Val::S(x * y)),
        (Val::S(s), Val::V(v)) | (Val::V(v), Val::S(s)) => Ok(Val::V(v.into_iter().map(|t| t * s).collect())),
        (Val::V(_), Val::V(_)) => Err(syntax("product of two vectors")),
    }
}

impl Generator {
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("dim", "n ≥ 2 required"));
        }
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        if p.peek().is_some() {
            return Err(syntax(format!("trailing input at offset {}", p.pos)));
        }
        let g = Generator { root, dim };
        check_basis(&g.root, dim)?;
        match g.eval(1.0)? {
            Val::V(_) => Ok(g),
            Val::S(_) => Err(syntax("expression is a scalar; multiply by a basis vector")),
        }
    }

    pub fn point(&self, m: usize) -> Result<Vec<f64>> {
        match self.eval(m as f64)? {
            Val::V(v) => Ok(v),
            Val::S(_) => unreachable!("checked at parse time"),
        }
    }

    fn eval(&self, m: f64) -> Result<Val> {
        self.eval_node(&self.root, m)
    }

    fn eval_node(&self, node: &Node, m: f64) -> Result<Val> {
        Ok(match node {
            Node::Num(x) => Val::S(*x),
            Node::Index => Val::S(m),
            Node::Basis(k) => {
                let mut v = vec![0.0; self.dim];
                v[k - 1] = 1.0;
                Val::V(v)
            }
            Node::Diagonal => Val::V(vec![1.0 / (self.dim as f64).sqrt(); self.dim]),
            Node::Neg(a) => mul(Val::S(-1.0), self.eval_node(a, m)?)?,
            Node::Bin(op, a, b) => {
                let (x, y) = (self.eval_node(a, m)?, self.eval_node(b, m)?);
                match (op, x, y) {
                    ('+' | '-', Val::S(x), Val::S(y)) => Val::S(if *op == '+' { x + y } else { x - y }),
                    ('+' | '-', Val::V(x), Val::V(y)) => {
                        Val::V(x.iter().zip(&y).map(|(a, b)| if *op == '+' { a + b } else { a - b }).collect())
                    }
                    ('+' | '-', _, _) => return Err(syntax("cannot add a scalar and a vector")),
                    ('*', x, y) => mul(x, y)?,
                    ('/', x, Val::S(y)) => mul(x, Val::S(1.0 / y))?,
                    ('/', _, Val::V(_)) => return Err(syntax("division by a vector")),
                    ('^', Val::S(x), Val::S(y)) => Val::S(x.powf(y)),
                    ('^', _, _) => return Err(syntax("powers are scalar only")),
                    _ => unreachable!(),
                }
            }
        })
    }
}

fn check_basis(node: &Node, dim: usize) -> Result<()> {
    match node {
        Node::Basis(k) if *k > dim => Err(syntax(format!("e{k} does not exist in dimension {dim}"))),
        Node::Neg(a) => check_basis(a, dim),
        Node::Bin(_, a, b) => {
            check_basis(a, dim)?;
            check_basis(b, dim)
        }
        _ => Ok(()),
    }
}
