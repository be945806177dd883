//! Infix math syntax.
//!
//! ```text
//! top     = "if" cond "then" top "else" top | sum
//! cond    = conj { "or" conj }
//! conj    = catom { "and" catom }
//! catom   = "(" cond ")" | sum cmp sum
//! cmp     = "<" | "<=" | ">" | ">=" | "=="
//! sum     = product { ("+" | "-") product }
//! product = power { ("*" | "/") power }
//! power   = unary [ "^" power ]
//! unary   = "-" unary | primary
//! primary = number | const | ident | ident "(" top { "," top } ")" | "(" top ")"
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`.

use super::literal::{scan, Literal};
use super::{Expr, NamedConst, Op};
use crate::error::{Error, Result};

const KEYWORDS: &[&str] = &["if", "then", "else", "and", "or"];

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::End => "end of input".to_string(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    const SYMBOLS: &[&str] = &["<=", ">=", "==", "+", "-", "*", "/", "^", "(", ")", ",", "<", ">"];
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            if let Some(n) = scan(&bytes[i..]) {
                out.push(Token { tok: Tok::Num(text[i..i + n].to_string()), offset: i });
                i += n;
                continue;
            }
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), offset: start });
            continue;
        }
        for sym in SYMBOLS {
            if text[i..].starts_with(sym) {
                out.push(Token { tok: Tok::Sym(sym), offset: i });
                i += sym.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(Error::Syntax {
            offset: i,
            message: format!("unexpected character `{ch}`"),
            expected: vec!["expression".into()],
        });
    }
    out.push(Token { tok: Tok::End, offset: text.len() });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Parse infix math text into an expression.
pub fn parse_math(text: &str) -> Result<Expr> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.top()?;
    p.expect_end()?;
    e.validate()?;
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: format!("unexpected {}", describe(self.peek())),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[s])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn expect_end(&self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.fail(&["operator", "end of input"])
        }
    }

    fn top(&mut self) -> Result<Expr> {
        if self.is_kw("if") {
            self.bump();
            let cond = self.cond()?;
            self.expect_kw("then")?;
            let then = self.top()?;
            self.expect_kw("else")?;
            let otherwise = self.top()?;
            return Ok(Expr::if_(cond, then, otherwise));
        }
        self.sum()
    }

    fn cond(&mut self) -> Result<Expr> {
        let mut lhs = self.conj()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.conj()?;
            lhs = Expr::binary(Op::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Expr> {
        let mut lhs = self.catom()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.catom()?;
            lhs = Expr::binary(Op::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn catom(&mut self) -> Result<Expr> {
        if self.is_sym("(") {
            // Either a parenthesized condition or the start of a comparison
            // whose left side is parenthesized; try the former first.
            let save = self.pos;
            self.bump();
            if let Ok(c) = self.cond() {
                if self.is_sym(")") {
                    self.bump();
                    if !self.at_comparator() {
                        return Ok(c);
                    }
                }
            }
            self.pos = save;
        }
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Sym("<") => Op::Lt,
            Tok::Sym("<=") => Op::Le,
            Tok::Sym(">") => Op::Gt,
            Tok::Sym(">=") => Op::Ge,
            Tok::Sym("==") => Op::Eq,
            _ => return self.fail(&["<", "<=", ">", ">=", "=="]),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn at_comparator(&self) -> bool {
        matches!(self.peek(), Tok::Sym("<" | "<=" | ">" | ">=" | "=="))
            || matches!(self.peek(), Tok::Sym("+" | "-" | "*" | "/" | "^"))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.is_sym("+") {
                Op::Add
            } else if self.is_sym("-") {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        loop {
            let op = if self.is_sym("*") {
                Op::Mul
            } else if self.is_sym("/") {
                Op::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.power()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.is_sym("^") {
            self.bump();
            let exp = self.power()?;
            return Ok(Expr::binary(Op::Pow, base, exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_sym("-") {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::unary(Op::Neg, inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                Ok(Expr::Num(Literal::new(&text).expect("lexer produced a literal")))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.top()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => {
                self.fail(&["number", "identifier", "("])
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is_sym("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        args.push(self.top()?);
                        while self.is_sym(",") {
                            self.bump();
                            args.push(self.top()?);
                        }
                    }
                    self.expect_sym(")")?;
                    return call(&name, args, offset);
                }
                if let Some(c) = NamedConst::from_name(&name) {
                    return Ok(Expr::Const(c));
                }
                Ok(Expr::Var(name))
            }
            _ => self.fail(&["number", "identifier", "(", "-"]),
        }
    }
}

fn call(name: &str, args: Vec<Expr>, offset: usize) -> Result<Expr> {
    let op = Op::function(name).ok_or_else(|| Error::UnknownFunction {
        name: name.to_string(),
        offset,
        supported: Op::function_names(),
    })?;
    if args.len() != op.arity() {
        return Err(Error::Arity {
            name: name.to_string(),
            expected: op.arity(),
            found: args.len(),
            offset,
        });
    }
    Ok(Expr::Op(op, args))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::emit_math;

    fn p(s: &str) -> Expr {
        parse_math(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn cancellation_example() {
        let e = p("x + 1 - x");
        let want = Expr::binary(
            Op::Sub,
            Expr::binary(Op::Add, Expr::var("x"), Expr::num("1")),
            Expr::var("x"),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn asinh_example() {
        let e = p("log(x + sqrt(x * x + 1))");
        let xx = Expr::binary(Op::Mul, Expr::var("x"), Expr::var("x"));
        let want = Expr::unary(
            Op::Log,
            Expr::binary(
                Op::Add,
                Expr::var("x"),
                Expr::unary(Op::Sqrt, Expr::binary(Op::Add, xx, Expr::num("1"))),
            ),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn arity_error() {
        match parse_math("sin()") {
            Err(Error::Arity { name, expected: 1, found: 0, .. }) => assert_eq!(name, "sin"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_math("hypot(x)"), Err(Error::Arity { .. })));
    }

    #[test]
    fn unknown_function_lists_table() {
        match parse_math("foo(x)") {
            Err(Error::UnknownFunction { name, offset: 0, supported }) => {
                assert_eq!(name, "foo");
                assert!(supported.contains(&"hypot"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_offset_and_expected() {
        match parse_math("x + * 2") {
            Err(Error::Syntax { offset: 4, expected, .. }) => assert!(!expected.is_empty()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_math("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_math("x $ 1"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_math(""), Err(Error::Syntax { offset: 0, .. })));
    }

    #[test]
    fn precedence() {
        assert_eq!(emit_math(&p("-x^2")), emit_math(&Expr::binary(Op::Pow, Expr::unary(Op::Neg, Expr::var("x")), Expr::num("2"))));
        let e = p("2^3^x");
        assert_eq!(e.head(), Some(Op::Pow));
        assert_eq!(e.children()[1].head(), Some(Op::Pow));
        let e = p("a - b - c");
        assert_eq!(e.children()[0].head(), Some(Op::Sub));
        let e = p("a + b * c / d");
        assert_eq!(e.children()[1].head(), Some(Op::Div));
    }

    #[test]
    fn conditionals() {
        let e = p("if x <= 1 and (x > 0 or x == -1) then x else 1 / x");
        assert_eq!(e.head(), Some(Op::If));
        assert_eq!(e.children()[0].head(), Some(Op::And));
        let e = p("if (x + 1) * 2 < 3 then x else 0");
        assert_eq!(e.children()[0].head(), Some(Op::Lt));
        assert!(parse_math("x and y").is_err());
        assert!(parse_math("x < 1").is_err());
        assert!(parse_math("if x then 1 else 2").is_err());
    }

    #[test]
    fn constants_and_variables() {
        let e = p("PI * E + INFINITY + pi");
        assert_eq!(e.free_vars(), vec!["pi".to_string()]);
    }
}
