//! Recursive-descent parser for the coordinate expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := "-" factor | power ;
//! power  := atom ("^" factor)? ;
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};

/// Positioned syntax error. Line and column are 1-based; a column one past the
/// last character denotes end of input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: expected {}, found {found}", ExpectedList(.expected))]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

struct ExpectedList<'a>(&'a [String]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("nothing"),
            [one] => f.write_str(one),
            many => write!(f, "one of {}", many.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let start_col = column;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            tokens.push(Token { tok, line, column: start_col });
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // Exponent only when a digit follows, so "2e" stays number + identifier.
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| SyntaxError {
                line,
                column: start_col,
                expected: vec!["number".into()],
                found: format!("'{text}'"),
            })?;
            tokens.push(Token { tok: Tok::Num(value), line, column: start_col });
            column += i - start;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            tokens.push(Token { tok: Tok::Ident(text), line, column: start_col });
            column += i - start;
            continue;
        }
        return Err(SyntaxError {
            line,
            column,
            expected: vec!["number".into(), "identifier".into(), "operator".into(), "'('".into()],
            found: format!("character '{c}'"),
        });
    }
    tokens.push(Token { tok: Tok::End, line, column });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let t = self.peek();
        SyntaxError {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        const ATOM_START: [&str; 4] = ["number", "identifier", "'('", "'-'"];
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let ident = self.bump();
                if self.peek().tok != Tok::LParen {
                    return Ok(Expr::Ident(name));
                }
                let Some(func) = Func::from_name(&name) else {
                    let names: Vec<&str> = Func::ALL.iter().map(|f| f.name()).collect();
                    return Err(SyntaxError {
                        line: ident.line,
                        column: ident.column,
                        expected: names.into_iter().map(String::from).collect(),
                        found: format!("unknown function '{name}'"),
                    });
                };
                self.bump();
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Expr::call(func, arg))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(self.error(&ATOM_START)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), SyntaxError> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["')'", "operator"]))
        }
    }
}

/// Parses a complete expression; trailing input is an error.
pub fn parse(source: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn sum_of_squares() {
        let x2 = Expr::binary(BinOp::Pow, Expr::ident("x"), Expr::num(2.0));
        let y2 = Expr::binary(BinOp::Pow, Expr::ident("y"), Expr::num(2.0));
        assert_eq!(p("x^2 + y^2"), Expr::binary(BinOp::Add, x2, y2));
    }

    #[test]
    fn nested_reciprocal() {
        let r2 = Expr::binary(BinOp::Pow, Expr::ident("r"), Expr::num(2.0));
        let inner = Expr::binary(BinOp::Sub, Expr::num(1.0), r2);
        let denom = Expr::binary(BinOp::Pow, inner, Expr::num(2.0));
        assert_eq!(p("1/(1 - r^2)^2"), Expr::binary(BinOp::Div, Expr::num(1.0), denom));
    }

    #[test]
    fn unbalanced_call_reports_end_column() {
        let err = parse("sin(").unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));
        assert!(err.expected.iter().any(|e| e == "number"));
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_minus() {
        let x = || Expr::ident("x");
        assert_eq!(
            p("x^2^3"),
            Expr::binary(BinOp::Pow, x(), Expr::binary(BinOp::Pow, Expr::num(2.0), Expr::num(3.0)))
        );
        assert_eq!(p("-x^2"), Expr::neg(Expr::binary(BinOp::Pow, x(), Expr::num(2.0))));
        assert_eq!(p("x^-1"), Expr::binary(BinOp::Pow, x(), Expr::neg(Expr::num(1.0))));
    }

    #[test]
    fn doubled_operator_has_column() {
        let err = parse("x +* y").unwrap_err();
        assert_eq!(err.column, 4);
    }

    #[test]
    fn exponent_literals() {
        assert_eq!(p("1.5e-3"), Expr::Num(1.5e-3));
        assert_eq!(p(".25"), Expr::Num(0.25));
        assert!(parse("2e").is_err());
    }

    #[test]
    fn multiline_positions() {
        let err = parse("x +\n  * y").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn unknown_function_rejected() {
        let err = parse("foo(x)").unwrap_err();
        assert!(err.found.contains("foo"));
    }
}
