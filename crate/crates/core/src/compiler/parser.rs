//! Recursive-descent parser for the expression language.
//!
//! ```text
//! expr    := term (OR term)*
//! term    := factor (AND factor)*
//! factor  := NOT factor | '(' expr ')' | call | atom
//! call    := PREF '(' expr ',' expr ')' | IMPL (..) | MIN (..) | MAX (..)
//!          | MEAN ['[' num (',' num)* ']'] '(' expr (',' expr)+ ')'
//!          | AGG '(' expr (',' expr)+ ')'
//!          | POS '(' num ',' expr ')' | NEC (..) | SHARP (..)
//!          | UNARY '(' num ',' num ',' expr ')'
//! atom    := side ('>' | '<' | '>=' | '<=') side
//! side    := ['-'] term_a (('+' | '-') term_a)*
//! term_a  := num ['^' num] | [num ['*']] var ['^' '2']
//! ```
//!
//! Keywords are case-insensitive. Variables are `x` and `y`, with `x1` and
//! `x2` accepted as aliases.

use crate::error::CompileError;
use crate::operators::UnaryOpSpec;

use super::ast::{Atom, Comparison, Expr, LinearForm};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Caret,
    Gt,
    Lt,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CompileError {
    CompileError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, CompileError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '>' => Some(Tok::Gt),
            '<' => Some(Tok::Lt),
            _ => None,
        };
        let tok = if let Some(t) = single {
            i += 1;
            col += 1;
            // `>=` and `<=` mean the same as the strict forms for continuous truth values.
            if matches!(t, Tok::Gt | Tok::Lt) && chars.get(i) == Some(&'=') {
                i += 1;
                col += 1;
            }
            t
        } else if c.is_ascii_digit() || c == '.' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let v = text
                .parse::<f64>()
                .map_err(|_| syntax(start_line, start_col, format!("malformed number `{text}`")))?;
            Tok::Num(v)
        } else if c.is_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - begin;
            Tok::Ident(chars[begin..i].iter().collect())
        } else {
            return Err(syntax(line, col, format!("unexpected character `{c}`")));
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Keyword {
    And,
    Or,
    Not,
    Pref,
    Impl,
    Mean,
    Agg,
    Min,
    Max,
    Pos,
    Nec,
    Sharp,
    Unary,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        Some(match word.to_ascii_uppercase().as_str() {
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "NOT" => Keyword::Not,
            "PREF" => Keyword::Pref,
            "IMPL" => Keyword::Impl,
            "MEAN" => Keyword::Mean,
            "AGG" => Keyword::Agg,
            "MIN" => Keyword::Min,
            "MAX" => Keyword::Max,
            "POS" => Keyword::Pos,
            "NEC" => Keyword::Nec,
            "SHARP" => Keyword::Sharp,
            "UNARY" => Keyword::Unary,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::Pref => "PREF",
            Keyword::Impl => "IMPL",
            Keyword::Mean => "MEAN",
            Keyword::Agg => "AGG",
            Keyword::Min => "MIN",
            Keyword::Max => "MAX",
            Keyword::Pos => "POS",
            Keyword::Nec => "NEC",
            Keyword::Sharp => "SHARP",
            Keyword::Unary => "UNARY",
        }
    }
}

fn variable(name: &str) -> Option<usize> {
    match name {
        "x" | "x1" => Some(0),
        "y" | "x2" => Some(1),
        _ => None,
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> CompileError {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, want: Tok) -> Result<(), CompileError> {
        if self.peek().tok == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().tok.describe()
            )))
        }
    }

    fn keyword(&self) -> Option<Keyword> {
        match &self.peek().tok {
            Tok::Ident(w) => Keyword::lookup(w),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, CompileError> {
        let mut items = vec![self.term()?];
        while self.keyword() == Some(Keyword::Or) {
            self.bump();
            items.push(self.term()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn term(&mut self) -> Result<Expr, CompileError> {
        let mut items = vec![self.factor()?];
        while self.keyword() == Some(Keyword::And) {
            self.bump();
            items.push(self.factor()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn factor(&mut self) -> Result<Expr, CompileError> {
        if self.peek().tok == Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        match self.keyword() {
            Some(Keyword::Not) => {
                self.bump();
                Ok(Expr::Not(Box::new(self.factor()?)))
            }
            Some(k @ (Keyword::And | Keyword::Or)) => {
                Err(self.error_here(format!("`{}` needs an operand on its left", k.name())))
            }
            Some(k) => {
                self.bump();
                self.call(k)
            }
            None => self.atom().map(Expr::Atom),
        }
    }

    fn number(&mut self) -> Result<f64, CompileError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().tok {
            Tok::Num(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            ref other => Err(self.error_here(format!("expected a number, found {}", other.describe()))),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, CompileError> {
        self.expect(Tok::LParen)?;
        let mut out = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            out.push(self.expr()?);
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn call(&mut self, k: Keyword) -> Result<Expr, CompileError> {
        let arity =
            |op: &'static str, expected: &'static str, found: usize| CompileError::Arity { op, expected, found };
        match k {
            Keyword::Pref | Keyword::Impl | Keyword::Min | Keyword::Max => {
                let mut a = self.args()?;
                if a.len() != 2 {
                    return Err(arity(k.name(), "exactly 2", a.len()));
                }
                let r = Box::new(a.pop().unwrap());
                let l = Box::new(a.pop().unwrap());
                Ok(match k {
                    Keyword::Pref => Expr::Pref(l, r),
                    Keyword::Impl => Expr::Impl(l, r),
                    Keyword::Min => Expr::Min(l, r),
                    _ => Expr::Max(l, r),
                })
            }
            Keyword::Agg => {
                let a = self.args()?;
                if a.len() < 2 {
                    return Err(arity("AGG", "at least 2", a.len()));
                }
                Ok(Expr::Agg(a))
            }
            Keyword::Mean => {
                let weights = if self.peek().tok == Tok::LBracket {
                    self.bump();
                    let mut w = vec![self.number()?];
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        w.push(self.number()?);
                    }
                    self.expect(Tok::RBracket)?;
                    Some(w)
                } else {
                    None
                };
                let args = self.args()?;
                if args.len() < 2 {
                    return Err(arity("MEAN", "at least 2", args.len()));
                }
                if let Some(w) = &weights {
                    if w.len() != args.len() {
                        return Err(CompileError::Unsupported(format!(
                            "MEAN has {} weights for {} operands",
                            w.len(),
                            args.len()
                        )));
                    }
                }
                Ok(Expr::Mean { weights, args })
            }
            Keyword::Pos | Keyword::Nec | Keyword::Sharp | Keyword::Unary => {
                self.expect(Tok::LParen)?;
                let alpha = self.number()?;
                self.expect(Tok::Comma)?;
                let spec = match k {
                    Keyword::Pos => UnaryOpSpec::possibility(alpha),
                    Keyword::Nec => UnaryOpSpec::necessity(alpha),
                    Keyword::Sharp => UnaryOpSpec::sharpness(alpha),
                    _ => {
                        let gamma = self.number()?;
                        self.expect(Tok::Comma)?;
                        UnaryOpSpec::custom(alpha, gamma)
                    }
                };
                let arg = self.expr()?;
                if self.peek().tok == Tok::Comma {
                    return Err(arity(k.name(), "exactly 1", 2));
                }
                self.expect(Tok::RParen)?;
                Ok(Expr::Unary {
                    spec,
                    arg: Box::new(arg),
                })
            }
            Keyword::And | Keyword::Or | Keyword::Not => unreachable!("handled by factor"),
        }
    }

    fn atom(&mut self) -> Result<Atom, CompileError> {
        let start = self.peek().clone();
        let lhs = self.side()?;
        let cmp = match self.peek().tok {
            Tok::Gt => Comparison::Greater,
            Tok::Lt => Comparison::Less,
            ref other => return Err(self.error_here(format!("expected `>` or `<`, found {}", other.describe()))),
        };
        self.bump();
        let rhs = self.side()?;
        if !lhs.has_variables() && !rhs.has_variables() {
            return Err(syntax(start.line, start.column, "comparison must mention x or y"));
        }
        Ok(Atom { lhs, cmp, rhs })
    }

    fn side(&mut self) -> Result<LinearForm, CompileError> {
        let mut form = LinearForm::default();
        let mut sign = 1.0;
        if self.peek().tok == Tok::Minus {
            self.bump();
            sign = -1.0;
        } else if self.peek().tok == Tok::Plus {
            self.bump();
        }
        loop {
            self.arith_term(sign, &mut form)?;
            match self.peek().tok {
                Tok::Plus => sign = 1.0,
                Tok::Minus => sign = -1.0,
                _ => return Ok(form),
            }
            self.bump();
        }
    }

    fn arith_term(&mut self, sign: f64, form: &mut LinearForm) -> Result<(), CompileError> {
        let mut coef = sign;
        let mut saw_number = false;
        if let Tok::Num(v) = self.peek().tok {
            self.bump();
            saw_number = true;
            coef *= v;
            if self.peek().tok == Tok::Caret {
                self.bump();
                let e = self.number()?;
                coef = sign * v.powf(e);
                form.constant += coef;
                return Ok(());
            }
            if self.peek().tok == Tok::Star {
                self.bump();
            } else if !matches!(&self.peek().tok, Tok::Ident(n) if Keyword::lookup(n).is_none()) {
                form.constant += coef;
                return Ok(());
            }
        }
        let t = self.peek().clone();
        let Tok::Ident(name) = &t.tok else {
            let what = if saw_number {
                "a variable"
            } else {
                "a number or variable"
            };
            return Err(self.error_here(format!("expected {what}, found {}", t.tok.describe())));
        };
        if Keyword::lookup(name).is_some() {
            return Err(self.error_here(format!("expected a comparison, found keyword `{name}`")));
        }
        let Some(idx) = variable(name) else {
            return Err(CompileError::UnknownVariable {
                name: name.clone(),
                line: t.line,
                column: t.column,
            });
        };
        self.bump();
        if self.peek().tok == Tok::Caret {
            self.bump();
            let at = self.peek().clone();
            let e = self.number()?;
            if e == 2.0 {
                form.squared[idx] += coef;
            } else if e == 1.0 {
                form.raw[idx] += coef;
            } else {
                return Err(syntax(
                    at.line,
                    at.column,
                    format!("only squares of variables are supported, found exponent {e}"),
                ));
            }
        } else {
            form.raw[idx] += coef;
        }
        Ok(())
    }
}

/// Parses an expression; errors carry 1-based line and column.
pub fn parse_expression(text: &str) -> Result<Expr, CompileError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    if p.peek().tok == Tok::End {
        return Err(p.error_here("empty expression"));
    }
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.error_here(format!("unexpected {}", p.peek().tok.describe())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(text: &str) -> Atom {
        match parse_expression(text).unwrap() {
            Expr::Atom(a) => a,
            other => panic!("not an atom: {other:?}"),
        }
    }

    #[test]
    fn conjunction_of_atoms() {
        let e = parse_expression("(x>0) AND (y>0)").unwrap();
        let Expr::And(v) = e else { panic!() };
        assert_eq!(v.len(), 2);
        assert!(matches!(v[0], Expr::Atom(_)));
    }

    #[test]
    fn xor_structure() {
        let e = parse_expression("((x>0) AND (y>0)) OR ((x<0) AND (y<0))").unwrap();
        let Expr::Or(v) = e else { panic!() };
        assert!(v.iter().all(|c| matches!(c, Expr::And(a) if a.len() == 2)));
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let e = parse_expression("x > 0 OR y > 0 AND x < 1").unwrap();
        let Expr::Or(v) = e else { panic!() };
        assert!(matches!(v[1], Expr::And(_)));
    }

    #[test]
    fn atom_forms() {
        let a = atom("0.5*x - 0.5*y > -0.5");
        assert_eq!(a.lhs.raw, [0.5, -0.5]);
        assert_eq!(a.rhs.constant, -0.5);
        let c = atom("x^2 + y^2 < 5^2");
        assert_eq!(c.lhs.squared, [1.0, 1.0]);
        assert_eq!(c.rhs.constant, 25.0);
        let d = atom("2x + 3 >= -y");
        assert_eq!((d.lhs.raw, d.lhs.constant, d.rhs.raw), ([2.0, 0.0], 3.0, [0.0, -1.0]));
        assert_eq!(atom("x1 < x2").rhs.raw, [0.0, 1.0]);
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_expression("x > > 0") {
            Err(CompileError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
        match parse_expression("(x > 0) AND\n  (y >") {
            Err(CompileError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_expression("").is_err());
        assert!(parse_expression("(x > 0").is_err());
        assert!(parse_expression("x > 0)").is_err());
        assert!(parse_expression("1 > 0").is_err());
        assert!(parse_expression("x^3 > 0").is_err());
    }

    #[test]
    fn unknown_variable() {
        assert!(matches!(
            parse_expression("z > 0"),
            Err(CompileError::UnknownVariable { ref name, line: 1, column: 1 }) if name == "z"
        ));
    }

    #[test]
    fn arity_violations() {
        assert!(matches!(
            parse_expression("PREF(x > 0, y > 0, x > y)"),
            Err(CompileError::Arity { op: "PREF", .. })
        ));
        assert!(matches!(
            parse_expression("MEAN(x > 0)"),
            Err(CompileError::Arity { .. })
        ));
        assert!(parse_expression("MEAN[0.5](x > 0, y > 0)").is_err());
        assert!(parse_expression("MIN(x > 0)").is_err());
    }

    #[test]
    fn calls() {
        let e = parse_expression("MEAN[0.25, 0.75](x > 0, NOT y > 0)").unwrap();
        assert!(matches!(e, Expr::Mean { weights: Some(ref w), .. } if w == &vec![0.25, 0.75]));
        let e = parse_expression("nec(2, x > 0)").unwrap();
        assert!(matches!(e, Expr::Unary { spec, .. } if spec.gamma == -1.0));
        let e = parse_expression("UNARY(2, -0.5, x > 0)").unwrap();
        assert!(matches!(e, Expr::Unary { spec, .. } if spec.gamma == -0.5));
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "((x>0) AND (y>0)) OR ((x<0) AND (y<0))",
            "NOT (x > 0.25) AND MIN(x > y, PREF(y > 0, x^2 + y^2 < 4))",
            "MEAN[0.3, 0.7](x > 0, AGG(y > 0, x < -1, NOT (y < x)))",
            "POS(2, MAX(x > 0, IMPL(y > 1, x > 2)))",
        ] {
            let e = parse_expression(src).unwrap();
            assert_eq!(parse_expression(&e.to_string()).unwrap(), e, "{src}");
        }
    }
}
