//! Parser for the bundle-expression mini-language.
//!
//! Grammar: `expr := term (("*" | "⊗") term)*` with
//! `term := T | T* | S^k (T|T*) | Lam^k (T|T*) | Lam^0 | C^k`.
//! A `*` directly after `T` always binds as the cotangent star; product
//! stars following a `T` need whitespace. The canonical printer is
//! `BundleSpec`'s `Display`, and parsing its output round-trips.

use std::fmt;

use natop_core::{BundleSpec, Variance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Character offset into the expression, 0-based.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.pos + 1, self.msg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Tangent,
    Cotangent,
    Sym(usize),
    Alt(usize),
    TraceFree(usize),
    Product,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

fn lex(expr: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '*' | '⊗' => {
                out.push((i, Token::Product));
                i += 1;
            }
            'T' => {
                if chars.get(i + 1) == Some(&'*') {
                    out.push((i, Token::Cotangent));
                    i += 2;
                } else {
                    out.push((i, Token::Tangent));
                    i += 1;
                }
            }
            'S' | 'C' | 'L' => {
                let (name, skip) = match c {
                    'L' => {
                        if chars.get(i + 1) == Some(&'a') && chars.get(i + 2) == Some(&'m') {
                            ("Lam", 3)
                        } else {
                            return err(i, "unknown symbol (expected Lam^k)");
                        }
                    }
                    'S' => ("S", 1),
                    _ => ("C", 1),
                };
                if chars.get(i + skip) != Some(&'^') {
                    return err(i + skip, format!("expected ^ after {name}"));
                }
                let start = i + skip + 1;
                let mut end = start;
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                if end == start {
                    return err(start, format!("expected an integer after {name}^"));
                }
                let k: usize = chars[start..end]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| ParseError {
                        pos: start,
                        msg: "power does not fit in a machine integer".into(),
                    })?;
                out.push((
                    i,
                    match c {
                        'S' => Token::Sym(k),
                        'L' => Token::Alt(k),
                        _ => Token::TraceFree(k),
                    },
                ));
                i = end;
            }
            _ => return err(i, format!("unexpected character {c:?}")),
        }
    }
    Ok(out)
}

fn parse_term(
    tokens: &[(usize, Token)],
    at: &mut usize,
    expr_len: usize,
) -> Result<BundleSpec, ParseError> {
    let Some((pos, tok)) = tokens.get(*at) else {
        return err(expr_len, "expected a bundle term");
    };
    *at += 1;
    match tok {
        Token::Tangent => Ok(BundleSpec::tangent()),
        Token::Cotangent => Ok(BundleSpec::cotangent()),
        Token::TraceFree(0) => err(
            *pos,
            "C^0 is not a bundle: trace-free vector valued forms start at C^1",
        ),
        Token::TraceFree(k) => BundleSpec::trace_free_forms(*k)
            .map_err(|e| ParseError { pos: *pos, msg: e.to_string() }),
        Token::Sym(k) | Token::Alt(k) => {
            let sym = matches!(tok, Token::Sym(_));
            let variance = match tokens.get(*at) {
                Some((_, Token::Tangent)) => Variance::Upper,
                Some((_, Token::Cotangent)) => Variance::Lower,
                _ if !sym && *k == 0 => return Ok(BundleSpec::scalar()),
                other => {
                    let at_pos = other.map(|(p, _)| *p).unwrap_or(expr_len);
                    return err(
                        at_pos,
                        format!(
                            "{}^{} must be followed by T or T*{}",
                            if sym { "S" } else { "Lam" },
                            k,
                            if sym { "" } else { " (only Lam^0 stands alone)" }
                        ),
                    );
                }
            };
            *at += 1;
            Ok(if sym {
                BundleSpec::sym_power(variance, *k)
            } else {
                BundleSpec::alt_power(variance, *k)
            })
        }
        Token::Product => err(*pos, "expected a bundle term, found a product sign"),
    }
}

pub fn parse_bundle(expr: &str) -> Result<BundleSpec, ParseError> {
    let tokens = lex(expr)?;
    let expr_len = expr.chars().count();
    let acc_pos = tokens.first().map(|(p, _)| *p).unwrap_or(0);
    let mut at = 0;
    let mut acc = parse_term(&tokens, &mut at, expr_len)?;
    while at < tokens.len() {
        let (pos, tok) = &tokens[at];
        if *tok != Token::Product {
            return err(*pos, "expected * or ⊗ between bundle terms");
        }
        at += 1;
        let term_pos = tokens.get(at).map(|(p, _)| *p).unwrap_or(expr_len);
        let term = parse_term(&tokens, &mut at, expr_len)?;
        acc = acc.tensor(&term).map_err(|e| ParseError {
            // the trace-free operand is the offender, whichever side it is on
            pos: if acc.is_trace_free() { acc_pos } else { term_pos },
            msg: e.to_string(),
        })?;
    }
    Ok(acc)
}
