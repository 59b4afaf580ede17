//! Tiny whitelist parser for angle arguments: decimal numbers, `pi`, and the
//! four arithmetic operators, so flags accept `pi/12` or `-4*pi/9` as well as
//! plain radians like `0.1545`.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
}

fn tokenize(input: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        match ch {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            'p' | 'P' => {
                if input[i..].len() >= 2 && input[i..i + 2].eq_ignore_ascii_case("pi") {
                    out.push(Token::Number(PI));
                    i += 2;
                } else {
                    return Err(format!("unexpected character '{ch}' in '{input}'"));
                }
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                let text = &input[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| format!("invalid number '{text}' in '{input}'"))?;
                out.push(Token::Number(value));
            }
            other => return Err(format!("unexpected character '{other}' in '{input}'")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<f64, String> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Plus => {
                    self.next();
                    acc += self.term()?;
                }
                Token::Minus => {
                    self.next();
                    acc -= self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<f64, String> {
        let mut acc = self.factor()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Star => {
                    self.next();
                    acc *= self.factor()?;
                }
                Token::Slash => {
                    self.next();
                    let d = self.factor()?;
                    if d == 0.0 {
                        return Err("division by zero".to_string());
                    }
                    acc /= d;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // factor := ('+' | '-')* number
    fn factor(&mut self) -> Result<f64, String> {
        match self.next() {
            Some(Token::Number(v)) => Ok(v),
            Some(Token::Minus) => Ok(-self.factor()?),
            Some(Token::Plus) => self.factor(),
            Some(other) => Err(format!("unexpected token {other:?}")),
            None => Err("unexpected end of expression".to_string()),
        }
    }
}

/// Evaluates an angle expression to radians.
pub fn parse_angle(input: &str) -> Result<f64, String> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err("empty angle expression".to_string());
    }
    let mut parser = Parser { tokens, pos: 0 };
    let value = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("trailing input in angle expression '{input}'"));
    }
    if !value.is_finite() {
        return Err(format!("angle expression '{input}' is not finite"));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_numbers() {
        assert_eq!(parse_angle("0.1545").unwrap(), 0.1545);
        assert_eq!(parse_angle("-1.2956").unwrap(), -1.2956);
        assert_eq!(parse_angle("3").unwrap(), 3.0);
    }

    #[test]
    fn pi_fractions() {
        assert!((parse_angle("pi/12").unwrap() - PI / 12.0).abs() < 1e-15);
        assert!((parse_angle("5*pi/12").unwrap() - 5.0 * PI / 12.0).abs() < 1e-15);
        assert!((parse_angle("-4*pi/9").unwrap() + 4.0 * PI / 9.0).abs() < 1e-15);
        assert!((parse_angle("2*pi/9").unwrap() - 2.0 * PI / 9.0).abs() < 1e-15);
    }

    #[test]
    fn sums_and_signs() {
        assert!((parse_angle("pi/4 + pi/4").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((parse_angle("--1").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_angle("").is_err());
        assert!(parse_angle("pi pi").is_err());
        assert!(parse_angle("1/0").is_err());
        assert!(parse_angle("sin(1)").is_err());
        assert!(parse_angle("1..5").is_err());
    }
}
