use std::path::Path;

use crate::error::{ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    Decl,
    Output,
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(k) => format!("`{k}`"),
            Tok::Decl => "`.decl`".into(),
            Tok::Output => "`.output`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Turnstile => "`:-`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits source text into tokens. `%` starts a comment running to the end of the line.
/// Inside an identifier, `.` and `@` continue it when followed by an identifier character.
pub(crate) fn tokenize(src: &str, file: Option<&Path>) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        span: SourceSpan {
            file: file.map(Path::to_path_buf),
            line,
            column,
        },
        message,
    };

    macro_rules! bump {
        ($n:expr) => {{
            i += $n;
            col += $n;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                bump!(1);
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }

        let tok = match c {
            '(' => {
                bump!(1);
                Tok::LParen
            }
            ')' => {
                bump!(1);
                Tok::RParen
            }
            ',' => {
                bump!(1);
                Tok::Comma
            }
            '+' => {
                bump!(1);
                Tok::Plus
            }
            '-' => {
                bump!(1);
                Tok::Minus
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                bump!(2);
                Tok::Turnstile
            }
            '.' => {
                let at_word_start = i == 0 || chars[i - 1].is_whitespace();
                let word: String = chars[i + 1..]
                    .iter()
                    .take_while(|c| is_ident_char(**c))
                    .collect();
                match word.as_str() {
                    "decl" if at_word_start => {
                        bump!(5);
                        Tok::Decl
                    }
                    "output" if at_word_start => {
                        bump!(7);
                        Tok::Output
                    }
                    _ => {
                        bump!(1);
                        Tok::Dot
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!(1);
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<u64>()
                    .map_err(|_| err(tl, tc, format!("integer `{text}` is out of range")))?;
                if i < chars.len() && is_ident_char(chars[i]) {
                    return Err(err(tl, tc, format!("malformed literal starting with `{text}`")));
                }
                Tok::Int(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                loop {
                    while i < chars.len() && is_ident_char(chars[i]) {
                        bump!(1);
                    }
                    let joins = i + 1 < chars.len()
                        && matches!(chars[i], '.' | '@')
                        && is_ident_char(chars[i + 1]);
                    if joins {
                        bump!(1);
                    } else {
                        break;
                    }
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src, None)
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn dotted_names_and_terminators() {
        assert_eq!(
            toks("G.l(T) :- F.l.r(T-1). % tail"),
            vec![
                Tok::Ident("G.l".into()),
                Tok::LParen,
                Tok::Ident("T".into()),
                Tok::RParen,
                Tok::Turnstile,
                Tok::Ident("F.l.r".into()),
                Tok::LParen,
                Tok::Ident("T".into()),
                Tok::Minus,
                Tok::Int(1),
                Tok::RParen,
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn directives_need_a_word_boundary() {
        assert_eq!(toks(".decl")[0], Tok::Decl);
        assert_eq!(toks("\n.output G")[0], Tok::Output);
        assert_eq!(toks("B().decl")[3], Tok::Dot);
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("A.\n  B(", None).unwrap();
        assert_eq!((t[2].line, t[2].column), (2, 3));
    }

    #[test]
    fn bad_character_is_located() {
        let e = tokenize("A(x) :- B(x) & C(x).", None).unwrap_err();
        assert_eq!((e.span.line, e.span.column), (1, 14));
    }
}
