use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Dollar,
    Ident(String),
    Int(i64),
    Str(String),
    Assign,
    Amp,
    Semi,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    /// `*`, only meaningful in query paths.
    Star,
    /// `@unknown` or `•`, only meaningful in query paths.
    Unknown,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Dollar => "`$`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Assign => "`=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Semi => "`;`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Star => "`*`".into(),
            Tok::Unknown => "unknown-field marker".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
    pub len: u32,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let single = |tok| Token { tok, line: start_line, column: start_col, len: 1 };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '$' => toks.push(single(Tok::Dollar)),
            '=' => toks.push(single(Tok::Assign)),
            '&' => toks.push(single(Tok::Amp)),
            ';' => toks.push(single(Tok::Semi)),
            '(' => toks.push(single(Tok::LParen)),
            ')' => toks.push(single(Tok::RParen)),
            '{' => toks.push(single(Tok::LBrace)),
            '}' => toks.push(single(Tok::RBrace)),
            '[' => toks.push(single(Tok::LBracket)),
            ']' => toks.push(single(Tok::RBracket)),
            '*' => toks.push(single(Tok::Star)),
            '•' => toks.push(single(Tok::Unknown)),
            '@' => {
                let word: String = chars[i + 1..].iter().take_while(|c| is_ident(**c)).collect();
                if word != "unknown" {
                    return Err(ParseError::new(line, col, "expected `@unknown`"));
                }
                let len = 1 + word.chars().count();
                toks.push(Token { tok: Tok::Unknown, line, column: col, len: len as u32 });
                i += len;
                col += len as u32;
                continue;
            }
            '\'' => {
                let mut s = String::new();
                let mut j = i + 1;
                let (mut l, mut cl) = (line, col + 1);
                loop {
                    match chars.get(j) {
                        None => return Err(ParseError::new(line, col, "unterminated string literal")),
                        Some('\'') => break,
                        Some('\\') if matches!(chars.get(j + 1), Some('\'') | Some('\\')) => {
                            s.push(chars[j + 1]);
                            j += 2;
                            cl += 2;
                        }
                        Some('\n') => {
                            s.push('\n');
                            j += 1;
                            l += 1;
                            cl = 1;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                            cl += 1;
                        }
                    }
                }
                toks.push(Token { tok: Tok::Str(s), line, column: col, len: (j + 1 - i) as u32 });
                i = j + 1;
                line = l;
                col = cl + 1;
                continue;
            }
            c if c.is_ascii_digit() => {
                let digits: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
                let n: i64 = digits
                    .parse()
                    .map_err(|_| ParseError::new(line, col, "integer literal out of 64-bit range"))?;
                let len = digits.len();
                toks.push(Token { tok: Tok::Int(n), line, column: col, len: len as u32 });
                i += len;
                col += len as u32;
                continue;
            }
            c if is_ident_start(c) => {
                let word: String = chars[i..].iter().take_while(|c| is_ident(**c)).collect();
                let len = word.chars().count();
                toks.push(Token { tok: Tok::Ident(word), line, column: col, len: len as u32 });
                i += len;
                col += len as u32;
                continue;
            }
            other => {
                return Err(ParseError::new(line, col, format!("unexpected character `{other}`")));
            }
        }
        i += 1;
        col += 1;
    }
    toks.push(Token { tok: Tok::Eof, line, column: col, len: 0 });
    Ok(toks)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_ascii_alphabetic()
}

fn is_ident(c: char) -> bool {
    c == '_' || c.is_ascii_alphanumeric()
}
