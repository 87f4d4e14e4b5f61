use super::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Words, including keywords and indexed names like `phil[3]`.
    Word(String),
    Int(u32),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    /// In expanded-text offsets.
    pub start: usize,
    pub end: usize,
}

const SYMS: [&str; 16] = ["->", "{", "}", "(", ")", ";", ",", ".", "!", "?", "<", ">", "&", "|", ":", "="];

fn word_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

/// Returns the tokens, or the offset of an unexpected character.
pub(crate) fn lex(text: &str) -> Result<Vec<Token>, (usize, char)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b[i..].starts_with(b"//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let tok = text[start..i].parse().map(Tok::Int).map_err(|_| (start, c as char))?;
            out.push(Token { tok, start, end: i });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && word_char(b[i]) {
                i += 1;
            }
            // index suffixes glued to the name: `phil[0][1]`
            while i < b.len() && b[i] == b'[' {
                let mut j = i + 1;
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                if j == i + 1 || j >= b.len() || b[j] != b']' {
                    break;
                }
                i = j + 1;
            }
            out.push(Token { tok: Tok::Word(text[start..i].to_string()), start, end: i });
            continue;
        }
        for s in SYMS {
            if b[i..].starts_with(s.as_bytes()) {
                i += s.len();
                out.push(Token { tok: Tok::Sym(s), start, end: i });
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err((i, ch));
    }
    out.push(Token { tok: Tok::Eof, start: b.len(), end: b.len() });
    Ok(out)
}

/// Maps an expanded-text range back to source offsets.
pub(crate) fn source_span(origin: &[usize], start: usize, end: usize) -> Span {
    let s = origin[start.min(origin.len() - 1)];
    let e = if end > start { origin[(end - 1).min(origin.len() - 1)] + 1 } else { s };
    Span::new(s, e.max(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_symbols_and_indices() {
        let toks: Vec<Tok> = lex("u.p -> phil[2].lf_get! // c\n a'").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Word("u".into()),
                Tok::Sym("."),
                Tok::Word("p".into()),
                Tok::Sym("->"),
                Tok::Word("phil[2]".into()),
                Tok::Sym("."),
                Tok::Word("lf_get".into()),
                Tok::Sym("!"),
                Tok::Word("a'".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character() {
        assert_eq!(lex("a $").unwrap_err(), (2, '$'));
    }
}
