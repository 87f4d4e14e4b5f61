use super::StreamKind;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// A value tree: a leaf value or a (possibly empty) list of subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Nested {
    Value(String),
    List(Vec<Nested>),
}

impl Nested {
    pub fn depth(&self) -> usize {
        match self {
            Nested::Value(_) => 0,
            Nested::List(xs) => 1 + xs.iter().map(Nested::depth).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for Nested {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nested::Value(v) => f.write_str(v),
            Nested::List(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parses list literals such as `[[1],[5,6]]`.
impl FromStr for Nested {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let tree = parse_nested(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(format!("trailing input at {pos}"));
        }
        Ok(tree)
    }
}

fn parse_nested(c: &[char], pos: &mut usize) -> Result<Nested, String> {
    match c.get(*pos) {
        Some('[') => {
            *pos += 1;
            let mut items = Vec::new();
            if c.get(*pos) == Some(&']') {
                *pos += 1;
                return Ok(Nested::List(items));
            }
            loop {
                items.push(parse_nested(c, pos)?);
                match c.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(']') => {
                        *pos += 1;
                        return Ok(Nested::List(items));
                    }
                    other => return Err(format!("expected `,` or `]` at {pos}, found {other:?}")),
                }
            }
        }
        Some(_) => {
            let start = *pos;
            while *pos < c.len() && !matches!(c[*pos], '[' | ']' | ',') {
                *pos += 1;
            }
            if *pos == start {
                return Err(format!("expected a value at {start}"));
            }
            Ok(Nested::Value(c[start..*pos].iter().collect()))
        }
        None => Err("unexpected end of input".into()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("value at depth {depth} exceeds nesting factor {n}")]
    DepthExceeded { depth: u32, n: u32 },
    #[error("value at depth {depth} is shallower than nesting factor {n}")]
    ShallowValue { depth: u32, n: u32 },
}

/// Serializes a value tree into the kinds a port of nesting factor `n`
/// transmits. Each list at depth `k` is closed by `Eos(k)`.
pub fn stream_flatten(tree: &Nested, n: u32) -> Result<Vec<StreamKind>, StreamError> {
    fn go(t: &Nested, depth: u32, n: u32, out: &mut Vec<StreamKind>) -> Result<(), StreamError> {
        match t {
            Nested::Value(_) if depth == n => out.push(StreamKind::Data),
            Nested::Value(_) => return Err(StreamError::ShallowValue { depth, n }),
            Nested::List(_) if depth >= n => return Err(StreamError::DepthExceeded { depth: depth + 1, n }),
            Nested::List(xs) => {
                for x in xs {
                    go(x, depth + 1, n, out)?;
                }
                out.push(StreamKind::Eos(depth));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    go(tree, 0, n, &mut out)?;
    Ok(out)
}

/// Kinds that may follow `k` on a port of nesting factor `n`.
pub fn valid_successors(k: StreamKind, n: u32) -> BTreeSet<StreamKind> {
    let mut s = BTreeSet::new();
    match k {
        StreamKind::Data => {
            s.insert(StreamKind::Data);
            if n >= 1 {
                s.insert(StreamKind::Eos(n - 1));
            }
        }
        StreamKind::Eos(0) => {}
        StreamKind::Eos(i) => {
            s.insert(StreamKind::Data);
            s.extend((i - 1..n).map(StreamKind::Eos));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use StreamKind::*;

    #[test]
    fn trivial_shapes() {
        assert_eq!(stream_flatten(&Nested::Value("7".into()), 0), Ok(vec![Data]));
        assert_eq!(stream_flatten(&Nested::List(vec![]), 1), Ok(vec![Eos(0)]));
        assert_eq!(stream_flatten(&"[1,2]".parse().unwrap(), 1), Ok(vec![Data, Data, Eos(0)]));
        assert_eq!(stream_flatten(&"[[1]]".parse().unwrap(), 1), Err(StreamError::DepthExceeded { depth: 2, n: 1 }));
        assert_eq!(stream_flatten(&"[1]".parse().unwrap(), 2), Err(StreamError::ShallowValue { depth: 1, n: 2 }));
    }

    #[test]
    fn successor_sets() {
        let four: BTreeSet<_> = [Data, Eos(1), Eos(2), Eos(3)].into();
        assert_eq!(valid_successors(Eos(2), 4), four);
        assert!(valid_successors(Eos(0), 4).is_empty());
        assert_eq!(valid_successors(Data, 1), [Data, Eos(0)].into());
    }

    #[test]
    fn nested_text_round_trip() {
        let t: Nested = "[[1],[],[a, b]]".parse().unwrap();
        assert_eq!(t.to_string(), "[[1],[],[a,b]]");
        assert_eq!(t.depth(), 2);
        assert!("[1,".parse::<Nested>().is_err());
    }
}
