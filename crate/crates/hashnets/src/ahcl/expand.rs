//! Index pre-expansion: component parameters `<N = 5>`, iterator
//! declarations `iterator i range [lo, hi] step k;`, replicated blocks
//! `[/ ... /]` and integer index expressions `[i + 1 mod N]`.
//!
//! The output keeps a byte map back to the original text so later stages
//! can report positions in the user's file.

use std::collections::BTreeMap;

pub(crate) struct Expanded {
    pub text: String,
    /// `origin[k]` is the source offset of output byte `k`; one extra entry
    /// marks the end of input.
    pub origin: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct ExpandError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ExpandError> {
    Err(ExpandError { offset, message: message.into() })
}

fn is_word(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

struct IndexRange {
    name: String,
    values: Vec<i64>,
}

struct Src<'a> {
    s: &'a [u8],
    /// Regions removed from the output (parameter lists, declarations).
    skips: BTreeMap<usize, usize>,
    iterators: Vec<IndexRange>,
}

type Env = BTreeMap<String, i64>;

impl Src<'_> {
    fn skip_ws(&self, mut i: usize) -> usize {
        loop {
            while i < self.s.len() && self.s[i].is_ascii_whitespace() {
                i += 1;
            }
            if self.s[i..].starts_with(b"//") {
                while i < self.s.len() && self.s[i] != b'\n' {
                    i += 1;
                }
            } else {
                return i;
            }
        }
    }

    fn word(&self, i: usize) -> Option<(usize, &str)> {
        let mut j = i;
        while j < self.s.len() && is_word(self.s[j]) {
            j += 1;
        }
        if j == i || self.s[i].is_ascii_digit() {
            return None;
        }
        Some((j, std::str::from_utf8(&self.s[i..j]).unwrap()))
    }

    fn find_byte(&self, from: usize, b: u8) -> Option<usize> {
        self.s[from..].iter().position(|&c| c == b).map(|k| k + from)
    }

    /// Offset of the `]` closing the `[` at `open`.
    fn close_bracket(&self, open: usize) -> Option<usize> {
        let mut depth = 0;
        for (k, &c) in self.s[open..].iter().enumerate() {
            match c {
                b'[' => depth += 1,
                b']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(open + k);
                    }
                }
                b'\n' | b'{' | b'}' | b';' => return None,
                _ => {}
            }
        }
        None
    }

    /// Offset of the `/]` closing the block opened at `open`.
    fn close_block(&self, open: usize) -> Option<usize> {
        let mut depth = 0;
        let mut i = open;
        while i + 1 < self.s.len() {
            if self.s[i..].starts_with(b"//") {
                i = self.find_byte(i, b'\n')?;
                continue;
            }
            if self.s[i..].starts_with(b"[/") {
                depth += 1;
                i += 2;
                continue;
            }
            if self.s[i..].starts_with(b"/]") {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
                i += 2;
                continue;
            }
            i += 1;
        }
        None
    }

    fn text(&self, a: usize, b: usize) -> &str {
        std::str::from_utf8(&self.s[a..b]).unwrap_or("")
    }
}

/// `name = expr, ...` inside `<...>`.
fn parse_params(
    src: &Src,
    lo: usize,
    hi: usize,
    overrides: &[(String, i64)],
    env: &mut Env,
) -> Result<(), ExpandError> {
    for part in split_top(src.text(lo, hi)) {
        let (off, piece) = (lo + part.0, part.1);
        let Some((name, expr)) = piece.split_once('=') else {
            return err(off, "expected `name = value` in parameter list");
        };
        let name = name.trim().to_string();
        let value = match overrides.iter().find(|(n, _)| *n == name) {
            Some((_, v)) => *v,
            None => eval(expr, env).map_err(|m| ExpandError { offset: off, message: m })?,
        };
        env.insert(name, value);
    }
    Ok(())
}

/// Splits at commas outside parentheses, keeping relative offsets.
fn split_top(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (k, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push((start, &s[start..k]));
                start = k + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push((start, &s[start..]));
    }
    out
}

fn first_pass(src: &mut Src, overrides: &[(String, i64)]) -> Result<Env, ExpandError> {
    let mut env = Env::new();
    let mut seen_component = false;
    let s = src.s;
    let mut i = 0;
    while i < s.len() {
        if s[i..].starts_with(b"//") {
            i = src.find_byte(i, b'\n').unwrap_or(s.len());
            continue;
        }
        if i > 0 && is_word(s[i - 1]) || !is_word(s[i]) {
            i += 1;
            continue;
        }
        let Some((end, w)) = src.word(i) else {
            i += 1;
            continue;
        };
        if w == "component" && !seen_component {
            seen_component = true;
            let j = src.skip_ws(end);
            if let Some((after_name, _)) = src.word(j) {
                let k = src.skip_ws(after_name);
                if s.get(k) == Some(&b'<') {
                    let Some(close) = src.find_byte(k, b'>') else {
                        return err(k, "unterminated parameter list");
                    };
                    parse_params(src, k + 1, close, overrides, &mut env)?;
                    src.skips.insert(k, close + 1);
                }
            }
        } else if w == "iterator" {
            let Some(semi) = src.find_byte(end, b';') else {
                return err(i, "iterator declaration must end with `;`");
            };
            let decl = src.text(end, semi).to_string();
            let it = parse_iterator(&decl, &env).map_err(|m| ExpandError { offset: i, message: m })?;
            if src.iterators.iter().any(|o| o.name == it.name) {
                return err(i, format!("iterator `{}` declared twice", it.name));
            }
            src.iterators.push(it);
            src.skips.insert(i, semi + 1);
            i = semi + 1;
            continue;
        }
        i = end;
    }
    for (n, v) in overrides {
        env.entry(n.clone()).or_insert(*v);
    }
    Ok(env)
}

/// ` i range [lo, hi] step k`
fn parse_iterator(decl: &str, env: &Env) -> Result<IndexRange, String> {
    let decl = decl.trim();
    let (name, rest) = decl.split_once(char::is_whitespace).ok_or("expected `iterator NAME range [lo, hi]`")?;
    let rest = rest.trim_start().strip_prefix("range").ok_or("expected `range` after iterator name")?.trim_start();
    let rest = rest.strip_prefix('[').ok_or("expected `[` after `range`")?;
    let close = rest.rfind(']').ok_or("expected `]` closing the range")?;
    let bounds: Vec<&str> = split_top(&rest[..close]).into_iter().map(|p| p.1).collect();
    if bounds.len() != 2 {
        return Err("range needs two bounds".into());
    }
    let lo = eval(bounds[0], env)?;
    let hi = eval(bounds[1], env)?;
    let tail = rest[close + 1..].trim();
    let step = if tail.is_empty() { 1 } else { eval(tail.strip_prefix("step").ok_or("expected `step` or `;`")?, env)? };
    if step <= 0 {
        return Err("range step must be positive".into());
    }
    let mut values = Vec::new();
    let mut v = lo;
    while v <= hi {
        values.push(v);
        v += step;
    }
    Ok(IndexRange { name: name.to_string(), values })
}

struct Out {
    text: Vec<u8>,
    origin: Vec<usize>,
}

impl Out {
    fn push(&mut self, b: u8, at: usize) {
        self.text.push(b);
        self.origin.push(at);
    }
    fn push_str(&mut self, s: &str, at: usize) {
        for b in s.bytes() {
            self.push(b, at);
        }
    }
}

fn emit(src: &Src, lo: usize, hi: usize, env: &Env, out: &mut Out) -> Result<(), ExpandError> {
    let s = src.s;
    let mut i = lo;
    while i < hi {
        if let Some(&end) = src.skips.get(&i) {
            out.push(b' ', i);
            i = end;
            continue;
        }
        if s[i..].starts_with(b"//") {
            let end = src.find_byte(i, b'\n').unwrap_or(s.len()).min(hi);
            for k in i..end {
                out.push(s[k], k);
            }
            i = end;
            continue;
        }
        if s[i..hi].starts_with(b"[/") {
            let Some(close) = src.close_block(i).filter(|&c| c < hi) else {
                return err(i, "unterminated `[/` block");
            };
            let free = block_iterators(src, i + 2, close, env);
            for binding in product(&free) {
                let mut inner = env.clone();
                inner.extend(binding);
                emit(src, i + 2, close, &inner, out)?;
                out.push(b'\n', i);
            }
            i = close + 2;
            continue;
        }
        if s[i] == b'[' {
            if let Some(close) = src.close_bracket(i).filter(|&c| c < hi) {
                let inner = src.text(i + 1, close);
                if !inner.contains(',') {
                    if let Ok(v) = eval(inner, env) {
                        out.push_str(&format!("[{v}]"), i);
                        i = close + 1;
                        continue;
                    }
                }
            }
        }
        out.push(s[i], i);
        i += 1;
    }
    Ok(())
}

/// Declared iterators mentioned in a block body (outside nested blocks)
/// that are not yet bound.
fn block_iterators<'a>(src: &'a Src, lo: usize, hi: usize, env: &Env) -> Vec<&'a IndexRange> {
    let s = src.s;
    let mut used = std::collections::BTreeSet::new();
    let mut i = lo;
    while i < hi {
        if s[i..].starts_with(b"//") {
            i = src.find_byte(i, b'\n').unwrap_or(hi);
            continue;
        }
        if s[i..hi].starts_with(b"[/") {
            i = src.close_block(i).map_or(hi, |c| c + 2);
            continue;
        }
        if (i == 0 || !is_word(s[i - 1])) && is_word(s[i]) {
            if let Some((end, w)) = src.word(i) {
                used.insert(w.to_string());
                i = end;
                continue;
            }
        }
        i += 1;
    }
    src.iterators.iter().filter(|it| used.contains(&it.name) && !env.contains_key(&it.name)).collect()
}

fn product(its: &[&IndexRange]) -> Vec<Vec<(String, i64)>> {
    let mut acc = vec![Vec::new()];
    for it in its {
        let mut next = Vec::new();
        for prefix in &acc {
            for &v in &it.values {
                let mut p = prefix.clone();
                p.push((it.name.clone(), v));
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

pub(crate) fn expand(text: &str, overrides: &[(String, i64)]) -> Result<Expanded, ExpandError> {
    let mut src = Src { s: text.as_bytes(), skips: BTreeMap::new(), iterators: Vec::new() };
    let env = first_pass(&mut src, overrides)?;
    let mut out = Out { text: Vec::with_capacity(text.len()), origin: Vec::with_capacity(text.len() + 1) };
    emit(&src, 0, text.len(), &env, &mut out)?;
    out.origin.push(text.len());
    let text = String::from_utf8(out.text).map_err(|_| ExpandError { offset: 0, message: "invalid UTF-8".into() })?;
    Ok(Expanded { text, origin: out.origin })
}

// Integer expressions: `mod` binds loosest, then `+ -`, then `*`.

#[derive(Debug, Clone, PartialEq)]
enum ETok {
    Int(i64),
    Var(String),
    Op(char),
    Mod,
}

fn etokens(s: &str) -> Result<Vec<ETok>, String> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(ETok::Int(s[st..i].parse().map_err(|_| "integer too large")?));
        } else if is_word(c) {
            let st = i;
            while i < b.len() && is_word(b[i]) {
                i += 1;
            }
            let w = &s[st..i];
            out.push(if w == "mod" { ETok::Mod } else { ETok::Var(w.to_string()) });
        } else if matches!(c, b'+' | b'-' | b'*' | b'(' | b')') {
            out.push(ETok::Op(c as char));
            i += 1;
        } else {
            return Err(format!("unexpected `{}` in index expression", c as char));
        }
    }
    Ok(out)
}

pub(crate) fn eval(s: &str, env: &Env) -> Result<i64, String> {
    let toks = etokens(s)?;
    if toks.is_empty() {
        return Err("empty index expression".into());
    }
    let mut p = EParser { toks: &toks, pos: 0, env };
    let v = p.modulo()?;
    if p.pos != toks.len() {
        return Err("trailing tokens in index expression".into());
    }
    Ok(v)
}

struct EParser<'a> {
    toks: &'a [ETok],
    pos: usize,
    env: &'a Env,
}

impl EParser<'_> {
    fn peek(&self) -> Option<&ETok> {
        self.toks.get(self.pos)
    }

    fn modulo(&mut self) -> Result<i64, String> {
        let mut v = self.sum()?;
        while self.peek() == Some(&ETok::Mod) {
            self.pos += 1;
            let m = self.sum()?;
            if m == 0 {
                return Err("mod by zero".into());
            }
            v = v.rem_euclid(m);
        }
        Ok(v)
    }

    fn sum(&mut self) -> Result<i64, String> {
        let mut v = self.product()?;
        loop {
            match self.peek() {
                Some(ETok::Op('+')) => {
                    self.pos += 1;
                    v += self.product()?;
                }
                Some(ETok::Op('-')) => {
                    self.pos += 1;
                    v -= self.product()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn product(&mut self) -> Result<i64, String> {
        let mut v = self.unary()?;
        while self.peek() == Some(&ETok::Op('*')) {
            self.pos += 1;
            v *= self.unary()?;
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<i64, String> {
        let t = self.peek().cloned();
        self.pos += 1;
        match t {
            Some(ETok::Op('-')) => Ok(-self.unary()?),
            Some(ETok::Int(v)) => Ok(v),
            Some(ETok::Var(n)) => self.env.get(&n).copied().ok_or_else(|| format!("unbound index `{n}`")),
            Some(ETok::Op('(')) => {
                let v = self.modulo()?;
                if self.peek() != Some(&ETok::Op(')')) {
                    return Err("expected `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err("expected a number or index".into()),
        }
    }
}
