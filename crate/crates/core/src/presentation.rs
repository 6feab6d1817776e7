//! Finite presentations and Todd-Coxeter coset enumeration.
//!
//! Relations are written with named generators, for example
//! `a^2 = 1`, `b^4`, `b^a = b^-1` or `[a, b] = b^2`. A bare word is a
//! relator. `x^y` with a generator `y` is conjugation `y^-1 x y` and
//! `[x, y] = x^-1 y^-1 x y`.

use crate::error::{Error, Result};

/// A letter is `2 * generator` or `2 * generator + 1` for the inverse.
pub type Word = Vec<usize>;

#[inline]
pub fn inverse_letter(x: usize) -> usize {
    x ^ 1
}

pub fn invert(w: &[usize]) -> Word {
    w.iter().rev().map(|&x| inverse_letter(x)).collect()
}

fn power(w: &[usize], e: i64) -> Word {
    let base = if e < 0 { invert(w) } else { w.to_vec() };
    let mut out = Vec::with_capacity(base.len() * e.unsigned_abs() as usize);
    for _ in 0..e.unsigned_abs() {
        out.extend_from_slice(&base);
    }
    out
}

/// Cancels adjacent inverse pairs.
pub fn free_reduce(w: &[usize]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &x in w {
        if out.last() == Some(&inverse_letter(x)) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a [String],
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Invalid(format!(
            "relation {:?}: {msg} at offset {}",
            String::from_utf8_lossy(self.src),
            self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> Result<Word> {
        let mut w = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_alphabetic() || c == b'(' || c == b'[' || c == b'1' => {
                    w.extend(self.factor()?);
                }
                Some(b'*') => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok(w)
    }

    fn factor(&mut self) -> Result<Word> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            match self.peek() {
                Some(c) if c == b'-' || c.is_ascii_digit() => {
                    let e = self.integer()?;
                    base = power(&base, e);
                }
                Some(c) if c.is_ascii_alphabetic() || c == b'(' || c == b'[' => {
                    let y = self.atom()?;
                    let mut w = invert(&y);
                    w.extend(base);
                    w.extend(y);
                    base = w;
                }
                _ => return Err(self.err("expected exponent or conjugating element")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Word> {
        match self.peek() {
            Some(b'1') => {
                self.pos += 1;
                Ok(Vec::new())
            }
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(w)
            }
            Some(b'[') => {
                self.pos += 1;
                let x = self.word()?;
                if !self.eat(b',') {
                    return Err(self.err("expected ','"));
                }
                let y = self.word()?;
                if !self.eat(b']') {
                    return Err(self.err("expected ']'"));
                }
                let mut w = invert(&x);
                w.extend(invert(&y));
                w.extend(x);
                w.extend(y);
                Ok(w)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let g = self
                    .names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| self.err(&format!("unknown generator {name:?}")))?;
                Ok(vec![2 * g])
            }
            _ => Err(self.err("expected a generator, '1', '(' or '['")),
        }
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("bad integer"))
    }
}

/// Parses `lhs = rhs` (or a bare relator) into the relator `lhs rhs^-1`.
pub fn parse_relation(names: &[String], text: &str) -> Result<Word> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, names };
    let lhs = p.word()?;
    let mut rel = lhs;
    if p.eat(b'=') {
        let rhs = p.word()?;
        rel.extend(invert(&rhs));
    }
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(free_reduce(&rel))
}

/// The coset table of the trivial subgroup: `table[c][x]` is the coset `c.x`
/// for every letter `x`, with coset `0` the identity.
pub fn enumerate_cosets(ngens: usize, relators: &[Word], cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut tc = ToddCoxeter::new(2 * ngens, cap);
    let rels: Vec<Word> = relators.iter().filter(|r| !r.is_empty()).cloned().collect();
    let mut c = 0;
    while c < tc.table.len() {
        if tc.alive(c) {
            for r in &rels {
                tc.scan_and_fill(c, r)?;
                if !tc.alive(c) {
                    break;
                }
            }
            if tc.alive(c) {
                for x in 0..2 * ngens {
                    if tc.table[c][x] == NONE {
                        tc.define(c, x)?;
                    }
                }
            }
        }
        c += 1;
    }
    Ok(tc.compact())
}

const NONE: usize = usize::MAX;

struct ToddCoxeter {
    letters: usize,
    table: Vec<Vec<usize>>,
    parent: Vec<usize>,
    cap: usize,
}

impl ToddCoxeter {
    fn new(letters: usize, cap: usize) -> Self {
        ToddCoxeter { letters, table: vec![vec![NONE; letters]], parent: vec![0], cap }
    }

    fn alive(&self, c: usize) -> bool {
        self.parent[c] == c
    }

    fn define(&mut self, c: usize, x: usize) -> Result<usize> {
        let n = self.table.len();
        if n >= self.cap {
            return Err(Error::CapExceeded { what: "coset enumeration", needed: n + 1, cap: self.cap });
        }
        self.table.push(vec![NONE; self.letters]);
        self.parent.push(n);
        self.table[c][x] = n;
        self.table[n][inverse_letter(x)] = c;
        Ok(n)
    }

    fn rep(&mut self, c: usize) -> usize {
        let mut r = c;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = c;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn merge(&mut self, a: usize, b: usize, queue: &mut Vec<usize>) {
        let a = self.rep(a);
        let b = self.rep(b);
        if a == b {
            return;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.parent[hi] = lo;
        queue.push(hi);
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let g = queue[i];
            i += 1;
            for x in 0..self.letters {
                let d = self.table[g][x];
                if d == NONE {
                    continue;
                }
                let xi = inverse_letter(x);
                if self.table[d][xi] == g {
                    self.table[d][xi] = NONE;
                }
                let mu = self.rep(g);
                let nu = self.rep(d);
                if self.table[mu][x] != NONE {
                    let t = self.table[mu][x];
                    self.merge(nu, t, &mut queue);
                } else if self.table[nu][xi] != NONE {
                    let t = self.table[nu][xi];
                    self.merge(mu, t, &mut queue);
                } else {
                    self.table[mu][x] = nu;
                    self.table[nu][xi] = mu;
                }
            }
        }
    }

    fn scan_and_fill(&mut self, c: usize, w: &[usize]) -> Result<()> {
        let mut f = c;
        let mut b = c;
        let mut i = 0usize;
        let mut j = w.len();
        loop {
            while i < j && self.table[f][w[i]] != NONE {
                f = self.table[f][w[i]];
                i += 1;
            }
            if i == j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j > i && self.table[b][inverse_letter(w[j - 1])] != NONE {
                b = self.table[b][inverse_letter(w[j - 1])];
                j -= 1;
            }
            if j == i {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            if j == i + 1 {
                self.table[f][w[i]] = b;
                self.table[b][inverse_letter(w[i])] = f;
                return Ok(());
            }
            self.define(f, w[i])?;
        }
    }

    fn compact(mut self) -> Vec<Vec<usize>> {
        let n = self.table.len();
        let mut new_index = vec![NONE; n];
        let mut live = Vec::new();
        for c in 0..n {
            if self.rep(c) == c {
                new_index[c] = live.len();
                live.push(c);
            }
        }
        let mut out = Vec::with_capacity(live.len());
        for &c in &live {
            let row: Vec<usize> = (0..self.letters).map(|x| self.table[c][x]).collect();
            out.push(row.into_iter().map(|d| new_index[self.rep(d)]).collect());
        }
        out
    }
}
