//! Line-oriented POMDP text format.
//!
//! ```text
//! # comment
//! states: c0 c1 win
//! actions: left right
//! observations: z
//! initial: c0
//! goal: win                      # or: targets: t1 t2
//! delta c0 right -> c1 1/2, c0 1/2
//! obs c1 -> z 1/3, bot 2/3      # no obs line means `bot 1/1`
//! ```
//!
//! Weights are exact: `p/q`, an integer, or a finite decimal such as `0.25`.

use std::collections::HashSet;
use std::fmt::Write as _;

use obsynth_core::{ActionId, ModelError, ObsSymbol, Pomdp, PomdpBuilder, Prob, StateId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown {kind} `{name}`")]
    Unknown {
        line: usize,
        col: usize,
        kind: &'static str,
        name: String,
    },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("missing `{0}` line")]
    Missing(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok<'a> {
    Word(&'a str),
    Colon,
    Comma,
    Arrow,
}

/// A token with its 1-based column.
pub(crate) type Spanned<'a> = (Tok<'a>, usize);

pub(crate) fn lex(line: &str) -> Vec<Spanned<'_>> {
    let line = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut it = line.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        let col = line[..i].chars().count() + 1;
        match c {
            _ if c.is_whitespace() => {
                it.next();
            }
            ':' => {
                it.next();
                out.push((Tok::Colon, col));
            }
            ',' => {
                it.next();
                out.push((Tok::Comma, col));
            }
            '-' if line[i..].starts_with("->") => {
                it.next();
                it.next();
                out.push((Tok::Arrow, col));
            }
            _ => {
                let mut end = line.len();
                while let Some(&(j, d)) = it.peek() {
                    if d.is_whitespace() || d == ':' || d == ',' || line[j..].starts_with("->") {
                        end = j;
                        break;
                    }
                    it.next();
                }
                out.push((Tok::Word(&line[i..end]), col));
            }
        }
    }
    out
}

/// Parse an exact nonnegative weight.
pub fn parse_weight(s: &str) -> Option<Prob> {
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if let Some((n, d)) = s.split_once('/') {
        if !digits(n) || !digits(d) {
            return None;
        }
        let d: u64 = d.parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Prob::new(n.parse().ok()?, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if !(digits(int) || int.is_empty()) || !digits(frac) || frac.len() > 18 {
            return None;
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let num = int.checked_mul(den)?.checked_add(frac.parse().ok()?)?;
        return Some(Prob::new(num, den));
    }
    digits(s).then(|| s.parse().ok().map(Prob::from_integer))?
}

pub(crate) struct Cursor<'a> {
    toks: Vec<Spanned<'a>>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str, line: usize) -> Self {
        Cursor {
            toks: lex(text),
            pos: 0,
            line,
            end_col: text.split('#').next().unwrap_or("").chars().count() + 1,
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.toks.is_empty()
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        })
    }

    pub(crate) fn word(&mut self, what: &str) -> Result<(&'a str, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some(&(Tok::Word(w), col)) => {
                self.pos += 1;
                Ok((w, col))
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    pub(crate) fn eat(&mut self, t: Tok<'_>) -> bool {
        if self.toks.get(self.pos).map(|x| &x.0) == Some(&t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: Tok<'_>, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            self.error("unexpected trailing input")
        }
    }

    pub(crate) fn weight(&mut self) -> Result<Prob, ParseError> {
        let (w, col) = self.word("a weight")?;
        match parse_weight(w) {
            Some(p) if p > Prob::from_integer(0) => Ok(p),
            Some(_) => Err(ParseError::Syntax {
                line: self.line,
                col,
                msg: "weights must be positive".into(),
            }),
            None => Err(ParseError::Syntax {
                line: self.line,
                col,
                msg: format!("malformed weight `{w}`"),
            }),
        }
    }

    /// Rest of the line as whitespace-separated names.
    pub(crate) fn names(&mut self) -> Result<Vec<(&'a str, usize)>, ParseError> {
        let mut out = Vec::new();
        while !self.at_end() {
            out.push(self.word("a name")?);
        }
        Ok(out)
    }
}

#[derive(Default)]
struct Headers<'a> {
    states: Option<Vec<(&'a str, usize)>>,
    actions: Option<Vec<(&'a str, usize)>>,
    observations: Option<Vec<(&'a str, usize)>>,
    initial: Option<(usize, &'a str, usize)>,
    targets: Option<(usize, Vec<(&'a str, usize)>)>,
}

enum Body<'a> {
    Delta(usize, Cursor<'a>),
    Obs(usize, Cursor<'a>),
}

/// Parse and validate a model. Several targets are reduced to one goal.
pub fn parse_pomdp(text: &str) -> Result<Pomdp, ParseError> {
    let mut h = Headers::default();
    let mut body = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let mut c = Cursor::new(raw, i + 1);
        if c.is_empty() {
            continue;
        }
        let (key, _) = c.word("a declaration")?;
        match key {
            "delta" => body.push(Body::Delta(i + 1, c)),
            "obs" => body.push(Body::Obs(i + 1, c)),
            "states" | "actions" | "observations" | "initial" | "goal" | "targets" => {
                c.expect(Tok::Colon, "`:`")?;
                let names = c.names()?;
                let dup = |c: &Cursor| c.error::<()>(format!("repeated `{key}` line"));
                let slot = match key {
                    "states" => &mut h.states,
                    "actions" => &mut h.actions,
                    "observations" => &mut h.observations,
                    _ => {
                        let single = key == "initial" || key == "goal";
                        if single && names.len() != 1 {
                            return c.error(format!("`{key}` takes exactly one state"));
                        }
                        if key == "initial" {
                            if h.initial.is_some() {
                                dup(&c)?;
                            }
                            h.initial = Some((i + 1, names[0].0, names[0].1));
                        } else {
                            if h.targets.is_some() {
                                return c.error("goal declared twice");
                            }
                            if names.is_empty() {
                                return c.error("expected at least one target");
                            }
                            h.targets = Some((i + 1, names));
                        }
                        continue;
                    }
                };
                if slot.is_some() {
                    dup(&c)?;
                }
                *slot = Some(names);
            }
            _ => {
                return Err(ParseError::Syntax {
                    line: i + 1,
                    col: 1,
                    msg: format!("unknown declaration `{key}`"),
                })
            }
        }
    }

    let mut b = PomdpBuilder::new();
    for &(n, _) in h.states.as_deref().ok_or(ParseError::Missing("states"))? {
        b.add_state(n)?;
    }
    for &(n, _) in h.actions.as_deref().ok_or(ParseError::Missing("actions"))? {
        b.add_action(n)?;
    }
    for &(n, _) in h.observations.as_deref().unwrap_or_default() {
        b.add_observation(n)?;
    }
    let state = |b: &PomdpBuilder, line, (n, col): (&str, usize)| {
        b.state(n).ok_or_else(|| ParseError::Unknown {
            line,
            col,
            kind: "state",
            name: n.into(),
        })
    };
    let (line, n, col) = h.initial.ok_or(ParseError::Missing("initial"))?;
    let init = state(&b, line, (n, col))?;
    b.set_initial(init);
    let (line, targets) = h.targets.ok_or(ParseError::Missing("goal"))?;
    for t in targets {
        let t = state(&b, line, t)?;
        b.add_target(t);
    }

    let mut seen_delta: HashSet<(StateId, ActionId)> = HashSet::new();
    let mut seen_obs: HashSet<StateId> = HashSet::new();
    for item in body {
        match item {
            Body::Delta(line, mut c) => {
                let s = state(&b, line, c.word("a state")?)?;
                let (an, acol) = c.word("an action")?;
                let a = b.action(an).ok_or_else(|| ParseError::Unknown {
                    line,
                    col: acol,
                    kind: "action",
                    name: an.into(),
                })?;
                c.expect(Tok::Arrow, "`->`")?;
                let mut dist = Vec::new();
                loop {
                    let w = c.word("a state")?;
                    let t = state(&b, line, w)?;
                    if dist.iter().any(|&(u, _)| u == t) {
                        return Err(ParseError::Syntax {
                            line,
                            col: w.1,
                            msg: format!("repeated successor `{}`", w.0),
                        });
                    }
                    dist.push((t, c.weight()?));
                    if !c.eat(Tok::Comma) {
                        break;
                    }
                }
                c.finish()?;
                if !seen_delta.insert((s, a)) {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "transition defined twice".into(),
                    });
                }
                b.transition(s, a, dist);
            }
            Body::Obs(line, mut c) => {
                let s = state(&b, line, c.word("a state")?)?;
                c.expect(Tok::Arrow, "`->`")?;
                let mut dist = Vec::new();
                loop {
                    let (zn, zcol) = c.word("an observation")?;
                    let z = if zn == "bot" {
                        ObsSymbol::Bot
                    } else {
                        ObsSymbol::Obs(b.observation(zn).ok_or_else(|| ParseError::Unknown {
                            line,
                            col: zcol,
                            kind: "observation",
                            name: zn.into(),
                        })?)
                    };
                    if dist.iter().any(|&(y, _)| y == z) {
                        return Err(ParseError::Syntax {
                            line,
                            col: zcol,
                            msg: format!("repeated observation `{zn}`"),
                        });
                    }
                    dist.push((z, c.weight()?));
                    if !c.eat(Tok::Comma) {
                        break;
                    }
                }
                c.finish()?;
                if !seen_obs.insert(s) {
                    return Err(ParseError::Syntax {
                        line,
                        col: 1,
                        msg: "observation defined twice".into(),
                    });
                }
                b.observe(s, dist);
            }
        }
    }
    Ok(b.build()?)
}

/// Print `p` in the text format, deterministically.
pub fn print_pomdp(p: &Pomdp) -> String {
    let mut out = String::new();
    let list = |names: &[String]| names.join(" ");
    let _ = writeln!(out, "states: {}", list(p.state_names()));
    let _ = writeln!(out, "actions: {}", list(p.action_names()));
    if p.num_observations() > 0 {
        let _ = writeln!(out, "observations: {}", list(p.obs_names()));
    }
    let _ = writeln!(out, "initial: {}", p.state_name(p.initial()));
    let _ = writeln!(out, "goal: {}", p.state_name(p.goal()));
    for s in p.states() {
        for a in p.actions() {
            let succ: Vec<String> = p
                .transition(s, a)
                .iter()
                .map(|&(t, w)| format!("{} {}", p.state_name(t), w_str(w)))
                .collect();
            let _ = writeln!(
                out,
                "delta {} {} -> {}",
                p.state_name(s),
                p.action_name(a),
                succ.join(", ")
            );
        }
    }
    for s in p.states() {
        let d = p.obs_fn().dist(s);
        if d == [(ObsSymbol::Bot, Prob::from_integer(1))] {
            continue;
        }
        let entries: Vec<String> = d
            .iter()
            .map(|&(z, w)| match z {
                ObsSymbol::Obs(z) => format!("{} {}", p.obs_name(z), w_str(w)),
                ObsSymbol::Bot => format!("bot {}", w_str(w)),
            })
            .collect();
        let _ = writeln!(out, "obs {} -> {}", p.state_name(s), entries.join(", "));
    }
    out
}

pub(crate) fn w_str(w: Prob) -> String {
    format!("{}/{}", w.numer(), w.denom())
}
