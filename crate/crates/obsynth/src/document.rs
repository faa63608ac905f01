//! Result documents: `key: value` lines describing a synthesis outcome.
//!
//! ```text
//! verdict: realizable
//! k: 15
//! vars: 215
//! semantic_vars: 120
//! clauses: 796
//! conflicts: 4
//! time_ms: 1
//! memory: 3
//! observations: new1
//! declared: 0
//! action m0: move-right
//! update m0 new1 move-right: m1
//! observe c0: new1 1/1
//! ```
//!
//! In hand-written documents `*` matches every observation or action in an
//! `update` line (later lines override earlier ones), weights in `observe`
//! lines may be omitted for a uniform split, and a fully defined state
//! without an `observe` line keeps its declared distribution.

use std::collections::HashMap;
use std::fmt::Write as _;

use obsynth_core::synth::{SynthResult, SynthStats};
use obsynth_core::{
    ActionId, Completion, MemId, ModelError, ObsId, ObsSymbol, Policy, Pomdp, Prob, SynthOutcome,
    Verdict,
};

use crate::format::{w_str, Cursor, ParseError, Tok};

/// A parsed result document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub verdict: Verdict,
    pub stats: SynthStats,
    pub reason: Option<String>,
    pub completion: Option<Completion>,
    pub policy: Option<Policy>,
}

/// Render `o` for model `p`.
pub fn write_document(p: &Pomdp, o: &SynthOutcome) -> String {
    let mut out = String::new();
    let st = &o.stats;
    let _ = writeln!(out, "verdict: {}", o.verdict());
    let _ = writeln!(out, "k: {}", st.k);
    let _ = writeln!(out, "vars: {}", st.vars);
    let _ = writeln!(out, "semantic_vars: {}", st.semantic_vars);
    let _ = writeln!(out, "clauses: {}", st.clauses);
    let _ = writeln!(out, "conflicts: {}", st.conflicts);
    let _ = writeln!(out, "time_ms: {}", st.time_ms);
    match &o.result {
        SynthResult::Unknown { reason, .. } => {
            let _ = writeln!(out, "reason: {reason}");
        }
        SynthResult::Unrealizable { .. } => {}
        SynthResult::Realizable(sol) => {
            let (c, pol) = (&sol.completion, &sol.policy);
            if let Some(d) = sol.certificate.max_distance() {
                let _ = writeln!(out, "max_distance: {d}");
            }
            out.push_str(&write_pair(p, c, pol));
        }
    }
    out
}

/// The completion and policy part of a document.
pub fn write_pair(p: &Pomdp, c: &Completion, pol: &Policy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "memory: {}", pol.memory_size());
    if pol.initial() != MemId(0) {
        let _ = writeln!(out, "initial_memory: m{}", pol.initial().0);
    }
    let _ = writeln!(out, "observations: {}", c.obs_names().join(" "));
    let _ = writeln!(out, "declared: {}", c.base_count());
    for m in pol.memories() {
        let acts: Vec<&str> = pol.actions(m).iter().map(|&a| p.action_name(a)).collect();
        let _ = writeln!(out, "action m{}: {}", m.0, acts.join(" "));
    }
    for m in pol.memories() {
        for z in 0..c.num_observations() {
            let z = ObsId::from_index(z);
            for a in p.actions() {
                let next: Vec<String> = pol.update(m, z, a).iter().map(|m2| format!("m{}", m2.0)).collect();
                let _ = writeln!(
                    out,
                    "update m{} {} {}: {}",
                    m.0,
                    c.obs_name(z),
                    p.action_name(a),
                    next.join(" ")
                );
            }
        }
    }
    for s in p.states() {
        let d: Vec<String> = c
            .dist(s)
            .iter()
            .map(|&(z, w)| format!("{} {}", c.obs_name(z), w_str(w)))
            .collect();
        let _ = writeln!(out, "observe {}: {}", p.state_name(s), d.join(", "));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("document has no `{0}` line")]
    Missing(&'static str),
    #[error("state `{0}` has no `observe` line")]
    NoObservation(String),
}

struct Pending<'a> {
    line: usize,
    cur: Cursor<'a>,
}

fn syntax<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, DocError> {
    Err(ParseError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
    .into())
}

fn number<T: std::str::FromStr>(c: &mut Cursor<'_>, line: usize) -> Result<T, DocError> {
    let (w, col) = c.word("a number")?;
    c.finish()?;
    w.parse().or_else(|_| syntax(line, col, format!("expected a number, found `{w}`")))
}

/// Parse a document against model `p`.
pub fn parse_document(p: &Pomdp, text: &str) -> Result<Document, DocError> {
    let mut verdict = None;
    let mut stats = SynthStats::default();
    let mut reason = None;
    let mut memory: Option<usize> = None;
    let mut initial = 0usize;
    let mut obs_names: Option<Vec<String>> = None;
    let mut declared: Option<usize> = None;
    let mut actions: Vec<Pending> = Vec::new();
    let mut updates: Vec<Pending> = Vec::new();
    let mut observes: Vec<Pending> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut c = Cursor::new(raw, line);
        if c.is_empty() {
            continue;
        }
        let (key, kcol) = c.word("a key")?;
        match key {
            "action" => actions.push(Pending { line, cur: c }),
            "update" => updates.push(Pending { line, cur: c }),
            "observe" => observes.push(Pending { line, cur: c }),
            _ => {
                c.expect(Tok::Colon, "`:`")?;
                match key {
                    "verdict" => {
                        let (w, col) = c.word("a verdict")?;
                        c.finish()?;
                        verdict = Some(w.parse::<Verdict>().or_else(|_| {
                            syntax(line, col, format!("unknown verdict `{w}`"))
                        })?);
                    }
                    "k" => stats.k = number(&mut c, line)?,
                    "vars" => stats.vars = number(&mut c, line)?,
                    "semantic_vars" => stats.semantic_vars = number(&mut c, line)?,
                    "clauses" => stats.clauses = number(&mut c, line)?,
                    "conflicts" => stats.conflicts = number(&mut c, line)?,
                    "time_ms" => stats.time_ms = number(&mut c, line)?,
                    "max_distance" => {
                        number::<u32>(&mut c, line)?;
                    }
                    "reason" => {
                        let rest = raw.split_once(':').map_or("", |x| x.1).trim();
                        reason = Some(rest.to_string());
                    }
                    "memory" => memory = Some(number(&mut c, line)?),
                    "initial_memory" => initial = mem_index(&mut c, line, usize::MAX)?,
                    "observations" => {
                        obs_names = Some(c.names()?.into_iter().map(|(n, _)| n.to_string()).collect())
                    }
                    "declared" => declared = Some(number(&mut c, line)?),
                    _ => return syntax(line, kcol, format!("unknown key `{key}`")),
                }
            }
        }
    }
    let verdict = verdict.ok_or(DocError::Missing("verdict"))?;
    let has_pair = memory.is_some() || !actions.is_empty() || !updates.is_empty();
    if !has_pair {
        return Ok(Document {
            verdict,
            stats,
            reason,
            completion: None,
            policy: None,
        });
    }
    let memory = memory.ok_or(DocError::Missing("memory"))?;
    let obs_names = obs_names.unwrap_or_else(|| p.obs_names().to_vec());
    let base = declared.unwrap_or(p.num_observations()).min(obs_names.len());
    let nz = obs_names.len();
    let na = p.num_actions();
    let obs_index: HashMap<&str, usize> = obs_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let action = |c: &mut Cursor<'_>, line| -> Result<ActionId, DocError> {
        let (w, col) = c.word("an action")?;
        p.action_by_name(w).ok_or_else(|| {
            ParseError::Unknown {
                line,
                col,
                kind: "action",
                name: w.into(),
            }
            .into()
        })
    };

    let mut action_support: Vec<Option<Vec<ActionId>>> = vec![None; memory];
    for Pending { line, mut cur } in actions {
        let m = mem_index(&mut cur, line, memory)?;
        cur.expect(Tok::Colon, "`:`")?;
        let mut acts = Vec::new();
        while !cur.at_end() {
            acts.push(action(&mut cur, line)?);
        }
        action_support[m] = Some(acts);
    }
    let action_support: Vec<Vec<ActionId>> = action_support
        .into_iter()
        .enumerate()
        .map(|(m, a)| a.ok_or_else(|| DocError::Model(ModelError::MalformedPolicy(format!("m{m} has no action line")))))
        .collect::<Result<_, _>>()?;

    let mut update: Vec<Vec<MemId>> = vec![Vec::new(); memory * nz * na];
    for Pending { line, mut cur } in updates {
        let m = mem_index(&mut cur, line, memory)?;
        let (zw, zcol) = cur.word("an observation")?;
        let zs: Vec<usize> = if zw == "*" {
            (0..nz).collect()
        } else {
            vec![*obs_index.get(zw).ok_or_else(|| ParseError::Unknown {
                line,
                col: zcol,
                kind: "observation",
                name: zw.into(),
            })?]
        };
        let acts: Vec<usize> = if cur.eat(Tok::Word("*")) {
            (0..na).collect()
        } else {
            vec![action(&mut cur, line)?.index()]
        };
        cur.expect(Tok::Colon, "`:`")?;
        let mut next = Vec::new();
        while !cur.at_end() {
            next.push(MemId::from_index(mem_index(&mut cur, line, memory)?));
        }
        for &z in &zs {
            for &a in &acts {
                update[(m * nz + z) * na + a] = next.clone();
            }
        }
    }
    let policy = Policy::new(memory, MemId::from_index(initial), nz, na, action_support, update)?;

    let mut dists: Vec<Option<Vec<(ObsId, Prob)>>> = vec![None; p.num_states()];
    for Pending { line, mut cur } in observes {
        let (sw, scol) = cur.word("a state")?;
        let s = p.state_by_name(sw).ok_or_else(|| ParseError::Unknown {
            line,
            col: scol,
            kind: "state",
            name: sw.into(),
        })?;
        cur.expect(Tok::Colon, "`:`")?;
        let mut entries: Vec<(ObsId, Option<Prob>)> = Vec::new();
        loop {
            let (zw, zcol) = cur.word("an observation")?;
            let z = *obs_index.get(zw).ok_or_else(|| ParseError::Unknown {
                line,
                col: zcol,
                kind: "observation",
                name: zw.into(),
            })?;
            let w = if cur.at_end() || cur.eat(Tok::Comma) {
                None
            } else {
                let w = cur.weight()?;
                if !cur.at_end() {
                    cur.expect(Tok::Comma, "`,`")?;
                }
                Some(w)
            };
            entries.push((ObsId::from_index(z), w));
            if cur.at_end() {
                break;
            }
        }
        let weighted = entries.iter().filter(|e| e.1.is_some()).count();
        let dist = if weighted == 0 {
            let u = Prob::new(1, entries.len() as u64);
            entries.into_iter().map(|(z, _)| (z, u)).collect()
        } else if weighted == entries.len() {
            entries.into_iter().map(|(z, w)| (z, w.unwrap())).collect()
        } else {
            return syntax(line, 1, "give a weight for every observation or for none");
        };
        dists[s.index()] = Some(dist);
    }
    let support = p
        .states()
        .map(|s| match dists[s.index()].take() {
            Some(d) => Ok(d),
            None if p.obs_fn().is_fully_defined(s) => Ok(p
                .obs_fn()
                .dist(s)
                .iter()
                .filter_map(|&(z, w)| match z {
                    ObsSymbol::Obs(z) => obs_index.get(p.obs_name(z)).map(|&i| (ObsId::from_index(i), w)),
                    ObsSymbol::Bot => None,
                })
                .collect()),
            None => Err(DocError::NoObservation(p.state_name(s).to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let completion = Completion::new(obs_names, base, support)?;
    Ok(Document {
        verdict,
        stats,
        reason,
        completion: Some(completion),
        policy: Some(policy),
    })
}

fn mem_index(c: &mut Cursor<'_>, line: usize, memory: usize) -> Result<usize, DocError> {
    let (w, col) = c.word("a memory element")?;
    match w.strip_prefix('m').and_then(|d| d.parse::<usize>().ok()) {
        Some(m) if m < memory => Ok(m),
        Some(_) => syntax(line, col, format!("memory element `{w}` out of range")),
        None => syntax(line, col, format!("expected a memory element like `m0`, found `{w}`")),
    }
}
