//! DIMACS CNF export and external solver output.

use std::io::{self, Write};

use obsynth_core::sat::evaluate;
use obsynth_core::{Assignment, Cnf, Pomdp, SolveResult, VarMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("no `s` status line in solver output")]
    NoStatus,
    #[error("solver reported UNKNOWN")]
    Indeterminate,
    #[error("solver model does not satisfy the formula")]
    BadModel,
}

/// Stream `f` as DIMACS CNF.
pub fn write_dimacs<W: Write>(f: &Cnf, mut w: W) -> io::Result<()> {
    writeln!(w, "p cnf {} {}", f.num_vars(), f.num_clauses())?;
    for c in f.clauses() {
        for l in c {
            write!(w, "{l} ")?;
        }
        w.write_all(b"0\n")?;
    }
    w.flush()
}

pub fn to_dimacs(f: &Cnf) -> String {
    let mut out = Vec::new();
    write_dimacs(f, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii")
}

/// Read DIMACS CNF. Comment lines and a trailing `%` marker are skipped.
pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let bad = |line: usize, msg: &str| DimacsError::Malformed {
        line,
        msg: msg.into(),
    };
    let mut f: Option<(Cnf, usize)> = None;
    let mut clause = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                ["cnf", v, c] if f.is_none() => {
                    let v: u32 = v.parse().map_err(|_| bad(i + 1, "bad variable count"))?;
                    let c: usize = c.parse().map_err(|_| bad(i + 1, "bad clause count"))?;
                    f = Some((Cnf::new(v), c));
                }
                _ => return Err(bad(i + 1, "bad header")),
            }
            continue;
        }
        let (cnf, _) = f.as_mut().ok_or_else(|| bad(i + 1, "clause before header"))?;
        for tok in line.split_whitespace() {
            let l: i32 = tok.parse().map_err(|_| bad(i + 1, "bad literal"))?;
            if l == 0 {
                if clause.is_empty() {
                    return Err(bad(i + 1, "empty clause"));
                }
                if clause.iter().any(|&x: &i32| x.unsigned_abs() > cnf.num_vars()) {
                    return Err(bad(i + 1, "literal out of range"));
                }
                cnf.add_clause(&clause);
                clause.clear();
            } else {
                clause.push(l);
            }
        }
    }
    let (cnf, declared) = f.ok_or_else(|| bad(0, "missing header"))?;
    if !clause.is_empty() {
        return Err(bad(text.lines().count(), "unterminated clause"));
    }
    if cnf.num_clauses() != declared {
        return Err(bad(0, "clause count differs from header"));
    }
    Ok(cnf)
}

/// Interpret solver output: an `s SATISFIABLE` / `s UNSATISFIABLE` line and
/// `v` value lines, or the bare `SAT` / `UNSAT` result-file form. Variables
/// without a value default to false.
pub fn parse_external_result(text: &str, num_vars: u32) -> Result<SolveResult, DimacsError> {
    let mut status: Option<bool> = None;
    let mut values = Assignment::all_false(num_vars);
    let mut bare = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lits = match line.split_once(char::is_whitespace).unwrap_or((line, "")) {
            ("s", rest) => {
                status = Some(match rest.trim() {
                    "SATISFIABLE" => true,
                    "UNSATISFIABLE" => false,
                    "UNKNOWN" | "INDETERMINATE" => return Err(DimacsError::Indeterminate),
                    other => {
                        return Err(DimacsError::Malformed {
                            line: i + 1,
                            msg: format!("unknown status `{other}`"),
                        })
                    }
                });
                continue;
            }
            ("v", rest) => rest,
            ("SAT", _) if status.is_none() => {
                status = Some(true);
                bare = true;
                continue;
            }
            ("UNSAT", _) if status.is_none() => {
                status = Some(false);
                continue;
            }
            ("INDET", _) => return Err(DimacsError::Indeterminate),
            _ if bare && !line.is_empty() => line,
            _ => continue,
        };
        for tok in lits.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| DimacsError::Malformed {
                line: i + 1,
                msg: format!("bad value `{tok}`"),
            })?;
            let v = l.unsigned_abs();
            if v == 0 {
                continue;
            }
            if v > num_vars as u64 {
                return Err(DimacsError::Malformed {
                    line: i + 1,
                    msg: format!("variable {v} out of range"),
                });
            }
            values.set(v as u32, l > 0);
        }
    }
    match status {
        None => Err(DimacsError::NoStatus),
        Some(false) => Ok(SolveResult::Unsat),
        Some(true) => Ok(SolveResult::Sat(values)),
    }
}

/// As [`parse_external_result`], also checking a model against `f`.
pub fn check_external_result(text: &str, f: &Cnf) -> Result<SolveResult, DimacsError> {
    let r = parse_external_result(text, f.num_vars())?;
    if let SolveResult::Sat(a) = &r {
        if !evaluate(f, a) {
            return Err(DimacsError::BadModel);
        }
    }
    Ok(r)
}

/// Sidecar listing `id name` for every variable of the formula; auxiliaries
/// are named `auxN`.
pub fn write_map<W: Write>(p: &Pomdp, vm: &VarMap, mut w: W) -> io::Result<()> {
    for v in 1..=vm.total_count() {
        writeln!(w, "{v} {}", vm.describe(p, v))?;
    }
    w.flush()
}
