//! Side-constraint files.
//!
//! ```text
//! same c0 c1            # identical observation supports
//! diff c1 c2            # complementary supports
//! implies c0 z new1     # seeing z in c0 implies seeing new1 there
//! sensor door open shut # observations become pairs (z, value)
//! deterministic
//! strict
//! single-action         # one action per memory element
//! ```

use obsynth_core::encode::{ObsRef, SensorSpec};
use obsynth_core::{Pomdp, SideConstraints, StateId};

use crate::format::{Cursor, ParseError};

pub fn parse_constraints(p: &Pomdp, text: &str) -> Result<SideConstraints, ParseError> {
    let mut sc = SideConstraints::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut c = Cursor::new(raw, line);
        if c.is_empty() {
            continue;
        }
        let state = |c: &mut Cursor<'_>| -> Result<StateId, ParseError> {
            let (w, col) = c.word("a state")?;
            p.state_by_name(w).ok_or_else(|| ParseError::Unknown {
                line,
                col,
                kind: "state",
                name: w.into(),
            })
        };
        let (key, col) = c.word("a constraint")?;
        match key {
            "same" | "diff" => {
                let pair = (state(&mut c)?, state(&mut c)?);
                if key == "same" {
                    sc.same.push(pair);
                } else {
                    sc.diff.push(pair);
                }
            }
            "implies" => {
                let s = state(&mut c)?;
                let z = ObsRef::Name(c.word("an observation")?.0.into());
                let z2 = ObsRef::Name(c.word("an observation")?.0.into());
                sc.implies.push((s, z, z2));
            }
            "sensor" => {
                if sc.sensor.is_some() {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: "only one sensor variable is supported".into(),
                    });
                }
                let name = c.word("a sensor name")?.0.to_string();
                let values: Vec<String> = c.names()?.into_iter().map(|(v, _)| v.to_string()).collect();
                if values.is_empty() {
                    return c.error("a sensor needs at least one value");
                }
                sc.sensor = Some(SensorSpec { name, values });
            }
            "deterministic" => sc.deterministic = true,
            "strict" => sc.strict = true,
            "single-action" => sc.single_action = true,
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unknown constraint `{key}`"),
                })
            }
        }
        c.finish()?;
    }
    Ok(sc)
}
