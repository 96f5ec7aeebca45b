//! Line-oriented text form:
//!
//! ```text
//! inputs 2
//! g1 OR x1 x2
//! g2 AND x1 x2
//! g3 NOT g2
//! g4 AND g1 g3
//! output g4
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{wire_name, Circuit, Gate, Op, Wire};
use crate::error::WellFormednessError;

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.n())?;
        for (i, g) in self.gates().iter().enumerate() {
            let name = match g.op {
                Op::And => "AND",
                Op::Or => "OR",
                Op::Not => "NOT",
            };
            write!(f, "g{} {} {}", i + 1, name, wire_name(self.n(), g.in1))?;
            if g.op != Op::Not {
                write!(f, " {}", wire_name(self.n(), g.in2))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "output {}", wire_name(self.n(), self.output()))
    }
}

fn parse_wire(n: usize, tok: &str, line: usize) -> Result<Wire, WellFormednessError> {
    let bad = || WellFormednessError::Parse { line, msg: format!("bad wire name {tok:?}") };
    match tok {
        "c0" => return Ok(Wire::const0(n)),
        "c1" => return Ok(Wire::const1(n)),
        _ => {}
    }
    let (kind, num) = tok.split_at(1);
    let k: usize = num.parse().map_err(|_| bad())?;
    match kind {
        "x" if (1..=n).contains(&k) => Ok(Wire::input(k)),
        "g" if k >= 1 => Ok(Wire::gate(n, k)),
        _ => Err(bad()),
    }
}

impl FromStr for Circuit {
    type Err = WellFormednessError;

    fn from_str(s: &str) -> Result<Circuit, WellFormednessError> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: &str| WellFormednessError::Parse { line, msg: msg.to_string() };

        let (ln, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
        let n: usize = header
            .strip_prefix("inputs ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| perr(ln, "expected `inputs <n>`"))?;

        let mut gates = Vec::new();
        let mut output = None;
        for (ln, line) in lines {
            if output.is_some() {
                return Err(perr(ln, "content after output line"));
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "output" {
                if toks.len() != 2 {
                    return Err(perr(ln, "expected `output <wire>`"));
                }
                output = Some(parse_wire(n, toks[1], ln)?);
                continue;
            }
            if toks[0] != format!("g{}", gates.len() + 1) {
                return Err(perr(ln, "gates must be numbered g1, g2, ... in order"));
            }
            let gate = match (toks.get(1).copied(), toks.len()) {
                (Some("AND"), 4) => Gate::and(parse_wire(n, toks[2], ln)?, parse_wire(n, toks[3], ln)?),
                (Some("OR"), 4) => Gate::or(parse_wire(n, toks[2], ln)?, parse_wire(n, toks[3], ln)?),
                (Some("NOT"), 3) => Gate::not(parse_wire(n, toks[2], ln)?),
                _ => return Err(perr(ln, "expected `g<i> AND|OR <a> <b>` or `g<i> NOT <a>`")),
            };
            gates.push(gate);
        }
        let output = output.ok_or_else(|| perr(0, "missing output line"))?;
        Circuit::new(n, gates, output)
    }
}

/// Circuits serialize as their text form.
impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Circuit, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
