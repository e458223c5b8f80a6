//! Per-query trajectory log.
//!
//! One line per query:
//!
//! ```text
//! query=<q> child=<root child index> depth=<steps> return=<G> leaf=<rollout value> rewards=<r0;r1;...> actions=<a0|a1|...>
//! ```
//!
//! where each action is a comma-separated vector. Floats use Rust's shortest
//! round-trip formatting, so a log can be replayed exactly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub query: usize,
    pub root_child: usize,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub leaf_value: f64,
    /// Discounted return propagated into the root child.
    pub ret: f64,
}

impl QueryRecord {
    pub(crate) fn new(query: usize) -> Self {
        Self {
            query,
            root_child: 0,
            actions: Vec::new(),
            rewards: Vec::new(),
            leaf_value: 0.0,
            ret: 0.0,
        }
    }
}

fn join(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for QueryRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let actions: Vec<String> = self.actions.iter().map(|a| join(a, ",")).collect();
        write!(
            f,
            "query={} child={} depth={} return={:?} leaf={:?} rewards={} actions={}",
            self.query,
            self.root_child,
            self.actions.len(),
            self.ret,
            self.leaf_value,
            join(&self.rewards, ";"),
            actions.join("|")
        )
    }
}

fn parse_list(s: &str, sep: char) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(sep)
        .map(|x| x.parse::<f64>().map_err(|e| Error::arg(format!("bad number {x:?}: {e}"))))
        .collect()
}

impl FromStr for QueryRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut rec = QueryRecord::new(0);
        for field in line.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("malformed field {field:?}")))?;
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| Error::arg(format!("bad integer {v:?}: {e}")))
            };
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| Error::arg(format!("bad number {v:?}: {e}")))
            };
            match k {
                "query" => rec.query = int(v)?,
                "child" => rec.root_child = int(v)?,
                "depth" => {}
                "return" => rec.ret = num(v)?,
                "leaf" => rec.leaf_value = num(v)?,
                "rewards" => rec.rewards = parse_list(v, ';')?,
                "actions" => {
                    rec.actions = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split('|').map(|a| parse_list(a, ',')).collect::<Result<_>>()?
                    }
                }
                other => return Err(Error::arg(format!("unknown field {other:?}"))),
            }
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_round_trip() {
        let rec = QueryRecord {
            query: 3,
            root_child: 1,
            actions: vec![vec![0.1, 0.7], vec![1.0, 0.0]],
            rewards: vec![-0.5, -1.0 / 3.0],
            leaf_value: -2.25,
            ret: -3.0833333333333335,
        };
        let line = rec.to_string();
        assert!(line.starts_with("query=3 child=1 depth=2 "));
        assert_eq!(line.parse::<QueryRecord>().unwrap(), rec);
    }
}
