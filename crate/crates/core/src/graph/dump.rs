//! Plain-text edge dump: a `# vertices N` header, then one `u v w` per line.

use std::fmt::Write as _;

use super::{Edge, Graph};
use crate::error::{Error, Result};

impl Graph {
    pub fn to_dump(&self) -> String {
        let mut s = format!("# vertices {}\n", self.n_vertices());
        for e in self.edges() {
            let _ = writeln!(s, "{} {} {}", e.u, e.v, e.w);
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidGraph(format!("line {line}: {msg}"));
        let mut n = None;
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(count) = rest.trim().strip_prefix("vertices") {
                    n = Some(count.trim().parse().map_err(|_| bad(i + 1, "bad vertex count"))?);
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(u), Some(v), Some(w), None) = (it.next(), it.next(), it.next(), it.next())
            else {
                return Err(bad(i + 1, "expected `u v w`"));
            };
            edges.push(Edge::new(
                u.parse().map_err(|_| bad(i + 1, "bad vertex"))?,
                v.parse().map_err(|_| bad(i + 1, "bad vertex"))?,
                w.parse().map_err(|_| bad(i + 1, "bad weight"))?,
            ));
        }
        let n = n.ok_or_else(|| Error::InvalidGraph("missing `# vertices N` header".into()))?;
        Graph::new(n, &edges)
    }
}
