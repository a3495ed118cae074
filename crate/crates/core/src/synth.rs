//! Synthetic graphs.

use thiserror::Error;

use crate::graph::{GraphBuilder, GraphDb};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("diamond size must be at least 1")]
pub struct DiamondSizeError;

/// A chain of `n` diamonds, every edge labeled `a`:
///
/// ```text
/// start -> u1, v1;  ui, vi -> w(i+1);  wi -> ui, vi;  un, vn -> end
/// ```
///
/// It has `3n + 1` nodes, `4n` edges and `2^n` paths from `start` to `end`,
/// all of length `2n`.
pub fn gen_diamond(n: usize) -> Result<GraphDb, DiamondSizeError> {
    if n == 0 {
        return Err(DiamondSizeError);
    }
    let mut b = GraphBuilder::new();
    b.add_node("start");
    for i in 1..=n {
        b.add_node(&format!("u{i}"));
        b.add_node(&format!("v{i}"));
        if i < n {
            b.add_node(&format!("w{}", i + 1));
        }
    }
    b.add_node("end");
    for i in 1..=n {
        let entry = if i == 1 {
            "start".to_owned()
        } else {
            format!("w{i}")
        };
        let exit = if i == n {
            "end".to_owned()
        } else {
            format!("w{}", i + 1)
        };
        for side in ["u", "v"] {
            let mid = format!("{side}{i}");
            b.add_edge(&entry, "a", &mid);
            b.add_edge(&mid, "a", &exit);
        }
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(gen_diamond(0).unwrap_err(), DiamondSizeError);
        for n in 1..=100 {
            let g = gen_diamond(n).unwrap();
            assert_eq!(g.node_count(), 3 * n + 1);
            assert_eq!(g.edge_count(), 4 * n);
        }
        let g = gen_diamond(1).unwrap();
        for name in ["start", "u1", "v1", "end"] {
            assert!(g.node_id(name).is_some());
        }
    }
}
