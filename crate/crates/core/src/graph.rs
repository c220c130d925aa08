//! The relational graph over (user, context) nodes.
//!
//! Two nodes are adjacent iff they share a context, so every context induces
//! a clique. Edges are never materialized: each context keeps the sorted
//! list of its resident users and neighbors are read off that list.

use crate::dataset::Dataset;
use crate::ids::{ContextIdx, UserIdx};

/// A (user, context) node. Query nodes for users with no activity in the
/// context are valid too; they are simply not stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub user: UserIdx,
    pub context: ContextIdx,
}

impl NodeRef {
    pub fn new(user: UserIdx, context: ContextIdx) -> Self {
        NodeRef { user, context }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RelationalGraph {
    residents: Vec<Vec<UserIdx>>,
}

impl RelationalGraph {
    pub fn build(dataset: &Dataset) -> Self {
        let mut residents = vec![Vec::new(); dataset.num_contexts()];
        // nodes() ascends by user, so each list comes out sorted
        for (u, g) in dataset.nodes() {
            residents[g.index()].push(u);
        }
        RelationalGraph { residents }
    }

    pub fn num_nodes(&self) -> usize {
        self.residents.iter().map(Vec::len).sum()
    }

    /// Users with at least one selection in `g`, ascending.
    pub fn residents(&self, g: ContextIdx) -> &[UserIdx] {
        self.residents.get(g.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, v: NodeRef) -> bool {
        self.residents(v.context).binary_search(&v.user).is_ok()
    }

    /// Neighbors of `v`: every other node in v's context, ascending by user. Unknown
    /// contexts have no neighbors.
    pub fn neighbors(&self, v: NodeRef) -> impl Iterator<Item = NodeRef> + '_ {
        self.residents(v.context)
            .iter()
            .filter(move |&&u| u != v.user)
            .map(move |&u| NodeRef::new(u, v.context))
    }

    pub fn degree(&self, v: NodeRef) -> usize {
        let n = self.residents(v.context).len();
        if self.contains(v) {
            n - 1
        } else {
            n
        }
    }
}
