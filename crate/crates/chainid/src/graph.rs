//! Chain graphs over vertex labels `0..n`.
//!
//! A chain graph partitions its vertices into chain components: within a
//! component edges are undirected, between components they are directed, and
//! the quotient over components is acyclic. Construction enforces every
//! structural invariant, so a [`ChainGraph`] value is always well formed:
//! the declared components are exactly the connected components of the
//! undirected edge set, and no semi-directed cycle exists.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

/// Sequence of component indices, earliest first.
pub type TopologicalOrder = Vec<usize>;

/// Structural violation found during chain graph validation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("vertex {vertex} out of range for {n} variables")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("component {index} is empty")]
    EmptyComponent { index: usize },
    #[error("vertex {vertex} appears in more than one component")]
    DuplicateVertex { vertex: usize },
    #[error("vertex {vertex} is missing from the component partition")]
    UncoveredVertex { vertex: usize },
    #[error("self-loop on vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("edge {u}-{v} appears both directed and undirected")]
    ConflictingEdge { u: usize, v: usize },
    #[error("undirected edge {u}-{v} crosses components")]
    CrossComponentUndirected { u: usize, v: usize },
    #[error("directed edge {u}->{v} joins vertices of the same component")]
    WithinComponentDirected { u: usize, v: usize },
    #[error("component {index} is not connected by its undirected edges")]
    DisconnectedComponent { index: usize },
    #[error("directed edges form a cycle through component {index}")]
    SemiDirectedCycle { index: usize },
}

/// Edge status of an unordered vertex pair; the unit of structural distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairStatus {
    None,
    Forward,
    Backward,
    Undirected,
}

/// Validated chain graph: vertex partition plus directed and undirected edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainGraph {
    n: usize,
    components: Vec<Vec<usize>>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
    component_of: Vec<usize>,
}

impl ChainGraph {
    /// Validates and builds a chain graph.
    ///
    /// Undirected edges may be given in either orientation and duplicates are
    /// merged; everything else is checked strictly and the first violated
    /// invariant is reported.
    pub fn new(
        n: usize,
        components: Vec<Vec<usize>>,
        directed_edges: &[(usize, usize)],
        undirected_edges: &[(usize, usize)],
    ) -> Result<Self, Violation> {
        let mut component_of = vec![usize::MAX; n];
        for (ci, comp) in components.iter().enumerate() {
            if comp.is_empty() {
                return Err(Violation::EmptyComponent { index: ci });
            }
            for &v in comp {
                if v >= n {
                    return Err(Violation::VertexOutOfRange { vertex: v, n });
                }
                if component_of[v] != usize::MAX {
                    return Err(Violation::DuplicateVertex { vertex: v });
                }
                component_of[v] = ci;
            }
        }
        if let Some(v) = component_of.iter().position(|&c| c == usize::MAX) {
            return Err(Violation::UncoveredVertex { vertex: v });
        }

        let mut directed = BTreeSet::new();
        for &(u, v) in directed_edges {
            if u >= n {
                return Err(Violation::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(Violation::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                return Err(Violation::SelfLoop { vertex: u });
            }
            if component_of[u] == component_of[v] {
                return Err(Violation::WithinComponentDirected { u, v });
            }
            directed.insert((u, v));
        }

        let mut undirected = BTreeSet::new();
        for &(u, v) in undirected_edges {
            if u >= n {
                return Err(Violation::VertexOutOfRange { vertex: u, n });
            }
            if v >= n {
                return Err(Violation::VertexOutOfRange { vertex: v, n });
            }
            if u == v {
                return Err(Violation::SelfLoop { vertex: u });
            }
            if component_of[u] != component_of[v] {
                return Err(Violation::CrossComponentUndirected { u, v });
            }
            let e = (u.min(v), u.max(v));
            if directed.contains(&e) || directed.contains(&(e.1, e.0)) {
                return Err(Violation::ConflictingEdge { u: e.0, v: e.1 });
            }
            undirected.insert(e);
        }

        let mut components: Vec<Vec<usize>> = components;
        for comp in &mut components {
            comp.sort_unstable();
        }

        let graph = ChainGraph {
            n,
            components,
            directed,
            undirected,
            component_of,
        };

        // declared components must coincide with the undirected connectivity
        for ci in 0..graph.components.len() {
            if !graph.component_connected(ci) {
                return Err(Violation::DisconnectedComponent { index: ci });
            }
        }

        // the component quotient must be acyclic
        if let Some(index) = graph.find_quotient_cycle() {
            return Err(Violation::SemiDirectedCycle { index });
        }

        Ok(graph)
    }

    /// Re-runs full validation; `Ok` for any constructed graph, useful after
    /// manual surgery on deserialized parts.
    pub fn validate(&self) -> Result<(), Violation> {
        let directed: Vec<_> = self.directed.iter().copied().collect();
        let undirected: Vec<_> = self.undirected.iter().copied().collect();
        ChainGraph::new(self.n, self.components.clone(), &directed, &undirected).map(|_| ())
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Component vertex lists, each sorted ascending.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, vertex: usize) -> usize {
        self.component_of[vertex]
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// Parent vertices of a component: tails of directed edges into it, sorted.
    pub fn parents_of(&self, component: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .directed
            .iter()
            .filter(|&&(_, v)| self.component_of[v] == component)
            .map(|&(u, _)| u)
            .collect();
        set.into_iter().collect()
    }

    /// Component indices that feed directed edges into `component`.
    pub fn parent_components(&self, component: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .parents_of(component)
            .into_iter()
            .map(|u| self.component_of[u])
            .collect();
        set.into_iter().collect()
    }

    /// True iff every parent vertex of every listed component lies inside the
    /// union of the listed components' vertices.
    pub fn is_ancestral(&self, component_set: &[usize]) -> bool {
        let inside: BTreeSet<usize> = component_set
            .iter()
            .flat_map(|&ci| self.components[ci].iter().copied())
            .collect();
        component_set
            .iter()
            .all(|&ci| self.parents_of(ci).iter().all(|u| inside.contains(u)))
    }

    /// Independent order check: a permutation of the components such that
    /// every directed edge points from an earlier to a later component.
    pub fn is_topological(&self, order: &[usize]) -> bool {
        let c = self.components.len();
        if order.len() != c {
            return false;
        }
        let mut position = vec![usize::MAX; c];
        for (pos, &ci) in order.iter().enumerate() {
            if ci >= c || position[ci] != usize::MAX {
                return false;
            }
            position[ci] = pos;
        }
        self.directed.iter().all(|&(u, v)| {
            position[self.component_of[u]] < position[self.component_of[v]]
        })
    }

    /// Kahn's algorithm with lowest-index selection: the lexicographically
    /// smallest topological order, used wherever a deterministic order is
    /// needed (sampling, certification sweeps).
    pub fn canonical_topological_order(&self) -> TopologicalOrder {
        let c = self.components.len();
        let mut indegree = vec![0usize; c];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); c];
        for &(u, v) in &self.directed {
            let (cu, cv) = (self.component_of[u], self.component_of[v]);
            if !children[cu].contains(&cv) {
                children[cu].push(cv);
                indegree[cv] += 1;
            }
        }
        let mut order = Vec::with_capacity(c);
        let mut placed = vec![false; c];
        while order.len() < c {
            let next = (0..c)
                .find(|&ci| !placed[ci] && indegree[ci] == 0)
                .expect("validated graphs are acyclic");
            placed[next] = true;
            order.push(next);
            for &ch in &children[next] {
                indegree[ch] -= 1;
            }
        }
        order
    }

    /// All topological orders of the component quotient, lexicographically
    /// ascending. Exponential in the number of components; intended for test
    /// dimensions.
    pub fn topological_orders(&self) -> Vec<TopologicalOrder> {
        let c = self.components.len();
        let mut indegree = vec![0usize; c];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); c];
        for (&(u, v), _) in self.directed.iter().map(|e| (e, ())) {
            let (cu, cv) = (self.component_of[u], self.component_of[v]);
            if !children[cu].contains(&cv) {
                children[cu].push(cv);
                indegree[cv] += 1;
            }
        }
        let mut orders = Vec::new();
        let mut current = Vec::with_capacity(c);
        let mut placed = vec![false; c];
        Self::extend_orders(&children, &mut indegree, &mut placed, &mut current, &mut orders);
        orders
    }

    fn extend_orders(
        children: &[Vec<usize>],
        indegree: &mut [usize],
        placed: &mut [bool],
        current: &mut Vec<usize>,
        orders: &mut Vec<TopologicalOrder>,
    ) {
        if current.len() == children.len() {
            orders.push(current.clone());
            return;
        }
        for ci in 0..children.len() {
            if placed[ci] || indegree[ci] != 0 {
                continue;
            }
            placed[ci] = true;
            current.push(ci);
            for &ch in &children[ci] {
                indegree[ch] -= 1;
            }
            Self::extend_orders(children, indegree, placed, current, orders);
            for &ch in &children[ci] {
                indegree[ch] += 1;
            }
            current.pop();
            placed[ci] = false;
        }
    }

    /// Structural Hamming distance: number of unordered vertex pairs whose
    /// edge status (absent, either orientation, undirected) differs. One unit
    /// per disagreeing pair regardless of the kind of disagreement.
    pub fn shd(&self, other: &ChainGraph) -> Result<usize, crate::error::Error> {
        if self.n != other.n {
            return Err(crate::error::Error::Argument(format!(
                "structural distance needs equal variable counts, got {} vs {}",
                self.n, other.n
            )));
        }
        let mut count = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.pair_status(i, j) != other.pair_status(i, j) {
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    fn pair_status(&self, i: usize, j: usize) -> PairStatus {
        if self.undirected.contains(&(i, j)) {
            PairStatus::Undirected
        } else if self.directed.contains(&(i, j)) {
            PairStatus::Forward
        } else if self.directed.contains(&(j, i)) {
            PairStatus::Backward
        } else {
            PairStatus::None
        }
    }

    fn component_connected(&self, ci: usize) -> bool {
        let comp = &self.components[ci];
        if comp.len() <= 1 {
            return true;
        }
        let inside: BTreeSet<usize> = comp.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(comp[0]);
        queue.push_back(comp[0]);
        while let Some(u) = queue.pop_front() {
            for &(a, b) in &self.undirected {
                let next = if a == u { b } else if b == u { a } else { continue };
                if inside.contains(&next) && seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen.len() == comp.len()
    }

    /// Kahn's algorithm on the component quotient; `Some(ci)` names a
    /// component on a cycle when one exists.
    fn find_quotient_cycle(&self) -> Option<usize> {
        let c = self.components.len();
        let mut indegree = vec![0usize; c];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); c];
        for &(u, v) in &self.directed {
            let (cu, cv) = (self.component_of[u], self.component_of[v]);
            if !children[cu].contains(&cv) {
                children[cu].push(cv);
                indegree[cv] += 1;
            }
        }
        let mut queue: VecDeque<usize> =
            (0..c).filter(|&ci| indegree[ci] == 0).collect();
        let mut removed = 0;
        while let Some(ci) = queue.pop_front() {
            removed += 1;
            for &ch in &children[ci] {
                indegree[ch] -= 1;
                if indegree[ch] == 0 {
                    queue.push_back(ch);
                }
            }
        }
        if removed == c {
            None
        } else {
            (0..c).find(|&ci| indegree[ci] > 0)
        }
    }
}

/// Serialization mirror of [`ChainGraph`]; full validation runs on import.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub components: Vec<Vec<usize>>,
    pub directed_edges: Vec<(usize, usize)>,
    pub undirected_edges: Vec<(usize, usize)>,
}

impl From<&ChainGraph> for GraphJson {
    fn from(g: &ChainGraph) -> Self {
        GraphJson {
            n: g.n,
            components: g.components.clone(),
            directed_edges: g.directed.iter().copied().collect(),
            undirected_edges: g.undirected.iter().copied().collect(),
        }
    }
}

impl TryFrom<GraphJson> for ChainGraph {
    type Error = Violation;

    fn try_from(j: GraphJson) -> Result<Self, Violation> {
        ChainGraph::new(j.n, j.components, &j.directed_edges, &j.undirected_edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_comp_graph() -> ChainGraph {
        // {0,1} -- undirected pair, both feeding 2
        ChainGraph::new(
            3,
            vec![vec![0, 1], vec![2]],
            &[(0, 2), (1, 2)],
            &[(0, 1)],
        )
        .unwrap()
    }

    #[test]
    fn accepts_valid_graph() {
        let g = two_comp_graph();
        assert_eq!(g.n_components(), 2);
        assert_eq!(g.parents_of(1), vec![0, 1]);
        assert_eq!(g.parents_of(0), Vec::<usize>::new());
    }

    #[test]
    fn rejects_two_cycle() {
        let err = ChainGraph::new(2, vec![vec![0], vec![1]], &[(0, 1), (1, 0)], &[]);
        assert!(matches!(err, Err(Violation::SemiDirectedCycle { .. })));
    }

    #[test]
    fn rejects_duplicate_label() {
        let err = ChainGraph::new(2, vec![vec![0, 0], vec![1]], &[], &[]);
        assert_eq!(err, Err(Violation::DuplicateVertex { vertex: 0 }));
    }

    #[test]
    fn rejects_cross_component_undirected() {
        let err = ChainGraph::new(2, vec![vec![0], vec![1]], &[], &[(0, 1)]);
        assert_eq!(err, Err(Violation::CrossComponentUndirected { u: 0, v: 1 }));
    }

    #[test]
    fn rejects_disconnected_component() {
        let err = ChainGraph::new(3, vec![vec![0, 1, 2]], &[], &[(0, 1)]);
        assert_eq!(err, Err(Violation::DisconnectedComponent { index: 0 }));
    }

    #[test]
    fn rejects_uncovered_vertex() {
        let err = ChainGraph::new(2, vec![vec![0]], &[], &[]);
        assert_eq!(err, Err(Violation::UncoveredVertex { vertex: 1 }));
    }

    #[test]
    fn diamond_has_two_orders() {
        // 0 -> {1, 2} -> 3 over singleton components
        let g = ChainGraph::new(
            4,
            vec![vec![0], vec![1], vec![2], vec![3]],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
            &[],
        )
        .unwrap();
        let orders = g.topological_orders();
        assert_eq!(orders, vec![vec![0, 1, 2, 3], vec![0, 2, 1, 3]]);
        for order in &orders {
            assert!(g.is_topological(order));
        }
        assert!(!g.is_topological(&[1, 0, 2, 3]));
        assert!(!g.is_topological(&[0, 1, 2]));
    }

    #[test]
    fn ancestral_sets() {
        let g = two_comp_graph();
        assert!(g.is_ancestral(&[0]));
        assert!(!g.is_ancestral(&[1]));
        assert!(g.is_ancestral(&[0, 1]));
        assert!(g.is_ancestral(&[]));
    }

    #[test]
    fn shd_counts_each_kind_of_disagreement_once() {
        let g = two_comp_graph();
        // same skeleton with both arrows reversed: each flipped pair costs one
        let h = ChainGraph::new(
            3,
            vec![vec![0, 1], vec![2]],
            &[(2, 0), (2, 1)],
            &[(0, 1)],
        )
        .unwrap();
        assert_eq!(g.shd(&h).unwrap(), 2);
        assert_eq!(g.shd(&g).unwrap(), 0);
        assert_eq!(h.shd(&g).unwrap(), 2);

        // empty graph differs on all three present pairs
        let e = ChainGraph::new(3, vec![vec![0], vec![1], vec![2]], &[], &[]).unwrap();
        assert_eq!(g.shd(&e).unwrap(), 3);
    }

    #[test]
    fn shd_rejects_size_mismatch() {
        let g = two_comp_graph();
        let e = ChainGraph::new(2, vec![vec![0], vec![1]], &[], &[]).unwrap();
        assert!(g.shd(&e).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let g = two_comp_graph();
        let j = GraphJson::from(&g);
        let s = serde_json::to_string(&j).unwrap();
        let back: GraphJson = serde_json::from_str(&s).unwrap();
        let g2 = ChainGraph::try_from(back).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn json_import_validates() {
        let j = GraphJson {
            n: 2,
            components: vec![vec![0], vec![1]],
            directed_edges: vec![(0, 1), (1, 0)],
            undirected_edges: vec![],
        };
        assert!(ChainGraph::try_from(j).is_err());
    }
}
