//! Directed sensing topology with a leader/follower partition.
//!
//! Agents are numbered `1..=n`; ids `1..=m` are leaders and `m+1..=n` are
//! followers. Every follower carries exactly one ordered constraint pair
//! `(j, k)`. An edge `(i, j)` means that agent `i` obtains information from
//! agent `j`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{FormationError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormationGraph {
    n: usize,
    m: usize,
    /// Constraint pair of follower `m + 1 + idx` at position `idx`.
    pairs: Vec<(usize, usize)>,
    comm_edges: BTreeSet<(usize, usize)>,
}

/// Collects every structural problem with the given graph description rather
/// than stopping at the first one.
pub fn graph_issues(
    n: usize,
    m: usize,
    constraint_neighbors: &[(usize, usize, usize)],
    extra_comm: &[(usize, usize)],
) -> Vec<FormationError> {
    let mut issues = Vec::new();
    if m == 0 || m >= n {
        issues.push(FormationError::BadCounts { n, m });
        return issues;
    }
    let in_range = |id: usize| (1..=n).contains(&id);
    let mut seen = vec![false; n - m];
    for &(i, j, k) in constraint_neighbors {
        let mut ok = true;
        for id in [i, j, k] {
            if !in_range(id) {
                issues.push(FormationError::IdOutOfRange { id, n });
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        if i <= m {
            issues.push(FormationError::LeaderHasPair { id: i });
            continue;
        }
        let slot = &mut seen[i - m - 1];
        if *slot {
            issues.push(FormationError::DuplicateFollower { follower: i });
        }
        *slot = true;
        if j == k {
            issues.push(FormationError::RepeatedNeighbor { follower: i, j, k });
        }
        if j == i || k == i {
            issues.push(FormationError::SelfNeighbor { follower: i });
        }
    }
    for (idx, present) in seen.iter().enumerate() {
        if !present {
            issues.push(FormationError::MissingPair {
                follower: m + 1 + idx,
            });
        }
    }
    for &(a, b) in extra_comm {
        for id in [a, b] {
            if !in_range(id) {
                issues.push(FormationError::IdOutOfRange { id, n });
            }
        }
        if a == b && in_range(a) {
            issues.push(FormationError::SelfNeighbor { follower: a });
        }
    }
    issues
}

/// Validates and builds a graph. Communication edges are the constraint edges
/// plus `extra_comm`.
pub fn build_graph(
    n: usize,
    m: usize,
    constraint_neighbors: &[(usize, usize, usize)],
    extra_comm: &[(usize, usize)],
) -> Result<FormationGraph> {
    if let Some(first) = graph_issues(n, m, constraint_neighbors, extra_comm)
        .into_iter()
        .next()
    {
        return Err(first);
    }
    let mut pairs = vec![(0, 0); n - m];
    let mut comm_edges = BTreeSet::new();
    for &(i, j, k) in constraint_neighbors {
        pairs[i - m - 1] = (j, k);
        comm_edges.insert((i, j));
        comm_edges.insert((i, k));
    }
    comm_edges.extend(extra_comm.iter().copied());
    Ok(FormationGraph {
        n,
        m,
        pairs,
        comm_edges,
    })
}

impl FormationGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn follower_count(&self) -> usize {
        self.n - self.m
    }

    pub fn is_leader(&self, id: usize) -> bool {
        (1..=self.m).contains(&id)
    }

    pub fn is_follower(&self, id: usize) -> bool {
        id > self.m && id <= self.n
    }

    pub fn leaders(&self) -> impl Iterator<Item = usize> {
        1..=self.m
    }

    pub fn followers(&self) -> impl Iterator<Item = usize> {
        self.m + 1..=self.n
    }

    pub fn constraint_pair(&self, follower: usize) -> Option<(usize, usize)> {
        self.is_follower(follower)
            .then(|| self.pairs[follower - self.m - 1])
    }

    /// `(follower, j, k)` for every follower, in id order.
    pub fn constraint_triples(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.followers().zip(&self.pairs).map(|(i, &(j, k))| (i, j, k))
    }

    pub fn constraint_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.constraint_triples()
            .flat_map(|(i, j, k)| [(i, j), (i, k)])
    }

    pub fn comm_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.comm_edges
    }

    /// Followers `g` that use `i` as a constraint neighbor, together with the
    /// other neighbor `l` of `g`.
    pub fn dependents(&self, i: usize) -> Vec<(usize, usize)> {
        self.constraint_triples()
            .filter_map(|(g, j, k)| {
                if j == i {
                    Some((g, k))
                } else if k == i {
                    Some((g, j))
                } else {
                    None
                }
            })
            .collect()
    }

    /// True iff two internally vertex-disjoint directed paths lead from
    /// `follower` to distinct leaders along constraint edges.
    pub fn is_two_reachable(&self, follower: usize) -> bool {
        self.is_follower(follower)
            && disjoint_paths_to_leaders(self.n, self.m, self.constraint_edges(), follower, 2) >= 2
    }

    pub fn all_two_reachable(&self) -> bool {
        self.followers().all(|i| self.is_two_reachable(i))
    }

    /// Follower-to-follower communication edges lacking a reverse edge.
    pub fn directed_follower_edges(&self) -> Vec<(usize, usize)> {
        self.comm_edges
            .iter()
            .copied()
            .filter(|&(a, b)| {
                self.is_follower(a) && self.is_follower(b) && !self.comm_edges.contains(&(b, a))
            })
            .collect()
    }

    pub fn follower_subgraph_undirected(&self) -> bool {
        self.directed_follower_edges().is_empty()
    }

    /// Returns a copy with every follower-to-follower edge made bidirectional.
    pub fn symmetrize_follower_edges(&self) -> FormationGraph {
        let mut out = self.clone();
        for (a, b) in self.directed_follower_edges() {
            out.comm_edges.insert((b, a));
        }
        out
    }
}

/// Maximum number (capped at `limit`) of internally vertex-disjoint directed
/// paths from `source` to distinct leaders over `edges`. Vertices carry unit
/// capacity; the source is unbounded.
pub fn disjoint_paths_to_leaders(
    n: usize,
    m: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
    source: usize,
    limit: usize,
) -> usize {
    // split node v (1-based) into v_in = 2(v-1), v_out = 2(v-1)+1
    let nodes = 2 * n + 1;
    let sink = 2 * n;
    let node_in = |v: usize| 2 * (v - 1);
    let node_out = |v: usize| 2 * (v - 1) + 1;
    let mut cap = vec![vec![0i32; nodes]; nodes];
    for v in 1..=n {
        if v != source {
            cap[node_in(v)][node_out(v)] = 1;
        }
    }
    for (a, b) in edges {
        if a == b || b == source {
            continue;
        }
        cap[node_out(a)][node_in(b)] = 1;
    }
    for leader in 1..=m {
        if leader != source {
            cap[node_out(leader)][sink] = 1;
        }
    }
    let start = node_out(source);
    let mut flow = 0;
    while flow < limit {
        let mut parent = vec![usize::MAX; nodes];
        parent[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for v in 0..nodes {
                if cap[u][v] > 0 && parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != start {
            let u = parent[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_graph() -> FormationGraph {
        build_graph(6, 3, &[(4, 3, 5), (5, 2, 4), (6, 4, 5)], &[]).unwrap()
    }

    #[test]
    fn default_topology_is_valid() {
        let g = default_graph();
        assert_eq!(g.constraint_pair(4), Some((3, 5)));
        assert_eq!(g.constraint_pair(2), None);
        for e in g.constraint_edges() {
            assert!(g.comm_edges().contains(&e));
        }
    }

    #[test]
    fn minimal_graph() {
        let g = build_graph(3, 2, &[(3, 1, 2)], &[]).unwrap();
        assert!(g.is_two_reachable(3));
    }

    #[test]
    fn rejects_repeated_neighbor() {
        let err = build_graph(2, 1, &[(2, 1, 1)], &[]).unwrap_err();
        assert!(matches!(err, FormationError::RepeatedNeighbor { follower: 2, .. }));
    }

    #[test]
    fn rejects_structural_problems() {
        assert!(matches!(
            build_graph(3, 2, &[(3, 1, 2), (3, 2, 1)], &[]),
            Err(FormationError::DuplicateFollower { follower: 3 })
        ));
        assert!(matches!(
            build_graph(3, 2, &[(3, 1, 7)], &[]),
            Err(FormationError::IdOutOfRange { id: 7, .. })
        ));
        assert!(matches!(
            build_graph(3, 2, &[], &[]),
            Err(FormationError::MissingPair { follower: 3 })
        ));
        assert!(matches!(
            build_graph(3, 3, &[], &[]),
            Err(FormationError::BadCounts { .. })
        ));
        assert!(matches!(
            build_graph(3, 1, &[(2, 2, 1), (3, 1, 2)], &[]),
            Err(FormationError::SelfNeighbor { follower: 2 })
        ));
        let issues = graph_issues(4, 2, &[(3, 1, 1), (4, 9, 1)], &[(1, 1)]);
        assert_eq!(issues.len(), 4);
    }

    #[test]
    fn two_reachability() {
        let g = default_graph();
        for i in 4..=6 {
            assert!(g.is_two_reachable(i), "follower {i}");
        }
        let g = build_graph(3, 1, &[(2, 1, 3), (3, 1, 2)], &[]).unwrap();
        assert!(!g.is_two_reachable(2));
        assert!(!g.is_two_reachable(1));
    }

    #[test]
    fn follower_subgraph_direction() {
        let g = default_graph();
        assert!(!g.follower_subgraph_undirected());
        assert!(g.directed_follower_edges().contains(&(6, 4)));
        let g = build_graph(6, 3, &[(4, 3, 5), (5, 2, 4), (6, 4, 5)], &[(5, 6), (4, 6)]).unwrap();
        assert!(g.follower_subgraph_undirected());
        let g = build_graph(4, 2, &[(3, 1, 2), (4, 1, 2)], &[]).unwrap();
        assert!(g.follower_subgraph_undirected());
    }

    #[test]
    fn dependents_lists_other_neighbor() {
        let g = default_graph();
        assert_eq!(g.dependents(4), vec![(5, 2), (6, 5)]);
        assert_eq!(g.dependents(6), vec![]);
    }
}
