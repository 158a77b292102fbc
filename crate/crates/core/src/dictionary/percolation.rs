//! k-clique percolation over maximal cliques.
//!
//! Two k-cliques are adjacent when they share k-1 vertices. Every k-clique
//! lies inside some maximal clique of size >= k, all k-cliques of one
//! maximal clique are mutually reachable, and two such maximal cliques are
//! linked exactly when they overlap in at least k-1 vertices. Communities
//! are therefore the unions of connected groups of maximal cliques.

use std::collections::BTreeSet;

use super::graph::WordGraph;

#[derive(Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn empty(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn and_not(&self, other: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & !b).collect())
    }

    fn count_and(&self, other: &BitSet) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

struct CliqueSearch<'a> {
    adj: &'a [BitSet],
    min_size: usize,
    found: Vec<Vec<usize>>,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, r: &mut Vec<usize>, mut p: BitSet, mut x: BitSet) {
        if p.is_empty() {
            if x.is_empty() && r.len() >= self.min_size {
                self.found.push(r.clone());
            }
            return;
        }
        // Pivot on the candidate with most neighbours in P.
        let pivot = p
            .iter()
            .chain(x.iter())
            .max_by_key(|&u| (p.count_and(&self.adj[u]), std::cmp::Reverse(u)))
            .expect("P is non-empty");
        let candidates: Vec<usize> = p.and_not(&self.adj[pivot]).iter().collect();
        for v in candidates {
            r.push(v);
            self.expand(r, p.and(&self.adj[v]), x.and(&self.adj[v]));
            r.pop();
            p.remove(v);
            x.insert(v);
        }
    }
}

/// Maximal cliques with at least `min_size` vertices, each sorted ascending,
/// listed in lexicographic order.
pub fn maximal_cliques(graph: &WordGraph, min_size: usize) -> Vec<Vec<usize>> {
    let n = graph.vertex_count();
    let adj: Vec<BitSet> = (0..n)
        .map(|u| {
            let mut b = BitSet::empty(n);
            for &v in graph.neighbors(u) {
                b.insert(v);
            }
            b
        })
        .collect();
    let mut all = BitSet::empty(n);
    (0..n).for_each(|i| all.insert(i));
    let mut search = CliqueSearch {
        adj: &adj,
        min_size: min_size.max(1),
        found: Vec::new(),
    };
    search.expand(&mut Vec::new(), all, BitSet::empty(n));
    let mut cliques = search.found;
    cliques.iter_mut().for_each(|c| c.sort_unstable());
    cliques.sort();
    cliques
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// k-clique communities of `graph`, sorted by their member lists.
///
/// Vertices in no k-clique belong to no community; a vertex may belong to
/// several communities. `k < 2` is treated as 2.
pub fn k_clique_communities(graph: &WordGraph, k: usize) -> Vec<BTreeSet<String>> {
    let k = k.max(2);
    let cliques = maximal_cliques(graph, k);
    let sets: Vec<BTreeSet<usize>> = cliques.iter().map(|c| c.iter().copied().collect()).collect();
    let mut parent: Vec<usize> = (0..cliques.len()).collect();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].intersection(&sets[j]).count() >= k - 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for (i, set) in sets.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().extend(set.iter().copied());
    }
    let mut communities: Vec<BTreeSet<String>> = groups
        .into_values()
        .map(|members| members.into_iter().map(|v| graph.vertices()[v].clone()).collect())
        .collect();
    communities.sort();
    communities
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> WordGraph {
        let mut g = WordGraph::new((0..n).map(|i| format!("{}", (b'a' + i as u8) as char)));
        for &(u, v) in edges {
            g.add_edge(u, v, 1.0).unwrap();
        }
        g
    }

    fn names(c: &BTreeSet<String>) -> String {
        c.iter().cloned().collect::<Vec<_>>().join("")
    }

    #[test]
    fn triangles_sharing_an_edge_merge() {
        let g = graph(4, &[(0, 1), (1, 2), (0, 2), (1, 3), (2, 3)]);
        let c = k_clique_communities(&g, 3);
        assert_eq!(c.len(), 1);
        assert_eq!(names(&c[0]), "abcd");
    }

    #[test]
    fn triangles_sharing_a_vertex_stay_apart() {
        let g = graph(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
        let c = k_clique_communities(&g, 3);
        let got: Vec<String> = c.iter().map(names).collect();
        assert_eq!(got, vec!["abc", "cde"]);
    }

    #[test]
    fn path_has_no_triangles() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(k_clique_communities(&g, 3).is_empty());
    }

    #[test]
    fn k2_gives_components() {
        let g = graph(6, &[(0, 1), (1, 2), (3, 4)]);
        let got: Vec<String> = k_clique_communities(&g, 2).iter().map(names).collect();
        assert_eq!(got, vec!["abc", "de"]);
    }

    #[test]
    fn maximal_cliques_of_k4_minus_edge() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(maximal_cliques(&g, 1), vec![vec![0, 1, 2], vec![0, 1, 3]]);
    }

    #[test]
    fn more_than_64_vertices() {
        let edges: Vec<(usize, usize)> = (0..69).map(|i| (i, i + 1)).chain([(68, 70), (69, 70)]).collect();
        let mut g = WordGraph::new((0..71).map(|i| format!("w{i:03}")));
        for (u, v) in edges {
            g.add_edge(u, v, 1.0).unwrap();
        }
        let c = k_clique_communities(&g, 3);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 3);
        assert!(c[0].contains("w070"));
    }
}
