//! Hierarchical density-based clustering with excess-of-mass selection.
//!
//! Works on any metric given as a closure over point indices. Core
//! distances count the point itself, so with `min_cluster_size = 5` the core
//! distance is the distance to the fourth other point.

/// Smallest distance used when turning distances into densities.
const MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster of each point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    /// Stability of each returned cluster.
    pub stabilities: Vec<f64>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.stabilities.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    fn all_noise(n: usize) -> Self {
        Clustering {
            labels: vec![None; n],
            stabilities: Vec::new(),
        }
    }
}

fn core_distances(n: usize, k: usize, dist: &impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut row = vec![0.0; n];
    (0..n)
        .map(|i| {
            for (j, d) in row.iter_mut().enumerate() {
                *d = if i == j { 0.0 } else { dist(i, j) };
            }
            *row.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect()
}

/// Prim's algorithm over the complete mutual-reachability graph.
fn mutual_reachability_mst(n: usize, core: &[f64], dist: &impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = dist(current, j).max(core[current]).max(core[j]);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if best[j] < next_w {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_w));
        current = next;
    }
    edges
}

struct Dendrogram {
    n: usize,
    /// Internal node `n + i` merges `children[i]` at height `heights[i]`.
    children: Vec<(usize, usize)>,
    heights: Vec<f64>,
    sizes: Vec<usize>,
}

impl Dendrogram {
    fn from_mst(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Self {
        edges.sort_by(|a, b| {
            a.2.total_cmp(&b.2)
                .then((a.0.min(a.1), a.0.max(a.1)).cmp(&(b.0.min(b.1), b.0.max(b.1))))
        });
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        let mut sizes = vec![1; n];
        let mut children = Vec::with_capacity(n - 1);
        let mut heights = Vec::with_capacity(n - 1);
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for (u, v, w) in edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            let node = n + children.len();
            parent[a] = node;
            parent[b] = node;
            children.push((a, b));
            heights.push(w);
            sizes.push(sizes[a] + sizes[b]);
        }
        Dendrogram {
            n,
            children,
            heights,
            sizes,
        }
    }

    fn root(&self) -> usize {
        2 * self.n - 2
    }

    fn leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n {
                out.push(x);
            } else {
                let (a, b) = self.children[x - self.n];
                stack.push(a);
                stack.push(b);
            }
        }
    }
}

enum Child {
    Point(usize),
    Cluster(usize),
}

struct Row {
    parent: usize,
    child: Child,
    lambda: f64,
    size: usize,
}

/// Condensed tree: cluster 0 is the root and children always get larger ids
/// than their parent.
struct CondensedTree {
    rows: Vec<Row>,
    birth: Vec<f64>,
    parent: Vec<Option<usize>>,
}

fn condense(tree: &Dendrogram, min_size: usize) -> CondensedTree {
    let mut rows = Vec::new();
    let mut birth = vec![0.0];
    let mut parent = vec![None];
    let mut stack = vec![(tree.root(), 0usize)];
    let mut fallen = Vec::new();
    while let Some((node, cluster)) = stack.pop() {
        let i = node - tree.n;
        let (a, b) = tree.children[i];
        let lambda = 1.0 / tree.heights[i].max(MIN_DISTANCE);
        let (sa, sb) = (tree.sizes[a], tree.sizes[b]);
        match (sa >= min_size, sb >= min_size) {
            (true, true) => {
                for (child, size) in [(a, sa), (b, sb)] {
                    let id = birth.len();
                    birth.push(lambda);
                    parent.push(Some(cluster));
                    rows.push(Row {
                        parent: cluster,
                        child: Child::Cluster(id),
                        lambda,
                        size,
                    });
                    stack.push((child, id));
                }
            }
            (big_a, big_b) => {
                let mut drop = |node: usize| {
                    fallen.clear();
                    tree.leaves(node, &mut fallen);
                    rows.extend(fallen.iter().map(|&p| Row {
                        parent: cluster,
                        child: Child::Point(p),
                        lambda,
                        size: 1,
                    }));
                };
                for (child, big) in [(a, big_a), (b, big_b)] {
                    if big {
                        stack.push((child, cluster));
                    } else {
                        drop(child);
                    }
                }
            }
        }
    }
    CondensedTree { rows, birth, parent }
}

fn select_clusters(tree: &CondensedTree) -> Vec<bool> {
    let count = tree.birth.len();
    let mut stability = vec![0.0; count];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); count];
    for row in &tree.rows {
        stability[row.parent] += (row.lambda - tree.birth[row.parent]) * row.size as f64;
        if let Child::Cluster(c) = row.child {
            children[row.parent].push(c);
        }
    }
    let mut selected = vec![false; count];
    let mut subtree = stability.clone();
    for c in (1..count).rev() {
        if children[c].is_empty() {
            selected[c] = true;
            continue;
        }
        let below: f64 = children[c].iter().map(|&x| subtree[x]).sum();
        if stability[c] >= below {
            selected[c] = true;
            let mut stack = children[c].clone();
            while let Some(x) = stack.pop() {
                selected[x] = false;
                stack.extend(&children[x]);
            }
        } else {
            subtree[c] = below;
        }
    }
    selected
}

/// Cluster `n` points under the metric `dist`.
///
/// With fewer than `min_cluster_size` points everything is noise. The root
/// of the hierarchy is never returned as a cluster.
pub fn hdbscan(n: usize, min_cluster_size: usize, dist: impl Fn(usize, usize) -> f64) -> Clustering {
    let min_size = min_cluster_size.max(2);
    if n < min_size {
        return Clustering::all_noise(n);
    }
    let core = core_distances(n, min_size, &dist);
    let mst = mutual_reachability_mst(n, &core, &dist);
    let tree = Dendrogram::from_mst(n, mst);
    let condensed = condense(&tree, min_size);
    let selected = select_clusters(&condensed);

    let mut stability = vec![0.0; selected.len()];
    for row in &condensed.rows {
        stability[row.parent] += (row.lambda - condensed.birth[row.parent]) * row.size as f64;
    }
    let owner = |mut c: usize| -> Option<usize> {
        loop {
            if selected[c] {
                return Some(c);
            }
            c = condensed.parent[c]?;
        }
    };
    let mut raw = vec![None; n];
    for row in &condensed.rows {
        if let Child::Point(p) = row.child {
            raw[p] = owner(row.parent);
        }
    }
    // Number clusters by their lowest-indexed member.
    let mut renumber = vec![None; selected.len()];
    let mut stabilities = Vec::new();
    let labels = raw
        .iter()
        .map(|r| {
            r.map(|c: usize| {
                *renumber[c].get_or_insert_with(|| {
                    stabilities.push(stability[c]);
                    stabilities.len() - 1
                })
            })
        })
        .collect();
    Clustering { labels, stabilities }
}
