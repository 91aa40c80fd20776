//! Hopcroft–Karp maximum bipartite matching.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Maximum matching on a bipartite graph given as left-to-right adjacency.
pub struct HopcroftKarp<'g> {
    adj: &'g [Vec<usize>],
    pub mate_left: Vec<usize>,
    pub mate_right: Vec<usize>,
    dist: Vec<u32>,
}

impl<'g> HopcroftKarp<'g> {
    pub fn new(adj: &'g [Vec<usize>], right_len: usize) -> Self {
        Self {
            adj,
            mate_left: vec![NIL; adj.len()],
            mate_right: vec![NIL; right_len],
            dist: vec![0; adj.len()],
        }
    }

    /// Runs phases until no augmenting path remains; returns the matching size.
    pub fn run(&mut self) -> usize {
        let mut size = 0;
        while self.bfs() {
            for u in 0..self.adj.len() {
                if self.mate_left[u] == NIL && self.dfs(u) {
                    size += 1;
                }
            }
        }
        size
    }

    pub fn left_mate(&self, u: usize) -> Option<usize> {
        let v = self.mate_left[u];
        (v != NIL).then_some(v)
    }

    fn bfs(&mut self) -> bool {
        let mut queue = VecDeque::new();
        for u in 0..self.adj.len() {
            if self.mate_left[u] == NIL {
                self.dist[u] = 0;
                queue.push_back(u);
            } else {
                self.dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                let w = self.mate_right[v];
                if w == NIL {
                    found = true;
                } else if self.dist[w] == u32::MAX {
                    self.dist[w] = self.dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        found
    }

    fn dfs(&mut self, u: usize) -> bool {
        for i in 0..self.adj[u].len() {
            let v = self.adj[u][i];
            let w = self.mate_right[v];
            if w == NIL || (self.dist[w] == self.dist[u] + 1 && self.dfs(w)) {
                self.mate_left[u] = v;
                self.mate_right[v] = u;
                return true;
            }
        }
        self.dist[u] = u32::MAX;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Maximum matching size by trying every subset assignment recursively.
    fn brute(adj: &[Vec<usize>], right: usize) -> usize {
        fn go(u: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if u == adj.len() {
                return 0;
            }
            let mut best = go(u + 1, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(u + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; right])
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let l = rng.random_range(0..7);
            let r = rng.random_range(1..7);
            let adj: Vec<Vec<usize>> = (0..l)
                .map(|_| (0..r).filter(|_| rng.random_bool(0.35)).collect())
                .collect();
            let mut hk = HopcroftKarp::new(&adj, r);
            let size = hk.run();
            assert_eq!(size, brute(&adj, r));
            for (u, row) in adj.iter().enumerate() {
                if let Some(v) = hk.left_mate(u) {
                    assert!(row.contains(&v));
                    assert_eq!(hk.mate_right[v], u);
                }
            }
        }
    }
}
