//! Control-flow analyses over one automaton: dominators, postdominators,
//! control dependence and natural loops.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Automaton, LocId};

/// Location graph of an automaton. For the main automaton the edge from
/// end-of-cycle back to cycle-start is left out, so the body is acyclic
/// except for source loops.
#[derive(Debug, Clone)]
pub struct Graph {
    pub nodes: Vec<LocId>,
    index: BTreeMap<LocId, usize>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
    pub entry: usize,
    pub exit: usize,
}

impl Graph {
    pub fn of(auto: &Automaton) -> Graph {
        let nodes: Vec<LocId> = auto.locations.keys().copied().collect();
        let index: BTreeMap<LocId, usize> = nodes.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut succ = alloc::vec![Vec::new(); nodes.len()];
        let mut pred = alloc::vec![Vec::new(); nodes.len()];
        for t in &auto.transitions {
            if t.source == auto.end {
                continue;
            }
            let (a, b) = (index[&t.source], index[&t.target]);
            if !succ[a].contains(&b) {
                succ[a].push(b);
                pred[b].push(a);
            }
        }
        let entry = index[&auto.initial];
        let exit = index[&auto.end];
        Graph { nodes, index, succ, pred, entry, exit }
    }

    pub fn idx(&self, l: LocId) -> usize {
        self.index[&l]
    }

    pub fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = alloc::vec![false; self.nodes.len()];
        let mut stack = alloc::vec![from];
        seen[from] = true;
        while let Some(n) = stack.pop() {
            for &s in &self.succ[n] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Immediate dominators from the entry (`None` for the entry and for
    /// unreachable nodes).
    pub fn idom(&self) -> Vec<Option<usize>> {
        dominators(&self.succ, &self.pred, self.entry)
    }

    /// Immediate postdominators towards the exit (`None` for the exit and
    /// for nodes that cannot reach it).
    pub fn ipdom(&self) -> Vec<Option<usize>> {
        dominators(&self.pred, &self.succ, self.exit)
    }

    /// For each node, the branch nodes it is control dependent on.
    pub fn control_deps(&self, ipdom: &[Option<usize>]) -> Vec<Vec<usize>> {
        let mut deps = alloc::vec![Vec::new(); self.nodes.len()];
        for a in 0..self.nodes.len() {
            if self.succ[a].len() < 2 {
                continue;
            }
            let stop = ipdom[a];
            for &b in &self.succ[a] {
                let mut n = Some(b);
                let mut guard = 0;
                while let Some(x) = n {
                    if Some(x) == stop || guard > self.nodes.len() {
                        break;
                    }
                    if !deps[x].contains(&a) {
                        deps[x].push(a);
                    }
                    n = ipdom[x];
                    guard += 1;
                }
            }
        }
        deps
    }

    /// Loop headers with their natural loop bodies (headers included), in
    /// node order. Returns `None` if the graph is irreducible.
    pub fn loops(&self) -> Option<Vec<(usize, Vec<bool>)>> {
        let idom = self.idom();
        let reach = self.reachable(self.entry);
        let (pre, post) = dfs_numbers(&self.succ, self.entry, &reach);
        let mut bodies: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for (a, succs) in self.succ.iter().enumerate() {
            if !reach[a] {
                continue;
            }
            for &h in succs {
                // retreating edge: h is a DFS ancestor of a
                if !(pre[h] <= pre[a] && post[a] <= post[h]) {
                    continue;
                }
                if !dominates(&idom, h, a) {
                    return None;
                }
                let body = bodies.entry(h).or_insert_with(|| alloc::vec![false; self.nodes.len()]);
                body[h] = true;
                let mut stack = alloc::vec![a];
                while let Some(n) = stack.pop() {
                    if body[n] {
                        continue;
                    }
                    body[n] = true;
                    stack.extend(self.pred[n].iter().copied().filter(|p| reach[*p]));
                }
            }
        }
        Some(bodies.into_iter().collect())
    }
}

pub fn dominates(idom: &[Option<usize>], a: usize, mut b: usize) -> bool {
    loop {
        if a == b {
            return true;
        }
        match idom[b] {
            Some(p) if p != b => b = p,
            _ => return false,
        }
    }
}

fn dfs_numbers(succ: &[Vec<usize>], entry: usize, reach: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let n = succ.len();
    let mut pre = alloc::vec![usize::MAX; n];
    let mut post = alloc::vec![0; n];
    let mut clock = 0;
    let mut stack: Vec<(usize, usize)> = alloc::vec![(entry, 0)];
    pre[entry] = clock;
    clock += 1;
    while let Some(&mut (node, ref mut i)) = stack.last_mut() {
        if *i < succ[node].len() {
            let s = succ[node][*i];
            *i += 1;
            if pre[s] == usize::MAX && reach[s] {
                pre[s] = clock;
                clock += 1;
                stack.push((s, 0));
            }
        } else {
            post[node] = clock;
            clock += 1;
            stack.pop();
        }
    }
    (pre, post)
}

/// Cooper–Harvey–Kennedy iterative dominators over `succ` from `root`.
fn dominators(succ: &[Vec<usize>], pred: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let n = succ.len();
    // reverse postorder
    let mut order = Vec::new();
    let mut seen = alloc::vec![false; n];
    let mut stack: Vec<(usize, usize)> = alloc::vec![(root, 0)];
    seen[root] = true;
    while let Some(&mut (node, ref mut i)) = stack.last_mut() {
        if *i < succ[node].len() {
            let s = succ[node][*i];
            *i += 1;
            if !seen[s] {
                seen[s] = true;
                stack.push((s, 0));
            }
        } else {
            order.push(node);
            stack.pop();
        }
    }
    order.reverse();
    let mut rpo = alloc::vec![usize::MAX; n];
    for (i, &x) in order.iter().enumerate() {
        rpo[x] = i;
    }
    let mut idom: Vec<Option<usize>> = alloc::vec![None; n];
    idom[root] = Some(root);
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().skip(1) {
            let mut new: Option<usize> = None;
            for &p in &pred[b] {
                if idom[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(q) => intersect(&idom, &rpo, p, q),
                });
            }
            if new.is_some() && idom[b] != new {
                idom[b] = new;
                changed = true;
            }
        }
    }
    idom[root] = None;
    idom
}

fn intersect(idom: &[Option<usize>], rpo: &[usize], mut a: usize, mut b: usize) -> usize {
    while a != b {
        while rpo[a] > rpo[b] {
            a = idom[a].unwrap_or(a);
            if idom[a] == Some(a) {
                break;
            }
        }
        while rpo[b] > rpo[a] {
            b = idom[b].unwrap_or(b);
            if idom[b] == Some(b) {
                break;
            }
        }
    }
    a
}
