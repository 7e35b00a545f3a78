//! Classical CFG analyses: reverse postorder, dominators, back edges,
//! natural loops and def-use chains.
//!
//! Everything here works on any [`Cfg`], so the same code serves parsed
//! functions and canonical sequences. Edges to blocks that do not exist are
//! ignored, which lets the validator run these analyses on broken input.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ir::{BlockId, Cfg, ValueId};

/// A retreating edge whose target does not dominate its source.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("irreducible control flow: retreating edge {from} -> {to} is not a back edge")]
pub struct IrreducibleError {
    pub from: BlockId,
    pub to: BlockId,
}

/// A natural loop. All back edges into one header are merged into one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopRegion {
    pub header: BlockId,
    /// Includes the header.
    pub body: BTreeSet<BlockId>,
    pub back_edges: BTreeSet<(BlockId, BlockId)>,
    /// The loop-carried state.
    pub header_params: Vec<ValueId>,
}

impl LoopRegion {
    pub fn contains(&self, b: BlockId) -> bool {
        self.body.contains(&b)
    }
}

fn successors<G: Cfg + ?Sized>(g: &G, b: BlockId) -> Vec<BlockId> {
    match g.block(b) {
        Some(block) => block
            .successors()
            .into_iter()
            .filter(|s| g.block(*s).is_some())
            .collect(),
        None => Vec::new(),
    }
}

struct Dfs {
    postorder: Vec<BlockId>,
    /// Edges whose target was on the DFS stack when traversed.
    retreating: Vec<(BlockId, BlockId)>,
}

fn dfs<G: Cfg + ?Sized>(g: &G) -> Dfs {
    let mut postorder = Vec::new();
    let mut retreating = Vec::new();
    let entry = g.entry();
    if g.block(entry).is_none() {
        return Dfs {
            postorder,
            retreating,
        };
    }
    let mut visited = BTreeSet::new();
    let mut on_stack = BTreeSet::new();
    // Successors are explored last-first, so the reversed postorder lists a
    // brif's then-target ahead of its else-target.
    let mut stack: Vec<(BlockId, Vec<BlockId>)> = Vec::new();
    visited.insert(entry);
    on_stack.insert(entry);
    let mut succs = successors(g, entry);
    succs.dedup();
    stack.push((entry, succs));

    while let Some((node, pending)) = stack.last_mut() {
        let node = *node;
        match pending.pop() {
            Some(next) => {
                if on_stack.contains(&next) {
                    retreating.push((node, next));
                } else if visited.insert(next) {
                    on_stack.insert(next);
                    let mut succs = successors(g, next);
                    succs.dedup();
                    stack.push((next, succs));
                }
            }
            None => {
                on_stack.remove(&node);
                postorder.push(node);
                stack.pop();
            }
        }
    }
    Dfs {
        postorder,
        retreating,
    }
}

/// Reachable blocks in reverse postorder, entry first.
pub fn reverse_postorder<G: Cfg + ?Sized>(g: &G) -> Vec<BlockId> {
    let mut order = dfs(g).postorder;
    order.reverse();
    order
}

/// Predecessor lists for every block, each predecessor listed once.
pub fn predecessors<G: Cfg + ?Sized>(g: &G) -> BTreeMap<BlockId, Vec<BlockId>> {
    let mut preds: BTreeMap<BlockId, Vec<BlockId>> =
        g.block_ids().into_iter().map(|b| (b, Vec::new())).collect();
    for b in g.block_ids() {
        for s in successors(g, b) {
            let list = preds.entry(s).or_default();
            if !list.contains(&b) {
                list.push(b);
            }
        }
    }
    preds
}

/// Immediate dominators of every reachable block; the entry maps to itself.
pub fn dominators<G: Cfg + ?Sized>(g: &G) -> BTreeMap<BlockId, BlockId> {
    let rpo = reverse_postorder(g);
    let index: BTreeMap<BlockId, usize> = rpo.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let preds = predecessors(g);
    let mut idom: Vec<Option<usize>> = vec![None; rpo.len()];
    if rpo.is_empty() {
        return BTreeMap::new();
    }
    idom[0] = Some(0);

    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while a > b {
                a = idom[a].expect("processed");
            }
            while b > a {
                b = idom[b].expect("processed");
            }
        }
        a
    };

    let mut changed = true;
    while changed {
        changed = false;
        for i in 1..rpo.len() {
            let mut new_idom = None;
            for p in &preds[&rpo[i]] {
                let Some(&pi) = index.get(p) else { continue };
                if idom[pi].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => pi,
                    Some(cur) => intersect(&idom, pi, cur),
                });
            }
            if new_idom.is_some() && idom[i] != new_idom {
                idom[i] = new_idom;
                changed = true;
            }
        }
    }
    rpo.iter()
        .enumerate()
        .map(|(i, &b)| (b, rpo[idom[i].expect("reachable")]))
        .collect()
}

/// Does `a` dominate `b`? Both must be reachable.
pub fn dominates(idom: &BTreeMap<BlockId, BlockId>, a: BlockId, b: BlockId) -> bool {
    let mut cur = b;
    loop {
        if cur == a {
            return true;
        }
        match idom.get(&cur) {
            Some(&up) if up != cur => cur = up,
            _ => return false,
        }
    }
}

/// Every edge whose target dominates its source. Fails if some retreating
/// edge of the DFS is not such an edge, i.e. the graph is irreducible.
pub fn find_back_edges<G: Cfg + ?Sized>(
    g: &G,
) -> Result<BTreeSet<(BlockId, BlockId)>, IrreducibleError> {
    let idom = dominators(g);
    back_edges_with(g, &idom)
}

fn back_edges_with<G: Cfg + ?Sized>(
    g: &G,
    idom: &BTreeMap<BlockId, BlockId>,
) -> Result<BTreeSet<(BlockId, BlockId)>, IrreducibleError> {
    let search = dfs(g);
    for &(source, target) in &search.retreating {
        if !dominates(idom, target, source) {
            return Err(IrreducibleError {
                from: source,
                to: target,
            });
        }
    }
    let mut edges = BTreeSet::new();
    for &b in idom.keys() {
        for s in successors(g, b) {
            if dominates(idom, s, b) {
                edges.insert((b, s));
            }
        }
    }
    Ok(edges)
}

fn natural_loop_with<G: Cfg + ?Sized>(
    g: &G,
    preds: &BTreeMap<BlockId, Vec<BlockId>>,
    back_edges: &BTreeSet<(BlockId, BlockId)>,
    header: BlockId,
) -> LoopRegion {
    let edges: BTreeSet<(BlockId, BlockId)> = back_edges
        .iter()
        .filter(|(_, t)| *t == header)
        .copied()
        .collect();
    let mut body = BTreeSet::from([header]);
    let mut work: Vec<BlockId> = edges.iter().map(|(s, _)| *s).collect();
    while let Some(b) = work.pop() {
        if body.insert(b) {
            work.extend(preds.get(&b).into_iter().flatten().copied());
        }
    }
    LoopRegion {
        header,
        body,
        back_edges: edges,
        header_params: g
            .block(header)
            .map(|b| b.params.clone())
            .unwrap_or_default(),
    }
}

/// The natural loop of `back_edge`, merged with every other back edge into the
/// same header.
pub fn natural_loop<G: Cfg + ?Sized>(g: &G, back_edge: (BlockId, BlockId)) -> LoopRegion {
    let idom = dominators(g);
    let back_edges: BTreeSet<_> = idom
        .keys()
        .flat_map(|&b| successors(g, b).into_iter().map(move |s| (b, s)))
        .filter(|&(s, t)| t == back_edge.1 && dominates(&idom, t, s))
        .collect();
    natural_loop_with(g, &predecessors(g), &back_edges, back_edge.1)
}

/// All natural loops, outermost first (by nesting depth of the header, then
/// by reverse-postorder position).
pub fn loops<G: Cfg + ?Sized>(g: &G) -> Result<Vec<LoopRegion>, IrreducibleError> {
    let idom = dominators(g);
    let back_edges = back_edges_with(g, &idom)?;
    Ok(loops_with(
        g,
        &predecessors(g),
        &back_edges,
        &reverse_postorder(g),
    ))
}

fn loops_with<G: Cfg + ?Sized>(
    g: &G,
    preds: &BTreeMap<BlockId, Vec<BlockId>>,
    back_edges: &BTreeSet<(BlockId, BlockId)>,
    rpo: &[BlockId],
) -> Vec<LoopRegion> {
    let headers: BTreeSet<BlockId> = back_edges.iter().map(|(_, t)| *t).collect();
    let regions: Vec<LoopRegion> = headers
        .into_iter()
        .map(|h| natural_loop_with(g, preds, back_edges, h))
        .collect();
    let position: BTreeMap<BlockId, usize> = rpo.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let key = |r: &LoopRegion, all: &[LoopRegion]| {
        let depth = all
            .iter()
            .filter(|o| o.header != r.header && o.contains(r.header))
            .count();
        (
            depth,
            position.get(&r.header).copied().unwrap_or(usize::MAX),
        )
    };
    let keys: Vec<_> = regions.iter().map(|r| key(r, &regions)).collect();
    let mut keyed: Vec<_> = keys.into_iter().zip(regions).collect();
    keyed.sort_by_key(|(k, _)| *k);
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Number of loops containing each block (0 outside all loops).
pub fn loop_depths(loops: &[LoopRegion]) -> BTreeMap<BlockId, usize> {
    let mut depth = BTreeMap::new();
    for l in loops {
        for &b in &l.body {
            *depth.entry(b).or_insert(0) += 1;
        }
    }
    depth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DefSite {
    Param { block: BlockId, index: usize },
    Instruction { block: BlockId },
}

impl DefSite {
    pub fn block(self) -> BlockId {
        match self {
            DefSite::Param { block, .. } | DefSite::Instruction { block } => block,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UseSite {
    Instruction { block: BlockId, operand: usize },
    Terminator { block: BlockId },
}

impl UseSite {
    pub fn block(self) -> BlockId {
        match self {
            UseSite::Instruction { block, .. } | UseSite::Terminator { block } => block,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefUse {
    pub def: DefSite,
    pub uses: Vec<UseSite>,
}

/// Def-use chains for every defined value. A terminator reading a value
/// several times contributes one use site per read.
pub fn def_use<G: Cfg + ?Sized>(g: &G) -> BTreeMap<ValueId, DefUse> {
    let mut chains = BTreeMap::new();
    let ids = g.block_ids();
    for &id in &ids {
        let block = g.block(id).expect("listed block");
        for (index, &p) in block.params.iter().enumerate() {
            chains.insert(
                p,
                DefUse {
                    def: DefSite::Param { block: id, index },
                    uses: Vec::new(),
                },
            );
        }
        for inst in &block.instructions {
            chains.insert(
                inst.result,
                DefUse {
                    def: DefSite::Instruction { block: id },
                    uses: Vec::new(),
                },
            );
        }
    }
    for &id in &ids {
        let block = g.block(id).expect("listed block");
        for inst in &block.instructions {
            for (operand, v) in inst.operands.iter().enumerate() {
                if let Some(chain) = chains.get_mut(v) {
                    chain.uses.push(UseSite::Instruction { block: id, operand });
                }
            }
        }
        for v in block.terminator.uses() {
            if let Some(chain) = chains.get_mut(&v) {
                chain.uses.push(UseSite::Terminator { block: id });
            }
        }
    }
    chains
}

/// Everything rewrites need to know about one region, computed once.
#[derive(Debug, Clone)]
pub struct Analyses {
    pub rpo: Vec<BlockId>,
    pub idom: BTreeMap<BlockId, BlockId>,
    pub preds: BTreeMap<BlockId, Vec<BlockId>>,
    pub back_edges: BTreeSet<(BlockId, BlockId)>,
    /// Outermost first.
    pub loops: Vec<LoopRegion>,
    pub def_use: BTreeMap<ValueId, DefUse>,
}

impl Analyses {
    pub fn compute<G: Cfg + ?Sized>(g: &G) -> Result<Self, IrreducibleError> {
        let rpo = reverse_postorder(g);
        let idom = dominators(g);
        let preds = predecessors(g);
        let back_edges = back_edges_with(g, &idom)?;
        let loops = loops_with(g, &preds, &back_edges, &rpo);
        Ok(Analyses {
            def_use: def_use(g),
            rpo,
            idom,
            preds,
            back_edges,
            loops,
        })
    }

    pub fn loop_depths(&self) -> BTreeMap<BlockId, usize> {
        loop_depths(&self.loops)
    }

    pub fn def_block(&self, v: ValueId) -> Option<BlockId> {
        self.def_use.get(&v).map(|d| d.def.block())
    }
}
