//! Helpers shared by the integration tests: corpus loading, random program
//! generators and brute-force oracles.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use epath::ir::{parse_function, Cfg};
use epath::rewrite::{Bound, ExprPattern, ImmPattern, Match};
use epath::{BlockId, ESequence, Function, Opcode, RewriteRule, ValueId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ARG_SEED: u64 = 0xE9A7;
pub const ARG_RANGE: std::ops::RangeInclusive<i64> = -20..=20;
pub const FUEL: u64 = 10_000;

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub struct CorpusEntry {
    pub name: String,
    pub text: String,
    pub function: Function,
}

impl CorpusEntry {
    pub fn seq(&self) -> ESequence {
        ESequence::from_function(&self.function).expect("corpus programs are valid")
    }

    /// `; loop bH: bH bX ...` annotations, in the file's own block ids.
    pub fn annotated_loops(&self) -> BTreeMap<BlockId, BTreeSet<BlockId>> {
        let block = |w: &str| {
            BlockId(
                w.trim_end_matches(':')
                    .trim_start_matches('b')
                    .parse()
                    .unwrap(),
            )
        };
        self.text
            .lines()
            .filter_map(|l| l.trim().strip_prefix("; loop "))
            .map(|rest| {
                let mut words = rest.split_whitespace();
                let header = block(words.next().unwrap());
                (header, words.map(block).collect())
            })
            .collect()
    }
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut paths: Vec<PathBuf> = fs::read_dir(tests_dir().join("corpus"))
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ir"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).unwrap();
            let function = parse_function(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            CorpusEntry {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                text,
                function,
            }
        })
        .collect()
}

pub fn read_test_file(rel: &str) -> String {
    fs::read_to_string(tests_dir().join(rel)).unwrap()
}

/// `count` argument vectors of length `arity` drawn from a fixed seed.
pub fn arg_vectors(arity: usize, count: usize) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(ARG_SEED);
    (0..count)
        .map(|_| (0..arity).map(|_| rng.gen_range(ARG_RANGE)).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Graph oracles

/// Successor lists of a CFG keyed by block.
pub fn successor_map<G: Cfg + ?Sized>(g: &G) -> BTreeMap<BlockId, Vec<BlockId>> {
    g.block_ids()
        .into_iter()
        .map(|b| (b, g.block(b).unwrap().successors()))
        .collect()
}

/// Blocks reachable from `from` without entering `removed`.
pub fn reachable_avoiding(
    succ: &BTreeMap<BlockId, Vec<BlockId>>,
    from: BlockId,
    removed: Option<BlockId>,
) -> BTreeSet<BlockId> {
    let mut seen = BTreeSet::new();
    if Some(from) == removed {
        return seen;
    }
    let mut stack = vec![from];
    while let Some(b) = stack.pop() {
        if seen.insert(b) {
            for &s in &succ[&b] {
                if Some(s) != removed && !seen.contains(&s) {
                    stack.push(s);
                }
            }
        }
    }
    seen
}

/// `a` dominates `b` iff deleting `a` disconnects `b` from the entry.
pub fn brute_dominates(
    succ: &BTreeMap<BlockId, Vec<BlockId>>,
    entry: BlockId,
    a: BlockId,
    b: BlockId,
) -> bool {
    a == b || !reachable_avoiding(succ, entry, Some(a)).contains(&b)
}

/// Natural loops by definition: for each edge `t -> h` with `h` dominating
/// `t`, the blocks that reach `t` without passing `h`, plus `h`; loops with a
/// shared header are merged.
pub fn brute_natural_loops<G: Cfg + ?Sized>(g: &G) -> BTreeMap<BlockId, BTreeSet<BlockId>> {
    let succ = successor_map(g);
    let entry = g.entry();
    let live = reachable_avoiding(&succ, entry, None);
    let mut loops: BTreeMap<BlockId, BTreeSet<BlockId>> = BTreeMap::new();
    for &t in &live {
        for &h in &succ[&t] {
            if !brute_dominates(&succ, entry, h, t) {
                continue;
            }
            let body = loops.entry(h).or_insert_with(|| BTreeSet::from([h]));
            for &b in &live {
                if b == h {
                    continue;
                }
                if b == t || reachable_avoiding(&succ, b, Some(h)).contains(&t) {
                    body.insert(b);
                }
            }
        }
    }
    loops
}

/// Loop depth of every reachable block, computed from the brute-force loops.
pub fn brute_loop_depths<G: Cfg + ?Sized>(g: &G) -> BTreeMap<BlockId, usize> {
    let loops = brute_natural_loops(g);
    g.block_ids()
        .into_iter()
        .map(|b| (b, loops.values().filter(|body| body.contains(&b)).count()))
        .collect()
}

/// A random control-flow skeleton with `n` blocks (terminators only). Block
/// `i` always has an edge to `i + 1`, so everything is reachable; the extra
/// edges may point anywhere, entry included, so the graph may be irreducible.
pub fn random_cfg(rng: &mut impl Rng, n: u32) -> Function {
    use epath::ir::BlockCall;
    use epath::Terminator;
    let call = |b: u32| BlockCall::new(BlockId(b), Vec::new());
    let mut blocks = BTreeMap::new();
    for i in 0..n {
        let extra = rng.gen_range(0..n);
        let term = match (i + 1 < n, rng.gen_range(0..3)) {
            (true, 0) => Terminator::Jump(call(i + 1)),
            (true, 1) => Terminator::Brif {
                cond: ValueId(0),
                then_dest: call(extra),
                else_dest: call(i + 1),
            },
            (true, _) => Terminator::Brif {
                cond: ValueId(0),
                then_dest: call(i + 1),
                else_dest: call(extra),
            },
            (false, 0) => Terminator::Jump(call(extra)),
            (false, _) => Terminator::Ret(vec![ValueId(0)]),
        };
        let params = if i == 0 { vec![ValueId(0)] } else { Vec::new() };
        blocks.insert(
            BlockId(i),
            epath::Block::new(BlockId(i), params, None, term),
        );
    }
    Function {
        name: "g".into(),
        params: vec![ValueId(0)],
        entry: BlockId(0),
        blocks,
    }
}

// ---------------------------------------------------------------------------
// Random valid programs

/// Builds random structured programs: straight-line instructions, diamonds,
/// and bounded counting loops (optionally entered from both arms of a
/// branch). Every generated function is valid, reducible and terminates
/// within a few thousand blocks.
pub struct ProgramGen<'r, R: Rng> {
    rng: &'r mut R,
    next_v: u32,
    next_b: u32,
    out: Vec<String>,
    cur: String,
    cur_has_inst: bool,
    loop_depth: usize,
}

impl<'r, R: Rng> ProgramGen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        ProgramGen {
            rng,
            next_v: 0,
            next_b: 0,
            out: Vec::new(),
            cur: String::new(),
            cur_has_inst: false,
            loop_depth: 0,
        }
    }

    fn v(&mut self) -> u32 {
        self.next_v += 1;
        self.next_v - 1
    }

    fn b(&mut self) -> u32 {
        self.next_b += 1;
        self.next_b - 1
    }

    fn open(&mut self, id: u32, params: &[u32]) {
        let ps: Vec<String> = params.iter().map(|p| format!("v{p}")).collect();
        self.cur = format!("b{id}({}):\n", ps.join(", "));
        self.cur_has_inst = false;
    }

    fn close(&mut self, term: String) {
        let block = std::mem::take(&mut self.cur) + "  " + &term + "\n";
        self.out.push(block);
    }

    fn inst(&mut self, rhs: String) -> u32 {
        if self.cur_has_inst {
            let next = self.b();
            self.close(format!("jump b{next}()"));
            self.open(next, &[]);
        }
        let v = self.v();
        self.cur.push_str(&format!("  v{v} = {rhs}\n"));
        self.cur_has_inst = true;
        v
    }

    fn pick(&mut self, avail: &[u32]) -> u32 {
        *avail.choose(self.rng).unwrap()
    }

    fn imm(&mut self) -> i64 {
        match self.rng.gen_range(0..10) {
            0 => *[i64::MAX, i64::MIN, -1, 1 << 40].choose(self.rng).unwrap(),
            _ => self.rng.gen_range(-6..=6),
        }
    }

    fn straight(&mut self, avail: &mut Vec<u32>) {
        let rhs = match self.rng.gen_range(0..10) {
            k if k < 3 || avail.is_empty() => format!("iconst {}", self.imm()),
            3 => format!("sideeffect v{}", self.pick(avail)),
            k => {
                let op = ["iadd", "isub", "imul", "icmp_slt", "iadd", "isub"][k - 4];
                let (a, b) = (self.pick(avail), self.pick(avail));
                format!("{op} v{a}, v{b}")
            }
        };
        avail.push(self.inst(rhs));
    }

    fn ensure_value(&mut self, avail: &mut Vec<u32>) {
        if avail.is_empty() {
            let k = self.imm();
            let v = self.inst(format!("iconst {k}"));
            avail.push(v);
        }
    }

    fn diamond(&mut self, avail: &mut Vec<u32>, depth: usize) {
        self.ensure_value(avail);
        let c = self.pick(avail);
        let (t, e, m) = (self.b(), self.b(), self.b());
        self.close(format!("brif v{c}, b{t}(), b{e}()"));
        let mut results = Vec::new();
        for arm in [t, e] {
            self.open(arm, &[]);
            let mut inner = avail.clone();
            self.sequence(&mut inner, depth + 1, 2);
            let x = self.pick(&inner);
            results.push(x);
            self.close(format!("jump b{m}(v{x})"));
        }
        let p = self.v();
        self.open(m, &[p]);
        avail.push(p);
    }

    fn counting_loop(&mut self, avail: &mut Vec<u32>, depth: usize) {
        self.ensure_value(avail);
        let zero = self.inst("iconst 0".into());
        let one = self.inst("iconst 1".into());
        let trips = self.rng.gen_range(0..=3);
        let bound = self.inst(format!("iconst {trips}"));
        let acc0 = self.pick(avail);
        let h = self.b();
        if self.rng.gen_bool(0.25) {
            // Two entry edges into the header.
            let c = self.pick(avail);
            let acc1 = self.pick(avail);
            let (l, r) = (self.b(), self.b());
            self.close(format!("brif v{c}, b{l}(), b{r}()"));
            self.open(l, &[]);
            self.close(format!("jump b{h}(v{zero}, v{acc0})"));
            self.open(r, &[]);
            self.close(format!("jump b{h}(v{zero}, v{acc1})"));
        } else {
            self.close(format!("jump b{h}(v{zero}, v{acc0})"));
        }
        let (i, acc) = (self.v(), self.v());
        self.open(h, &[i, acc]);
        let cond = self.inst(format!("icmp_slt v{i}, v{bound}"));
        let (body, exit) = (self.b(), self.b());
        self.close(format!("brif v{cond}, b{body}(), b{exit}()"));

        self.open(body, &[]);
        let mut inner = avail.clone();
        inner.extend([i, acc, zero, one, bound]);
        self.loop_depth += 1;
        self.sequence(&mut inner, depth + 1, 3);
        self.loop_depth -= 1;
        let next_acc = self.pick(&inner);
        let inc = self.inst(format!("iadd v{i}, v{one}"));
        self.close(format!("jump b{h}(v{inc}, v{next_acc})"));

        self.open(exit, &[]);
        avail.extend([zero, one, bound, i, acc]);
    }

    fn sequence(&mut self, avail: &mut Vec<u32>, depth: usize, max_len: usize) {
        let len = self.rng.gen_range(1..=max_len);
        for _ in 0..len {
            match self.rng.gen_range(0..10) {
                0 | 1 if depth < 2 => self.diamond(avail, depth),
                2 | 3 if depth < 2 && self.loop_depth < 2 => self.counting_loop(avail, depth),
                _ => self.straight(avail),
            }
        }
    }

    /// A random function with `arity` parameters.
    pub fn function(mut self, arity: usize) -> Function {
        let params: Vec<u32> = (0..arity).map(|_| self.v()).collect();
        let entry = self.b();
        self.open(entry, &params);
        let mut avail = params.clone();
        self.sequence(&mut avail, 0, 4);
        self.ensure_value(&mut avail);
        let r = self.pick(&avail);
        let r2 = self.pick(&avail);
        self.close(format!("ret v{r}, v{r2}"));
        let ps: Vec<String> = params.iter().map(|p| format!("v{p}")).collect();
        let text = format!("func @gen({}) {{\n{}}}\n", ps.join(", "), self.out.join(""));
        parse_function(&text)
            .unwrap_or_else(|e| panic!("generator produced invalid IR: {e}\n{text}"))
    }
}

pub fn random_function(seed: u64, arity: usize) -> Function {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ProgramGen::new(&mut rng).function(arity)
}

/// A random valid function whose blocks are then renumbered arbitrarily.
pub fn permute_names(f: &Function, seed: u64) -> Function {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block_ids: Vec<u32> = (0..f.blocks.len() as u32 * 3).collect();
    block_ids.shuffle(&mut rng);
    let max_v = f.max_value().map_or(0, |v| v.0 + 1);
    let mut value_ids: Vec<u32> = (0..max_v * 3 + 1).collect();
    value_ids.shuffle(&mut rng);
    let bmap: BTreeMap<BlockId, BlockId> = f
        .blocks
        .keys()
        .zip(&block_ids)
        .map(|(&b, &n)| (b, BlockId(n)))
        .collect();
    let vm = |v: ValueId| ValueId(value_ids[v.0 as usize]);
    let mut blocks = BTreeMap::new();
    for (id, b) in &f.blocks {
        let mut nb = b.clone();
        nb.id = bmap[id];
        nb.params = nb.params.iter().map(|&v| vm(v)).collect();
        for inst in &mut nb.instructions {
            inst.result = vm(inst.result);
            inst.operands = inst.operands.iter().map(|&v| vm(v)).collect();
        }
        nb.terminator.map_uses(vm);
        for d in nb.terminator.destinations_mut() {
            d.target = bmap[&d.target];
        }
        blocks.insert(nb.id, nb);
    }
    Function {
        name: format!("{}_renamed", f.name),
        params: f.params.iter().map(|&v| vm(v)).collect(),
        entry: bmap[&f.entry],
        blocks,
    }
}

// ---------------------------------------------------------------------------
// Pattern oracle

pub fn random_pattern(rng: &mut impl Rng, depth: usize, vars: &mut usize) -> ExprPattern {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => {
                *vars += 1;
                ExprPattern::var(&format!("x{vars}"))
            }
            1 => ExprPattern::iconst(ImmPattern::Any),
            2 => {
                *vars += 1;
                ExprPattern::iconst(ImmPattern::Bind(format!("k{vars}")))
            }
            _ => ExprPattern::iconst(ImmPattern::Exact(rng.gen_range(-2..=3))),
        };
    }
    let op = *[
        Opcode::Iadd,
        Opcode::Isub,
        Opcode::Imul,
        Opcode::IcmpSlt,
        Opcode::Sideeffect,
    ]
    .choose(rng)
    .unwrap();
    let operands = (0..op.arity())
        .map(|_| random_pattern(rng, depth - 1, vars))
        .collect();
    ExprPattern::op(op, operands)
}

fn flatten<'p>(p: &'p ExprPattern, out: &mut Vec<(&'p ExprPattern, Vec<usize>)>) -> usize {
    let me = out.len();
    out.push((p, Vec::new()));
    if let ExprPattern::Op { operands, .. } = p {
        let kids: Vec<usize> = operands.iter().map(|o| flatten(o, out)).collect();
        out[me].1 = kids;
    }
    me
}

/// Enumerates every assignment of values to pattern positions and keeps the
/// consistent ones. Exponential; meant for small sequences and patterns.
pub fn brute_matches(
    pat: &ExprPattern,
    s: &ESequence,
) -> BTreeSet<(ValueId, Vec<(String, Bound)>)> {
    let mut nodes = Vec::new();
    flatten(pat, &mut nodes);
    let insts: BTreeMap<ValueId, (Opcode, Vec<ValueId>)> = s
        .blocks()
        .iter()
        .flat_map(|b| b.instructions.iter())
        .map(|i| (i.result, (i.opcode, i.operands.clone())))
        .collect();
    let values: Vec<ValueId> = (0..s.value_count()).map(ValueId).collect();
    let mut found = BTreeSet::new();
    let mut assign = vec![ValueId(0); nodes.len()];

    fn go(
        k: usize,
        nodes: &[(&ExprPattern, Vec<usize>)],
        values: &[ValueId],
        insts: &BTreeMap<ValueId, (Opcode, Vec<ValueId>)>,
        assign: &mut Vec<ValueId>,
        found: &mut BTreeSet<(ValueId, Vec<(String, Bound)>)>,
    ) {
        if k == nodes.len() {
            if !insts.contains_key(&assign[0]) {
                return;
            }
            let mut bindings = Vec::new();
            for (i, (p, kids)) in nodes.iter().enumerate() {
                let v = assign[i];
                match p {
                    ExprPattern::Var(name) => bindings.push((name.clone(), Bound::Value(v))),
                    ExprPattern::Const(imm) => {
                        let Some((Opcode::Iconst(c), _)) = insts.get(&v) else {
                            return;
                        };
                        match imm {
                            ImmPattern::Exact(want) if want != c => return,
                            ImmPattern::Bind(name) => bindings.push((name.clone(), Bound::Imm(*c))),
                            _ => {}
                        }
                    }
                    ExprPattern::Op { opcode, .. } => {
                        let Some((op, operands)) = insts.get(&v) else {
                            return;
                        };
                        if op != opcode || operands.len() != kids.len() {
                            return;
                        }
                        if operands.iter().zip(kids).any(|(o, &kid)| assign[kid] != *o) {
                            return;
                        }
                    }
                }
            }
            bindings.sort();
            found.insert((assign[0], bindings));
            return;
        }
        for &v in values {
            assign[k] = v;
            go(k + 1, nodes, values, insts, assign, found);
        }
    }
    go(0, &nodes, &values, &insts, &mut assign, &mut found);
    found
}

pub fn match_set(ms: &[Match]) -> BTreeSet<(ValueId, Vec<(String, Bound)>)> {
    ms.iter()
        .map(|m| (m.root, m.bindings.clone().into_iter().collect()))
        .collect()
}

// ---------------------------------------------------------------------------
// Closure oracle

/// The rewrite closure of `seed` by naive breadth-first exploration,
/// independent of the e-path implementation.
pub fn naive_closure(
    seed: &ESequence,
    rules: &[&dyn RewriteRule],
    cap: usize,
) -> BTreeMap<epath::Digest, ESequence> {
    let mut seen = BTreeMap::from([(seed.digest(), seed.clone())]);
    let mut frontier = vec![seed.clone()];
    while let Some(s) = frontier.pop() {
        let analyses = s.analyses();
        for rule in rules {
            for out in rule.apply(&s, &analyses) {
                if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(out.digest()) {
                    e.insert(out.clone());
                    frontier.push(out);
                    assert!(seen.len() <= cap, "closure exceeds {cap}");
                }
            }
        }
    }
    seen
}
