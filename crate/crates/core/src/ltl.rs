//! Propositional LTL with past operators: a hash-consed formula arena,
//! closures and types, type compatibility, lasso search restricted to a set
//! of worlds, and the decomposition of separated formulas into a future part
//! and a past part.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::World;

/// Handle of a formula inside an [`Ltl`] arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F(pub u32);

/// Core formula constructors. Derived operators are expanded on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    Prop(u32),
    Not(F),
    And(F, F),
    Next(F),
    Prev(F),
    Until(F, F),
    Since(F, F),
}

/// Arena of hash-consed LTL formulas over propositions `p_0, p_1, …`.
#[derive(Clone, Debug, Default)]
pub struct Ltl {
    nodes: Vec<Node>,
    index: HashMap<Node, F>,
}

impl Ltl {
    pub fn new() -> Self {
        Self::default()
    }

    fn mk(&mut self, n: Node) -> F {
        if let Some(f) = self.index.get(&n) {
            return *f;
        }
        let f = F(self.nodes.len() as u32);
        self.nodes.push(n);
        self.index.insert(n, f);
        f
    }

    pub fn node(&self, f: F) -> Node {
        self.nodes[f.0 as usize]
    }

    pub fn tt(&mut self) -> F {
        self.mk(Node::True)
    }

    pub fn ff(&mut self) -> F {
        let t = self.tt();
        self.not(t)
    }

    pub fn prop(&mut self, j: u32) -> F {
        self.mk(Node::Prop(j))
    }

    /// Negation; `¬¬φ` collapses to `φ`.
    pub fn not(&mut self, f: F) -> F {
        match self.node(f) {
            Node::Not(g) => g,
            _ => self.mk(Node::Not(f)),
        }
    }

    pub fn and(&mut self, a: F, b: F) -> F {
        self.mk(Node::And(a, b))
    }

    pub fn or(&mut self, a: F, b: F) -> F {
        let (na, nb) = (self.not(a), self.not(b));
        let c = self.and(na, nb);
        self.not(c)
    }

    pub fn implies(&mut self, a: F, b: F) -> F {
        let nb = self.not(b);
        let c = self.and(a, nb);
        self.not(c)
    }

    pub fn iff(&mut self, a: F, b: F) -> F {
        let l = self.implies(a, b);
        let r = self.implies(b, a);
        self.and(l, r)
    }

    pub fn next(&mut self, a: F) -> F {
        self.mk(Node::Next(a))
    }

    pub fn prev(&mut self, a: F) -> F {
        self.mk(Node::Prev(a))
    }

    pub fn until(&mut self, a: F, b: F) -> F {
        self.mk(Node::Until(a, b))
    }

    pub fn since(&mut self, a: F, b: F) -> F {
        self.mk(Node::Since(a, b))
    }

    /// `◇_F φ = true U φ`.
    pub fn eventually(&mut self, a: F) -> F {
        let t = self.tt();
        self.until(t, a)
    }

    /// `□_F φ = ¬◇_F¬φ`.
    pub fn always(&mut self, a: F) -> F {
        let na = self.not(a);
        let e = self.eventually(na);
        self.not(e)
    }

    /// `◇_P φ = true S φ`.
    pub fn once(&mut self, a: F) -> F {
        let t = self.tt();
        self.since(t, a)
    }

    /// `□_P φ = ¬◇_P¬φ`.
    pub fn historically(&mut self, a: F) -> F {
        let na = self.not(a);
        let e = self.once(na);
        self.not(e)
    }

    /// Conjunction of a list (`true` when empty).
    pub fn conj(&mut self, fs: &[F]) -> F {
        let mut it = fs.iter().rev();
        match it.next() {
            None => self.tt(),
            Some(&last) => {
                let mut acc = last;
                for &f in it {
                    acc = self.and(f, acc);
                }
                acc
            }
        }
    }

    /// Direct subformulas.
    pub fn children(&self, f: F) -> Vec<F> {
        match self.node(f) {
            Node::True | Node::Prop(_) => vec![],
            Node::Not(a) | Node::Next(a) | Node::Prev(a) => vec![a],
            Node::And(a, b) | Node::Until(a, b) | Node::Since(a, b) => vec![a, b],
        }
    }

    fn reach(&self, f: F, seen: &mut HashSet<F>) {
        if seen.insert(f) {
            for c in self.children(f) {
                self.reach(c, seen);
            }
        }
    }

    pub fn has_future(&self, f: F) -> bool {
        let mut seen = HashSet::new();
        self.reach(f, &mut seen);
        seen.iter()
            .any(|g| matches!(self.node(*g), Node::Next(_) | Node::Until(..)))
    }

    pub fn has_past(&self, f: F) -> bool {
        let mut seen = HashSet::new();
        self.reach(f, &mut seen);
        seen.iter()
            .any(|g| matches!(self.node(*g), Node::Prev(_) | Node::Since(..)))
    }

    /// Highest proposition index plus one.
    pub fn prop_bound(&self, f: F) -> u32 {
        let mut seen = HashSet::new();
        self.reach(f, &mut seen);
        seen.iter()
            .filter_map(|g| match self.node(*g) {
                Node::Prop(j) => Some(j + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Displays a formula with propositions written `p1, p2, …`.
    pub fn show(&self, f: F) -> String {
        struct D<'a>(&'a Ltl, F);
        impl fmt::Display for D<'_> {
            fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
                let l = self.0;
                match l.node(self.1) {
                    Node::True => write!(out, "true"),
                    Node::Prop(j) => write!(out, "p{}", j + 1),
                    Node::Not(a) => write!(out, "!{}", D(l, a)),
                    Node::And(a, b) => write!(out, "({} & {})", D(l, a), D(l, b)),
                    Node::Next(a) => write!(out, "X {}", D(l, a)),
                    Node::Prev(a) => write!(out, "Y {}", D(l, a)),
                    Node::Until(a, b) => write!(out, "({} U {})", D(l, a), D(l, b)),
                    Node::Since(a, b) => write!(out, "({} S {})", D(l, a), D(l, b)),
                }
            }
        }
        D(self, f).to_string()
    }
}

/// Subformula closure of `fs` together with all negations (`¬¬φ = φ`).
pub fn closure(ltl: &mut Ltl, fs: &[F]) -> Vec<F> {
    let mut seen = HashSet::new();
    for &f in fs {
        ltl.reach(f, &mut seen);
    }
    let mut pos: Vec<F> = seen
        .into_iter()
        .filter(|f| !matches!(ltl.node(*f), Node::Not(_)))
        .collect();
    pos.sort();
    let mut out = Vec::new();
    for f in pos {
        out.push(f);
        out.push(ltl.not(f));
    }
    out
}

/// A possibly negated reference to a positive closure element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lit {
    pub idx: u32,
    pub neg: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CNode {
    True,
    Prop(u32),
    And(Lit, Lit),
    Next(Lit),
    Prev(Lit),
    Until(Lit, Lit),
    Since(Lit, Lit),
}

/// A type: the set of positive closure elements it contains, as a bitmask.
/// A negated element `¬φ` belongs to the type iff `φ` does not.
pub type Type = u128;

/// The positive closure of a formula set, in topological order, with the
/// evaluation machinery for types.
#[derive(Clone, Debug)]
pub struct Closure {
    nodes: Vec<CNode>,
    index: HashMap<F, u32>,
    /// `prop_node[j]` is the closure index of `p_j`.
    prop_node: Vec<u32>,
    nexts: Vec<u32>,
    untils: Vec<u32>,
}

/// Types are bitmasks over at most this many positive subformulas.
pub const MAX_CLOSURE: usize = 128;

impl Closure {
    /// Builds the closure of `roots`, always including `p_0 … p_{m-1}`.
    pub fn new(ltl: &Ltl, roots: &[F], m: u32) -> Result<Closure> {
        let mut cl = Closure {
            nodes: Vec::new(),
            index: HashMap::new(),
            prop_node: Vec::new(),
            nexts: Vec::new(),
            untils: Vec::new(),
        };
        for j in 0..m {
            cl.add_node(CNode::Prop(j), None)?;
        }
        for &r in roots {
            cl.add(ltl, r)?;
        }
        let bound = cl
            .nodes
            .iter()
            .filter_map(|n| match n {
                CNode::Prop(j) => Some(*j + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        cl.prop_node = vec![u32::MAX; bound as usize];
        for (i, n) in cl.nodes.iter().enumerate() {
            match n {
                CNode::Prop(j) => cl.prop_node[*j as usize] = i as u32,
                CNode::Next(_) => cl.nexts.push(i as u32),
                CNode::Until(..) => cl.untils.push(i as u32),
                _ => {}
            }
        }
        Ok(cl)
    }

    fn add_node(&mut self, n: CNode, f: Option<F>) -> Result<u32> {
        if let CNode::Prop(j) = n {
            if let Some(i) = self.nodes.iter().position(|x| *x == CNode::Prop(j)) {
                if let Some(f) = f {
                    self.index.insert(f, i as u32);
                }
                return Ok(i as u32);
            }
        }
        if self.nodes.len() >= MAX_CLOSURE {
            return Err(Error::ResourceLimit(format!(
                "closure exceeds {MAX_CLOSURE} positive subformulas"
            )));
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(n);
        if let Some(f) = f {
            self.index.insert(f, i);
        }
        Ok(i)
    }

    fn add(&mut self, ltl: &Ltl, f: F) -> Result<Lit> {
        if let Node::Not(g) = ltl.node(f) {
            let l = self.add(ltl, g)?;
            return Ok(Lit {
                idx: l.idx,
                neg: !l.neg,
            });
        }
        if let Some(&i) = self.index.get(&f) {
            return Ok(Lit { idx: i, neg: false });
        }
        let n = match ltl.node(f) {
            Node::True => CNode::True,
            Node::Prop(j) => CNode::Prop(j),
            Node::Not(_) => unreachable!(),
            Node::And(a, b) => {
                let a = self.add(ltl, a)?;
                CNode::And(a, self.add(ltl, b)?)
            }
            Node::Next(a) => CNode::Next(self.add(ltl, a)?),
            Node::Prev(a) => CNode::Prev(self.add(ltl, a)?),
            Node::Until(a, b) => {
                let a = self.add(ltl, a)?;
                CNode::Until(a, self.add(ltl, b)?)
            }
            Node::Since(a, b) => {
                let a = self.add(ltl, a)?;
                CNode::Since(a, self.add(ltl, b)?)
            }
        };
        let i = self.add_node(n, Some(f))?;
        Ok(Lit { idx: i, neg: false })
    }

    /// Literal for a formula of the closure.
    pub fn lit(&self, ltl: &Ltl, f: F) -> Option<Lit> {
        match ltl.node(f) {
            Node::Not(g) => self.lit(ltl, g).map(|l| Lit {
                idx: l.idx,
                neg: !l.neg,
            }),
            _ => self.index.get(&f).map(|&i| Lit { idx: i, neg: false }),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether literal `l` belongs to type `t`.
    pub fn holds(&self, t: Type, l: Lit) -> bool {
        (t >> l.idx & 1 == 1) != l.neg
    }

    /// Whether formula `f` of the closure belongs to `t`.
    pub fn contains(&self, ltl: &Ltl, t: Type, f: F) -> bool {
        let l = self.lit(ltl, f).expect("formula outside the closure");
        self.holds(t, l)
    }

    /// The propositions of `t`.
    pub fn world(&self, t: Type) -> World {
        let mut w = World(0);
        for (j, &i) in self.prop_node.iter().enumerate() {
            if i != u32::MAX && t >> i & 1 == 1 {
                w = w.with(j);
            }
        }
        w
    }

    fn bit(t: Type, i: usize) -> bool {
        t >> i & 1 == 1
    }

    /// Completes the derived bits (`true`, `∧`) and the given elementary
    /// bits into a type, evaluating in topological order. `elem(i, t)`
    /// supplies elementary bit `i` given the bits computed so far.
    fn build(&self, mut elem: impl FnMut(usize, Type) -> bool) -> Type {
        let mut t: Type = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            let v = match *n {
                CNode::True => true,
                CNode::And(a, b) => self.holds(t, a) && self.holds(t, b),
                _ => elem(i, t),
            };
            if v {
                t |= 1 << i;
            }
        }
        t
    }

    fn elementary(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| !matches!(n, CNode::True | CNode::And(..)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Every set satisfying the negation and conjunction clauses.
    pub fn enumerate_types(&self) -> impl Iterator<Item = Type> + '_ {
        let elem = self.elementary();
        let k = elem.len();
        let pos: HashMap<usize, usize> = elem.iter().enumerate().map(|(b, &i)| (i, b)).collect();
        (0..1u128 << k).map(move |mask| self.build(|i, _| mask >> pos[&i] & 1 == 1))
    }

    /// Whether `t` satisfies the negation and conjunction clauses.
    pub fn is_type(&self, t: Type) -> bool {
        if self.nodes.len() < 128 && t >> self.nodes.len() != 0 {
            return false;
        }
        self.build(|i, _| Self::bit(t, i)) == t
    }

    /// No `Y` formula holds and `φ S ψ` holds iff `ψ` does.
    pub fn is_initial(&self, t: Type) -> bool {
        self.nodes.iter().enumerate().all(|(i, n)| match *n {
            CNode::Prev(_) => !Self::bit(t, i),
            CNode::Since(_, b) => Self::bit(t, i) == self.holds(t, b),
            _ => true,
        })
    }

    /// The four recursion clauses for `X`, `Y`, `U` and `S`.
    pub fn t_compatible(&self, t1: Type, t2: Type) -> bool {
        self.nodes.iter().enumerate().all(|(i, n)| match *n {
            CNode::Next(a) => Self::bit(t1, i) == self.holds(t2, a),
            CNode::Prev(a) => Self::bit(t2, i) == self.holds(t1, a),
            CNode::Until(a, b) => {
                Self::bit(t1, i) == (self.holds(t1, b) || (self.holds(t1, a) && Self::bit(t2, i)))
            }
            CNode::Since(a, b) => {
                Self::bit(t2, i) == (self.holds(t2, b) || (self.holds(t2, a) && Self::bit(t1, i)))
            }
            _ => true,
        })
    }

    /// Local consistency of `U` and `S` within a single type.
    fn locally_ok(&self, t: Type) -> bool {
        self.nodes.iter().enumerate().all(|(i, n)| match *n {
            CNode::Until(a, b) | CNode::Since(a, b) => {
                let (u, pa, pb) = (Self::bit(t, i), self.holds(t, a), self.holds(t, b));
                (!pb || u) && (!u || pa || pb)
            }
            _ => true,
        })
    }

    fn world_bit(&self, w: World, j: u32) -> bool {
        w.contains(j as usize)
    }

    /// Whether the closure mentions only propositions of `w`'s range.
    fn fits(&self, t: Type, w: World) -> bool {
        self.world(t) == w
    }

    /// Initial types with world `w`.
    pub fn initial_types(&self, w: World) -> Vec<Type> {
        self.expand(w, |i, n, t, assign| match n {
            CNode::Prev(_) => Some(false),
            CNode::Since(_, b) => Some(self.holds(t, b)),
            CNode::Next(_) | CNode::Until(..) => Some(assign(i)),
            _ => None,
        })
        .into_iter()
        .filter(|&t| self.locally_ok(t))
        .collect()
    }

    /// Types `t2` with world `w` such that `(t1, t2)` is t-compatible.
    pub fn successors(&self, t1: Type, w: World) -> Vec<Type> {
        self.expand(w, |i, n, t, assign| match n {
            CNode::Prev(a) => Some(self.holds(t1, a)),
            CNode::Since(a, b) => {
                Some(self.holds(t, b) || (self.holds(t, a) && Self::bit(t1, i)))
            }
            CNode::Next(_) => Some(assign(i)),
            CNode::Until(a, b) => {
                if !self.holds(t1, b) && self.holds(t1, a) {
                    Some(Self::bit(t1, i))
                } else {
                    Some(assign(i))
                }
            }
            _ => None,
        })
        .into_iter()
        .filter(|&t2| self.locally_ok(t2) && self.t_compatible(t1, t2))
        .collect()
    }

    /// Enumerates types with world `w` whose free `X`/`U` bits range over all
    /// assignments, the remaining elementary bits given by `rule`.
    fn expand(
        &self,
        w: World,
        rule: impl Fn(usize, CNode, Type, &dyn Fn(usize) -> bool) -> Option<bool>,
    ) -> Vec<Type> {
        let free: Vec<usize> = self
            .nexts
            .iter()
            .chain(&self.untils)
            .map(|&i| i as usize)
            .collect();
        let mut out = Vec::new();
        for mask in 0..1u64 << free.len() {
            let assign = |i: usize| {
                let b = free.iter().position(|&x| x == i).unwrap();
                mask >> b & 1 == 1
            };
            let t = self.build(|i, t| match self.nodes[i] {
                CNode::Prop(j) => self.world_bit(w, j),
                n => rule(i, n, t, &assign).unwrap_or(false),
            });
            if self.fits(t, w) && !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    /// `U` formulas of `t` whose right-hand side does not hold in `t`.
    fn open_untils(&self, t: Type) -> u128 {
        let mut m = 0;
        for (k, &i) in self.untils.iter().enumerate() {
            if let CNode::Until(_, b) = self.nodes[i as usize] {
                if Self::bit(t, i as usize) && !self.holds(t, b) {
                    m |= 1 << k;
                }
            }
        }
        m
    }

    /// `U` formulas whose right-hand side holds in `t`.
    fn discharged_untils(&self, t: Type) -> u128 {
        let mut m = 0;
        for (k, &i) in self.untils.iter().enumerate() {
            if let CNode::Until(_, b) = self.nodes[i as usize] {
                if self.holds(t, b) {
                    m |= 1 << k;
                }
            }
        }
        m
    }
}

/// A world allowed at some position, with the pending items it discharges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Choice {
    pub world: World,
    pub discharge: u64,
}

impl Choice {
    pub fn plain(world: World) -> Self {
        Choice {
            world,
            discharge: 0,
        }
    }
}

/// An ultimately periodic type sequence: positions `0..types.len()`, the
/// last position followed by `loop_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub types: Vec<Type>,
    pub loop_start: usize,
}

impl Lasso {
    pub fn worlds(&self, cl: &Closure) -> Vec<World> {
        self.types.iter().map(|&t| cl.world(t)).collect()
    }
}

/// Search for a lasso of types: positions `0..=n` restricted to
/// `prefix[i]`, later positions to `tail`, `goal` holding at `n`, and every
/// bit of `pending` discharged by some visited choice.
pub struct LassoSearch<'a> {
    pub closure: &'a Closure,
    pub prefix: Vec<Vec<Choice>>,
    pub tail: Vec<Choice>,
    pub goal: Option<Lit>,
    pub pending: u64,
    /// Upper bound on explored states before giving up with `ResourceLimit`.
    pub state_cap: usize,
}

type Node2 = (Type, u64);

impl<'a> LassoSearch<'a> {
    pub fn new(closure: &'a Closure, prefix: Vec<Vec<Choice>>, tail: Vec<Choice>) -> Self {
        LassoSearch {
            closure,
            prefix,
            tail,
            goal: None,
            pending: 0,
            state_cap: 2_000_000,
        }
    }

    fn limit(&self, count: usize) -> Result<()> {
        if count > self.state_cap {
            Err(Error::ResourceLimit(format!(
                "lasso search exceeded {} states",
                self.state_cap
            )))
        } else {
            Ok(())
        }
    }

    /// Layered prefix states; each entry carries the index of its parent in
    /// the previous layer.
    fn prefix_layers(&self) -> Result<Vec<Vec<(Node2, usize)>>> {
        let cl = self.closure;
        let mut layers: Vec<Vec<(Node2, usize)>> = Vec::new();
        let mut count = 0;
        for (i, choices) in self.prefix.iter().enumerate() {
            let mut seen: HashMap<Node2, ()> = HashMap::new();
            let mut layer = Vec::new();
            if i == 0 {
                for c in choices {
                    for t in cl.initial_types(c.world) {
                        let s = (t, self.pending & !c.discharge);
                        if seen.insert(s, ()).is_none() {
                            layer.push((s, usize::MAX));
                        }
                    }
                }
            } else {
                for (pi, &((t1, pend), _)) in layers[i - 1].iter().enumerate() {
                    for c in choices {
                        for t in cl.successors(t1, c.world) {
                            let s = (t, pend & !c.discharge);
                            if seen.insert(s, ()).is_none() {
                                layer.push((s, pi));
                            }
                        }
                    }
                }
            }
            count += layer.len();
            self.limit(count)?;
            if i + 1 == self.prefix.len() {
                if let Some(g) = self.goal {
                    layer.retain(|((t, _), _)| cl.holds(*t, g));
                }
            }
            let empty = layer.is_empty();
            layers.push(layer);
            if empty {
                break;
            }
        }
        Ok(layers)
    }

    /// States `(T_n, pending)` reachable at the last prefix position with the
    /// goal holding.
    pub fn prefix_states(&self) -> Result<Vec<(Type, u64)>> {
        let layers = self.prefix_layers()?;
        if layers.len() < self.prefix.len() {
            return Ok(Vec::new());
        }
        Ok(layers
            .last()
            .map(|l| l.iter().map(|(s, _)| *s).collect())
            .unwrap_or_default())
    }

    /// Finds a lasso whose loop starts strictly after the prefix.
    pub fn find(&self) -> Result<Option<Lasso>> {
        let cl = self.closure;
        if self.prefix.is_empty() {
            return Ok(None);
        }
        let layers = self.prefix_layers()?;
        if layers.len() < self.prefix.len() || layers.last().unwrap().is_empty() {
            return Ok(None);
        }
        // Tail graph: BFS over (type, pending) from the last prefix layer.
        let last = layers.last().unwrap();
        let mut parent: HashMap<Node2, Option<Node2>> = HashMap::new();
        let mut from_prefix: HashMap<Node2, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        for (k, &(s, _)) in last.iter().enumerate() {
            for c in &self.tail {
                for t in cl.successors(s.0, c.world) {
                    let ns = (t, s.1 & !c.discharge);
                    if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(ns) {
                        e.insert(None);
                        from_prefix.insert(ns, k);
                        queue.push_back(ns);
                    }
                }
            }
        }
        let mut cycle_memo: HashSet<Type> = HashSet::new();
        while let Some(s) = queue.pop_front() {
            self.limit(parent.len())?;
            if let Some(cycle) = self.cycle_from(s, &mut cycle_memo)? {
                // Reconstruct prefix, tail path and cycle.
                let mut tail_path = vec![s];
                let mut cur = s;
                while let Some(Some(p)) = parent.get(&cur) {
                    tail_path.push(*p);
                    cur = *p;
                }
                tail_path.reverse();
                let mut pre = Vec::new();
                let mut li = self.prefix.len() - 1;
                let mut idx = from_prefix[&cur];
                loop {
                    let ((t, _), p) = layers[li][idx];
                    pre.push(t);
                    if li == 0 {
                        break;
                    }
                    li -= 1;
                    idx = p;
                }
                pre.reverse();
                let loop_start = pre.len() + tail_path.len() - 1;
                let mut types = pre;
                types.extend(tail_path.iter().map(|x| x.0));
                types.extend(cycle.into_iter().skip(1));
                return Ok(Some(Lasso { types, loop_start }));
            }
            for c in &self.tail {
                for t in cl.successors(s.0, c.world) {
                    let ns = (t, s.1 & !c.discharge);
                    if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(ns) {
                        e.insert(Some(s));
                        queue.push_back(ns);
                    }
                }
            }
        }
        Ok(None)
    }

    /// A cycle through `start` that discharges the open `U` formulas of its
    /// type and the pending items. Returns the cycle's types, `start` first.
    fn cycle_from(&self, start: Node2, failed: &mut HashSet<Type>) -> Result<Option<Vec<Type>>> {
        let cl = self.closure;
        let (ts, pend0) = start;
        // A type with no pending items that already failed cannot succeed.
        if pend0 == 0 && failed.contains(&ts) {
            return Ok(None);
        }
        type Key = (Type, u64, u128);
        let obl0 = cl.open_untils(ts);
        let k0: Key = (ts, pend0, obl0);
        let mut parent: HashMap<Key, Option<Key>> = HashMap::new();
        parent.insert(k0, None);
        let mut queue = VecDeque::from([k0]);
        while let Some(k) = queue.pop_front() {
            self.limit(parent.len())?;
            let (t, pend, obl) = k;
            if pend == 0 && obl == 0 && cl.t_compatible(t, ts) {
                let mut path = vec![t];
                let mut cur = k;
                while let Some(Some(p)) = parent.get(&cur) {
                    path.push(p.0);
                    cur = *p;
                }
                path.reverse();
                return Ok(Some(path));
            }
            for c in &self.tail {
                for t2 in cl.successors(t, c.world) {
                    let nk = (t2, pend & !c.discharge, obl & !cl.discharged_untils(t2));
                    if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(nk) {
                        e.insert(Some(k));
                        queue.push_back(nk);
                    }
                }
            }
        }
        if pend0 == 0 {
            failed.insert(ts);
        }
        Ok(None)
    }
}

/// Whether an LTL structure exists that uses only worlds from `worlds`,
/// starts with `prefix` and satisfies `phi` at the last prefix position.
pub fn restricted_sat(
    ltl: &Ltl,
    phi: F,
    worlds: &[World],
    prefix: &[World],
    m: u32,
) -> Result<Option<(Closure, Lasso)>> {
    if prefix.iter().any(|w| !worlds.contains(w)) {
        return Ok(None);
    }
    let cl = Closure::new(ltl, &[phi], m)?;
    let goal = cl.lit(ltl, phi);
    let lasso = {
        let mut search = LassoSearch::new(
            &cl,
            prefix.iter().map(|w| vec![Choice::plain(*w)]).collect(),
            worlds.iter().map(|w| Choice::plain(*w)).collect(),
        );
        search.goal = goal;
        search.find()?
    };
    Ok(lasso.map(|l| (cl, l)))
}

/// A separated formula split at its top-level temporal subformulas.
#[derive(Clone, Debug)]
pub struct Separated {
    /// The formula being decomposed.
    pub root: F,
    /// Top-level temporal formulas `f_1 … f_o`, followed by `p_0 … p_{m-1}`.
    pub leaves: Vec<F>,
    /// Number of propositions `m`.
    pub m: u32,
    /// `future[k]` / `past[k]`: leaf `k` belongs to the future / past set.
    pub future: Vec<bool>,
    pub past: Vec<bool>,
    /// Leaf assignments satisfying the Boolean abstraction.
    pub valuations: Vec<u64>,
}

/// Largest number of Boolean-abstraction leaves accepted.
pub const MAX_SEPARATION_LEAVES: usize = 20;

/// Decomposes a syntactically separated formula.
pub fn decompose_separated(ltl: &mut Ltl, root: F, m: u32) -> Result<Separated> {
    fn top(ltl: &Ltl, f: F, out: &mut Vec<F>) {
        match ltl.node(f) {
            Node::True | Node::Prop(_) => {}
            Node::Not(a) => top(ltl, a, out),
            Node::And(a, b) => {
                top(ltl, a, out);
                top(ltl, b, out);
            }
            _ => {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
    }
    let mut temporal = Vec::new();
    top(ltl, root, &mut temporal);
    let mut future = Vec::new();
    let mut past = Vec::new();
    for &f in &temporal {
        let (hf, hp) = (ltl.has_future(f), ltl.has_past(f));
        if hf && hp {
            return Err(Error::NotSeparated(ltl.show(f)));
        }
        future.push(hf);
        past.push(hp);
    }
    let mut leaves = temporal;
    for j in 0..m {
        leaves.push(ltl.prop(j));
        future.push(true);
        past.push(true);
    }
    if leaves.len() > MAX_SEPARATION_LEAVES {
        return Err(Error::ResourceLimit(format!(
            "{} top-level formulas in the Boolean abstraction",
            leaves.len()
        )));
    }
    let pos: HashMap<F, usize> = leaves.iter().enumerate().map(|(k, f)| (*f, k)).collect();
    fn eval(ltl: &Ltl, f: F, pos: &HashMap<F, usize>, v: u64) -> bool {
        if let Some(&k) = pos.get(&f) {
            return v >> k & 1 == 1;
        }
        match ltl.node(f) {
            Node::True => true,
            Node::Not(a) => !eval(ltl, a, pos, v),
            Node::And(a, b) => eval(ltl, a, pos, v) && eval(ltl, b, pos, v),
            _ => unreachable!("temporal leaf missing from the abstraction"),
        }
    }
    let valuations = (0..1u64 << leaves.len())
        .filter(|&v| eval(ltl, root, &pos, v))
        .collect();
    Ok(Separated {
        root,
        leaves,
        m,
        future,
        past,
        valuations,
    })
}

impl Separated {
    fn literals(&self, ltl: &mut Ltl, v: u64, future: bool) -> Vec<F> {
        let sel = if future { &self.future } else { &self.past };
        let mut out = Vec::new();
        for (k, &f) in self.leaves.iter().enumerate() {
            if sel[k] {
                out.push(if v >> k & 1 == 1 { f } else { ltl.not(f) });
            }
        }
        out
    }

    /// `𝓕^v`: future leaves and propositions with the polarity given by `v`.
    pub fn future_set(&self, ltl: &mut Ltl, v: u64) -> Vec<F> {
        self.literals(ltl, v, true)
    }

    /// `𝓟^v`: past leaves and propositions with the polarity given by `v`.
    pub fn past_set(&self, ltl: &mut Ltl, v: u64) -> Vec<F> {
        self.literals(ltl, v, false)
    }
}

/// Worlds of `worlds` that start a lasso over `worlds` satisfying `𝓕^v` at 0.
pub fn atmfut(ltl: &mut Ltl, worlds: &[World], v: u64, d: &Separated) -> Result<Vec<World>> {
    let fs = d.future_set(ltl, v);
    let goal_f = ltl.conj(&fs);
    let cl = Closure::new(ltl, &[goal_f], d.m)?;
    let goal = cl.lit(ltl, goal_f);
    let tail: Vec<Choice> = worlds.iter().map(|w| Choice::plain(*w)).collect();
    let mut out = Vec::new();
    for &w in worlds {
        let mut s = LassoSearch::new(&cl, vec![vec![Choice::plain(w)]], tail.clone());
        s.goal = goal;
        if s.find()?.is_some() {
            out.push(w);
        }
    }
    Ok(out)
}

/// Closure and goal literal for `⋀𝓟^v`, used by prefix searches.
pub fn past_goal(ltl: &mut Ltl, v: u64, d: &Separated) -> Result<(Closure, Option<Lit>)> {
    let ps = d.past_set(ltl, v);
    let goal_f = ltl.conj(&ps);
    let cl = Closure::new(ltl, &[goal_f], d.m)?;
    let goal = cl.lit(ltl, goal_f);
    Ok((cl, goal))
}

/// Whether types `T_0 … T_n` over the closure of `𝓟^v` exist with `T_0`
/// initial, consecutive types t-compatible, worlds matching `prefix` and
/// `𝓟^v ⊆ T_n`.
pub fn past_check(ltl: &mut Ltl, prefix: &[World], v: u64, d: &Separated) -> Result<bool> {
    if prefix.is_empty() {
        return Ok(false);
    }
    let (cl, goal) = past_goal(ltl, v, d)?;
    let mut s = LassoSearch::new(
        &cl,
        prefix.iter().map(|w| vec![Choice::plain(*w)]).collect(),
        Vec::new(),
    );
    s.goal = goal;
    Ok(!s.prefix_states()?.is_empty())
}
