//! TCQ satisfiability by evaluating first-order rewritings over the
//! temporal database, for queries whose propositional abstraction is
//! separated (no past operator below a future one and vice versa).
//!
//! The abstraction is split at its top-level temporal subformulas; each
//! satisfying valuation `v` of the Boolean skeleton yields a past part
//! `𝓟^v`, checked on the prefix `0 … n`, and a future part `𝓕^v`, checked on
//! a lasso starting at `n` whose worlds come from a set `𝒲`.
//!
//! For every choice of `Q_R'` (leaves true in some world) and `B_Φ` a
//! [`Skeleton`] is built, and for each world `W ⊆ Q_R'` and time point
//! `τ ∈ [-1, n]` the formulas below are evaluated over the database:
//!
//! * G: `⟨O, A_KR'(W) ∪ A_τ⟩` is consistent and entails no leaf outside `W`;
//! * H: the leaves with an entailed rigid witness;
//! * E: the flexible existentials `∃S(a)`, `a ∈ N_I(Φ)`, that are entailed.
//!
//! The instance is satisfiable iff for some skeleton there are `𝒲` with
//! `⋃𝒲 = Q_R'`, a valuation `v` and worlds `w_0 … w_n ∈ 𝒲` such that
//!
//! * K1: every `W ∈ 𝒲` satisfies G at `-1` and every `w_i` satisfies G at `i`;
//! * K2: no world has an H-leaf in `Q_Rn'`, the union of the complements of
//!   the worlds of `𝒲` (at `-1` and at its prefix positions);
//! * K3: the past part holds on `w_0 … w_n`, and `w_n` starts a lasso over
//!   `𝒲` satisfying the future part;
//! * K4: the E-sets of all `W ∈ 𝒲` at `-1` and of `w_i` at `i` together are
//!   exactly the flexible part of `B_Φ`.
//!
//! Entailment is checked as unsatisfiability of the negated abstraction.

pub mod build;
pub mod fo;

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ltl::{atmfut, decompose_separated, past_goal, Closure, Lit, Ltl, Separated, Type};
use crate::model::{ABox, Assertion, Tcq, Tkb, World};
use crate::rsat::{bits, FlexEx, Problem};

pub use build::{
    ars_materialize, pref, tdb_atom, ucq_formula, Materialized, OAtom, Pred, Rewriter, Rewritings,
    Skeleton, VarGen, TAU,
};
pub use fo::{build_tdb, eval_fo, Evaluator, Fo, FoDef, Grounding, OTerm, Printer, TTerm, Tdb};

/// Search limits.
#[derive(Clone, Copy, Debug)]
pub struct RewriteOptions {
    /// Largest number of `(Q_R', B_Φ)` candidates.
    pub tuple_cap: usize,
    /// Largest number of worlds `W ⊆ Q_R'` evaluated per skeleton.
    pub world_cap: usize,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            tuple_cap: 1 << 20,
            world_cap: 256,
        }
    }
}

/// An accepting choice.
#[derive(Clone, Debug)]
pub struct RewriteWitness {
    pub skeleton: Skeleton,
    /// `𝒲`.
    pub worlds: Vec<World>,
    /// `Q_Rn'`.
    pub q_rn: u64,
    /// Valuation of the separated abstraction.
    pub valuation: u64,
    /// `w_0 … w_n`.
    pub sequence: Vec<World>,
}

/// Outcome of a satisfiability check by rewriting.
#[derive(Clone, Debug)]
pub enum Outcome {
    Sat(Box<RewriteWitness>),
    Unsat,
    Unknown(String),
}

impl Outcome {
    pub fn decided(&self) -> Option<bool> {
        match self {
            Outcome::Sat(_) => Some(true),
            Outcome::Unsat => Some(false),
            Outcome::Unknown(_) => None,
        }
    }
}

/// Whether `phi` is satisfiable with respect to `tkb` at `n`.
pub fn satisfiable(tkb: &Tkb, phi: &Tcq) -> Result<Outcome> {
    satisfiable_with(tkb, phi, &RewriteOptions::default())
}

pub fn satisfiable_with(tkb: &Tkb, phi: &Tcq, opts: &RewriteOptions) -> Result<Outcome> {
    let p = Problem::new(tkb, phi)?;
    solve_problem(&p, false, opts)
}

/// Whether `phi` is entailed: `Some(true)` if the negation is unsatisfiable.
/// The witness of a non-entailment is returned alongside.
pub fn entails(tkb: &Tkb, phi: &Tcq) -> Result<(Option<bool>, Option<Box<RewriteWitness>>)> {
    let p = Problem::new(tkb, phi)?;
    Ok(match solve_problem(&p, true, &RewriteOptions::default())? {
        Outcome::Sat(w) => (Some(false), Some(w)),
        Outcome::Unsat => (Some(true), None),
        Outcome::Unknown(_) => (None, None),
    })
}

/// Decides a built problem; `negated` looks for a model of `¬Φ` at `n`.
pub fn solve_problem(p: &Problem, negated: bool, opts: &RewriteOptions) -> Result<Outcome> {
    if p.aboxes.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut ltl = p.ltl.clone();
    let root = if negated { ltl.not(p.root) } else { p.root };
    let sep = decompose_separated(&mut ltl, root, p.m() as u32)?;
    let mut search = Search {
        p,
        refs: Rewritings::new(p)?,
        tdb: build_tdb(&p.aboxes, p.nik.iter().copied()),
        ltl,
        sep,
        opts: *opts,
        past: HashMap::new(),
        fut: HashMap::new(),
    };
    match search.run() {
        Ok(Some(w)) => Ok(Outcome::Sat(Box::new(w))),
        Ok(None) => Ok(Outcome::Unsat),
        Err(Error::ResourceLimit(s)) => Ok(Outcome::Unknown(s)),
        Err(e) => Err(e),
    }
}

/// A decision together with its rewritings in S-expression form: the
/// atemporal rewriting of every leaf, and for a satisfiable instance the
/// definitions and the G formula of every world of the accepting choice.
pub fn render(tkb: &Tkb, phi: &Tcq, negated: bool) -> Result<(Outcome, String)> {
    let p = Problem::new(tkb, phi)?;
    let outcome = solve_problem(&p, negated, &RewriteOptions::default())?;
    let name = |a| p.names.show(&p.sig, a);
    let tau = TTerm::Var(TAU);
    let mut out = String::new();
    for (j, leaf) in p.leaves.iter().enumerate() {
        let mut gen = VarGen::default();
        gen.fresh();
        let f = pref(&p.tb, leaf, &[], tau, &mut gen)?;
        let printer = Printer { sig: &p.sig, name: &name, defs: &[] };
        out += &format!("(define (p{} t{TAU}) {})\n", j + 1, printer.formula(&f));
    }
    if let Outcome::Sat(w) = &outcome {
        let refs = Rewritings::new(&p)?;
        let mut rw = Rewriter::new(&p, &refs, &w.skeleton);
        let forms: Vec<(World, Fo)> = w.worlds.iter().map(|&x| (x, rw.f_sat(x, w.q_rn, tau))).collect();
        let printer = Printer { sig: &p.sig, name: &name, defs: &rw.defs };
        out += &printer.definitions();
        for (x, f) in forms {
            let label: String = (0..p.m()).filter(|&j| x.contains(j)).map(|j| format!("_p{}", j + 1)).collect();
            out += &format!("(define (g{label} t{TAU}) {})\n", printer.formula(&f));
        }
    }
    Ok((outcome, out))
}

/// Values of G, H and E for one world at every time point; index `0` is
/// time point `-1`.
#[derive(Clone, Debug)]
pub struct WorldTable {
    pub g: Vec<bool>,
    pub h: Vec<u64>,
    pub e: Vec<u64>,
}

/// Evaluates G, H and E for every world `W ⊆ Q_R'` of a skeleton.
pub fn world_tables(
    p: &Problem,
    refs: &Rewritings,
    tdb: &Tdb,
    sk: &Skeleton,
) -> Result<Vec<(World, WorldTable)>> {
    let mut rw = Rewriter::new(p, refs, sk);
    let tau = TTerm::Var(TAU);
    let worlds: Vec<World> = World::all(p.m()).filter(|w| w.0 & !sk.q_r == 0).collect();
    let mut forms = Vec::new();
    for &w in &worlds {
        let g = rw.f_sat(w, 0, tau);
        let h: Vec<Fo> = (0..p.m()).map(|j| rw.rep(&refs.witnesses[j], w, tau)).collect();
        let e: Vec<Fo> = refs.flex_ucq.iter().map(|u| rw.rep(u, w, tau)).collect();
        forms.push((w, g, h, e));
    }
    let mut ev = Evaluator::new(tdb, &rw.defs);
    let mut out = Vec::new();
    for (w, g, h, e) in forms {
        let mut t = WorldTable {
            g: Vec::new(),
            h: Vec::new(),
            e: Vec::new(),
        };
        for i in tdb.time_points() {
            let env = Grounding::new().time(TAU, i);
            t.g.push(ev.eval(&g, &env)?);
            let mut hm = 0u64;
            for (j, f) in h.iter().enumerate() {
                if ev.eval(f, &env)? {
                    hm |= 1 << j;
                }
            }
            let mut em = 0u64;
            for (k, f) in e.iter().enumerate() {
                if ev.eval(f, &env)? {
                    em |= 1 << k;
                }
            }
            t.h.push(hm);
            t.e.push(em);
        }
        out.push((w, t));
    }
    Ok(out)
}

struct Search<'p> {
    p: &'p Problem,
    refs: Rewritings,
    tdb: Tdb,
    ltl: Ltl,
    sep: Separated,
    opts: RewriteOptions,
    past: HashMap<u64, (Closure, Option<Lit>)>,
    fut: HashMap<(Vec<u64>, u64), Vec<World>>,
}

impl Search<'_> {
    fn run(&mut self) -> Result<Option<RewriteWitness>> {
        let p = self.p;
        if self.refs.flex_targets.len() > 64 {
            return Err(Error::ResourceLimit(format!(
                "{} flexible existentials of query individuals",
                self.refs.flex_targets.len()
            )));
        }
        let upper = p.bphi_upper_bound();
        let u = upper.len();
        if u >= 40 {
            return Err(Error::ResourceLimit(format!("{u} candidate query-individual facts")));
        }
        let ok_mask: u64 = (0..p.m()).filter(|&j| p.inst_ok[j]).map(|j| 1u64 << j).sum();
        let mut q_rs: Vec<u64> = (0..1u64 << p.m()).filter(|q| q & !ok_mask == 0).collect();
        q_rs.sort_by_key(|q| q.count_ones());
        let total = q_rs.len() as u128 * (1u128 << u);
        if total > self.opts.tuple_cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "{total} skeleton candidates exceed the cap of {}",
                self.opts.tuple_cap
            )));
        }
        let mut bphis: Vec<u64> = (0..1u64 << u).collect();
        bphis.sort_by_key(|b| b.count_ones());
        let mut seen: HashSet<(u64, ABox, BTreeSet<FlexEx>)> = HashSet::new();
        for &q_r in &q_rs {
            for &b in &bphis {
                let chosen: Vec<Assertion> = bits(b).map(|k| upper[k]).collect();
                let Some(sk) = Skeleton::new(p, q_r, chosen) else { continue };
                if !seen.insert((q_r, sk.mat.pos.clone(), sk.rf_phi.clone())) {
                    continue;
                }
                if let Some(w) = self.check(sk)? {
                    return Ok(Some(w));
                }
            }
        }
        Ok(None)
    }

    fn check(&mut self, sk: Skeleton) -> Result<Option<RewriteWitness>> {
        let p = self.p;
        let n = p.n();
        let full = (1u64 << p.m()) - 1;
        let flexb: u64 = self
            .refs
            .flex_targets
            .iter()
            .enumerate()
            .filter(|(_, e)| sk.rf_phi.contains(e))
            .map(|(k, _)| 1u64 << k)
            .sum();
        let worlds_total = 1usize << sk.q_r.count_ones();
        if worlds_total > self.opts.world_cap {
            return Err(Error::ResourceLimit(format!(
                "{worlds_total} worlds below Q_R' exceed the cap of {}",
                self.opts.world_cap
            )));
        }
        let tables = world_tables(p, &self.refs, &self.tdb, &sk)?;
        let admissible: Vec<&(World, WorldTable)> = tables
            .iter()
            .filter(|(_, t)| t.g[0] && t.e[0] & !flexb == 0)
            .collect();
        // For a fixed Q_Rn' every condition only gets weaker as 𝒲 grows, so
        // the largest 𝒲 compatible with Q_Rn' is the only one to try.
        for q_rn in 0..=full {
            let chosen: Vec<&(World, WorldTable)> = admissible
                .iter()
                .copied()
                .filter(|(w, t)| full & !w.0 & !q_rn == 0 && t.h[0] & q_rn == 0)
                .collect();
            let union = chosen.iter().fold(0, |acc, (w, _)| acc | w.0);
            let complements = chosen.iter().fold(0, |acc, (w, _)| acc | (full & !w.0));
            if chosen.is_empty() || union != sk.q_r || complements != q_rn {
                continue;
            }
            let e_post = chosen.iter().fold(0, |acc, (_, t)| acc | t.e[0]);
            // ok[k][i]: world k may sit at position i.
            let ok: Vec<Vec<bool>> = chosen
                .iter()
                .map(|(_, t)| {
                    (0..=n)
                        .map(|i| t.g[i + 1] && t.h[i + 1] & q_rn == 0 && t.e[i + 1] & !flexb == 0)
                        .collect()
                })
                .collect();
            let worlds: Vec<World> = chosen.iter().map(|(w, _)| *w).collect();
            let es: Vec<Vec<u64>> = chosen.iter().map(|(_, t)| t.e[1..].to_vec()).collect();
            if let Some((v, seq)) = self.sequence(&worlds, &ok, &es, e_post, flexb)? {
                return Ok(Some(RewriteWitness {
                    skeleton: sk,
                    worlds,
                    q_rn,
                    valuation: v,
                    sequence: seq,
                }));
            }
        }
        Ok(None)
    }

    /// A valuation and a sequence `w_0 … w_n` meeting K1, K3 and K4.
    fn sequence(
        &mut self,
        worlds: &[World],
        ok: &[Vec<bool>],
        es: &[Vec<u64>],
        e_post: u64,
        flexb: u64,
    ) -> Result<Option<(u64, Vec<World>)>> {
        let n = self.p.n();
        let key: Vec<u64> = worlds.iter().map(|w| w.0).collect();
        for v in self.sep.valuations.clone() {
            if !self.fut.contains_key(&(key.clone(), v)) {
                let f = atmfut(&mut self.ltl, worlds, v, &self.sep)?;
                self.fut.insert((key.clone(), v), f);
            }
            let fut = &self.fut[&(key.clone(), v)];
            if fut.is_empty() {
                continue;
            }
            if !self.past.contains_key(&v) {
                let pg = past_goal(&mut self.ltl, v, &self.sep)?;
                self.past.insert(v, pg);
            }
            let (cl, goal) = &self.past[&v];
            let dfs = Dfs {
                cl,
                goal: *goal,
                worlds,
                ok,
                es,
                e_post,
                flexb,
                fut,
                n,
            };
            let mut visited = HashSet::new();
            let mut path = Vec::new();
            for (k, &w) in worlds.iter().enumerate() {
                if !ok[k][0] {
                    continue;
                }
                for t in cl.initial_types(w) {
                    path.push(w);
                    if dfs.go(0, t, es[k][0], &mut visited, &mut path) {
                        return Ok(Some((v, path)));
                    }
                    path.pop();
                }
            }
        }
        Ok(None)
    }
}

struct Dfs<'a> {
    cl: &'a Closure,
    goal: Option<Lit>,
    worlds: &'a [World],
    ok: &'a [Vec<bool>],
    es: &'a [Vec<u64>],
    e_post: u64,
    flexb: u64,
    fut: &'a [World],
    n: usize,
}

impl Dfs<'_> {
    fn go(&self, i: usize, t: Type, acc: u64, visited: &mut HashSet<(usize, Type, u64)>, path: &mut Vec<World>) -> bool {
        if !visited.insert((i, t, acc)) {
            return false;
        }
        if i == self.n {
            return self.fut.contains(&self.cl.world(t))
                && self.goal.is_none_or(|g| self.cl.holds(t, g))
                && acc | self.e_post == self.flexb;
        }
        for (k, &w) in self.worlds.iter().enumerate() {
            if !self.ok[k][i + 1] {
                continue;
            }
            for t2 in self.cl.successors(t, w) {
                path.push(w);
                if self.go(i + 1, t2, acc | self.es[k][i + 1], visited, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_instance;

    const S34_ONTO: &str = "concept A\nconcept B\nrole S\nrigid role R\nrigid role T\nA <= exists S\nS < R\nS < T\n";
    const S34_ABOX: &str = "@0:\n@1:\nB(a)\n";
    const S34_Q: &str = "(Y A(a)) & !(EX x . B(a) & R(a,x) & T(a,x))";

    fn sat(onto: &str, abox: &str, q: &str) -> Option<bool> {
        let (tkb, phi) = parse_instance(onto, abox, q).unwrap();
        satisfiable(&tkb, &phi).unwrap().decided()
    }

    #[test]
    fn s34_rigid_is_unsat() {
        assert_eq!(sat(S34_ONTO, S34_ABOX, S34_Q), Some(false));
    }

    #[test]
    fn s34_flexible_is_sat() {
        let onto = S34_ONTO.replace("rigid role", "role");
        assert_eq!(sat(&onto, S34_ABOX, S34_Q), Some(true));
    }

    #[test]
    fn contradiction_is_unsat() {
        assert_eq!(sat("concept A\n", "@0:\n", "A(a) & !A(a)"), Some(false));
    }

    #[test]
    fn entailment_through_inclusion() {
        let (tkb, phi) = parse_instance("concept A\nconcept B\nB <= A\n", "@0:\nB(a)\n", "A(a)").unwrap();
        assert_eq!(entails(&tkb, &phi).unwrap().0, Some(true));
        let (tkb, phi) = parse_instance("concept A\nconcept B\n", "@0:\nB(a)\n", "A(a)").unwrap();
        assert_eq!(entails(&tkb, &phi).unwrap().0, Some(false));
    }

    #[test]
    fn non_separated_query_is_rejected() {
        let (tkb, phi) = parse_instance("concept A\n", "@0:\n", "F (Y A(a))").unwrap();
        assert!(matches!(satisfiable(&tkb, &phi), Err(Error::NotSeparated(_))));
    }

    #[test]
    fn rigid_concept_persists_into_the_past() {
        // A is rigid, so A(a) at 1 forces A(a) at 0.
        let onto = "rigid concept A\n";
        assert_eq!(sat(onto, "@0:\n@1:\nA(a)\n", "Y !A(a)"), Some(false));
        assert_eq!(sat("concept A\n", "@0:\n@1:\nA(a)\n", "Y !A(a)"), Some(true));
    }
}
