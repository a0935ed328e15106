//! TCQ satisfiability and entailment by tuple enumeration and lasso search.
//!
//! The search enumerates the parts of a candidate r-complete tuple that
//! cannot be read off the input directly:
//!
//! * `Q_R`, the leaves that may hold somewhere;
//! * `B_Φ`, rigid concepts and relevant flexible existentials of the query
//!   individuals, drawn from an upper bound `U` computed once.
//!
//! The rigid ABox type `A_R` is the least fixpoint seeded with the rigid
//! part of `B_Φ` and `rigcons(Q_R)`. `R_F` collects the flexible
//! existentials of the input individuals entailed by `A_R ∪ A_i`, those of
//! the auxiliary names entailed by an instantiation in `Q_R`, and the
//! flexible part of `B_Φ`. For every `Q_Rn` the worlds passing the
//! per-time-point check become the choices of a [`LassoSearch`] whose
//! pending bits demand that each guessed `R_F` element is entailed at some
//! visited point.

use std::collections::{BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use crate::dllite::KbIndex;
use crate::error::{Error, Result};
use crate::ltl::{Choice, Closure, Lasso, LassoSearch, Lit};
use crate::model::{ABox, Assertion, BasicConcept, Tcq, Tkb, World};
use crate::rsat::{bits, FlexEx, Problem, Summary, Tuple};

/// Limits and parallelism of a solver run.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Worker threads for the tuple enumeration (1 = sequential).
    pub jobs: usize,
    /// State cap of each lasso search.
    pub state_cap: usize,
    /// Largest number of `(Q_R, B_Φ)` candidates explored.
    pub tuple_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            jobs: 1,
            state_cap: 2_000_000,
            tuple_cap: 1 << 20,
        }
    }
}

/// Evidence for a satisfiable instance.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// The r-complete tuple, with `R_F` over all flexible roles.
    pub tuple: Tuple,
    /// Worlds of the lasso positions; position `n` is the query's time point.
    pub worlds: Vec<World>,
    /// The lasso of LTL types over the closure of the abstraction.
    pub lasso: Lasso,
}

impl Certificate {
    /// The distinct worlds `W_1 … W_k` and `ι` for the positions `0 … n`,
    /// as accepted by [`Problem::is_r_complete`].
    pub fn world_set(&self, n: usize) -> (Vec<World>, Vec<usize>) {
        let mut ws: Vec<World> = Vec::new();
        for w in &self.worlds {
            if !ws.contains(w) {
                ws.push(*w);
            }
        }
        let iota = self.worlds[..=n]
            .iter()
            .map(|w| ws.iter().position(|x| x == w).unwrap())
            .collect();
        (ws, iota)
    }
}

/// Outcome of a satisfiability check.
#[derive(Clone, Debug)]
pub enum Verdict {
    Sat(Certificate),
    Unsat,
    /// A resource limit was hit; the answer is unknown.
    Unknown(String),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }

    /// `Some(true)` for SAT, `Some(false)` for UNSAT.
    pub fn decided(&self) -> Option<bool> {
        match self {
            Verdict::Sat(_) => Some(true),
            Verdict::Unsat => Some(false),
            Verdict::Unknown(_) => None,
        }
    }
}

/// Outcome of an entailment check.
#[derive(Clone, Debug)]
pub enum Entailment {
    Entailed,
    /// A model of the TKB violating the query at `n`.
    NotEntailed(Certificate),
    Unknown(String),
}

impl Entailment {
    pub fn decided(&self) -> Option<bool> {
        match self {
            Entailment::Entailed => Some(true),
            Entailment::NotEntailed(_) => Some(false),
            Entailment::Unknown(_) => None,
        }
    }
}

/// Whether `phi` is satisfiable with respect to `tkb` at time point `n`.
pub fn satisfiable(tkb: &Tkb, phi: &Tcq) -> Result<Verdict> {
    satisfiable_with(tkb, phi, &SolverOptions::default())
}

pub fn satisfiable_with(tkb: &Tkb, phi: &Tcq, opts: &SolverOptions) -> Result<Verdict> {
    let p = Problem::new(tkb, phi)?;
    Search::run(&p, false, opts)
}

/// Whether every model of `tkb` satisfies `phi` at `n`. The query's own
/// abstraction is searched with the negated goal, so no TCQ-level negation
/// takes place on this route.
pub fn entails(tkb: &Tkb, phi: &Tcq) -> Result<Entailment> {
    entails_with(tkb, phi, &SolverOptions::default())
}

pub fn entails_with(tkb: &Tkb, phi: &Tcq, opts: &SolverOptions) -> Result<Entailment> {
    let p = Problem::new(tkb, phi)?;
    Ok(match Search::run(&p, true, opts)? {
        Verdict::Sat(c) => Entailment::NotEntailed(c),
        Verdict::Unsat => Entailment::Entailed,
        Verdict::Unknown(s) => Entailment::Unknown(s),
    })
}

/// Solves an already built problem; `negated` searches for `¬pa(Φ)` at `n`.
pub fn solve_problem(p: &Problem, negated: bool, opts: &SolverOptions) -> Result<Verdict> {
    Search::run(p, negated, opts)
}

struct Search<'p> {
    p: &'p Problem,
    cl: Closure,
    goal: Option<Lit>,
    opts: SolverOptions,
    /// Relevant flexible existentials over `N_I(K) ∪ N_I^aux`.
    universe: Vec<FlexEx>,
    /// Upper bound on `B_Φ`.
    upper: Vec<Assertion>,
    m: usize,
    n: usize,
}

/// Per-candidate data shared by all `Q_Rn`.
struct Candidate {
    tuple: Tuple,
    /// `R_F` elements that must be entailed at some visited point.
    pending: Vec<FlexEx>,
    /// Summaries per world (indexed by `World.0`) and position; position
    /// `n + 1` stands for the empty ABox.
    summaries: HashMap<(u64, usize), Summary>,
}

impl<'p> Search<'p> {
    fn run(p: &'p Problem, negated: bool, opts: &SolverOptions) -> Result<Verdict> {
        if p.aboxes.is_empty() {
            return Err(Error::EmptySequence);
        }
        let m = p.m();
        let cl = Closure::new(&p.ltl, &[p.root], m as u32)?;
        let goal = cl.lit(&p.ltl, p.root).map(|l| Lit {
            idx: l.idx,
            neg: l.neg != negated,
        });
        let roots = p.roots();
        let universe: Vec<FlexEx> = p
            .relevant
            .iter()
            .flat_map(|&s| roots.iter().map(move |&b| (s, b)))
            .collect();
        let mut search = Search {
            p,
            cl,
            goal,
            opts: *opts,
            universe,
            upper: Vec::new(),
            m,
            n: p.n(),
        };
        search.upper = p.bphi_upper_bound();
        match search.explore() {
            Ok(Some(c)) => Ok(Verdict::Sat(c)),
            Ok(None) => Ok(Verdict::Unsat),
            Err(Error::ResourceLimit(s)) => Ok(Verdict::Unknown(s)),
            Err(e) => Err(e),
        }
    }

    /// Candidates `(Q_R, B_Φ)` in order of increasing size.
    fn candidates(&self) -> Result<Vec<(u64, u64)>> {
        let p = self.p;
        let u = self.upper.len();
        if u >= 40 {
            return Err(Error::ResourceLimit(format!("{u} candidate query-individual facts")));
        }
        let ok_mask: u64 = (0..self.m).filter(|&j| p.inst_ok[j]).map(|j| 1u64 << j).sum();
        let mut q_rs: Vec<u64> = (0..1u64 << self.m).filter(|q| q & !ok_mask == 0).collect();
        q_rs.sort_by_key(|q| q.count_ones());
        let total = q_rs.len() as u128 * (1u128 << u);
        if total > self.opts.tuple_cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "{total} tuple candidates exceed the cap of {}",
                self.opts.tuple_cap
            )));
        }
        let mut bphis: Vec<u64> = (0..1u64 << u).collect();
        bphis.sort_by_key(|b| b.count_ones());
        let mut out = Vec::new();
        for &q in &q_rs {
            for &b in &bphis {
                out.push((q, b));
            }
        }
        Ok(out)
    }

    fn explore(&self) -> Result<Option<Certificate>> {
        let cands = self.candidates()?;
        // Distinct candidates can produce the same tuple; skip repeats.
        let seen: std::sync::Mutex<HashSet<(u64, ABox, BTreeSet<FlexEx>)>> =
            std::sync::Mutex::new(HashSet::new());
        let try_one = |&(q_r, bphi): &(u64, u64)| -> Option<Result<Certificate>> {
            let cand = self.candidate(q_r, bphi)?;
            {
                let key = (q_r, cand.tuple.a_r.clone(), cand.tuple.r_f.clone());
                if !seen.lock().unwrap().insert(key) {
                    return None;
                }
            }
            match self.search_candidate(cand) {
                Ok(Some(c)) => Some(Ok(c)),
                Ok(None) => None,
                Err(e) => Some(Err(e)),
            }
        };
        let found = if self.opts.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.opts.jobs)
                .build()
                .map_err(|e| Error::ResourceLimit(e.to_string()))?;
            pool.install(|| cands.par_iter().find_map_first(try_one))
        } else {
            cands.iter().find_map(try_one)
        };
        found.transpose()
    }

    /// Builds the tuple skeleton of a candidate; `None` if it cannot work.
    fn candidate(&self, q_r: u64, bphi: u64) -> Option<Candidate> {
        let p = self.p;
        let chosen: Vec<Assertion> = bits(bphi).map(|k| self.upper[k]).collect();
        let rigcons = p.rigcons(q_r);
        let mut seed: ABox = rigcons.clone();
        seed.extend(chosen.iter().copied().filter(|a| p.sig.is_rigid_assertion(a)));
        let (a_r, pos, _) = p.rigid_fixpoint(&seed);
        let mut r_f: BTreeSet<FlexEx> = BTreeSet::new();
        let mut pending: Vec<FlexEx> = Vec::new();
        for i in 0..=self.n {
            let mut abox = pos.clone();
            abox.extend(p.abox_at(i));
            let kb = KbIndex::new(&p.tb, &abox);
            for &b in &p.nik {
                if p.niphi.contains(&b) {
                    continue;
                }
                for &s in &p.relevant {
                    if kb.has_concept(b, BasicConcept::Exists(s)) {
                        r_f.insert((s, b));
                    }
                }
            }
        }
        for j in bits(q_r) {
            let mut abox = rigcons.clone();
            abox.extend(p.inst[j].iter().copied());
            let kb = KbIndex::new(&p.tb, &abox);
            for &x in &p.aux[j] {
                for &s in &p.relevant {
                    if kb.has_concept(x, BasicConcept::Exists(s)) && r_f.insert((s, x)) {
                        pending.push((s, x));
                    }
                }
            }
        }
        for a in &chosen {
            if let crate::model::AssertionBody::Concept(BasicConcept::Exists(s), x) = a.body {
                if !p.sig.is_rigid_assertion(a) && r_f.insert((s, x)) {
                    pending.push((s, x));
                }
            }
        }
        if pending.len() > 64 {
            return None;
        }
        Some(Candidate {
            tuple: Tuple {
                a_r,
                q_r,
                q_rn: 0,
                r_f,
            },
            pending,
            summaries: HashMap::new(),
        })
    }

    fn search_candidate(&self, mut cand: Candidate) -> Result<Option<Certificate>> {
        let p = self.p;
        let m = self.m;
        let q_r = cand.tuple.q_r;
        let mut base = cand.tuple.a_r.clone();
        base.extend(p.rigcons(q_r));
        let arf = p.build_arf(&cand.tuple.r_f);
        // Summaries for worlds within Q_R.
        let worlds: Vec<World> = World::all(m).filter(|w| w.0 & !q_r == 0).collect();
        let bot = self.n + 1;
        for &w in &worlds {
            let sb = p.summarize(&base, &arf, w, bot, &self.universe, false);
            let ok_bot = sb.consistent && sb.flex.is_subset(&cand.tuple.r_f);
            cand.summaries.insert((w.0, bot), sb);
            if !ok_bot {
                continue;
            }
            for i in 0..=self.n {
                let s = p.summarize(&base, &arf, w, i, &self.universe, false);
                cand.summaries.insert((w.0, i), s);
            }
        }
        let full = (1u64 << m) - 1;
        let pending_all: u64 = match cand.pending.len() {
            64 => u64::MAX,
            k => (1u64 << k) - 1,
        };
        let discharge = |s: &Summary| -> u64 {
            cand.pending
                .iter()
                .enumerate()
                .filter(|(_, e)| s.flex.contains(e))
                .map(|(k, _)| 1u64 << k)
                .sum()
        };
        let allowed = |w: World, i: usize, q_rn: u64| -> Option<&Summary> {
            let s = cand.summaries.get(&(w.0, i))?;
            let neg = full & !w.0;
            (s.consistent
                && s.flex.is_subset(&cand.tuple.r_f)
                && s.entailed_negatives == 0
                && neg & !q_rn == 0
                && s.witnessed & q_rn == 0)
                .then_some(s)
        };
        let mut q_rns: Vec<u64> = (0..=full).collect();
        q_rns.sort_by_key(|q| q.count_ones());
        for q_rn in q_rns {
            let tail: Vec<Choice> = worlds
                .iter()
                .filter_map(|&w| {
                    allowed(w, bot, q_rn).map(|s| Choice {
                        world: w,
                        discharge: discharge(s),
                    })
                })
                .collect();
            if tail.is_empty() {
                continue;
            }
            let tail_worlds: HashSet<u64> = tail.iter().map(|c| c.world.0).collect();
            let mut prefix: Vec<Vec<Choice>> = Vec::new();
            for i in 0..=self.n {
                let cs: Vec<Choice> = worlds
                    .iter()
                    .filter(|w| tail_worlds.contains(&w.0))
                    .filter_map(|&w| {
                        allowed(w, i, q_rn).map(|s| Choice {
                            world: w,
                            discharge: discharge(s),
                        })
                    })
                    .collect();
                if cs.is_empty() {
                    break;
                }
                prefix.push(cs);
            }
            if prefix.len() <= self.n {
                continue;
            }
            let mut ls = LassoSearch::new(&self.cl, prefix, tail);
            ls.goal = self.goal;
            ls.pending = pending_all;
            ls.state_cap = self.opts.state_cap;
            if let Some(lasso) = ls.find()? {
                let worlds = lasso.worlds(&self.cl);
                let tuple = self.certificate_tuple(&cand.tuple, q_rn, &worlds);
                return Ok(Some(Certificate {
                    tuple,
                    worlds,
                    lasso,
                }));
            }
        }
        Ok(None)
    }

    /// The tuple reported for a lasso: `R_F` over all flexible roles, as
    /// entailed at the visited points.
    fn certificate_tuple(&self, t: &Tuple, q_rn: u64, worlds: &[World]) -> Tuple {
        let p = self.p;
        let mut base = t.a_r.clone();
        base.extend(p.rigcons(t.q_r));
        let universe = p.flex_universe();
        let mut r_f = BTreeSet::new();
        for (k, &w) in worlds.iter().enumerate() {
            let i = k.min(self.n + 1);
            let s = p.summarize(&base, &ABox::new(), w, i, &universe, false);
            r_f.extend(s.flex);
        }
        Tuple {
            a_r: t.a_r.clone(),
            q_r: t.q_r,
            q_rn,
            r_f,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_instance;

    const S34_ONTO: &str = "concept A\nconcept B\nrole S\nrigid role R\nrigid role T\nA <= exists S\nS < R\nS < T\n";
    const S34_ABOX: &str = "@0:\n@1:\nB(a)\n";
    const S34_Q: &str = "(Y A(a)) & !(EX x . B(a) & R(a,x) & T(a,x))";

    fn sat(onto: &str, abox: &str, q: &str) -> Verdict {
        let (tkb, phi) = parse_instance(onto, abox, q).unwrap();
        satisfiable(&tkb, &phi).unwrap()
    }

    #[test]
    fn s34_rigid_is_unsat() {
        assert!(sat(S34_ONTO, S34_ABOX, S34_Q).is_unsat());
    }

    #[test]
    fn s34_flexible_is_sat() {
        let onto = S34_ONTO.replace("rigid role", "role");
        assert!(sat(&onto, S34_ABOX, S34_Q).is_sat());
    }

    #[test]
    fn contradiction_is_unsat() {
        assert!(sat("concept A\n", "@0:\n", "A(a) & !A(a)").is_unsat());
    }

    #[test]
    fn entailment_through_inclusion() {
        let (tkb, phi) = parse_instance("concept A\nconcept B\nB <= A\n", "@0:\nB(a)\n", "A(a)").unwrap();
        assert_eq!(entails(&tkb, &phi).unwrap().decided(), Some(true));
        let (tkb, phi) = parse_instance("concept A\nconcept B\n", "@0:\nB(a)\n", "A(a)").unwrap();
        assert_eq!(entails(&tkb, &phi).unwrap().decided(), Some(false));
    }

    #[test]
    fn false_is_not_entailed_by_consistent_tkb() {
        let (tkb, phi) = parse_instance("concept A\n", "@0:\nA(a)\n", "false").unwrap();
        assert_eq!(entails(&tkb, &phi).unwrap().decided(), Some(false));
    }

    #[test]
    fn certificate_replays() {
        let onto = S34_ONTO.replace("rigid role", "role");
        let (tkb, phi) = parse_instance(&onto, S34_ABOX, S34_Q).unwrap();
        let Verdict::Sat(c) = satisfiable(&tkb, &phi).unwrap() else {
            panic!("expected SAT")
        };
        let p = Problem::new(&tkb, &phi).unwrap();
        let (ws, iota) = c.world_set(p.n());
        assert!(p.is_r_complete(&c.tuple, &ws, &iota));
    }
}
