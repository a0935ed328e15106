//! The acceptance criteria as reusable checks. Each returns a one-line
//! summary on success and a description of the first disagreement
//! otherwise, so that the acceptance target can report every criterion and
//! the focused test files can run the same logic on their own.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use tcq_core::boolkrom::{complement_axioms, Fresh, Row};
use tcq_core::dllite::{self, canonical_model, eval_ucq, perfect_ref, q_unsat, KbIndex, Tbox};
use tcq_core::model::{
    ABox, Assertion, Atom, BasicConcept, ConceptName, Cq, Individual, RoleName, Term, Tkb, Var,
    World,
};
use tcq_core::oracle::{
    self, bounded_tcq_sat, eval_tcq_on_lasso, interp_satisfies, interp_satisfies_ci, OracleResult,
};
use tcq_core::rewrite::{
    self, ars_materialize, build_tdb, pref, Evaluator, Fo, Grounding, OTerm, Pred, Rewriter,
    Rewritings, Skeleton, TTerm, VarGen, TAU,
};
use tcq_core::rsat::{Problem, Tuple};
use tcq_core::solver;

use super::{rng, Limits};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

/// Number of random instances, overridable through `SEEDS`.
pub fn seeds(default: u64) -> u64 {
    std::env::var("SEEDS").ok().and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Criterion 1: the rigid fixture is unsatisfiable, the flexible one is
/// satisfiable with a two-element model, both engines agree and each
/// decides within two seconds.
pub fn fixture_s34() -> Outcome {
    let budget = Duration::from_secs(2);
    let mut report = Vec::new();
    for (onto, want) in [("s34.onto", false), ("s34_flexible.onto", true)] {
        let (tkb, phi) = tcq_core::syntax::parse_instance(&fixture(onto), &fixture("s34.tkb"), &fixture("s34.tcq"))
            .map_err(|e| format!("{onto}: {e}"))?;
        let (a, ta) = timed(|| solver::satisfiable(&tkb, &phi).map(|v| v.decided()));
        let (b, tb) = timed(|| rewrite::satisfiable(&tkb, &phi).map(|v| v.decided()));
        let a = a.map_err(|e| e.to_string())?;
        let b = b.map_err(|e| e.to_string())?;
        ensure!(a == Some(want), "{onto}: solver says {a:?}, expected {want}");
        ensure!(b == Some(want), "{onto}: rewriting says {b:?}, expected {want}");
        ensure!(ta < budget && tb < budget, "{onto}: solver {ta:?}, rewriting {tb:?}");
        let found = bounded_tcq_sat(&phi, &tkb, 2, tkb.n() + 1, 2).map_err(|e| e.to_string())?;
        if let OracleResult::Found(l) = &found {
            ensure!(l.domain <= 2, "{onto}: oracle domain {}", l.domain);
            ensure!(l.respects_rigid(&tkb.signature), "{onto}: oracle model breaks rigidity");
            ensure!(eval_tcq_on_lasso(l, &phi, tkb.n()), "{onto}: oracle model does not satisfy the query");
        }
        ensure!(found.is_found() == want, "{onto}: oracle found = {}", found.is_found());
        report.push(format!("{onto} {} ({ta:.0?}/{tb:.0?})", if want { "SAT" } else { "UNSAT" }));
    }
    Ok(report.join(", "))
}

/// Criterion 2: entailment is the dual of satisfiability of the negation.
/// The rewriting engine is held to the same law where it applies.
pub fn duality(count: u64) -> Outcome {
    let lim = Limits::default();
    let (mut entailed, mut separated) = (0, 0);
    for seed in 0..count {
        let mut r = rng(30_000 + seed);
        let tkb = super::tkb(&mut r, &lim);
        let phi = if r.gen_bool(0.5) {
            super::separated_tcq(&mut r, &tkb.signature, &lim)
        } else {
            super::tcq(&mut r, &tkb.signature, &lim)
        };
        let neg = tcq_core::model::Tcq::not(phi.clone());
        let e = solver::entails(&tkb, &phi).map_err(|e| format!("seed {seed}: {e}"))?.decided();
        let s = solver::satisfiable(&tkb, &neg).map_err(|e| format!("seed {seed}: {e}"))?.decided();
        ensure!(e.is_some() && s.is_some(), "seed {seed}: undecided ({e:?}, {s:?})");
        ensure!(e == s.map(|x| !x), "seed {seed}: entails {e:?} but sat(not) {s:?}\n{tkb:?}\n{phi:?}");
        entailed += (e == Some(true)) as usize;
        if let Ok((re, _)) = rewrite::entails(&tkb, &phi) {
            let rs = rewrite::satisfiable(&tkb, &neg).map_err(|e| format!("seed {seed}: {e}"))?.decided();
            ensure!(re == e && rs == s, "seed {seed}: rewriting gives {re:?}/{rs:?}, solver {e:?}/{s:?}");
            separated += 1;
        }
    }
    ensure!(count >= 200, "only {count} instances");
    Ok(format!("{count} instances, {entailed} entailed, {separated} also through the rewriting"))
}

/// Criterion 3: CQ entailment, evaluation of the perfect reformulation and
/// the naive chase agree.
pub fn cq_triangle(count: u64) -> Outcome {
    let lim = Limits::default();
    let (mut yes, mut inconsistent) = (0, 0);
    for seed in 0..count {
        let mut r = rng(40_000 + seed);
        let sig = super::signature(&mut r, &lim);
        let o = super::ontology(&mut r, &sig, &lim);
        let abox = super::abox(&mut r, &sig, &lim, 4);
        let q = super::cq(&mut r, &sig, &lim);
        let tb = Tbox::new(&sig, &o).map_err(|e| e.to_string())?;
        let direct = dllite::cq_entailed(&sig, &o, &abox, &q).map_err(|e| e.to_string())?;
        let unsat = eval_ucq(&q_unsat(&tb).map_err(|e| e.to_string())?, &abox);
        let reformulated = unsat || eval_ucq(&perfect_ref(&tb, &q).map_err(|e| e.to_string())?, &abox);
        let brute = oracle::brute_cq_entailed(&sig, &o, &abox, &q);
        ensure!(
            direct == reformulated && direct == brute,
            "seed {seed}: direct {direct}, perfect reformulation {reformulated}, chase {brute}\n{o:?}\n{abox:?}\n{q:?}"
        );
        yes += direct as usize;
        inconsistent += unsat as usize;
    }
    ensure!(count >= 500, "only {count} instances");
    Ok(format!("{count} instances, {yes} entailed, {inconsistent} inconsistent"))
}

/// A random skeleton of a random separated instance.
pub fn skeleton_instance(seed: u64) -> Option<(Tkb, Problem, Skeleton)> {
    let lim = Limits::default();
    let mut r = rng(seed);
    let tkb = super::tkb(&mut r, &lim);
    let phi = super::separated_tcq(&mut r, &tkb.signature, &lim);
    let p = Problem::new(&tkb, &phi).ok()?;
    let ok: u64 = (0..p.m()).filter(|&j| p.inst_ok[j]).map(|j| 1 << j).sum();
    let q_r = r.gen_range(0..1u64 << p.m()) & ok;
    let bphi: Vec<Assertion> = p
        .bphi_upper_bound()
        .into_iter()
        .filter(|_| r.gen_bool(0.5))
        .collect();
    let sk = Skeleton::new(&p, q_r, bphi)?;
    Some((tkb, p, sk))
}

type Direct = Box<dyn Fn(&KbIndex) -> bool>;

/// `rep` of every rewritten query against direct entailment over
/// `A_KR′ ∪ A_i`, for every world and time point.
pub fn rep_vs_direct(count: u64) -> Outcome {
    let (mut instances, mut checks, mut positives) = (0, 0, 0);
    for seed in 0..count {
        let Some((_, p, sk)) = skeleton_instance(seed) else { continue };
        instances += 1;
        let refs = Rewritings::new(&p).map_err(|e| e.to_string())?;
        let tdb = build_tdb(&p.aboxes, p.nik.iter().copied());
        let mut rw = Rewriter::new(&p, &refs, &sk);
        let tau = TTerm::Var(TAU);
        let worlds: Vec<World> = World::all(p.m()).filter(|w| w.0 & !sk.q_r == 0).collect();
        let mut cases: Vec<(World, String, Fo, Direct)> = Vec::new();
        for &w in &worlds {
            cases.push((w, "unsat".into(), rw.rep(&refs.unsat, w, tau), Box::new(|kb| !kb.is_consistent())));
            for j in 0..p.m() {
                let leaf = p.leaves[j].clone();
                cases.push((w, format!("leaf {j}"), rw.rep(&refs.leaves[j], w, tau), Box::new(move |kb| kb.entails(&leaf))));
                let ws = p.witnesses[j].clone();
                cases.push((
                    w,
                    format!("witness {j}"),
                    rw.rep(&refs.witnesses[j], w, tau),
                    Box::new(move |kb| ws.iter().any(|q| kb.entails(q))),
                ));
            }
            for (k, &(s, a)) in refs.flex_targets.iter().enumerate() {
                cases.push((
                    w,
                    format!("exists {s:?} of {a:?}"),
                    rw.rep(&refs.flex_ucq[k], w, tau),
                    Box::new(move |kb| kb.has_concept(a, BasicConcept::Exists(s))),
                ));
            }
        }
        let mut ev = Evaluator::new(&tdb, &rw.defs);
        for (w, what, f, direct) in &cases {
            let akr = sk.akr(&p, *w);
            for i in tdb.time_points() {
                let mut abox = akr.clone();
                if i >= 0 {
                    abox.extend(p.abox_at(i as usize));
                }
                let kb = KbIndex::new(&p.tb, &abox);
                let want = direct(&kb);
                let got = ev.eval(f, &Grounding::new().time(TAU, i)).map_err(|e| e.to_string())?;
                ensure!(got == want, "seed {seed}, world {w}, {what}, time {i}: rep {got}, direct {want}");
                checks += 1;
                positives += want as usize;
            }
        }
    }
    ensure!(instances >= 100, "only {instances} instances");
    Ok(format!("rep: {instances} instances, {checks} checks, {positives} positive"))
}

/// Answers of `pref` at each time point `-1 … n` against certain answers.
pub fn pref_vs_entailment(count: u64) -> Outcome {
    let lim = Limits::default();
    let mut checks = 0;
    for seed in 0..count {
        let mut r = rng(50_000 + seed);
        let tkb = super::tkb(&mut r, &lim);
        let mut q = super::cq(&mut r, &tkb.signature, &lim);
        q.answer = (0..q.vars.len() as u32).map(Var).collect();
        let tb = Tbox::new(&tkb.signature, &tkb.ontology).map_err(|e| e.to_string())?;
        let mut extra = tkb.abox_individuals();
        extra.extend(q.individuals());
        let tdb = build_tdb(&tkb.aboxes, extra.iter().copied());
        let mut gen = VarGen::default();
        let params: Vec<u32> = q.answer.iter().map(|_| gen.fresh()).collect();
        let args: Vec<OTerm> = params.iter().map(|&x| OTerm::Var(x)).collect();
        let f = pref(&tb, &q, &args, TTerm::Var(TAU), &mut gen).map_err(|e| e.to_string())?;
        let mut ev = Evaluator::new(&tdb, &[]);
        let dom = tdb.objects().to_vec();
        for i in tdb.time_points() {
            let abox = if i < 0 { ABox::new() } else { tkb.aboxes[i as usize].clone() };
            let kb = KbIndex::with_individuals(&tb, &abox, extra.iter().copied());
            let got = ev.answers(&f, &params, &Grounding::new().time(TAU, i)).map_err(|e| e.to_string())?;
            let k = params.len();
            let mut want = Vec::new();
            if !(dom.is_empty() && k > 0) {
                for code in 0..dom.len().pow(k as u32) {
                    let mut c = code;
                    let tuple: Vec<Individual> = (0..k)
                        .map(|_| {
                            let a = dom[c % dom.len()];
                            c /= dom.len();
                            a
                        })
                        .collect();
                    let fixed: Vec<(u32, Individual)> = tuple.iter().enumerate().map(|(v, a)| (v as u32, *a)).collect();
                    if kb.entails_atoms(q.vars.len(), &q.atoms, &fixed) {
                        want.push(tuple);
                    }
                }
            }
            want.sort();
            ensure!(got == want, "seed {seed}, time {i}: pref answers {got:?}, certain answers {want:?}");
            checks += 1;
        }
    }
    ensure!(checks >= 300, "only {checks} checks");
    Ok(format!("pref: {checks} checks"))
}

/// Every level `pref^j` of the rigid materialization, evaluated at each
/// time point, against entailment from the materialized level `j`; and the
/// step from level `j` to `j+1` against the materialization itself.
pub fn rigid_levels(count: u64) -> Outcome {
    let mut instances = 0;
    let mut checks = 0;
    for seed in 0..count {
        let Some((_, p, sk)) = skeleton_instance(10_000 + seed) else { continue };
        let refs = Rewritings::new(&p).map_err(|e| e.to_string())?;
        if refs.rigid.is_empty() {
            continue;
        }
        instances += 1;
        let big_n = p.rigid_basic_count();
        let tdb = build_tdb(&p.aboxes, p.nik.iter().copied());
        let rw = Rewriter::new(&p, &refs, &sk);
        let mut ev = Evaluator::new(&tdb, &rw.defs);
        for &a in &refs.rigid {
            let tuples: Vec<Vec<Individual>> = match a {
                Pred::Concept(_) => p.nik.iter().map(|&x| vec![x]).collect(),
                Pred::Role(_) => p.nik.iter().flat_map(|&x| p.nik.iter().map(move |&y| vec![x, y])).collect(),
            };
            for tuple in tuples {
                let asr = match a {
                    Pred::Concept(b) => Assertion::concept(b, tuple[0]),
                    Pred::Role(r) => Assertion::role(tcq_core::model::Role::new(r), tuple[0], tuple[1]),
                };
                let args: Vec<OTerm> = tuple.iter().map(|&x| OTerm::Const(x)).collect();
                for j in 0..=big_n {
                    let id = rw.def_id(j, a).ok_or_else(|| format!("seed {seed}: no definition for level {j}"))?;
                    let call = |i: i64| Fo::Call(id, args.clone(), TTerm::Const(i));
                    for i in tdb.time_points() {
                        let mut abox = sk.mat.levels[j].clone();
                        if i >= 0 {
                            abox.extend(p.abox_at(i as usize));
                        }
                        let kb = KbIndex::with_individuals(&p.tb, &abox, p.nik.iter().copied());
                        let got = ev.eval(&call(i), &Grounding::new()).map_err(|e| e.to_string())?;
                        let want = kb.entails_assertion(&asr);
                        ensure!(got == want, "seed {seed}, level {j}, time {i}: pref {got}, direct {want}");
                        checks += 1;
                    }
                    if j < big_n {
                        let mut some = false;
                        for i in tdb.time_points() {
                            some |= ev.eval(&call(i), &Grounding::new()).map_err(|e| e.to_string())?;
                        }
                        ensure!(
                            some == sk.mat.levels[j + 1].contains(&asr),
                            "seed {seed}, level {j}: step disagrees with the materialization"
                        );
                    }
                }
            }
        }
    }
    ensure!(instances >= 30, "only {instances} instances with rigid names");
    Ok(format!("pref^N: {instances} instances, {checks} checks"))
}

/// Criterion 4: `rep`, `pref` and `pref^N` against direct entailment.
pub fn rewritings(count: u64) -> Outcome {
    let a = rep_vs_direct(count)?;
    let b = pref_vs_entailment(count)?;
    let c = rigid_levels(count)?;
    Ok(format!("{a}; {b}; {c}"))
}

/// Criterion 5: solver and rewriting agree on separated instances, and a
/// model found by the oracle makes both say SAT.
pub fn engines(count: u64) -> Outcome {
    let lim = Limits::default();
    let (mut sat, mut unsat, mut found) = (0, 0, 0);
    for seed in 0..count {
        let mut r = rng(20_000 + seed);
        let tkb = super::tkb(&mut r, &lim);
        let phi = super::separated_tcq(&mut r, &tkb.signature, &lim);
        let a = solver::satisfiable(&tkb, &phi).map_err(|e| format!("seed {seed}: {e}"))?.decided();
        let b = rewrite::satisfiable(&tkb, &phi).map_err(|e| format!("seed {seed}: {e}"))?.decided();
        ensure!(a.is_some() && a == b, "seed {seed}: solver {a:?}, rewriting {b:?}\n{tkb:?}\n{phi:?}");
        let ea = solver::entails(&tkb, &phi).map_err(|e| format!("seed {seed}: {e}"))?.decided();
        let (eb, _) = rewrite::entails(&tkb, &phi).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(ea == eb, "seed {seed}: entailment solver {ea:?}, rewriting {eb:?}");
        match a {
            Some(true) => sat += 1,
            _ => unsat += 1,
        }
        if let Ok(OracleResult::Found(l)) = bounded_tcq_sat(&phi, &tkb, 2, tkb.n() + 1, 2) {
            ensure!(eval_tcq_on_lasso(&l, &phi, tkb.n()), "seed {seed}: oracle model is not a model");
            ensure!(a == Some(true), "seed {seed}: oracle found a model but the engines say UNSAT");
            found += 1;
        }
    }
    ensure!(sat > 0 && unsat > 0, "degenerate sample: {sat} SAT, {unsat} UNSAT");
    Ok(format!("{count} instances, {sat} SAT, {unsat} UNSAT, {found} oracle models"))
}

/// The per-point decomposition of r-completeness.
fn decomposed(p: &Problem, t: &Tuple, worlds: &[World], iota: &[usize]) -> bool {
    if !p.is_rigid_type(&t.a_r) {
        return false;
    }
    let n = p.n();
    let points: Vec<(usize, World)> = (0..=n)
        .map(|i| (i, worlds[iota[i]]))
        .chain(worlds.iter().enumerate().map(|(l, w)| (n + 1 + l, *w)))
        .collect();
    let mut base = t.a_r.clone();
    base.extend(p.rigcons(t.q_r));
    let arf = p.build_arf(&t.r_f);
    let universe = p.flex_universe();
    let mut union = BTreeSet::new();
    for &(i, w) in &points {
        if !p.rsatisfiable(t, w, i) {
            return false;
        }
        union.extend(p.summarize(&base, &arf, w, i, &universe, false).flex);
    }
    t.r_f.is_subset(&union)
}

/// Criterion 6: the full r-completeness checker against its per-point
/// decomposition, over every tuple of small instances.
pub fn r_completeness(count: u64) -> Outcome {
    let lim = Limits {
        concepts: 2,
        roles: 1,
        individuals: 1,
        n: 1,
        leaves: 2,
        atoms: 2,
        cis: 2,
        ris: 0,
        depth: 1,
    };
    let (mut instances, mut checks, mut complete) = (0, 0, 0);
    let mut seed = 0;
    while instances < count && seed < 20 * count {
        seed += 1;
        let mut r = rng(60_000 + seed);
        let tkb = super::tkb(&mut r, &lim);
        let phi = super::tcq(&mut r, &tkb.signature, &lim);
        let Ok(p) = Problem::new(&tkb, &phi) else { continue };
        let Ok(tuples) = p.enumerate_tuples(1 << 11) else { continue };
        instances += 1;
        let all: Vec<World> = World::all(p.m()).collect();
        let n = p.n();
        for t in &tuples {
            // Every single world, then one random pair with a random ι.
            let mut choices: Vec<(Vec<World>, Vec<usize>)> = all.iter().map(|&w| (vec![w], vec![0; n + 1])).collect();
            let pair = vec![all[r.gen_range(0..all.len())], all[r.gen_range(0..all.len())]];
            choices.push((pair, (0..=n).map(|_| r.gen_range(0..2)).collect()));
            for (ws, iota) in &choices {
                let full = p.is_r_complete(t, ws, iota);
                let split = decomposed(&p, t, ws, iota);
                ensure!(
                    full == split,
                    "seed {seed}: checker {full}, decomposition {split} for {t:?}, worlds {ws:?}, iota {iota:?}"
                );
                checks += 1;
                complete += full as usize;
            }
        }
    }
    ensure!(instances >= count, "only {instances} instances within the tuple cap");
    ensure!(complete > 0, "no r-complete tuple in {checks} checks");
    Ok(format!("{instances} instances, {checks} checks, {complete} r-complete"))
}

/// Criterion 7: an unnamed element reached by `R` carries exactly the basic
/// concepts entailed by `∃R⁻`, computed through the TBox closure and
/// through the naive chase.
pub fn canonical_law(count: u64) -> Outcome {
    let lim = Limits::default();
    let (mut consistent, mut elements) = (0, 0);
    for seed in 0..count {
        let mut r = rng(80_000 + seed);
        let sig = super::signature(&mut r, &lim);
        let o = super::ontology(&mut r, &sig, &lim);
        let abox = super::abox(&mut r, &sig, &lim, 4);
        let tb = Tbox::new(&sig, &o).map_err(|e| e.to_string())?;
        if !KbIndex::new(&tb, &abox).is_consistent() {
            continue;
        }
        consistent += 1;
        let model = canonical_model(&tb, &abox, 3);
        let mut probe_sig = sig.clone();
        let c = probe_sig.declare_individual("probe").map_err(|e| e.to_string())?;
        let basics = sig.basic_concepts();
        let mut expected: HashMap<tcq_core::model::Role, (BTreeSet<BasicConcept>, BTreeSet<BasicConcept>)> = HashMap::new();
        for (path, concepts) in &model.unnamed {
            let Some(&last) = path.word.last() else {
                return Err(format!("seed {seed}: unnamed element with an empty path"));
            };
            let (by_closure, by_chase) = expected.entry(last).or_insert_with(|| {
                let from = BasicConcept::Exists(last.inv());
                let seed_abox: ABox = [Assertion::concept(from, c)].into_iter().collect();
                let closure = basics
                    .iter()
                    .copied()
                    .filter(|&b| dllite::concept_entails(&sig, &o, &[from], Some(b)).unwrap())
                    .collect();
                let chase = basics
                    .iter()
                    .copied()
                    .filter(|&b| {
                        let q = Cq::boolean(vec![], vec![Atom::Concept(b, Term::Ind(c))]);
                        oracle::brute_cq_entailed(&probe_sig, &o, &seed_abox, &q)
                    })
                    .collect();
                (closure, chase)
            });
            ensure!(concepts == by_closure, "seed {seed}: {path:?} has {concepts:?}, closure gives {by_closure:?}");
            ensure!(concepts == by_chase, "seed {seed}: {path:?} has {concepts:?}, chase gives {by_chase:?}");
            elements += 1;
        }
    }
    ensure!(elements > 0, "no unnamed elements");
    Ok(format!("{consistent} consistent KBs, {elements} unnamed elements"))
}

/// A random instantiation of a row shape over three concepts and two roles.
fn random_row(r: &mut rand_chacha::ChaCha8Rng, kind: usize, sig: &tcq_core::model::Signature) -> Row {
    let name = |r: &mut rand_chacha::ChaCha8Rng| ConceptName(r.gen_range(0..sig.concept_count() as u32));
    match kind {
        0 => Row::Exists {
            role: super::role(r, sig),
            filler: name(r),
            sup: name(r),
        },
        1 => Row::Forall {
            sub: name(r),
            role: super::role(r, sig),
            filler: name(r),
        },
        _ => {
            let lhs = (0..r.gen_range(1..=2)).map(|_| super::basic(r, sig)).collect();
            let mut rhs: Vec<ConceptName> = (0..r.gen_range(1..=2)).map(|_| name(r)).collect();
            rhs.dedup();
            Row::Clause { lhs, rhs }
        }
    }
}

/// Criterion 8: each row of the inclusion-to-query table holds in exactly
/// the interpretations, over domains of size one and two, where its query
/// has no match once complements are interpreted as complements.
pub fn table_rows() -> Outcome {
    let budget = Duration::from_secs(30);
    let start = Instant::now();
    let mut interps = 0;
    let mut sig = tcq_core::model::Signature::new();
    for c in ["A1", "A2", "A3"] {
        sig.declare_concept(c, false).map_err(|e| e.to_string())?;
    }
    for p in ["R", "S"] {
        sig.declare_role(p, false).map_err(|e| e.to_string())?;
    }
    let concepts: Vec<ConceptName> = sig.concepts().collect();
    let roles: Vec<RoleName> = sig.roles().collect();
    for kind in 0..3 {
        for k in 0..3 {
            let mut r = rng(90_000 + 10 * kind as u64 + k);
            let row = random_row(&mut r, kind, &sig);
            let mut ext = sig.clone();
            let mut fresh = Fresh::new(&mut ext);
            let names: BTreeSet<ConceptName> = row.rhs_names().into_iter().collect();
            let (comp_cis, comp) = complement_axioms(&mut fresh, &names);
            let q = row.query(&comp);
            let ci = row.to_extended();
            let comp_cis: Vec<_> = comp_cis.iter().map(tcq_core::model::ExtendedCi::from).collect();
            for d in 1..=2 {
                for mut i in super::all_interps(d, &concepts, &roles) {
                    let holds = interp_satisfies_ci(&i, d, &ci);
                    complement(&mut i, d, &comp);
                    ensure!(
                        comp_cis.iter().all(|c| interp_satisfies_ci(&i, d, c)),
                        "complement inclusions fail"
                    );
                    let matched = interp_satisfies(&i, d, &HashMap::new(), &q);
                    ensure!(
                        holds != matched,
                        "row {} on domain {d}: inclusion {holds}, query match {matched}",
                        ext.show_extended_ci(&ci)
                    );
                    interps += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < budget, "took {elapsed:?}");
    Ok(format!("9 rows, {interps} interpretations, {elapsed:.0?}"))
}

fn complement(i: &mut oracle::Interp, d: usize, comp: &BTreeMap<ConceptName, ConceptName>) {
    for (&c, &bar) in comp {
        for x in 0..d {
            if !i.concepts.contains(&(c, x)) {
                i.concepts.insert((bar, x));
            }
        }
    }
}

/// Criterion 9: the rigid materialization stabilizes within `N` rounds,
/// where `N` counts the rigid basic concepts, and one more round adds
/// nothing.
pub fn materialization_rounds(count: u64) -> Outcome {
    let (mut instances, mut most) = (0, 0);
    for seed in 0..count {
        let Some((_, p, sk)) = skeleton_instance(100_000 + seed) else { continue };
        let big_n = p.rigid_basic_count();
        let mat = ars_materialize(&p, &sk.mat.levels[0]);
        ensure!(mat.rounds <= big_n, "seed {seed}: {} rounds, N = {big_n}", mat.rounds);
        ensure!(mat.pos == sk.mat.pos, "seed {seed}: materialization is not deterministic");
        let (_, again, extra) = p.rigid_fixpoint(&mat.pos);
        ensure!(again == mat.pos && extra == 0, "seed {seed}: one more round adds {extra} rounds");
        let (_, pos, rounds) = p.rigid_fixpoint(&sk.mat.levels[0]);
        ensure!(pos == mat.pos && rounds <= big_n, "seed {seed}: fixpoint {rounds} rounds");
        instances += 1;
        most = most.max(mat.rounds);
    }
    ensure!(instances >= 100, "only {instances} instances");
    Ok(format!("{instances} instances, at most {most} rounds"))
}
