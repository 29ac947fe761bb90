//! Certain answers of a conjunctive query over a linear knowledge base by
//! backward chaining: the query is rewritten through the rules into a union
//! of queries, each evaluated on the facts alone. Linear rules never grow a
//! query, so up to variable renaming there are finitely many rewritings and
//! the result is exact, with no depth cut-off.

use std::collections::{BTreeMap, BTreeSet};

use super::skolem::{Arg, Cq, Kb, Rule};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Tm {
    C(String),
    V(usize),
}

type QAtom = (String, Vec<Tm>);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Rq {
    answer: Vec<Tm>,
    body: Vec<QAtom>,
}

impl Rq {
    fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.answer
            .iter()
            .chain(self.body.iter().flat_map(|(_, a)| a))
            .filter_map(|t| match t {
                Tm::V(v) => Some(*v),
                Tm::C(_) => None,
            })
    }

    fn fresh(&self) -> usize {
        self.vars().max().map_or(0, |v| v + 1)
    }

    /// Renames variables in order of first occurrence, minimised over body
    /// orderings, so that renamed copies compare equal.
    fn canonical(mut self) -> Rq {
        self.body.sort();
        self.body.dedup();
        let mut best: Option<Rq> = None;
        for perm in permutations(self.body.len()) {
            let body: Vec<QAtom> = perm.iter().map(|&i| self.body[i].clone()).collect();
            let mut names = BTreeMap::new();
            let mut rename = |t: &Tm| match t {
                Tm::C(c) => Tm::C(c.clone()),
                Tm::V(v) => {
                    let n = names.len();
                    Tm::V(*names.entry(*v).or_insert(n))
                }
            };
            let answer: Vec<Tm> = self.answer.iter().map(&mut rename).collect();
            let mut body: Vec<QAtom> = body
                .iter()
                .map(|(p, a)| (p.clone(), a.iter().map(&mut rename).collect()))
                .collect();
            body.sort();
            let cand = Rq { answer, body };
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
        best.unwrap()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Union-find over terms; constants are their own class representatives.
#[derive(Default)]
struct Unifier {
    parent: BTreeMap<Tm, Tm>,
}

impl Unifier {
    fn find(&self, t: &Tm) -> Tm {
        let mut t = t.clone();
        while let Some(p) = self.parent.get(&t) {
            t = p.clone();
        }
        t
    }

    fn union(&mut self, a: &Tm, b: &Tm) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        match (&a, &b) {
            _ if a == b => true,
            (Tm::C(_), Tm::C(_)) => false,
            (Tm::C(_), _) => {
                self.parent.insert(b, a);
                true
            }
            _ => {
                self.parent.insert(a, b);
                true
            }
        }
    }

    fn apply(&self, t: &Tm) -> Tm {
        self.find(t)
    }
}

fn subst(u: &Unifier, q: &Rq) -> Rq {
    Rq {
        answer: q.answer.iter().map(|t| u.apply(t)).collect(),
        body: q
            .body
            .iter()
            .map(|(p, a)| (p.clone(), a.iter().map(|t| u.apply(t)).collect()))
            .collect(),
    }
}

/// Resolves atom `g` of `q` against `rule`, if the rule's existential
/// variables only meet variables local to that atom.
fn resolve(q: &Rq, g: usize, rule: &Rule) -> Option<Rq> {
    let (hp, hargs) = &rule.head;
    let (gp, gargs) = &q.body[g];
    if hp != gp {
        return None;
    }
    let base = q.fresh();
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut var = |v: &str| {
        let n = ids.len();
        Tm::V(base + *ids.entry(v.to_string()).or_insert(n))
    };
    let head: Vec<Tm> = hargs.iter().map(|v| var(v)).collect();
    let body: Vec<Tm> = rule.body.1.iter().map(|v| var(v)).collect();
    let rule_vars: BTreeSet<Tm> = head.iter().chain(&body).cloned().collect();
    let existential: BTreeSet<Tm> = head.iter().filter(|t| !body.contains(t)).cloned().collect();

    let mut u = Unifier::default();
    for (a, b) in gargs.iter().zip(&head) {
        if !u.union(a, b) {
            return None;
        }
    }
    let answer_vars: BTreeSet<Tm> = q.answer.iter().cloned().collect();
    let elsewhere: BTreeSet<Tm> = q
        .body
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != g)
        .flat_map(|(_, (_, a))| a.iter().cloned())
        .collect();
    let mut terms: BTreeSet<Tm> = rule_vars.clone();
    terms.extend(gargs.iter().cloned());
    for z in &existential {
        let root = u.find(z);
        for t in &terms {
            if t == z || u.find(t) != root {
                continue;
            }
            let bad = matches!(t, Tm::C(_))
                || rule_vars.contains(t)
                || answer_vars.contains(t)
                || elsewhere.contains(t);
            if bad {
                return None;
            }
        }
        if matches!(root, Tm::C(_)) {
            return None;
        }
    }
    let mut out = q.clone();
    out.body[g] = (rule.body.0.clone(), body);
    Some(subst(&u, &out))
}

/// Merges atoms `i` and `j` of `q` when they unify.
fn factor(q: &Rq, i: usize, j: usize) -> Option<Rq> {
    let ((p, a), (r, b)) = (&q.body[i], &q.body[j]);
    if p != r {
        return None;
    }
    let mut u = Unifier::default();
    for (x, y) in a.iter().zip(b) {
        if !u.union(x, y) {
            return None;
        }
    }
    Some(subst(&u, q))
}

fn rewritings(q: Rq, kb: &Kb) -> BTreeSet<Rq> {
    let mut seen = BTreeSet::from([q.clone().canonical()]);
    let mut todo = vec![q.canonical()];
    while let Some(q) = todo.pop() {
        let n = q.body.len();
        let mut next = Vec::new();
        for g in 0..n {
            for r in &kb.rules {
                next.extend(resolve(&q, g, r));
            }
            for j in g + 1..n {
                next.extend(factor(&q, g, j));
            }
        }
        for r in next {
            let r = r.canonical();
            if seen.insert(r.clone()) {
                todo.push(r);
            }
        }
    }
    seen
}

fn evaluate(q: &Rq, facts: &[(String, Vec<String>)], out: &mut BTreeSet<Vec<String>>) {
    fn go(
        q: &Rq,
        k: usize,
        env: &mut BTreeMap<usize, String>,
        facts: &[(String, Vec<String>)],
        out: &mut BTreeSet<Vec<String>>,
    ) {
        if k == q.body.len() {
            let tuple = q.answer.iter().map(|t| match t {
                Tm::C(c) => Some(c.clone()),
                Tm::V(v) => env.get(v).cloned(),
            });
            if let Some(t) = tuple.collect::<Option<Vec<_>>>() {
                out.insert(t);
            }
            return;
        }
        let (p, args) = &q.body[k];
        for (fp, fargs) in facts {
            if fp != p || fargs.len() != args.len() {
                continue;
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (t, c) in args.iter().zip(fargs) {
                match t {
                    Tm::C(d) => ok = d == c,
                    Tm::V(v) => match env.get(v) {
                        Some(b) => ok = b == c,
                        None => {
                            env.insert(*v, c.clone());
                            added.push(*v);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                go(q, k + 1, env, facts, out);
            }
            for v in added {
                env.remove(&v);
            }
        }
    }
    go(q, 0, &mut BTreeMap::new(), facts, out);
}

/// Certain answers of `q`, in atom form.
pub fn certain_answers(kb: &Kb, q: &Cq) -> BTreeSet<String> {
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut term = |a: &Arg| match a {
        Arg::Const(c) => Tm::C(c.clone()),
        Arg::Var(v) => {
            let n = ids.len();
            Tm::V(*ids.entry(v.clone()).or_insert(n))
        }
    };
    let body: Vec<QAtom> = q
        .atoms
        .iter()
        .map(|(p, args)| (p.clone(), args.iter().map(&mut term).collect()))
        .collect();
    let answer: Vec<Tm> = q.free.iter().map(|v| term(&Arg::Var(v.clone()))).collect();
    let mut tuples = BTreeSet::new();
    for r in rewritings(Rq { answer, body }, kb) {
        evaluate(&r, &kb.facts, &mut tuples);
    }
    tuples
        .into_iter()
        .map(|t| format!("{}({})", q.atoms[0].0, t.join(", ")))
        .collect()
}
