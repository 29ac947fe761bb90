//! Reference semantics for linear knowledge bases, written without the
//! engine: random KBs as plain data, a Skolemized oblivious chase cut off at
//! a term depth, and nested-loop query evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

/// A constant, or the `n`-th distinct Skolem term (interned, so deep terms
/// stay small).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum T {
    C(String),
    F(usize),
}

#[derive(Default)]
struct Terms {
    ids: HashMap<(String, Vec<T>), usize>,
    depth: Vec<usize>,
}

impl Terms {
    fn depth(&self, t: &T) -> usize {
        match t {
            T::C(_) => 0,
            T::F(i) => self.depth[*i],
        }
    }

    fn skolem(&mut self, f: String, args: Vec<T>) -> (T, usize) {
        let d = 1 + args.iter().map(|a| self.depth(a)).max().unwrap_or(0);
        let next = self.depth.len();
        let id = *self.ids.entry((f, args)).or_insert(next);
        if id == next {
            self.depth.push(d);
        }
        (T::F(id), d)
    }
}

pub type Fact = (String, Vec<T>);

#[derive(Clone, Debug)]
pub struct Rule {
    pub body: (String, Vec<String>),
    pub head: (String, Vec<String>),
}

#[derive(Clone, Debug)]
pub enum Arg {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug)]
pub struct Kb {
    pub preds: Vec<(String, usize)>,
    pub facts: Vec<(String, Vec<String>)>,
    pub rules: Vec<Rule>,
}

/// Simple query: atom 0 is the distinguished atom over the free variables.
#[derive(Clone, Debug)]
pub struct Cq {
    pub atoms: Vec<(String, Vec<Arg>)>,
    pub free: Vec<String>,
    pub existential: Vec<String>,
}

const CONSTS: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_kb(rng: &mut StdRng) -> Kb {
    let np = rng.random_range(1..=4);
    let preds: Vec<(String, usize)> = (0..np)
        .map(|i| (format!("p{i}"), rng.random_range(1..=2)))
        .collect();
    let mut facts = Vec::new();
    for _ in 0..rng.random_range(1..=8) {
        let (p, ar) = preds.choose(rng).unwrap().clone();
        let args = (0..ar).map(|_| CONSTS.choose(rng).unwrap().to_string()).collect();
        facts.push((p, args));
    }
    let mut rules = Vec::new();
    for _ in 0..rng.random_range(0..=6) {
        let (bp, bar) = preds.choose(rng).unwrap().clone();
        let bargs: Vec<String> = (0..bar)
            .map(|_| ["X", "Y"].choose(rng).unwrap().to_string())
            .collect();
        let (hp, har) = preds.choose(rng).unwrap().clone();
        let pool: Vec<String> = bargs.iter().cloned().chain(["Z".to_string(), "W".to_string()]).collect();
        let hargs: Vec<String> = (0..har).map(|_| pool.choose(rng).unwrap().clone()).collect();
        rules.push(Rule {
            body: (bp, bargs),
            head: (hp, hargs),
        });
    }
    Kb { preds, facts, rules }
}

pub fn random_query(rng: &mut StdRng, kb: &Kb) -> Cq {
    let (p, ar) = kb.preds.choose(rng).unwrap().clone();
    let free: Vec<String> = (0..ar).map(|i| format!("V{i}")).collect();
    let mut atoms = vec![(p, free.iter().cloned().map(Arg::Var).collect::<Vec<_>>())];
    let extra = *[0usize, 0, 1, 1, 2].choose(rng).unwrap();
    let exist = ["E0", "E1"];
    while atoms.len() < extra + 1 {
        let (q, qar) = kb.preds.choose(rng).unwrap().clone();
        let args: Vec<Arg> = (0..qar)
            .map(|_| match rng.random_range(0..3) {
                0 if !free.is_empty() => Arg::Var(free.choose(rng).unwrap().clone()),
                1 => Arg::Const(CONSTS.choose(rng).unwrap().to_string()),
                _ => Arg::Var(exist.choose(rng).unwrap().to_string()),
            })
            .collect();
        // a second atom over exactly the free variables would make the
        // distinguished atom ambiguous
        let shadows = args.len() == free.len()
            && args.iter().zip(&free).all(|(a, v)| matches!(a, Arg::Var(x) if x == v));
        if !shadows {
            atoms.push((q, args));
        }
    }
    let mut existential: Vec<String> = Vec::new();
    for (_, args) in &atoms {
        for a in args {
            if let Arg::Var(v) = a {
                if v.starts_with('E') && !existential.contains(v) {
                    existential.push(v.clone());
                }
            }
        }
    }
    Cq {
        atoms,
        free,
        existential,
    }
}

impl Kb {
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        for (p, ar) in &self.preds {
            s += &format!("@pred {p}/{ar}.\n");
        }
        for (p, args) in &self.facts {
            s += &format!("{p}({}).\n", args.join(", "));
        }
        for r in &self.rules {
            let ex: BTreeSet<&String> = r.head.1.iter().filter(|v| !r.body.1.contains(v)).collect();
            let ex: Vec<&str> = ex.into_iter().map(String::as_str).collect();
            let prefix = if ex.is_empty() {
                String::new()
            } else {
                format!("exists {} ", ex.join(", "))
            };
            s += &format!(
                "{}({}) -> {prefix}{}({}).\n",
                r.body.0,
                r.body.1.join(", "),
                r.head.0,
                r.head.1.join(", ")
            );
        }
        s
    }
}

impl Cq {
    pub fn to_source(&self) -> String {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|(p, args)| {
                let a: Vec<&str> = args
                    .iter()
                    .map(|a| match a {
                        Arg::Var(v) | Arg::Const(v) => v.as_str(),
                    })
                    .collect();
                format!("{p}({})", a.join(", "))
            })
            .collect();
        if self.existential.is_empty() {
            atoms.join(" & ")
        } else {
            format!("exists {} . {}", self.existential.join(", "), atoms.join(" & "))
        }
    }
}

/// Every atom of the Skolem chase whose terms nest at most `cap` deep.
pub fn skolem_chase(kb: &Kb, cap: usize) -> BTreeSet<Fact> {
    let mut model: BTreeSet<Fact> = kb
        .facts
        .iter()
        .map(|(p, args)| (p.clone(), args.iter().map(|c| T::C(c.clone())).collect()))
        .collect();
    // linear rules: each new fact only needs matching on its own
    let mut terms = Terms::default();
    let mut delta: Vec<Fact> = model.iter().cloned().collect();
    while !delta.is_empty() {
        let mut next = Vec::new();
        for (p, args) in &delta {
            for (ri, r) in kb.rules.iter().enumerate() {
                if *p != r.body.0 {
                    continue;
                }
                if let Some(f) = fire(ri, r, args, cap, &mut terms) {
                    if !model.contains(&f) {
                        model.insert(f.clone());
                        next.push(f);
                    }
                }
            }
        }
        delta = next;
    }
    model
}

fn fire(ri: usize, r: &Rule, terms: &[T], cap: usize, tt: &mut Terms) -> Option<Fact> {
    let mut env: BTreeMap<&str, &T> = BTreeMap::new();
    for (v, t) in r.body.1.iter().zip(terms) {
        match env.get(v.as_str()) {
            Some(prev) if *prev != t => return None,
            Some(_) => {}
            None => {
                env.insert(v, t);
            }
        }
    }
    let frontier: Vec<T> = env
        .iter()
        .filter(|(v, _)| r.head.1.iter().any(|h| h == *v))
        .map(|(_, t)| (*t).clone())
        .collect();
    let mut head = Vec::new();
    for v in &r.head.1 {
        match env.get(v.as_str()) {
            Some(t) => head.push((*t).clone()),
            None => {
                let (t, d) = tt.skolem(format!("{ri}.{v}"), frontier.clone());
                if d > cap {
                    return None;
                }
                head.push(t);
            }
        }
    }
    Some((r.head.0.clone(), head))
}

/// Constant answers of `q` over `model`, rendered in atom form. Atoms are
/// hash-joined one by one, keeping only bindings of variables still needed.
pub fn answers(model: &BTreeSet<Fact>, q: &Cq) -> BTreeSet<String> {
    type Env<'a> = BTreeMap<&'a str, &'a T>;
    let mut by_pred: BTreeMap<&str, Vec<&[T]>> = BTreeMap::new();
    for (p, terms) in model {
        by_pred.entry(p.as_str()).or_default().push(terms);
    }
    let vars = |args: &'_ [Arg]| -> Vec<String> {
        args.iter()
            .filter_map(|x| match x {
                Arg::Var(v) => Some(v.clone()),
                Arg::Const(_) => None,
            })
            .collect()
    };
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut partial: BTreeSet<Env> = BTreeSet::from([BTreeMap::new()]);
    for (i, (p, args)) in q.atoms.iter().enumerate() {
        let needed: BTreeSet<String> = q
            .free
            .iter()
            .cloned()
            .chain(q.atoms[i + 1..].iter().flat_map(|(_, a)| vars(a)))
            .collect();
        let own: BTreeSet<String> = vars(args).into_iter().collect();
        let shared: Vec<&String> = own.intersection(&bound).collect();
        let mut groups: HashMap<Vec<&T>, BTreeSet<Env>> = HashMap::new();
        for &terms in by_pred.get(p.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(mut e) = extend(&BTreeMap::new(), args, terms) {
                let key = shared.iter().map(|v| e[v.as_str()]).collect();
                e.retain(|v, _| needed.contains(*v) && !shared.iter().any(|s| s.as_str() == *v));
                groups.entry(key).or_default().insert(e);
            }
        }
        let mut next = BTreeSet::new();
        for env in &partial {
            let key: Vec<&T> = shared.iter().map(|v| env[v.as_str()]).collect();
            if let Some(ms) = groups.get(&key) {
                for m in ms {
                    let mut e = env.clone();
                    e.extend(m.iter().map(|(k, v)| (*k, *v)));
                    e.retain(|v, _| needed.contains(*v));
                    next.insert(e);
                }
            }
        }
        bound = bound.union(&own).filter(|v| needed.contains(*v)).cloned().collect();
        partial = next;
    }
    partial
        .iter()
        .filter_map(|env| {
            let vals = q
                .free
                .iter()
                .map(|v| match env[v.as_str()] {
                    T::C(c) => Some(c.as_str()),
                    T::F(_) => None,
                })
                .collect::<Option<Vec<_>>>()?;
            Some(format!("{}({})", q.atoms[0].0, vals.join(", ")))
        })
        .collect()
}

fn extend<'a>(env: &BTreeMap<&'a str, &'a T>, args: &'a [Arg], terms: &'a [T]) -> Option<BTreeMap<&'a str, &'a T>> {
    let mut e = env.clone();
    for (a, t) in args.iter().zip(terms) {
        match a {
            Arg::Const(c) => {
                if !matches!(t, T::C(x) if x == c) {
                    return None;
                }
            }
            Arg::Var(v) => match e.get(v.as_str()) {
                Some(prev) if *prev != t => return None,
                Some(_) => {}
                None => {
                    e.insert(v, t);
                }
            },
        }
    }
    Some(e)
}
