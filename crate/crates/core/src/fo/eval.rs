//! Tarski semantics over a [`RelStruct`].
//!
//! Formulas are compiled to an arena with one slot per binder. Runs of
//! quantifiers become blocks; a universal block `∀V (G1 ∧ .. ∧ Gk → β)`
//! whose guards split into independent groups, each sharing at most one
//! variable with `β`, is evaluated by first computing the admissible values
//! of those variables and then enumerating only their product. Every block
//! is memoized on the values of its free slots.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{FoError, FoFormula, SVar, WVar};
use crate::relational::RelStruct;
use crate::syntax::PropId;

/// Values of free variables: world indices and indices into `R.states()`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub worlds: BTreeMap<WVar, usize>,
    pub states: BTreeMap<SVar, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn with_world(mut self, v: WVar, w: usize) -> Self {
        self.worlds.insert(v, w);
        self
    }

    pub fn with_state(mut self, v: SVar, i: usize) -> Self {
        self.states.insert(v, i);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sort {
    World,
    State,
}

type Slot = usize;
type Id = usize;

#[derive(Debug)]
enum Node {
    Mem(Slot, Slot),
    E(Slot, Slot),
    Prop(PropId, Slot),
    Eq(Slot, Slot),
    Subset(Slot, Slot),
    Not(Id),
    And(Vec<Id>),
    Or(Vec<Id>),
    Implies(Id, Id),
    Forall(usize),
    Exists(usize),
}

/// A guard conjunct checked as soon as its last block variable is bound.
#[derive(Debug)]
struct Check {
    node: Id,
    at: usize,
}

/// Variables in binding order; checks are keyed by position.
#[derive(Debug)]
struct Search {
    vars: Vec<Slot>,
    checks: Vec<Check>,
}

#[derive(Debug)]
enum Plan {
    /// Independent guard groups; `targets[i]` is bound first in `groups[i]`.
    Projected {
        outer: Vec<Id>,
        closed: Vec<Search>,
        targets: Vec<Slot>,
        groups: Vec<Search>,
        body: Id,
    },
    /// Look for `G ∧ ¬β` (universal) or `G ∧ β` (existential).
    Backtrack {
        outer: Vec<Id>,
        search: Search,
        body: Option<Id>,
    },
}

#[derive(Debug)]
struct Block {
    free: Vec<Slot>,
    plan: Plan,
}

struct Compiler {
    nodes: Vec<Node>,
    free: Vec<BTreeSet<Slot>>,
    blocks: Vec<Block>,
    sorts: Vec<Sort>,
    worlds: HashMap<WVar, Vec<Slot>>,
    states: HashMap<SVar, Vec<Slot>>,
}

enum Quant {
    Forall,
    Exists,
}

impl Compiler {
    fn slot(&mut self, sort: Sort) -> Slot {
        self.sorts.push(sort);
        self.sorts.len() - 1
    }

    fn world(&self, v: WVar) -> Slot {
        *self.worlds[&v].last().unwrap()
    }

    fn state(&self, v: SVar) -> Slot {
        *self.states[&v].last().unwrap()
    }

    fn push(&mut self, node: Node, free: BTreeSet<Slot>) -> Id {
        self.nodes.push(node);
        self.free.push(free);
        self.nodes.len() - 1
    }

    fn union(&self, ids: &[Id]) -> BTreeSet<Slot> {
        ids.iter().flat_map(|&i| self.free[i].iter().copied()).collect()
    }

    fn compile(&mut self, phi: &FoFormula) -> Id {
        let set = |xs: &[Slot]| xs.iter().copied().collect::<BTreeSet<_>>();
        match phi {
            FoFormula::Mem(x, l) => {
                let (a, b) = (self.world(*x), self.state(*l));
                self.push(Node::Mem(a, b), set(&[a, b]))
            }
            FoFormula::E(x, l) => {
                let (a, b) = (self.world(*x), self.state(*l));
                self.push(Node::E(a, b), set(&[a, b]))
            }
            FoFormula::Prop(p, x) => {
                let a = self.world(*x);
                self.push(Node::Prop(*p, a), set(&[a]))
            }
            FoFormula::Eq(x, y) => {
                let (a, b) = (self.world(*x), self.world(*y));
                self.push(Node::Eq(a, b), set(&[a, b]))
            }
            FoFormula::Subset(m, l) => {
                let (a, b) = (self.state(*m), self.state(*l));
                self.push(Node::Subset(a, b), set(&[a, b]))
            }
            FoFormula::Not(a) => {
                let a = self.compile(a);
                let free = self.free[a].clone();
                self.push(Node::Not(a), free)
            }
            FoFormula::And(xs) | FoFormula::Or(xs) => {
                let ids: Vec<Id> = xs.iter().map(|a| self.compile(a)).collect();
                let free = self.union(&ids);
                let node = if matches!(phi, FoFormula::And(_)) {
                    Node::And(ids)
                } else {
                    Node::Or(ids)
                };
                self.push(node, free)
            }
            FoFormula::Implies(a, b) => {
                let ids = [self.compile(a), self.compile(b)];
                let free = self.union(&ids);
                self.push(Node::Implies(ids[0], ids[1]), free)
            }
            FoFormula::ForallWorld(..) | FoFormula::ForallState(..) => {
                self.block(phi, Quant::Forall)
            }
            FoFormula::ExistsWorld(..) | FoFormula::ExistsState(..) => {
                self.block(phi, Quant::Exists)
            }
        }
    }

    fn block(&mut self, phi: &FoFormula, quant: Quant) -> Id {
        let mut vars = Vec::new();
        let mut wnames = Vec::new();
        let mut snames = Vec::new();
        let mut cur = phi;
        loop {
            match (cur, &quant) {
                (FoFormula::ForallWorld(v, b), Quant::Forall)
                | (FoFormula::ExistsWorld(v, b), Quant::Exists) => {
                    let s = self.slot(Sort::World);
                    self.worlds.entry(*v).or_default().push(s);
                    wnames.push(*v);
                    vars.push(s);
                    cur = b;
                }
                (FoFormula::ForallState(v, b), Quant::Forall)
                | (FoFormula::ExistsState(v, b), Quant::Exists) => {
                    let s = self.slot(Sort::State);
                    self.states.entry(*v).or_default().push(s);
                    snames.push(*v);
                    vars.push(s);
                    cur = b;
                }
                _ => break,
            }
        }
        let (guards, body) = match (&quant, cur) {
            (Quant::Forall, FoFormula::Implies(g, b)) => {
                let g = self.compile(g);
                (self.flatten_and(g), Some(self.compile(b)))
            }
            (Quant::Forall, b) => (Vec::new(), Some(self.compile(b))),
            (Quant::Exists, b) => {
                let b = self.compile(b);
                (self.flatten_and(b), None)
            }
        };
        for v in wnames {
            self.worlds.get_mut(&v).unwrap().pop();
        }
        for v in snames {
            self.states.get_mut(&v).unwrap().pop();
        }

        let bound: BTreeSet<Slot> = vars.iter().copied().collect();
        let mut free = self.union(&guards);
        if let Some(b) = body {
            free.extend(self.free[b].iter().copied());
        }
        let free: BTreeSet<Slot> = free.difference(&bound).copied().collect();

        let plan = match body {
            Some(b) => self
                .projected(&vars, &guards, b)
                .unwrap_or_else(|| self.backtrack(&vars, &guards, Some(b))),
            None => self.backtrack(&vars, &guards, None),
        };
        self.blocks.push(Block {
            free: free.iter().copied().collect(),
            plan,
        });
        let node = match quant {
            Quant::Forall => Node::Forall(self.blocks.len() - 1),
            Quant::Exists => Node::Exists(self.blocks.len() - 1),
        };
        self.push(node, free)
    }

    fn flatten_and(&self, id: Id) -> Vec<Id> {
        match &self.nodes[id] {
            Node::And(xs) => xs.iter().flat_map(|&x| self.flatten_and(x)).collect(),
            _ => vec![id],
        }
    }

    fn block_vars(&self, id: Id, vars: &[Slot]) -> Vec<Slot> {
        vars.iter()
            .copied()
            .filter(|v| self.free[id].contains(v))
            .collect()
    }

    fn search(&self, order: Vec<Slot>, guards: &[Id]) -> Search {
        let checks = guards
            .iter()
            .map(|&g| Check {
                node: g,
                at: self
                    .block_vars(g, &order)
                    .iter()
                    .map(|v| order.iter().position(|o| o == v).unwrap())
                    .max()
                    .unwrap(),
            })
            .collect();
        Search {
            vars: order,
            checks,
        }
    }

    fn projected(&self, vars: &[Slot], guards: &[Id], body: Id) -> Option<Plan> {
        let mut parent: Vec<usize> = (0..vars.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        let pos = |v: Slot| vars.iter().position(|&u| u == v).unwrap();
        let mut outer = Vec::new();
        for &g in guards {
            let bv = self.block_vars(g, vars);
            match bv.split_first() {
                None => outer.push(g),
                Some((first, rest)) => {
                    for v in rest {
                        let (a, b) = (find(&mut parent, pos(*first)), find(&mut parent, pos(*v)));
                        parent[a] = b;
                    }
                }
            }
        }
        let mut comps: BTreeMap<usize, Vec<Slot>> = BTreeMap::new();
        for (i, &v) in vars.iter().enumerate() {
            comps.entry(find(&mut parent, i)).or_default().push(v);
        }
        let in_body = |v: &Slot| self.free[body].contains(v);
        let mut closed = Vec::new();
        let mut targets = Vec::new();
        let mut groups = Vec::new();
        for comp in comps.values() {
            let hits: Vec<Slot> = comp.iter().copied().filter(in_body).collect();
            if hits.len() > 1 {
                return None;
            }
            let comp_guards: Vec<Id> = guards
                .iter()
                .copied()
                .filter(|&g| self.block_vars(g, comp).first().is_some())
                .collect();
            match hits.first() {
                None => closed.push(self.search(comp.clone(), &comp_guards)),
                Some(&t) => {
                    let mut order = vec![t];
                    order.extend(comp.iter().copied().filter(|&v| v != t));
                    targets.push(t);
                    groups.push(self.search(order, &comp_guards));
                }
            }
        }
        Some(Plan::Projected {
            outer,
            closed,
            targets,
            groups,
            body,
        })
    }

    fn backtrack(&self, vars: &[Slot], guards: &[Id], body: Option<Id>) -> Plan {
        let (outer, inner): (Vec<Id>, Vec<Id>) = guards
            .iter()
            .partition(|&&g| self.block_vars(g, vars).is_empty());
        Plan::Backtrack {
            outer,
            search: self.search(vars.to_vec(), &inner),
            body,
        }
    }
}

struct Machine<'a> {
    r: &'a RelStruct,
    nodes: &'a [Node],
    blocks: &'a [Block],
    sorts: &'a [Sort],
    env: Vec<usize>,
    memo: Vec<HashMap<Vec<usize>, bool>>,
}

impl Machine<'_> {
    fn domain(&self, slot: Slot) -> usize {
        match self.sorts[slot] {
            Sort::World => self.r.n_worlds(),
            Sort::State => self.r.n_states(),
        }
    }

    fn eval(&mut self, id: Id) -> bool {
        let nodes = self.nodes;
        let env = &self.env;
        match &nodes[id] {
            Node::Mem(x, l) => self.r.member(env[*x], env[*l]),
            Node::E(x, l) => self.r.has_e(env[*x], env[*l]),
            Node::Prop(p, x) => self.r.prop(*p).contains(env[*x]),
            Node::Eq(x, y) => env[*x] == env[*y],
            Node::Subset(m, l) => {
                let (m, l) = (env[*m], env[*l]);
                (0..self.r.n_worlds()).all(|y| !self.r.member(y, m) || self.r.member(y, l))
            }
            Node::Not(a) => !self.eval(*a),
            Node::And(xs) => xs.iter().all(|&a| self.eval(a)),
            Node::Or(xs) => xs.iter().any(|&a| self.eval(a)),
            Node::Implies(a, b) => !self.eval(*a) || self.eval(*b),
            Node::Forall(b) | Node::Exists(b) => {
                let b = *b;
                let key: Vec<usize> = self.blocks[b].free.iter().map(|&s| env[s]).collect();
                if let Some(&v) = self.memo[b].get(&key) {
                    return v;
                }
                let universal = matches!(nodes[id], Node::Forall(_));
                let v = self.run_block(b, universal);
                self.memo[b].insert(key, v);
                v
            }
        }
    }

    /// Whether some extension of the bindings before `from` satisfies every
    /// check of `search`, calling `leaf` on each complete one until it
    /// returns true.
    fn find(&mut self, search: &Search, from: usize, leaf: &mut dyn FnMut(&mut Self) -> bool) -> bool {
        if from == search.vars.len() {
            return leaf(self);
        }
        let slot = search.vars[from];
        for d in 0..self.domain(slot) {
            self.env[slot] = d;
            let ok = search
                .checks
                .iter()
                .filter(|c| c.at == from)
                .all(|c| self.eval(c.node));
            if ok && self.find(search, from + 1, leaf) {
                return true;
            }
        }
        false
    }

    fn run_block(&mut self, b: usize, universal: bool) -> bool {
        let blocks = self.blocks;
        match &blocks[b].plan {
            Plan::Projected {
                outer,
                closed,
                targets,
                groups,
                body,
            } => {
                if !outer.iter().all(|&g| self.eval(g)) {
                    return true;
                }
                for search in closed {
                    if !self.find(search, 0, &mut |_| true) {
                        return true;
                    }
                }
                let mut domains = Vec::with_capacity(groups.len());
                for (search, &t) in groups.iter().zip(targets) {
                    let mut dom = Vec::new();
                    for d in 0..self.domain(t) {
                        self.env[t] = d;
                        let ok = search
                            .checks
                            .iter()
                            .filter(|c| c.at == 0)
                            .all(|c| self.eval(c.node));
                        if ok && self.find(search, 1, &mut |_| true) {
                            dom.push(d);
                        }
                    }
                    if dom.is_empty() {
                        return true;
                    }
                    domains.push(dom);
                }
                self.product(targets, &domains, 0, *body)
            }
            Plan::Backtrack {
                outer,
                search,
                body,
            } => {
                if !outer.iter().all(|&g| self.eval(g)) {
                    return universal;
                }
                let body = *body;
                let found = self.find(search, 0, &mut |m: &mut Self| match body {
                    Some(b) => !m.eval(b),
                    None => true,
                });
                if universal {
                    !found
                } else {
                    found
                }
            }
        }
    }

    fn product(&mut self, targets: &[Slot], domains: &[Vec<usize>], i: usize, body: Id) -> bool {
        if i == targets.len() {
            return self.eval(body);
        }
        for &d in &domains[i] {
            self.env[targets[i]] = d;
            if !self.product(targets, domains, i + 1, body) {
                return false;
            }
        }
        true
    }
}

/// `R, σ ⊨ ψ`. State quantifiers range over the represented states only.
pub fn eval_fo(r: &RelStruct, sigma: &Assignment, psi: &FoFormula) -> Result<bool, FoError> {
    let fv = psi.free_vars();
    let mut c = Compiler {
        nodes: Vec::new(),
        free: Vec::new(),
        blocks: Vec::new(),
        sorts: Vec::new(),
        worlds: HashMap::new(),
        states: HashMap::new(),
    };
    let mut env = Vec::new();
    for v in &fv.worlds {
        let index = *sigma.worlds.get(v).ok_or(FoError::UnboundWorld(*v))?;
        if index >= r.n_worlds() {
            return Err(FoError::WorldOutOfRange { var: *v, index });
        }
        let s = c.slot(Sort::World);
        c.worlds.insert(*v, vec![s]);
        env.push(index);
    }
    for v in &fv.states {
        let index = *sigma.states.get(v).ok_or(FoError::UnboundState(*v))?;
        if index >= r.n_states() {
            return Err(FoError::StateOutOfRange { var: *v, index });
        }
        let s = c.slot(Sort::State);
        c.states.insert(*v, vec![s]);
        env.push(index);
    }
    check_props(psi, r.sig().len())?;
    let root = c.compile(psi);
    env.resize(c.sorts.len(), 0);
    let mut m = Machine {
        r,
        nodes: &c.nodes,
        blocks: &c.blocks,
        sorts: &c.sorts,
        env,
        memo: (0..c.blocks.len()).map(|_| HashMap::new()).collect(),
    };
    Ok(m.eval(root))
}

fn check_props(psi: &FoFormula, n: usize) -> Result<(), FoError> {
    match psi {
        FoFormula::Prop(p, _) if p.0 >= n => Err(FoError::UnknownProp(p.0)),
        FoFormula::Not(a)
        | FoFormula::ForallWorld(_, a)
        | FoFormula::ExistsWorld(_, a)
        | FoFormula::ForallState(_, a)
        | FoFormula::ExistsState(_, a) => check_props(a, n),
        FoFormula::And(xs) | FoFormula::Or(xs) => xs.iter().try_for_each(|a| check_props(a, n)),
        FoFormula::Implies(a, b) => {
            check_props(a, n)?;
            check_props(b, n)
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::relational::{encode, Policy};

    fn all_p() -> FoFormula {
        let x1 = WVar(1);
        FoFormula::ForallWorld(
            x1,
            Box::new(FoFormula::implies(
                FoFormula::Mem(x1, SVar::LAMBDA),
                FoFormula::Prop(PropId(0), x1),
            )),
        )
    }

    #[test]
    fn spec_examples() {
        let r = encode(&m0(), st(&[0]), Policy::Minimal).unwrap();
        let sigma = Assignment::new().with_state(SVar::LAMBDA, r.point().unwrap());
        assert!(eval_fo(&r, &sigma, &all_p()).unwrap());

        let r = encode(&m0(), st(&[0, 1]), Policy::Minimal).unwrap();
        let sigma = Assignment::new().with_state(SVar::LAMBDA, r.point().unwrap());
        assert!(!eval_fo(&r, &sigma, &all_p()).unwrap());

        let refl = FoFormula::Eq(WVar(3), WVar(3));
        let sigma = Assignment::new().with_world(WVar(3), 1);
        assert!(eval_fo(&r, &sigma, &refl).unwrap());
    }

    #[test]
    fn errors() {
        let r = encode(&m0(), st(&[0]), Policy::Minimal).unwrap();
        assert_eq!(
            eval_fo(&r, &Assignment::new(), &all_p()),
            Err(FoError::UnboundState(SVar::LAMBDA))
        );
        let sigma = Assignment::new().with_state(SVar::LAMBDA, 99);
        assert!(matches!(
            eval_fo(&r, &sigma, &all_p()),
            Err(FoError::StateOutOfRange { .. })
        ));
        let phi = FoFormula::Prop(PropId(4), WVar(0));
        let sigma = Assignment::new().with_world(WVar(0), 0);
        assert_eq!(eval_fo(&r, &sigma, &phi), Err(FoError::UnknownProp(4)));
    }

    // Naive reference semantics used to cross-check the planner.
    fn naive(r: &RelStruct, w: &mut BTreeMap<WVar, usize>, s: &mut BTreeMap<SVar, usize>, phi: &FoFormula) -> bool {
        match phi {
            FoFormula::Mem(x, l) => r.member(w[x], s[l]),
            FoFormula::E(x, l) => r.has_e(w[x], s[l]),
            FoFormula::Prop(p, x) => r.prop(*p).contains(w[x]),
            FoFormula::Eq(x, y) => w[x] == w[y],
            FoFormula::Subset(a, b) => r.state(s[a]).is_subset(r.state(s[b])),
            FoFormula::Not(a) => !naive(r, w, s, a),
            FoFormula::And(xs) => xs.iter().all(|a| naive(r, w, s, a)),
            FoFormula::Or(xs) => xs.iter().any(|a| naive(r, w, s, a)),
            FoFormula::Implies(a, b) => !naive(r, w, s, a) || naive(r, w, s, b),
            FoFormula::ForallWorld(v, a) | FoFormula::ExistsWorld(v, a) => {
                let old = w.get(v).copied();
                let mut vals = Vec::new();
                for d in 0..r.n_worlds() {
                    w.insert(*v, d);
                    vals.push(naive(r, w, s, a));
                }
                match old {
                    Some(o) => w.insert(*v, o),
                    None => w.remove(v),
                };
                if matches!(phi, FoFormula::ForallWorld(..)) {
                    vals.iter().all(|&b| b)
                } else {
                    vals.iter().any(|&b| b)
                }
            }
            FoFormula::ForallState(v, a) | FoFormula::ExistsState(v, a) => {
                let old = s.get(v).copied();
                let mut vals = Vec::new();
                for d in 0..r.n_states() {
                    s.insert(*v, d);
                    vals.push(naive(r, w, s, a));
                }
                match old {
                    Some(o) => s.insert(*v, o),
                    None => s.remove(v),
                };
                if matches!(phi, FoFormula::ForallState(..)) {
                    vals.iter().all(|&b| b)
                } else {
                    vals.iter().any(|&b| b)
                }
            }
        }
    }

    #[test]
    fn planner_matches_naive_semantics() {
        use crate::fo::{standard_translate, world_translate};
        use crate::parser::parse;
        use crate::syntax::Signature;
        let sig = Signature::standard(1);
        let formulas = ["?p", "[] ?p", "[+] (p vv ~p)", "~p -> [] bot", "[] p -> p", "p & ?p"];
        for text in formulas {
            let phi = parse(text, &sig).unwrap();
            for m in [m0(), p0()] {
                for s in crate::state::InfoState::full(2).subsets() {
                    for policy in Policy::ALL {
                        let r = encode(&m, s, policy).unwrap();
                        let lam = r.point().unwrap();
                        let fo = standard_translate(&phi);
                        let mut ws = BTreeMap::new();
                        let mut ss = BTreeMap::from([(SVar::LAMBDA, lam)]);
                        let sigma = Assignment::new().with_state(SVar::LAMBDA, lam);
                        assert_eq!(eval_fo(&r, &sigma, &fo).unwrap(), naive(&r, &mut ws, &mut ss, &fo));
                        // shadowing and existential blocks
                        let ex = FoFormula::ExistsWorld(
                            WVar(0),
                            Box::new(FoFormula::And(vec![
                                FoFormula::Mem(WVar(0), SVar::LAMBDA),
                                world_translate(&phi),
                            ])),
                        );
                        let mut ws = BTreeMap::new();
                        assert_eq!(eval_fo(&r, &sigma, &ex).unwrap(), naive(&r, &mut ws, &mut ss, &ex));
                    }
                }
            }
        }
    }
}
