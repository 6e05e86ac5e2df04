//! Finite two-player games of perfect information: Zermelo labelling by
//! transfinite recursion on rank, winning strategies, and the truth-telling
//! game over a finite structure.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::etr::{etr_solve, RecursionInstance};
use crate::formula::{Formula, Kind};
use crate::hfset::HFSet;
use crate::truth::{tarski_truth, HfModel, TruthTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    I,
    II,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::I => Player::II,
            Player::II => Player::I,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub children: Vec<usize>,
    /// Who moves at an inner node.
    pub mover: Option<Player>,
    /// Who wins at a leaf.
    pub winner: Option<Player>,
}

impl Node {
    pub fn leaf(winner: Player) -> Node {
        Node {
            children: Vec::new(),
            mover: None,
            winner: Some(winner),
        }
    }

    pub fn inner(mover: Player, children: Vec<usize>) -> Node {
        Node {
            children,
            mover: Some(mover),
            winner: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTree {
    pub nodes: Vec<Node>,
    pub root: usize,
}

pub type Strategy = BTreeMap<usize, usize>;

impl GameTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every node is reached exactly once from the root, leaves carry a
    /// winner and inner nodes a mover.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.root >= n {
            return Err(Error::Invalid("root out of range".into()));
        }
        let mut seen = alloc::vec![false; n];
        let mut stack = alloc::vec![self.root];
        while let Some(v) = stack.pop() {
            if core::mem::replace(&mut seen[v], true) {
                return Err(Error::Invalid(format!("node {v} is reached twice")));
            }
            let node = &self.nodes[v];
            match (node.children.is_empty(), node.mover, node.winner) {
                (true, None, Some(_)) | (false, Some(_), None) => {}
                _ => return Err(Error::Invalid(format!("node {v} mixes leaf and inner data"))),
            }
            for &c in &node.children {
                if c >= n {
                    return Err(Error::Invalid(format!("child {c} of {v} out of range")));
                }
                stack.push(c);
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("node {v} is unreachable")));
        }
        Ok(())
    }

    /// Rank of each node: 0 at leaves, one more than the largest child rank.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = alloc::vec![0usize; self.nodes.len()];
        for v in self.post_order() {
            rank[v] = self.nodes[v].children.iter().map(|&c| rank[c] + 1).max().unwrap_or(0);
        }
        rank
    }

    fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = alloc::vec![(self.root, false)];
        while let Some((v, done)) = stack.pop() {
            if done {
                out.push(v);
            } else {
                stack.push((v, true));
                stack.extend(self.nodes[v].children.iter().map(|&c| (c, false)));
            }
        }
        out
    }
}

/// Zermelo labels as a recursion on rank: slice `α` holds the nodes of rank
/// `α` won by player I.
pub fn zermelo(tree: &GameTree) -> Result<Vec<Player>> {
    tree.validate()?;
    let rank = tree.ranks();
    let length = rank.iter().max().map_or(0, |r| r + 1);
    let domain: Vec<HFSet> = (0..tree.len()).map(|v| HFSet::ack(v as u64)).collect();
    let rank_ref = &rank;
    let inst = RecursionInstance::callable(length, domain, move |v, _, view| {
        if rank_ref[v] != view.stage() {
            return Ok(false);
        }
        let node = &tree.nodes[v];
        let mut child_is_i = node.children.iter().map(|&c| view.contains(rank_ref[c], c));
        match (node.mover, node.winner) {
            (_, Some(w)) => Ok(w == Player::I),
            (Some(Player::I), _) => {
                for b in child_is_i.by_ref() {
                    if b? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            (Some(Player::II), _) => {
                for b in child_is_i {
                    if !b? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::Invalid("node without mover or winner".into())),
        }
    });
    let sol = etr_solve(&inst)?;
    Ok((0..tree.len())
        .map(|v| if sol.contains(rank[v], v) { Player::I } else { Player::II })
        .collect())
}

/// Plain backward induction; the oracle for [`zermelo`].
pub fn zermelo_direct(tree: &GameTree) -> Vec<Player> {
    let mut label = alloc::vec![Player::II; tree.len()];
    for v in tree.post_order() {
        let node = &tree.nodes[v];
        label[v] = match (node.mover, node.winner) {
            (_, Some(w)) => w,
            (Some(m), _) => {
                if node.children.iter().any(|&c| label[c] == m) {
                    m
                } else {
                    m.other()
                }
            }
            _ => Player::II,
        };
    }
    label
}

/// First node where `labels` is not a fixpoint of the Zermelo clauses.
pub fn check_labels(tree: &GameTree, labels: &[Player]) -> Option<usize> {
    (0..tree.len()).find(|&v| {
        let node = &tree.nodes[v];
        let expect = match (node.mover, node.winner) {
            (_, Some(w)) => w,
            (Some(m), _) if node.children.iter().any(|&c| labels[c] == m) => m,
            (Some(m), _) => m.other(),
            _ => return true,
        };
        labels[v] != expect
    })
}

/// For `player`: at each node they move at and are labelled with, the first
/// child with the same label.
pub fn strategy(tree: &GameTree, labels: &[Player], player: Player) -> Strategy {
    let mut out = Strategy::new();
    for (v, node) in tree.nodes.iter().enumerate() {
        if node.mover == Some(player) && labels[v] == player {
            if let Some(&c) = node.children.iter().find(|&&c| labels[c] == player) {
                out.insert(v, c);
            }
        }
    }
    out
}

/// Plays `player`'s strategy against every line of the opponent. On failure,
/// returns a play from the root that `player` loses.
pub fn verify_strategy(tree: &GameTree, player: Player, s: &Strategy) -> core::result::Result<(), Vec<usize>> {
    let mut stack = alloc::vec![alloc::vec![tree.root]];
    while let Some(line) = stack.pop() {
        let v = *line.last().unwrap();
        let node = &tree.nodes[v];
        if let Some(w) = node.winner {
            if w != player {
                return Err(line);
            }
            continue;
        }
        if node.mover == Some(player) {
            match s.get(&v) {
                Some(&c) if node.children.contains(&c) => {
                    let mut l = line.clone();
                    l.push(c);
                    stack.push(l);
                }
                _ => return Err(line),
            }
        } else {
            for &c in &node.children {
                let mut l = line.clone();
                l.push(c);
                stack.push(l);
            }
        }
    }
    Ok(())
}

/// A random tree with at most `max_nodes` nodes and branching up to 3.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> GameTree {
    let target = rng.gen_range(1..=max_nodes.max(1));
    let pick = |rng: &mut R| if rng.gen_bool(0.5) { Player::I } else { Player::II };
    let mut nodes = alloc::vec![Node::leaf(Player::I)];
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let room = target - nodes.len();
        if room == 0 || (v != 0 && rng.gen_bool(0.3)) {
            nodes[v] = Node::leaf(pick(rng));
            continue;
        }
        let k = rng.gen_range(1..=room.min(3));
        let children: Vec<usize> = (nodes.len()..nodes.len() + k).collect();
        for _ in 0..k {
            nodes.push(Node::leaf(Player::I));
        }
        queue.extend(children.iter().copied());
        nodes[v] = Node::inner(pick(rng), children);
    }
    GameTree { nodes, root: 0 }
}

/// The same game with node ids permuted by `perm` (old id ↦ new id) and each
/// child list reversed.
pub fn permute(tree: &GameTree, perm: &[usize]) -> GameTree {
    let mut nodes = alloc::vec![Node::leaf(Player::I); tree.len()];
    for (v, node) in tree.nodes.iter().enumerate() {
        nodes[perm[v]] = Node {
            children: node.children.iter().rev().map(|&c| perm[c]).collect(),
            mover: node.mover,
            winner: node.winner,
        };
    }
    GameTree {
        nodes,
        root: perm[tree.root],
    }
}

pub const DEFAULT_GAME_BUDGET: usize = 2_000_000;

/// What happened on the edge into a node of the truth-telling game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// The interrogator asks about pool formula `formula` at `tuple` and
    /// resets the clock to `clock`.
    Ask { formula: usize, tuple: Vec<usize>, clock: usize },
    /// The truth-teller's verdict, with a witness tuple for a true `∃`.
    Verdict { value: bool, witness: Option<Vec<usize>> },
}

/// The truth-telling game as an explicit tree. Player I interrogates,
/// player II tells the truth (or tries to).
#[derive(Debug, Clone)]
pub struct TruthGame {
    pub tree: GameTree,
    /// The move leading into each node; `None` at the root.
    pub moves: Vec<Option<Move>>,
    pub clock: usize,
    pub table: TruthTable,
}

type Declared = BTreeMap<(usize, Vec<usize>), bool>;

struct Builder<'t> {
    table: &'t TruthTable,
    nodes: Vec<Node>,
    moves: Vec<Option<Move>>,
    budget: usize,
    entries: Vec<(usize, Vec<usize>)>,
}

impl Builder<'_> {
    fn push(&mut self, node: Node, mv: Option<Move>) -> Result<usize> {
        if self.nodes.len() >= self.budget {
            return Err(Error::budget("game tree nodes", self.nodes.len() as u64 + 1, self.budget as u64));
        }
        self.nodes.push(node);
        self.moves.push(mv);
        Ok(self.nodes.len() - 1)
    }

    /// Player I to move with the clock at `clock`.
    fn interrogate(&mut self, declared: &Declared, clock: usize, mv: Option<Move>) -> Result<usize> {
        if clock == 0 {
            return self.push(Node::leaf(Player::II), mv);
        }
        let me = self.push(Node::inner(Player::I, Vec::new()), mv)?;
        let mut children = Vec::new();
        for k in 0..self.entries.len() {
            let (i, tuple) = self.entries[k].clone();
            for c in 0..clock {
                let ask = Move::Ask { formula: i, tuple: tuple.clone(), clock: c };
                children.push(self.answer(declared, i, &tuple, c, ask)?);
            }
        }
        self.nodes[me].children = children;
        Ok(me)
    }

    /// Player II to answer the question `(i, tuple)`.
    fn answer(&mut self, declared: &Declared, i: usize, tuple: &[usize], clock: usize, mv: Move) -> Result<usize> {
        let me = self.push(Node::inner(Player::II, Vec::new()), Some(mv))?;
        let mut children = Vec::new();
        for value in [true, false] {
            let witnesses: Vec<Option<(usize, Vec<usize>)>> = match self.table.pool()[i].kind() {
                Kind::Exists(..) if value => self.table.subentries(i, tuple)?.into_iter().map(Some).collect(),
                _ => alloc::vec![None],
            };
            for w in witnesses {
                let mut next = declared.clone();
                let mut contradiction = declare(&mut next, (i, tuple.to_vec()), value);
                let witness = w.map(|(j, t)| {
                    contradiction |= declare(&mut next, (j, t.clone()), true);
                    t
                });
                let verdict = Move::Verdict { value, witness };
                let child = if contradiction || violation(self.table, &next)? {
                    self.push(Node::leaf(Player::I), Some(verdict))?
                } else {
                    self.interrogate(&next, clock, Some(verdict))?
                };
                children.push(child);
            }
        }
        self.nodes[me].children = children;
        Ok(me)
    }
}

/// Records a verdict; true if it contradicts an earlier one.
fn declare(d: &mut Declared, key: (usize, Vec<usize>), value: bool) -> bool {
    match d.insert(key, value) {
        Some(old) => old != value,
        None => false,
    }
}

/// An explicit Tarskian violation among the declared entries.
fn violation(table: &TruthTable, d: &Declared) -> Result<bool> {
    for ((i, tuple), &value) in d {
        let phi = &table.pool()[*i];
        if phi.is_atomic() {
            if table.get(*i, tuple) != value {
                return Ok(true);
            }
            continue;
        }
        let parts: Vec<Option<bool>> = table
            .subentries(*i, tuple)?
            .into_iter()
            .map(|k| d.get(&k).copied())
            .collect();
        let some = |b: bool| parts.contains(&Some(b));
        let all = |b: bool| parts.iter().all(|p| *p == Some(b));
        let bad = match phi.kind() {
            Kind::Not(_) => some(value),
            Kind::And(_) | Kind::Forall(..) => {
                if value {
                    some(false)
                } else {
                    all(true)
                }
            }
            Kind::Or(_) | Kind::Exists(..) => {
                if value {
                    all(false)
                } else {
                    some(true)
                }
            }
            _ => false,
        };
        if bad {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Builds the truth-telling game for `pool` over `model`, starting with the
/// clock at `clock`.
pub fn truth_telling_game(model: &HfModel<'_>, pool: &[Formula], clock: usize, budget: usize) -> Result<TruthGame> {
    let table = tarski_truth(model, pool)?;
    let entries = (0..table.len()).map(|e| table.locate(e)).collect();
    let mut b = Builder {
        table: &table,
        nodes: Vec::new(),
        moves: Vec::new(),
        budget,
        entries,
    };
    let root = b.interrogate(&Declared::new(), clock, None)?;
    let tree = GameTree { nodes: b.nodes, root };
    let moves = b.moves;
    Ok(TruthGame { tree, moves, clock, table })
}

impl TruthGame {
    /// The truth-teller's answers to the opening questions that leave enough
    /// clock to check them (`clock ≥ rank`), read off the strategy that stays
    /// on her own label. `None` where she has no winning answer.
    pub fn verdicts(&self, labels: &[Player]) -> Vec<(usize, Vec<usize>, Option<bool>)> {
        let s = strategy(&self.tree, labels, Player::II);
        let mut out = Vec::new();
        for &ask in &self.tree.nodes[self.tree.root].children {
            let Some(Move::Ask { formula, tuple, clock }) = &self.moves[ask] else {
                continue;
            };
            if *clock + 1 != self.clock || self.table.pool()[*formula].rank() > *clock {
                continue;
            }
            let verdict = s.get(&ask).and_then(|c| match &self.moves[*c] {
                Some(Move::Verdict { value, .. }) => Some(*value),
                _ => None,
            });
            out.push((*formula, tuple.clone(), verdict));
        }
        out
    }

    /// Solves the game and compares the extracted verdicts with Tarskian
    /// truth. `Ok(())` when the interrogator loses and every verdict is right.
    pub fn check(&self) -> Result<core::result::Result<usize, String>> {
        let labels = zermelo(&self.tree)?;
        if labels[self.tree.root] != Player::II {
            return Ok(Err(format!("the interrogator wins with clock {}", self.clock)));
        }
        let s = strategy(&self.tree, &labels, Player::II);
        if let Err(line) = verify_strategy(&self.tree, Player::II, &s) {
            return Ok(Err(format!("truth-teller strategy loses along {line:?}")));
        }
        let verdicts = self.verdicts(&labels);
        for (i, tuple, v) in &verdicts {
            if *v != Some(self.table.get(*i, tuple)) {
                return Ok(Err(format!("verdict {v:?} on {:?} at {tuple:?}", self.table.pool()[*i])));
            }
        }
        Ok(Ok(verdicts.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{subformula_closure, Term};
    use crate::hfset::v_stage;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t = random_tree(&mut rng, 60);
            t.validate().unwrap();
            let labels = zermelo(&t).unwrap();
            assert_eq!(labels, zermelo_direct(&t));
            assert_eq!(check_labels(&t, &labels), None);
            let w = labels[t.root];
            assert!(verify_strategy(&t, w, &strategy(&t, &labels, w)).is_ok());
            let loser = w.other();
            assert!(verify_strategy(&t, loser, &strategy(&t, &labels, loser)).is_err());
            for v in 0..t.len() {
                let mut bad = labels.clone();
                bad[v] = bad[v].other();
                assert!(check_labels(&t, &bad).is_some());
            }
            let perm: Vec<usize> = (0..t.len()).rev().collect();
            let p = permute(&t, &perm);
            let pl = zermelo(&p).unwrap();
            assert!((0..t.len()).all(|v| labels[v] == pl[perm[v]]));
        }
    }

    #[test]
    fn liars_lose() {
        let dom = v_stage(2).unwrap();
        let m = HfModel::new(dom);
        let (x, y) = (Term::var("x"), Term::var("y"));
        let pool = subformula_closure(&[Formula::not(Formula::mem(x.clone(), y.clone())), Formula::eq(x, y)]);
        for clock in 0..=3 {
            let g = truth_telling_game(&m, &pool, clock, DEFAULT_GAME_BUDGET).unwrap();
            g.tree.validate().unwrap();
            assert_eq!(g.check().unwrap(), Ok(if clock == 0 { 0 } else { g.table.len() - if clock == 1 { 4 } else { 0 } }));
        }
    }

    #[test]
    fn existential_witnesses() {
        let dom = v_stage(2).unwrap();
        let m = HfModel::new(dom);
        let (x, y) = (Term::var("x"), Term::var("y"));
        let pool = subformula_closure(&[Formula::exists(vec![crate::formula::Var::from("y")], Formula::mem(x, y))]);
        let g = truth_telling_game(&m, &pool, 2, DEFAULT_GAME_BUDGET).unwrap();
        assert!(g.check().unwrap().is_ok());
    }
}
