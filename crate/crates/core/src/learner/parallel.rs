use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::{LearnInstance, LearnMode, LearnerOutput, SurvivorState};
use crate::bits::BitString;
use crate::circuit::{CanonicalEncoding, Circuit, ClassTable};
use crate::error::{LabError, SearchBudgetError};
use crate::np::{Answer, NpEngine, WitnessQuery};

/// Most input-list nodes one search may expand.
const NODE_BUDGET: usize = 4_000_000;

/// An input list `X_t` together with the target's values on it.
///
/// As a bit string: the `t` inputs as `n`-bit blocks, then the `t` values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: Vec<u64>,
    pub values: Vec<bool>,
}

impl Witness {
    pub fn to_bits(&self, n: usize) -> BitString {
        let mut bits = BitString::default();
        for &x in &self.inputs {
            bits.push_uint(x, n);
        }
        for &v in &self.values {
            bits.push(v);
        }
        bits
    }

    pub fn from_bits(n: usize, bits: &BitString) -> Option<Witness> {
        let t = bits.len() / (n + 1);
        if t * (n + 1) != bits.len() {
            return None;
        }
        let inputs = (0..t).map(|i| bits.read_uint(i * n, n)).collect();
        let values = (0..t).map(|i| bits.get(t * n + i)).collect();
        Some(Witness { inputs, values })
    }

    /// Survivors after the list, if every listed value matches the target.
    fn survivors(&self, inst: &LearnInstance, table: &Arc<ClassTable>) -> Option<SurvivorState> {
        let mut st = SurvivorState::from_table(table.clone());
        for (&x, &v) in self.inputs.iter().zip(&self.values) {
            if inst.f.query(x) != v {
                return None;
            }
            st.observe(x, v);
        }
        Some(st)
    }
}

/// Largest `t` with `(3/2)^t <= total`: no list longer than this can shrink a
/// class of `total` circuits by 2/3 at every step while leaving one survivor.
pub fn max_list_length(total: u64) -> usize {
    let (mut pow3, mut bound) = (1u128, total as u128);
    let mut t = 0;
    while pow3 * 3 <= bound * 2 {
        pow3 *= 3;
        bound *= 2;
        t += 1;
    }
    t
}

/// Whether every prefix of the list shrinks the survivors to at most 2/3.
fn shrinks_everywhere(st: &SurvivorState) -> bool {
    st.counts().windows(2).all(|w| 3 * w[1] <= 2 * w[0])
}

struct Node {
    parent: u32,
    depth: u32,
    x: u64,
    /// No survivors: every extension is accepted and changes nothing.
    saturated: bool,
    /// Class index whose function is the survivors' majority, if in the class.
    circuit: Option<u32>,
}

/// Every accepted input list up to the depth limit, in lexicographic
/// (preorder) order, with the lexicographically first accepted list per length
/// and per (length, set encoding bit).
struct Forest {
    nodes: Vec<Node>,
    values: Vec<bool>,
    first: Vec<Option<u32>>,
    first_with_bit: Vec<Vec<Option<u32>>>,
}

struct Context<'a> {
    inst: &'a LearnInstance,
    table: Arc<ClassTable>,
    enc: CanonicalEncoding,
    depth: usize,
    forest: OnceLock<Result<Forest, SearchBudgetError>>,
}

impl<'a> Context<'a> {
    fn new(inst: &'a LearnInstance, depth: Option<usize>) -> Context<'a> {
        let table = crate::circuit::class_table(inst.n, inst.s);
        let depth = depth.unwrap_or_else(|| max_list_length(table.total()));
        Context { inst, table, enc: CanonicalEncoding::new(inst.n, inst.s), depth, forest: OnceLock::new() }
    }

    fn forest(&self) -> Result<&Forest, SearchBudgetError> {
        self.forest.get_or_init(|| self.build()).as_ref().map_err(Clone::clone)
    }

    fn build(&self) -> Result<Forest, SearchBudgetError> {
        let n = self.inst.n;
        let values: Vec<bool> = (0..1u64 << n).map(|x| self.inst.f.query(x)).collect();
        let mut nodes = Vec::new();
        let root = SurvivorState::from_table(self.table.clone());
        self.visit(&root, u32::MAX, 0, &values, &mut nodes)?;

        let mut encodings: HashMap<u32, BitString> = HashMap::new();
        let len = self.enc.len();
        let mut first = vec![None; self.depth + 1];
        let mut first_with_bit = vec![vec![None; len]; self.depth + 1];
        for (idx, node) in nodes.iter().enumerate() {
            let d = node.depth as usize;
            let reach = if node.saturated { self.depth } else { d };
            let bits = node.circuit.map(|c| {
                encodings
                    .entry(c)
                    .or_insert_with(|| {
                        self.enc.encode(&self.table.classes[c as usize].first).expect("class member fits")
                    })
                    .clone()
            });
            for t in d..=reach {
                first[t].get_or_insert(idx as u32);
                if let Some(bits) = &bits {
                    for (j, slot) in first_with_bit[t].iter_mut().enumerate() {
                        if bits.get(j) {
                            slot.get_or_insert(idx as u32);
                        }
                    }
                }
            }
        }
        Ok(Forest { nodes, values, first, first_with_bit })
    }

    fn visit(
        &self,
        st: &SurvivorState,
        parent: u32,
        depth: usize,
        values: &[bool],
        nodes: &mut Vec<Node>,
    ) -> Result<(), SearchBudgetError> {
        if nodes.len() >= NODE_BUDGET {
            return Err(SearchBudgetError::Nodes(NODE_BUDGET as u64));
        }
        let total = st.total();
        let saturated = total == 0;
        let circuit = self.table.position(st.majority_table()).map(|i| i as u32);
        let x = st.inputs().last().copied().unwrap_or(0);
        let idx = nodes.len() as u32;
        nodes.push(Node { parent, depth: depth as u32, x, saturated, circuit });
        if saturated || depth == self.depth {
            return Ok(());
        }
        for x in 0..1u64 << self.inst.n {
            let v = values[x as usize];
            if 3 * st.count_after(x, v) <= 2 * total {
                let mut child = st.clone();
                child.observe(x, v);
                self.visit(&child, idx, depth + 1, values, nodes)?;
            }
        }
        Ok(())
    }

    /// The list ending at `idx`, padded with input 0 up to length `t`.
    fn witness(&self, forest: &Forest, idx: u32, t: usize) -> Witness {
        let mut inputs = Vec::new();
        let mut at = idx;
        while at != u32::MAX {
            let node = &forest.nodes[at as usize];
            if node.depth > 0 {
                inputs.push(node.x);
            }
            at = node.parent;
        }
        inputs.reverse();
        inputs.resize(t, 0);
        let values = inputs.iter().map(|&x| forest.values[x as usize]).collect();
        Witness { inputs, values }
    }

    /// The circuit determined by an accepted list: the first class member
    /// computing the survivors' majority.
    fn circuit_for(&self, w: &Witness) -> Option<Circuit> {
        let st = w.survivors(self.inst, &self.table)?;
        self.table.class_of(st.majority_table()).map(|c| c.first.clone())
    }

    fn list_holds(&self, w: &BitString, t: usize) -> Option<Witness> {
        let z = Witness::from_bits(self.inst.n, w).filter(|z| z.inputs.len() == t)?;
        let st = z.survivors(self.inst, &self.table)?;
        shrinks_everywhere(&st).then_some(z)
    }
}

/// "Some list of length `t` shrinks the survivors by 2/3 at every step."
struct ListQuery<'c, 'a> {
    ctx: &'c Context<'a>,
    t: usize,
}

impl WitnessQuery for ListQuery<'_, '_> {
    fn witness_len(&self) -> usize {
        self.t * (self.ctx.inst.n + 1)
    }

    fn holds(&self, w: &BitString) -> bool {
        self.ctx.list_holds(w, self.t).is_some()
    }

    fn search(&self, _cap: usize) -> Result<Option<BitString>, SearchBudgetError> {
        let forest = self.ctx.forest()?;
        let hit = forest.first.get(self.t).copied().flatten();
        Ok(hit.map(|idx| self.ctx.witness(forest, idx, self.t).to_bits(self.ctx.inst.n)))
    }
}

/// "Some accepted list of length `t` determines a circuit whose encoding has
/// bit `j` (1-based) set."
struct BitQuery<'c, 'a> {
    ctx: &'c Context<'a>,
    t: usize,
    j: usize,
}

impl WitnessQuery for BitQuery<'_, '_> {
    fn witness_len(&self) -> usize {
        self.t * (self.ctx.inst.n + 1)
    }

    fn holds(&self, w: &BitString) -> bool {
        let Some(z) = self.ctx.list_holds(w, self.t) else { return false };
        self.ctx
            .circuit_for(&z)
            .and_then(|c| self.ctx.enc.bit(&c, self.j).ok())
            .unwrap_or(false)
    }

    fn search(&self, _cap: usize) -> Result<Option<BitString>, SearchBudgetError> {
        let forest = self.ctx.forest()?;
        let hit = forest.first_with_bit.get(self.t).and_then(|row| row[self.j - 1]);
        Ok(hit.map(|idx| self.ctx.witness(forest, idx, self.t).to_bits(self.ctx.inst.n)))
    }
}

/// All list queries `t = 0..=depth`, then all bit queries in order of `t`, `j`.
fn query_set<'c, 'a>(ctx: &'c Context<'a>) -> Vec<Box<dyn WitnessQuery + 'c>> {
    let mut qs: Vec<Box<dyn WitnessQuery + 'c>> = Vec::new();
    for t in 0..=ctx.depth {
        qs.push(Box::new(ListQuery { ctx, t }));
    }
    for t in 0..=ctx.depth {
        for j in 1..=ctx.enc.len() {
            qs.push(Box::new(BitQuery { ctx, t, j }));
        }
    }
    qs
}

/// Read `t*` and the circuit bits off a full set of answers.
fn assemble(ctx: &Context, accepted: &[bool]) -> crate::Result<(usize, Circuit)> {
    let levels = ctx.depth + 1;
    let t_star = (0..levels).rev().find(|&t| accepted[t]).ok_or_else(|| {
        LabError::InternalInvariant("the empty list must always be accepted".into())
    })?;
    let len = ctx.enc.len();
    let start = levels + t_star * len;
    let bits = BitString::from_bits(accepted[start..start + len].to_vec());
    let circuit = ctx.enc.decode(&bits).map_err(|e| {
        LabError::Instance(format!("no circuit of size at most {} fits the target ({e})", ctx.inst.s))
    })?;
    Ok((t_star, circuit))
}

/// Accept/reject for one list length, with every accepted list. One query.
pub fn qt_accepts(inst: &LearnInstance, t: usize) -> crate::Result<(bool, Vec<Witness>)> {
    let ctx = Context::new(inst, Some(t));
    let engine = inst.engine();
    let answer = engine.decide(&ListQuery { ctx: &ctx, t })?;
    let forest = ctx.forest()?;
    let mut all = Vec::new();
    for (idx, node) in forest.nodes.iter().enumerate() {
        let d = node.depth as usize;
        if d == t {
            all.push(ctx.witness(forest, idx as u32, t));
        } else if node.saturated && d < t {
            // every extension of a dead list is accepted
            let prefix = ctx.witness(forest, idx as u32, d);
            let free = t - d;
            for code in 0u64..1 << (inst.n * free) {
                let mut inputs = prefix.inputs.clone();
                inputs.extend((0..free).map(|k| (code >> ((free - 1 - k) * inst.n)) & ((1 << inst.n) - 1)));
                let values = inputs.iter().map(|&x| forest.values[x as usize]).collect();
                all.push(Witness { inputs, values });
            }
        }
    }
    Ok((answer.accepted, all))
}

/// The survivors' vote at `x` after list `z`: strict majority, ties give 0.
pub fn at_predicate(inst: &LearnInstance, z: &Witness, x: u64) -> crate::Result<bool> {
    let table = crate::circuit::class_table(inst.n, inst.s);
    let st = z
        .survivors(inst, &table)
        .ok_or_else(|| LabError::Instance("witness values disagree with the target".into()))?;
    if st.total() == 0 {
        return Err(LabError::Instance("no survivors after the witness list".into()));
    }
    Ok(st.majority_table().get(x))
}

/// The first circuit of the class agreeing with the vote after `z` everywhere.
pub fn lex_circuit(inst: &LearnInstance, z: &Witness) -> crate::Result<Circuit> {
    let ctx = Context::new(inst, Some(0));
    ctx.circuit_for(z)
        .ok_or_else(|| LabError::Instance("no class member agrees with the survivors' vote".into()))
}

/// Every question in one batch; the output is the first circuit of size at most
/// `s` computing `f` in encoding order.
pub fn learn_parallel(inst: &LearnInstance) -> crate::Result<LearnerOutput> {
    let ctx = Context::new(inst, None);
    let engine = inst.engine();
    let qs = query_set(&ctx);
    let refs: Vec<&dyn WitnessQuery> = qs.iter().map(|q| q.as_ref()).collect();
    let answers = engine.decide_batch(&refs)?;
    let accepted: Vec<bool> = answers.iter().map(|a| a.accepted).collect();
    let (t_star, circuit) = assemble(&ctx, &accepted)?;
    let mut out = LearnerOutput::new(LearnMode::Parallel, inst, circuit, engine.ledger(), ctx.table.total());
    out.t_star = Some(t_star);
    Ok(out)
}

/// "At least `k` of the queries have witnesses", witnessed by the first `k`
/// positive queries in order together with their least witnesses. With `k`
/// equal to the true number of positives the witness names exactly the
/// positive set.
struct PositiveSetQuery<'q> {
    queries: &'q [&'q dyn WitnessQuery],
    k: usize,
    index_bits: usize,
    slot: usize,
}

impl<'q> PositiveSetQuery<'q> {
    fn new(queries: &'q [&'q dyn WitnessQuery], k: usize) -> Self {
        let index_bits = bit_length(queries.len() as u64) as usize;
        let slot = queries.iter().map(|q| q.witness_len()).max().unwrap_or(0);
        PositiveSetQuery { queries, k, index_bits, slot }
    }

    fn parse(&self, w: &BitString) -> Option<Vec<usize>> {
        let block = self.index_bits + self.slot;
        let mut picked: Vec<usize> = Vec::with_capacity(self.k);
        for b in 0..self.k {
            let at = b * block;
            let idx = w.read_uint(at, self.index_bits) as usize;
            let q = self.queries.get(idx)?;
            if picked.last().is_some_and(|&p| p >= idx) {
                return None;
            }
            let len = q.witness_len();
            let body = &w.bits()[at + self.index_bits..at + block];
            if body[len..].iter().any(|&bit| bit) || !q.holds(&BitString::from_bits(body[..len].to_vec())) {
                return None;
            }
            picked.push(idx);
        }
        Some(picked)
    }
}

impl WitnessQuery for PositiveSetQuery<'_> {
    fn witness_len(&self) -> usize {
        self.k * (self.index_bits + self.slot)
    }

    fn holds(&self, w: &BitString) -> bool {
        w.len() == self.witness_len() && self.parse(w).is_some()
    }

    fn search(&self, cap: usize) -> Result<Option<BitString>, SearchBudgetError> {
        let mut w = BitString::default();
        let mut found = 0;
        for (idx, q) in self.queries.iter().enumerate() {
            if found == self.k {
                break;
            }
            if let Some(body) = q.search(cap)? {
                w.push_uint(idx as u64, self.index_bits);
                for &bit in body.bits() {
                    w.push(bit);
                }
                w.push_uint(0, self.slot - body.len());
                found += 1;
            }
        }
        Ok((found == self.k).then_some(w))
    }
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// The parallel learner run from an advice count: the number of positive
/// answers among its queries. One query naming that many positives recovers
/// every answer, and with them the same circuit.
pub fn learn_nplog(inst: &LearnInstance) -> crate::Result<LearnerOutput> {
    let ctx = Context::new(inst, None);
    let qs = query_set(&ctx);
    let refs: Vec<&dyn WitnessQuery> = qs.iter().map(|q| q.as_ref()).collect();

    // the advice itself, computed here by a reference engine
    let advice = NpEngine::default().decide_batch(&refs)?.iter().filter(|a| a.accepted).count();

    let engine = inst.engine();
    let set = PositiveSetQuery::new(&refs, advice);
    let Answer { witness, .. } = engine.decide(&set)?;
    let witness = witness.ok_or_else(|| LabError::InternalInvariant("advice count not witnessed".into()))?;
    let positives = set.parse(&witness).expect("search returns a valid witness");
    let mut accepted = vec![false; refs.len()];
    for idx in positives {
        accepted[idx] = true;
    }
    let (t_star, circuit) = assemble(&ctx, &accepted)?;
    let mut out = LearnerOutput::new(LearnMode::Nplog, inst, circuit, engine.ledger(), ctx.table.total());
    out.t_star = Some(t_star);
    out.advice = Some(advice as u64);
    out.advice_bits = Some(bit_length(refs.len() as u64));
    Ok(out)
}
