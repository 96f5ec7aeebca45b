use num_bigint::BigUint;
use num_rational::Ratio;
use rand::Rng;

use super::{LearnInstance, LearnMode, LearnerOutput, SurvivorState};
use crate::bits::BitString;
use crate::circuit::majority_compose;
use crate::error::LabError;
use crate::np::{FnQuery, NpEngine, TargetOracle};

/// Verification attempts before giving up; each attempt fails with probability
/// well below 1/2 once no hard input remains.
const MAX_RESAMPLES: u64 = 10_000;

/// One oracle round: the least input on which at least a `theta` fraction of
/// the survivors disagree with `f`.
pub fn find_hard_input(
    st: &SurvivorState,
    f: &TargetOracle,
    theta: Ratio<u64>,
    engine: &NpEngine,
) -> crate::Result<Option<u64>> {
    let total = st.total();
    let (num, den) = (*theta.numer(), *theta.denom());
    let q = FnQuery::new(st.n(), |w: &BitString| {
        let x = w.to_u64();
        st.failing(x, f.query(x)) as u128 * den as u128 >= num as u128 * total as u128
    });
    Ok(engine.decide(&q)?.witness.map(|w| w.to_u64()))
}

/// `ceil(log_{1/(1-theta)} total)`: the least `k` with `(1/(1-theta))^k >= total`.
pub fn adaptive_round_bound(total: u64, theta: Ratio<u64>) -> u64 {
    let (a, b) = (*theta.numer(), *theta.denom());
    assert!(a > 0 && a < b, "theta must lie in (0, 1)");
    let (mut lhs, mut rhs) = (BigUint::from(1u8), BigUint::from(total));
    let mut k = 0;
    while lhs < rhs {
        lhs *= b;
        rhs *= b - a;
        k += 1;
    }
    k
}

/// Cull survivors until no hard input remains, then output the majority of
/// `samples` survivors drawn uniformly, resampling until it matches `f`
/// everywhere.
pub fn learn_adaptive<R: Rng + ?Sized>(
    inst: &LearnInstance,
    samples: usize,
    rng: &mut R,
) -> crate::Result<LearnerOutput> {
    if samples.is_multiple_of(2) {
        return Err(LabError::Arity(samples));
    }
    let engine = inst.engine();
    let mut st = SurvivorState::new(inst.n, inst.s);
    let class_size = st.total();
    let mut rounds = 0;
    // with no survivors every input passes the culling test vacuously
    while st.total() > 0 {
        rounds += 1;
        match find_hard_input(&st, &inst.f, inst.theta, &engine)? {
            Some(x) => st.observe(x, inst.f.query(x)),
            None => break,
        }
    }
    if st.total() == 0 {
        return Err(LabError::Instance(format!(
            "no circuit of size at most {} agrees with the target",
            inst.s
        )));
    }
    for retries in 0..MAX_RESAMPLES {
        let voters: Vec<_> = (0..samples).map(|_| st.sample(rng).expect("survivors nonempty")).collect();
        let candidate = majority_compose(&voters)?;
        let exact = (0..1u64 << inst.n).all(|x| candidate.eval_index(x) == inst.f.query(x));
        if exact {
            let mut out = LearnerOutput::new(LearnMode::Adaptive, inst, candidate, engine.ledger(), class_size);
            out.rounds = rounds;
            out.retries = retries;
            return Ok(out);
        }
    }
    Err(LabError::InternalInvariant(format!("no exact majority after {MAX_RESAMPLES} samples")))
}
