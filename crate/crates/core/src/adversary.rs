//! Classical adversary for the constant-versus-`C_N` promise problem.
//!
//! The adversary answers 0 to every query. As long as at most `N/2`
//! arguments have been queried, it can still exhibit a member of `C_N` that
//! agrees with every answer, so a deterministic classical algorithm needs at
//! least `2^{n-1} + 1` queries to be certain.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{BoolFunc, MAX_BITS};

/// Widest register for which every half-size query set is enumerated.
pub const MAX_EXHAUSTIVE_BITS: usize = 3;

/// Queries made so far and the adversary's (all-zero) answers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryTranscript {
    n: usize,
    answers: BTreeMap<usize, u8>,
}

impl QueryTranscript {
    pub fn new(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(QueryTranscript {
            n,
            answers: BTreeMap::new(),
        })
    }

    /// Records a query and returns the adversary's answer.
    pub fn query(&mut self, j: usize) -> Result<u8> {
        let bound = 1usize << self.n;
        if j >= bound {
            return Err(Error::IndexOutOfRange { index: j, bound });
        }
        Ok(*self.answers.entry(j).or_insert(0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn queried(&self) -> BTreeSet<usize> {
        self.answers.keys().copied().collect()
    }

    pub fn answers(&self) -> &BTreeMap<usize, u8> {
        &self.answers
    }

    /// Whether `f` agrees with every recorded answer.
    pub fn consistent_with(&self, f: &BoolFunc) -> bool {
        f.n() == self.n && self.answers.iter().all(|(&j, &a)| f.eval(j) as u8 == a)
    }

    pub fn witness(&self) -> Result<BoolFunc> {
        cn_witness(self.n, &self.queried())
    }
}

fn check_width(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::ClassUndefined { n });
    }
    if n > MAX_BITS {
        return Err(Error::Infeasible {
            what: "adversary",
            n,
            limit: MAX_BITS,
        });
    }
    Ok(())
}

fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

/// A member of `C_N` that vanishes on every queried argument.
///
/// `j0` is the smallest unqueried argument; unqueried arguments split by the
/// parity of their Hamming distance to `j0`, and the larger class (even on a
/// tie) supplies the first `N/4` ones in ascending order.
pub fn cn_witness(n: usize, queried: &BTreeSet<usize>) -> Result<BoolFunc> {
    check_width(n)?;
    let len = 1usize << n;
    if let Some(&q) = queried.iter().next_back().filter(|&&q| q >= len) {
        return Err(Error::IndexOutOfRange { index: q, bound: len });
    }
    if queried.len() > len / 2 {
        return Err(Error::NoWitnessGuaranteed {
            queried: queried.len(),
            max: len / 2,
        });
    }
    let unchecked = || (0..len).filter(|j| !queried.contains(j));
    let j0 = unchecked().next().expect("at least N/2 arguments unqueried");
    let odd = unchecked().filter(|&k| parity(k ^ j0)).count();
    let even = len - queried.len() - odd;
    let want_odd = odd > even;
    BoolFunc::from_ones(
        n,
        unchecked()
            .filter(|&k| parity(k ^ j0) == want_odd)
            .take(len / 4),
    )
}

/// Deterministic classical query lower bound `2^{n-1} + 1`.
pub fn min_queries(n: usize) -> Result<usize> {
    check_width(n)?;
    Ok((1usize << (n - 1)) + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryFailure {
    /// Random trial index, or `None` for the exhaustive sweep.
    pub trial: Option<usize>,
    pub queried: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdversaryReport {
    pub n: usize,
    pub trials: usize,
    pub failures: Vec<AdversaryFailure>,
    pub exhaustive: bool,
    /// Number of half-size query sets covered by the exhaustive sweep.
    pub exhaustive_sets: usize,
}

impl AdversaryReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// Checks that both "constant zero" and some `C_N` member explain all-zero
/// answers on `queried`; returns the reason on failure.
fn check_query_set(n: usize, queried: &BTreeSet<usize>) -> Option<String> {
    let witness = match cn_witness(n, queried) {
        Ok(w) => w,
        Err(e) => return Some(e.to_string()),
    };
    let quarter = witness.len() / 4;
    if witness.count_ones() != quarter {
        return Some(format!("witness has {} ones", witness.count_ones()));
    }
    if !witness.is_in_cn().unwrap_or(false) {
        return Some("witness is not in C_N".into());
    }
    if let Some(q) = queried.iter().find(|&&q| witness.eval(q)) {
        return Some(format!("witness is 1 at queried argument {q}"));
    }
    None
}

/// Random query sets of size `0..=N/2` (one ChaCha stream per trial), plus
/// every set of size exactly `N/2` when `n` is small enough.
pub fn verify_adversary(n: usize, trials: usize, seed: u64) -> Result<AdversaryReport> {
    check_width(n)?;
    let len = 1usize << n;
    let mut failures: Vec<AdversaryFailure> = (0..trials)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let size = rng.random_range(0..=len / 2);
            let queried: BTreeSet<usize> =
                rand::seq::index::sample(&mut rng, len, size).into_iter().collect();
            check_query_set(n, &queried).map(|reason| AdversaryFailure {
                trial: Some(trial),
                queried: queried.into_iter().collect(),
                reason,
            })
        })
        .collect();
    failures.sort_by_key(|f| f.trial);

    let exhaustive = n <= MAX_EXHAUSTIVE_BITS;
    let mut exhaustive_sets = 0;
    if exhaustive {
        for mask in 0u32..1 << len {
            if mask.count_ones() as usize != len / 2 {
                continue;
            }
            exhaustive_sets += 1;
            let queried: BTreeSet<usize> = (0..len).filter(|j| mask >> j & 1 == 1).collect();
            if let Some(reason) = check_query_set(n, &queried) {
                failures.push(AdversaryFailure {
                    trial: None,
                    queried: queried.into_iter().collect(),
                    reason,
                });
            }
        }
    }
    Ok(AdversaryReport {
        n,
        trials,
        failures,
        exhaustive,
        exhaustive_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn witness_examples() {
        let w = cn_witness(2, &set(&[0, 1])).unwrap();
        assert_eq!(w.table(), vec![0, 0, 1, 0]);
        let w = cn_witness(2, &set(&[])).unwrap();
        assert!(w.is_in_cn().unwrap());
        assert!(matches!(
            cn_witness(2, &set(&[0, 1, 2])),
            Err(Error::NoWitnessGuaranteed { queried: 3, max: 2 })
        ));
        assert!(matches!(
            cn_witness(2, &set(&[4])),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(cn_witness(1, &set(&[])), Err(Error::ClassUndefined { n: 1 })));
    }

    #[test]
    fn min_query_examples() {
        assert_eq!(min_queries(2).unwrap(), 3);
        assert_eq!(min_queries(3).unwrap(), 5);
        assert_eq!(min_queries(10).unwrap(), 513);
        assert!(min_queries(1).is_err());
    }

    #[test]
    fn transcript_answers_zero() {
        let mut t = QueryTranscript::new(3).unwrap();
        for j in [5, 1, 5, 7] {
            assert_eq!(t.query(j).unwrap(), 0);
        }
        assert_eq!(t.queried(), set(&[1, 5, 7]));
        assert!(t.query(8).is_err());
        let w = t.witness().unwrap();
        assert!(t.consistent_with(&w));
        assert!(t.consistent_with(&BoolFunc::zeros(3).unwrap()));
        assert!(!t.consistent_with(&BoolFunc::ones(3).unwrap()));
    }

    #[test]
    fn exhaustive_small_registers() {
        let r = verify_adversary(2, 0, 0).unwrap();
        assert!(r.passed() && r.exhaustive);
        assert_eq!(r.exhaustive_sets, 6);
        let r = verify_adversary(3, 10, 0).unwrap();
        assert!(r.passed() && r.exhaustive);
        assert_eq!(r.exhaustive_sets, 70);
    }

    #[test]
    fn sampled_register() {
        let r = verify_adversary(8, 200, 42).unwrap();
        assert!(r.passed(), "{:?}", r.failures.first());
        assert!(!r.exhaustive);
        assert_eq!(r, verify_adversary(8, 200, 42).unwrap());
    }

    fn query_sets() -> impl Strategy<Value = (usize, BTreeSet<usize>)> {
        (2usize..=7).prop_flat_map(|n| {
            let len = 1usize << n;
            (Just(n), proptest::collection::btree_set(0..len, 0..=len / 2))
        })
    }

    proptest! {
        #[test]
        fn witness_structure((n, queried) in query_sets()) {
            let w = cn_witness(n, &queried).unwrap();
            let len = 1usize << n;
            prop_assert_eq!(w.count_ones(), len / 4);
            prop_assert!(w.is_in_cn().unwrap());
            prop_assert!(queried.iter().all(|&q| !w.eval(q)));
            let j0 = (0..len).find(|j| !queried.contains(j)).unwrap();
            let ones: Vec<usize> = w.ones_iter().collect();
            let p = parity(ones[0] ^ j0);
            prop_assert!(ones.iter().all(|&k| parity(k ^ j0) == p));
            for (i, &a) in ones.iter().enumerate() {
                for &b in &ones[i + 1..] {
                    prop_assert!((a ^ b).count_ones() % 2 == 0);
                }
            }
        }

        #[test]
        fn larger_parity_class_is_big_enough((n, queried) in query_sets()) {
            let len = 1usize << n;
            let j0 = (0..len).find(|j| !queried.contains(j)).unwrap();
            let odd = (0..len).filter(|k| !queried.contains(k) && parity(k ^ j0)).count();
            let even = len - queried.len() - odd;
            prop_assert!(odd.max(even) >= len / 4);
        }
    }
}
