//! Exact DP and BDP leakage ratios.
//!
//! Both suprema over output events are taken over singleton outputs: for any
//! event `E`, `P[E|a] / P[E|b]` is a mediant of the singleton ratios and so
//! never exceeds the largest of them. [`bdp_ratio_set_oracle`] keeps the
//! literal subset enumeration around to check that reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{
    assignments, subsets_excluding, AdversaryView, ConditionalCache, Fixing, JointPrior, Mechanism,
    ModelError,
};
use crate::rational::{serde_q, Ratio, Q};

/// Largest output alphabet the subset oracle will enumerate.
pub const SET_ORACLE_MAX_OUTPUTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LeakageError {
    #[error("output alphabet of {got} symbols exceeds the subset-enumeration limit of {limit}")]
    AlphabetTooLarge { got: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notion {
    Dp,
    Bdp,
    Mp,
}

/// The maximizing adversary view and output of a leakage supremum.
///
/// For DP the view fixes every other position (`S = N \ {i}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageWitness {
    pub notion: Notion,
    pub view: AdversaryView,
    pub output: usize,
    #[serde(with = "serde_q")]
    pub numerator: Q,
    #[serde(with = "serde_q")]
    pub denominator: Q,
    pub ratio: Ratio,
}

impl LeakageWitness {
    /// Recomputes both conditional probabilities from scratch and returns the
    /// resulting ratio. DP witnesses ignore `prior`.
    pub fn recompute(
        &self,
        m: &Mechanism,
        prior: Option<&JointPrior>,
    ) -> Result<Ratio, ModelError> {
        self.view.validate(m.space())?;
        let (a, b) = match (self.notion, prior) {
            (Notion::Dp, _) | (_, None) => {
                let n = m.space().n();
                if !self.view.fixing().is_complete(n) {
                    return Err(ModelError::InvalidFixing(
                        "a witness without a prior must fix every position".into(),
                    ));
                }
                (
                    m.row_of(&self.view.fixing().database(n))[self.output].clone(),
                    m.row_of(&self.view.alt_fixing().database(n))[self.output].clone(),
                )
            }
            (_, Some(prior)) => (
                crate::model::conditional_output_distribution(
                    m,
                    prior.table(),
                    &self.view.fixing(),
                )?[self.output]
                    .clone(),
                crate::model::conditional_output_distribution(
                    m,
                    prior.table(),
                    &self.view.alt_fixing(),
                )?[self.output]
                    .clone(),
            ),
        };
        if a != self.numerator || b != self.denominator {
            return Err(ModelError::InvalidFixing(
                "witness probabilities do not match the mechanism".into(),
            ));
        }
        Ok(Ratio::from_parts(&a, &b))
    }
}

/// Running maximum that keeps the first maximizer in enumeration order.
#[derive(Debug, Clone)]
pub(crate) struct MaxRatio {
    pub ratio: Ratio,
    pub witness: Option<LeakageWitness>,
}

impl MaxRatio {
    pub fn new() -> Self {
        MaxRatio {
            ratio: Ratio::one(),
            witness: None,
        }
    }

    /// Offers every output of a pair of distributions for `view`.
    pub fn offer(&mut self, notion: Notion, view: &AdversaryView, a: &[Q], b: &[Q]) {
        for (y, (pa, pb)) in a.iter().zip(b).enumerate() {
            let r = Ratio::from_parts(pa, pb);
            if self.witness.is_none() || r > self.ratio {
                self.ratio = r.clone();
                self.witness = Some(LeakageWitness {
                    notion,
                    view: view.clone(),
                    output: y,
                    numerator: pa.clone(),
                    denominator: pb.clone(),
                    ratio: r,
                });
            }
        }
    }
}

/// `R_DP`: the largest kernel ratio over databases differing in one position
/// (over the full domain, `⊥` included) and singleton outputs.
pub fn dp_ratio(m: &Mechanism) -> (Ratio, Option<LeakageWitness>) {
    let all: Vec<usize> = (0..m.space().domain().len()).collect();
    dp_ratio_over(m, &all)
}

/// `R_DP` restricted to databases whose entries all lie in `values`.
pub fn dp_ratio_over(m: &Mechanism, values: &[usize]) -> (Ratio, Option<LeakageWitness>) {
    let space = m.space();
    let n = space.n();
    let mut allowed: Vec<usize> = values
        .iter()
        .copied()
        .filter(|&v| v < space.domain().len())
        .collect();
    allowed.sort_unstable();
    allowed.dedup();
    let mut best = MaxRatio::new();
    for i in 0..n {
        let known: Vec<usize> = (0..n).filter(|&p| p != i).collect();
        for rest in assignments(n - 1, allowed.len()) {
            let rest: Vec<usize> = rest.into_iter().map(|k| allowed[k]).collect();
            for &v in &allowed {
                for &w in &allowed {
                    if v == w {
                        continue;
                    }
                    let view = AdversaryView {
                        position: i,
                        known: known.clone(),
                        value: v,
                        alt_value: w,
                        known_values: rest.clone(),
                    };
                    let a = m.row_of(&view.fixing().database(n));
                    let b = m.row_of(&view.alt_fixing().database(n));
                    best.offer(Notion::Dp, &view, a, b);
                }
            }
        }
    }
    (best.ratio, best.witness)
}

/// Result of a BDP supremum: the ratio `e^{BDPL}`, the view attaining it, and
/// the fixings excluded because their conditioning event has zero mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BdpLeakage {
    pub ratio: Ratio,
    pub witness: Option<LeakageWitness>,
    pub skipped: Vec<Fixing>,
}

/// `R_BDP` over every adversary `A(i, S)`, every supported pair of values for
/// position `i` (`⊥` included), every `x_S`, and singleton outputs.
pub fn bdp_ratio(m: &Mechanism, prior: &JointPrior) -> Result<BdpLeakage, ModelError> {
    let cache = ConditionalCache::build(m, prior.table())?;
    Ok(bdp_ratio_cached(m, &cache, None))
}

/// `R_BDP` restricted to a single adversary `A(i, S)`.
pub fn bdp_ratio_for_adversary(
    m: &Mechanism,
    prior: &JointPrior,
    position: usize,
    known: &[usize],
) -> Result<BdpLeakage, ModelError> {
    let mut known = known.to_vec();
    known.sort_unstable();
    Fixing::new(position, 0, known.clone(), vec![0; known.len()]).validate(m.space())?;
    let cache = ConditionalCache::build(m, prior.table())?;
    Ok(bdp_ratio_cached(m, &cache, Some((position, known))))
}

pub(crate) fn bdp_ratio_cached(
    m: &Mechanism,
    cache: &ConditionalCache,
    only: Option<(usize, Vec<usize>)>,
) -> BdpLeakage {
    let n = m.space().n();
    let d = m.space().domain().len();
    let mut best = MaxRatio::new();
    let mut skipped = Vec::new();
    for i in 0..n {
        for known in subsets_excluding(n, i) {
            if let Some((oi, ok)) = &only {
                if *oi != i || *ok != known {
                    continue;
                }
            }
            for xs in assignments(known.len(), d) {
                let dists: Vec<Option<&[Q]>> = (0..d)
                    .map(|v| {
                        let f = Fixing::new(i, v, known.clone(), xs.clone());
                        let r = cache.get(&f);
                        if r.is_none() {
                            skipped.push(f);
                        }
                        r
                    })
                    .collect();
                for v in 0..d {
                    for w in 0..d {
                        if v == w {
                            continue;
                        }
                        if let (Some(a), Some(b)) = (dists[v], dists[w]) {
                            let view = AdversaryView {
                                position: i,
                                known: known.clone(),
                                value: v,
                                alt_value: w,
                                known_values: xs.clone(),
                            };
                            best.offer(Notion::Bdp, &view, a, b);
                        }
                    }
                }
            }
        }
    }
    if !skipped.is_empty() {
        log::debug!("bdp_ratio: {} unreachable fixings skipped", skipped.len());
    }
    BdpLeakage {
        ratio: best.ratio,
        witness: best.witness,
        skipped,
    }
}

/// The literal BDPL supremum: every adversary view and every output *set*.
///
/// Each pair of conditional distributions is rescaled to integers with a shared
/// denominator, so subset sums and ratio comparisons are exact integer work.
pub fn bdp_ratio_set_oracle(m: &Mechanism, prior: &JointPrior) -> Result<Ratio, LeakageError> {
    let k = m.output_count();
    if k > SET_ORACLE_MAX_OUTPUTS {
        return Err(LeakageError::AlphabetTooLarge {
            got: k,
            limit: SET_ORACLE_MAX_OUTPUTS,
        });
    }
    let space = m.space();
    let n = space.n();
    let d = space.domain().len();
    // Best ratio as an integer fraction; `den == 0` with `num > 0` is +∞.
    let mut best_num = BigInt::one();
    let mut best_den = BigInt::one();
    let mut sums_a = vec![BigInt::zero(); 1 << k];
    let mut sums_b = vec![BigInt::zero(); 1 << k];
    for i in 0..n {
        for known in subsets_excluding(n, i) {
            for xs in assignments(known.len(), d) {
                let dists: Vec<Option<Vec<Q>>> = (0..d)
                    .map(|v| {
                        crate::model::conditional_output_distribution(
                            m,
                            prior.table(),
                            &Fixing::new(i, v, known.clone(), xs.clone()),
                        )
                        .ok()
                    })
                    .collect();
                for v in 0..d {
                    for w in (v + 1)..d {
                        let (Some(a), Some(b)) = (&dists[v], &dists[w]) else {
                            continue;
                        };
                        let lcm = a
                            .iter()
                            .chain(b.iter())
                            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                        let ia: Vec<BigInt> =
                            a.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
                        let ib: Vec<BigInt> =
                            b.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
                        for mask in 1usize..(1 << k) {
                            let low = mask.trailing_zeros() as usize;
                            let prev = mask & (mask - 1);
                            sums_a[mask] = &sums_a[prev] + &ia[low];
                            sums_b[mask] = &sums_b[prev] + &ib[low];
                            for (num, den) in [
                                (&sums_a[mask], &sums_b[mask]),
                                (&sums_b[mask], &sums_a[mask]),
                            ] {
                                if num.is_zero() {
                                    // 0/0 = 1 and 0/x = 0 never beat the running max (≥ 1).
                                    continue;
                                }
                                let better = if best_den.is_zero() {
                                    false
                                } else if den.is_zero() {
                                    true
                                } else {
                                    num * &best_den > &best_num * den
                                };
                                if better {
                                    best_num = num.clone();
                                    best_den = den.clone();
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(if best_den.is_zero() {
        Ratio::Infinite
    } else {
        Ratio::finite(Q::new(best_num, best_den))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Database, DatabaseSpace, ProbTable, ValueDomain};
    use crate::rational::{q, q_int};

    fn space(k: usize, n: usize) -> DatabaseSpace {
        DatabaseSpace::new(ValueDomain::numeric_with_default(k), n).unwrap()
    }

    fn outputs(k: usize) -> Vec<String> {
        (0..k).map(|y| format!("y{y}")).collect()
    }

    /// Releases position `pos` through binary randomized response with flip ¼;
    /// `⊥` is reported as a fair coin.
    fn noisy_position(n: usize, pos: usize) -> Mechanism {
        Mechanism::from_fn(space(2, n), outputs(2), |db| match db.0[pos] {
            0 => vec![q(3, 4), q(1, 4)],
            1 => vec![q(1, 4), q(3, 4)],
            _ => vec![q(1, 2), q(1, 2)],
        })
        .unwrap()
    }

    fn uniform_prior(s: &DatabaseSpace) -> JointPrior {
        let p = q(1, s.size() as i64);
        JointPrior::new(ProbTable::new(s.clone(), s.databases().map(|db| (db, p.clone()))).unwrap())
    }

    #[test]
    fn constant_mechanism_has_unit_ratios() {
        let s = space(2, 2);
        let m =
            Mechanism::from_fn(s.clone(), outputs(3), |_| vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        assert_eq!(dp_ratio(&m).0, Ratio::one());
        assert_eq!(
            bdp_ratio(&m, &uniform_prior(&s)).unwrap().ratio,
            Ratio::one()
        );
        assert_eq!(
            bdp_ratio_set_oracle(&m, &uniform_prior(&s)).unwrap(),
            Ratio::one()
        );
    }

    #[test]
    fn identity_mechanism_is_infinite() {
        let s = space(1, 1);
        let m = Mechanism::from_fn(s, outputs(2), |db| {
            let mut r = vec![Q::zero(), Q::zero()];
            r[db.0[0]] = Q::one();
            r
        })
        .unwrap();
        let (r, w) = dp_ratio(&m);
        assert_eq!(r, Ratio::Infinite);
        assert_eq!(w.unwrap().recompute(&m, None).unwrap(), Ratio::Infinite);
    }

    #[test]
    fn correlation_transfers_leakage() {
        let m = noisy_position(2, 1);
        let s = m.space().clone();
        let prior = JointPrior::new(
            ProbTable::new(
                s,
                [
                    (Database(vec![0, 0]), q(1, 2)),
                    (Database(vec![1, 1]), q(1, 2)),
                ],
            )
            .unwrap(),
        );
        let res = bdp_ratio_for_adversary(&m, &prior, 0, &[]).unwrap();
        assert_eq!(res.ratio, Ratio::finite(q_int(3)));
        let w = res.witness.unwrap();
        assert_eq!((w.view.value, w.view.alt_value, w.output), (0, 1, 0));
        assert_eq!(w.recompute(&m, Some(&prior)).unwrap(), w.ratio);
    }

    #[test]
    fn witness_ties_break_by_enumeration_order() {
        let m = noisy_position(1, 0);
        let (r, w) = dp_ratio(&m);
        assert_eq!(r, Ratio::finite(q_int(3)));
        let w = w.unwrap();
        assert_eq!(
            (w.view.position, w.view.value, w.view.alt_value, w.output),
            (0, 0, 1, 0)
        );
    }

    #[test]
    fn oracle_guard_and_small_cases() {
        let s = space(1, 1);
        let single = Mechanism::from_fn(s.clone(), outputs(1), |_| vec![Q::one()]).unwrap();
        assert_eq!(
            bdp_ratio_set_oracle(&single, &uniform_prior(&s)).unwrap(),
            Ratio::one()
        );
        let m = noisy_position(1, 0);
        let prior = uniform_prior(m.space());
        assert_eq!(
            bdp_ratio_set_oracle(&m, &prior).unwrap(),
            Ratio::finite(q_int(3))
        );
        let big = Mechanism::from_fn(s.clone(), outputs(13), |_| {
            let mut r = vec![Q::zero(); 13];
            r[0] = Q::one();
            r
        })
        .unwrap();
        assert!(matches!(
            bdp_ratio_set_oracle(&big, &uniform_prior(&s)),
            Err(LeakageError::AlphabetTooLarge { got: 13, .. })
        ));
    }

    #[test]
    fn skipped_views_are_listed() {
        let m = noisy_position(2, 1);
        let prior = JointPrior::new(
            ProbTable::new(m.space().clone(), [(Database(vec![0, 0]), Q::one())]).unwrap(),
        );
        let res = bdp_ratio(&m, &prior).unwrap();
        assert!(res.skipped.contains(&Fixing::new(0, 1, vec![], vec![])));
    }
}
