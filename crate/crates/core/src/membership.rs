//! Membership privacy (MP) over two-component mixture families.
//!
//! A scenario fixes a target position `i`, two values for it and a set `K` of
//! known positions. Its distribution is
//! `p·θ(·|X_i = x_i, X_K = x_K) + (1−p)·θ(·|X_i = x_i', X_K = x_K)`.
//! A component whose value is `⊥` is `θ(·|X_K = x_K)` with position `i`
//! overwritten by `⊥`; when `K` covers every other position a component is a
//! point mass and needs no prior mass.
//!
//! The membership bounds `P[x_i|𝒴] ≤ R·P[x_i]` and `P[x̄_i|𝒴] ≥ P[x̄_i]/R` hold
//! for every output set `𝒴` iff the largest singleton likelihood ratio `A`
//! satisfies `A ≤ g(p)`. [`mp_check_analytic`] uses that characterization and
//! [`mp_check_direct`] enumerates every subset.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{
    assignments, conditional_output_distribution, subsets_excluding, DatabaseSpace, Fixing,
    JointPrior, Mechanism, ModelError,
};
use crate::rational::{q, serde_q, Ratio, Q};

/// Largest output alphabet [`mp_check_direct`] will enumerate subsets of.
pub const DIRECT_CHECK_MAX_OUTPUTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MembershipError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario component {0} has zero prior mass")]
    Unreachable(String),
    #[error("mixing weight {0} is outside (0, 1)")]
    WeightOutOfRange(String),
    #[error("output alphabet has {got} symbols; subset enumeration is limited to {limit}")]
    AlphabetTooLarge { got: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One member `𝒟_{i,K}` of the mixture family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MembershipScenario {
    pub position: usize,
    pub target_value: usize,
    pub alt_value: usize,
    pub known: Vec<usize>,
    pub known_values: Vec<usize>,
    #[serde(with = "serde_q")]
    pub p: Q,
}

impl MembershipScenario {
    pub fn target_fixing(&self) -> Fixing {
        Fixing::new(
            self.position,
            self.target_value,
            self.known.clone(),
            self.known_values.clone(),
        )
    }

    pub fn alt_fixing(&self) -> Fixing {
        Fixing::new(
            self.position,
            self.alt_value,
            self.known.clone(),
            self.known_values.clone(),
        )
    }

    /// Checks the structural invariants and that both components are reachable.
    pub fn validate(
        &self,
        space: &DatabaseSpace,
        prior: &JointPrior,
    ) -> Result<(), MembershipError> {
        if self.target_value == self.alt_value {
            return Err(MembershipError::InvalidScenario(
                "target and alternative values coincide".into(),
            ));
        }
        check_weight(&self.p)?;
        self.target_fixing().validate(space)?;
        self.alt_fixing().validate(space)?;
        component(space, prior, &self.target_fixing())?;
        component(space, prior, &self.alt_fixing())?;
        Ok(())
    }

    pub fn describe(&self, space: &DatabaseSpace) -> String {
        let dom = space.domain();
        format!(
            "X{}={} vs X{}={} given {} (p={})",
            self.position + 1,
            dom.symbol(self.target_value),
            self.position + 1,
            dom.symbol(self.alt_value),
            self.target_fixing().describe(space),
            self.p
        )
    }
}

fn check_weight(p: &Q) -> Result<(), MembershipError> {
    if *p <= Q::zero() || *p >= Q::one() {
        return Err(MembershipError::WeightOutOfRange(p.to_string()));
    }
    Ok(())
}

/// `g(b)`: `(1−b)/(R⁻¹−b)` for `b ≤ 1/(1+R)`, else `(R−1+b)/b`.
///
/// Its minimum over `[0, 1]` is `R`, attained only at `b ∈ {0, 1}`.
pub fn g_function(b: &Q, r: &Ratio) -> Ratio {
    let rv = match r {
        Ratio::Infinite => return Ratio::Infinite,
        Ratio::Finite(v) => v,
    };
    let breakpoint = (Q::one() + rv).recip();
    if *b <= breakpoint {
        let den = rv.recip() - b;
        Ratio::from_parts(&(Q::one() - b), &den)
    } else {
        Ratio::from_parts(&(rv - Q::one() + b), b)
    }
}

/// The distribution over database indices of one scenario component,
/// computed straight from the prior table.
fn component(
    space: &DatabaseSpace,
    prior: &JointPrior,
    fixing: &Fixing,
) -> Result<BTreeMap<usize, Q>, MembershipError> {
    let n = space.n();
    let mut dist = BTreeMap::new();
    if fixing.is_complete(n) {
        dist.insert(space.index_of(&fixing.database(n)), Q::one());
        return Ok(dist);
    }
    let bottom = space.default_value();
    let mut mass = Q::zero();
    for (idx, w) in prior.probs().iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let db = space.database(idx);
        if fixing
            .known
            .iter()
            .zip(&fixing.known_values)
            .any(|(&p, &v)| db.0[p] != v)
        {
            continue;
        }
        let fed = if fixing.value == bottom {
            space.substitute(idx, fixing.position, bottom)
        } else if db.0[fixing.position] == fixing.value {
            idx
        } else {
            continue;
        };
        mass += w;
        *dist.entry(fed).or_insert_with(Q::zero) += w;
    }
    if mass.is_zero() {
        return Err(MembershipError::Unreachable(fixing.describe(space)));
    }
    for w in dist.values_mut() {
        *w /= &mass;
    }
    Ok(dist)
}

/// `P[Y = y | component]` for every output.
fn component_outputs(m: &Mechanism, dist: &BTreeMap<usize, Q>) -> Vec<Q> {
    let mut out = vec![Q::zero(); m.output_count()];
    for (&idx, w) in dist {
        for (o, p) in out.iter_mut().zip(m.row(idx)) {
            *o += w * p;
        }
    }
    out
}

/// Output law of a scenario's mixture: `(P[Y=·|x_i], P[Y=·|x̄_i])`.
pub fn scenario_output_distributions(
    m: &Mechanism,
    prior: &JointPrior,
    s: &MembershipScenario,
) -> Result<(Vec<Q>, Vec<Q>), MembershipError> {
    s.validate(m.space(), prior)?;
    let a = component(m.space(), prior, &s.target_fixing())?;
    let b = component(m.space(), prior, &s.alt_fixing())?;
    Ok((component_outputs(m, &a), component_outputs(m, &b)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyticVerdict {
    pub pass: bool,
    /// Largest singleton ratio `P[y|x_i] / P[y|x̄_i]`.
    pub statistic: Ratio,
    pub output: Option<usize>,
    /// `g(p)` at the scenario's mixing weight.
    pub bound: Ratio,
}

/// Checks `A ≤ g(p)` with `A` taken from the conditional output distributions.
pub fn mp_check_analytic(
    m: &Mechanism,
    prior: &JointPrior,
    s: &MembershipScenario,
    r: &Ratio,
) -> Result<AnalyticVerdict, MembershipError> {
    s.validate(m.space(), prior)?;
    let map = |e: ModelError| match e {
        ModelError::ZeroMass(d) => MembershipError::Unreachable(d),
        other => MembershipError::Model(other),
    };
    let a = conditional_output_distribution(m, prior.table(), &s.target_fixing()).map_err(map)?;
    let b = conditional_output_distribution(m, prior.table(), &s.alt_fixing()).map_err(map)?;
    let mut statistic = Ratio::zero();
    let mut output = None;
    for (y, (ay, by)) in a.iter().zip(&b).enumerate() {
        let r = Ratio::from_parts(ay, by);
        if output.is_none() || r > statistic {
            statistic = r;
            output = Some(y);
        }
    }
    let bound = g_function(&s.p, r);
    Ok(AnalyticVerdict {
        pass: statistic <= bound,
        statistic,
        output,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectVerdict {
    pub pass: bool,
    /// `max_𝒴 P[x_i|𝒴] / P[x_i]`.
    #[serde(with = "serde_q")]
    pub max_posterior_ratio: Q,
    /// `min_𝒴 P[x̄_i|𝒴] / P[x̄_i]`.
    #[serde(with = "serde_q")]
    pub min_complement_ratio: Q,
    /// First subset (as output indices) breaking either bound.
    pub violating_subset: Option<Vec<usize>>,
    /// Number of subsets with positive probability.
    pub subsets_checked: u64,
}

/// Checks both membership inequalities on every output subset by Bayes' rule
/// over the mixture joint `P[component, y]`.
pub fn mp_check_direct(
    m: &Mechanism,
    prior: &JointPrior,
    s: &MembershipScenario,
    r: &Ratio,
) -> Result<DirectVerdict, MembershipError> {
    let k = m.output_count();
    if k > DIRECT_CHECK_MAX_OUTPUTS {
        return Err(MembershipError::AlphabetTooLarge {
            got: k,
            limit: DIRECT_CHECK_MAX_OUTPUTS,
        });
    }
    s.validate(m.space(), prior)?;
    let space = m.space();
    let rest = Q::one() - &s.p;
    let mut joint_in = vec![Q::zero(); k];
    let mut joint_out = vec![Q::zero(); k];
    for (idx, w) in component(space, prior, &s.target_fixing())? {
        let w = &s.p * w;
        for (j, p) in joint_in.iter_mut().zip(m.row(idx)) {
            *j += &w * p;
        }
    }
    for (idx, w) in component(space, prior, &s.alt_fixing())? {
        let w = &rest * w;
        for (j, p) in joint_out.iter_mut().zip(m.row(idx)) {
            *j += &w * p;
        }
    }

    let r_inv = r.recip();
    let mut max_post: Option<Q> = None;
    let mut min_comp: Option<Q> = None;
    let mut violating = None;
    let mut checked = 0;
    for mask in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).collect();
        let p_in: Q = members.iter().map(|&y| &joint_in[y]).sum();
        let p_out: Q = members.iter().map(|&y| &joint_out[y]).sum();
        let total = &p_in + &p_out;
        if total.is_zero() {
            continue;
        }
        checked += 1;
        let post = &p_in / &total / &s.p;
        let comp = &p_out / &total / &rest;
        let bad = Ratio::Finite(post.clone()) > *r || Ratio::Finite(comp.clone()) < r_inv;
        if bad && violating.is_none() {
            violating = Some(members);
        }
        if max_post.as_ref().is_none_or(|v| post > *v) {
            max_post = Some(post);
        }
        if min_comp.as_ref().is_none_or(|v| comp < *v) {
            min_comp = Some(comp);
        }
    }
    Ok(DirectVerdict {
        pass: violating.is_none(),
        max_posterior_ratio: max_post.unwrap_or_else(Q::one),
        min_complement_ratio: min_comp.unwrap_or_else(Q::one),
        violating_subset: violating,
        subsets_checked: checked,
    })
}

/// `P[x_i | 𝒴] / P[x_i]` for one output set under the scenario's mixture.
pub fn posterior_ratio(
    m: &Mechanism,
    prior: &JointPrior,
    s: &MembershipScenario,
    outputs: &[usize],
) -> Result<Q, MembershipError> {
    let (a, b) = scenario_output_distributions(m, prior, s)?;
    let pa: Q = outputs.iter().map(|&y| &a[y]).sum();
    let pb: Q = outputs.iter().map(|&y| &b[y]).sum();
    let total = &s.p * &pa + (Q::one() - &s.p) * &pb;
    if total.is_zero() {
        return Err(MembershipError::InvalidScenario(
            "output set has zero probability".into(),
        ));
    }
    Ok(pa / total)
}

/// Replaces the mixing weight, keeping both components unchanged.
pub fn scale_distribution(
    s: &MembershipScenario,
    q: &Q,
) -> Result<MembershipScenario, MembershipError> {
    check_weight(q)?;
    Ok(MembershipScenario {
        p: q.clone(),
        ..s.clone()
    })
}

/// A family of scenarios; the mixing weight of each is free over `(0, 1)` and
/// the stored `p` is nominal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub scenarios: Vec<MembershipScenario>,
}

impl FamilySpec {
    /// Every `(i, K, x_K, x_i, x_i')` whose two components are reachable,
    /// in lexicographic order of `i`, `K`, `x_K`, `x_i`, `x_i'`.
    pub fn supported(space: &DatabaseSpace, prior: &JointPrior) -> FamilySpec {
        let n = space.n();
        let d = space.domain().len();
        let mut scenarios = Vec::new();
        for i in 0..n {
            for known in subsets_excluding(n, i) {
                for xs in assignments(known.len(), d) {
                    let reachable: Vec<bool> = (0..d)
                        .map(|v| {
                            component(space, prior, &Fixing::new(i, v, known.clone(), xs.clone()))
                                .is_ok()
                        })
                        .collect();
                    for t in 0..d {
                        for a in 0..d {
                            if t != a && reachable[t] && reachable[a] {
                                scenarios.push(MembershipScenario {
                                    position: i,
                                    target_value: t,
                                    alt_value: a,
                                    known: known.clone(),
                                    known_values: xs.clone(),
                                    p: q(1, 2),
                                });
                            }
                        }
                    }
                }
            }
        }
        FamilySpec { scenarios }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpWitness {
    pub scenario: MembershipScenario,
    pub output: usize,
    #[serde(with = "serde_q")]
    pub numerator: Q,
    #[serde(with = "serde_q")]
    pub denominator: Q,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpLeakage {
    pub ratio: Ratio,
    pub witness: Option<MpWitness>,
    pub scenarios: usize,
}

/// The smallest `R` under which every scenario passes for every `p ∈ (0, 1)`.
///
/// `g` tends to `R` at both ends of the interval, so this is the largest
/// singleton ratio `A` over the family. Computed from the mixture components,
/// independently of the conditioning routines used for BDP.
pub fn mp_ratio_family(
    m: &Mechanism,
    prior: &JointPrior,
    family: &FamilySpec,
) -> Result<MpLeakage, MembershipError> {
    let space = m.space();
    let mut memo: BTreeMap<Fixing, Vec<Q>> = BTreeMap::new();
    let mut outputs_of = |f: Fixing| -> Result<Vec<Q>, MembershipError> {
        if let Some(v) = memo.get(&f) {
            return Ok(v.clone());
        }
        let v = component_outputs(m, &component(space, prior, &f)?);
        memo.insert(f, v.clone());
        Ok(v)
    };
    let mut best = MpLeakage {
        ratio: Ratio::one(),
        witness: None,
        scenarios: family.scenarios.len(),
    };
    for s in &family.scenarios {
        let a = outputs_of(s.target_fixing())?;
        let b = outputs_of(s.alt_fixing())?;
        for (y, (ay, by)) in a.iter().zip(&b).enumerate() {
            let r = Ratio::from_parts(ay, by);
            if r > best.ratio {
                best.ratio = r.clone();
                best.witness = Some(MpWitness {
                    scenario: s.clone(),
                    output: y,
                    numerator: ay.clone(),
                    denominator: by.clone(),
                    ratio: r,
                });
            }
        }
    }
    Ok(best)
}

/// Mixing weight that the scaling argument uses to break `R`-membership
/// privacy at a scenario with singleton ratio `alpha > R`: half of
/// `(α − R) / (R(α − 1))`, or `1/(2R)` when `α` is infinite.
/// `None` if no violation can be constructed.
pub fn violating_weight(alpha: &Ratio, r: &Ratio) -> Option<Q> {
    if alpha <= r {
        return None;
    }
    let rv = r.as_finite()?;
    let two = Q::from_integer(BigInt::from(2));
    Some(match alpha {
        Ratio::Infinite => (&two * rv).recip(),
        Ratio::Finite(a) => (a - rv) / (rv * (a - Q::one())) / two,
    })
}

/// `α / (αq + 1 − q)`: the posterior ratio at a singleton whose likelihood
/// ratio is `α` after scaling the mixing weight to `q`.
pub fn scaled_posterior_ratio(alpha: &Ratio, q: &Q) -> Q {
    match alpha {
        Ratio::Infinite => q.recip(),
        Ratio::Finite(a) => a / (a * q + Q::one() - q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::bdp_ratio;
    use crate::model::{Database, ProbTable, ValueDomain};
    use crate::rational::q_int;

    fn space(k: usize, n: usize) -> DatabaseSpace {
        DatabaseSpace::new(ValueDomain::numeric_with_default(k), n).unwrap()
    }

    fn uniform(s: &DatabaseSpace) -> JointPrior {
        let size = s.size() as i64;
        JointPrior::new(ProbTable::new(s.clone(), s.databases().map(|d| (d, q(1, size)))).unwrap())
    }

    fn rr(s: &DatabaseSpace) -> Mechanism {
        // Reports X1 with flip 1/4; ⊥ answers with a fair coin.
        Mechanism::from_fn(s.clone(), vec!["0".into(), "1".into()], |db| {
            match db.0[0] {
                0 => vec![q(3, 4), q(1, 4)],
                1 => vec![q(1, 4), q(3, 4)],
                _ => vec![q(1, 2), q(1, 2)],
            }
        })
        .unwrap()
    }

    fn scenario(p: Q) -> MembershipScenario {
        MembershipScenario {
            position: 0,
            target_value: 0,
            alt_value: 1,
            known: vec![],
            known_values: vec![],
            p,
        }
    }

    #[test]
    fn g_examples() {
        let two = Ratio::finite(q_int(2));
        assert_eq!(g_function(&q(1, 3), &two), Ratio::finite(q_int(4)));
        assert_eq!(g_function(&q(1, 5), &two), Ratio::finite(q(8, 3)));
        assert_eq!(g_function(&q(1, 2), &two), Ratio::finite(q_int(3)));
        assert_eq!(g_function(&Q::zero(), &two), two);
        assert_eq!(g_function(&Q::one(), &two), two);
        assert_eq!(g_function(&q(2, 7), &Ratio::one()), Ratio::one());
        assert_eq!(g_function(&q(1, 2), &Ratio::Infinite), Ratio::Infinite);
    }

    #[test]
    fn analytic_examples() {
        let s = space(2, 1);
        let m = rr(&s);
        let prior = uniform(&s);
        let two = Ratio::finite(q_int(2));
        let v = mp_check_analytic(&m, &prior, &scenario(q(1, 5)), &two).unwrap();
        assert_eq!(v.statistic, Ratio::finite(q_int(3)));
        assert!(!v.pass);
        assert!(
            mp_check_analytic(&m, &prior, &scenario(q(1, 2)), &two)
                .unwrap()
                .pass
        );
        let d = mp_check_direct(&m, &prior, &scenario(q(1, 5)), &two).unwrap();
        assert!(!d.pass);
        assert_eq!(d.max_posterior_ratio, q(15, 7));
        assert!(
            mp_check_direct(&m, &prior, &scenario(q(1, 2)), &two)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn identity_fails_at_half() {
        let s = space(2, 1);
        let m = Mechanism::from_fn(s.clone(), vec!["0".into(), "1".into(), "⊥".into()], |db| {
            let mut r = vec![Q::zero(); 3];
            r[db.0[0]] = Q::one();
            r
        })
        .unwrap();
        let v = mp_check_direct(
            &m,
            &uniform(&s),
            &scenario(q(1, 2)),
            &Ratio::finite(q(3, 2)),
        )
        .unwrap();
        assert!(!v.pass);
        assert_eq!(v.max_posterior_ratio, q_int(2));
        assert_eq!(v.min_complement_ratio, Q::zero());
    }

    #[test]
    fn constant_passes_at_one() {
        let s = space(2, 2);
        let m = Mechanism::from_fn(s.clone(), vec!["a".into(), "b".into()], |_| {
            vec![q(1, 3), q(2, 3)]
        })
        .unwrap();
        let prior = uniform(&s);
        let fam = FamilySpec::supported(&s, &prior);
        assert_eq!(
            mp_ratio_family(&m, &prior, &fam).unwrap().ratio,
            Ratio::one()
        );
        for sc in &fam.scenarios {
            let sc = scale_distribution(sc, &q(1, 9)).unwrap();
            assert!(
                mp_check_direct(&m, &prior, &sc, &Ratio::one())
                    .unwrap()
                    .pass
            );
            assert!(
                mp_check_analytic(&m, &prior, &sc, &Ratio::one())
                    .unwrap()
                    .pass
            );
        }
    }

    #[test]
    fn family_matches_bdp() {
        let s = space(2, 2);
        let m = rr(&s);
        let prior = uniform(&s);
        let fam = FamilySpec::supported(&s, &prior);
        let mp = mp_ratio_family(&m, &prior, &fam).unwrap();
        assert_eq!(mp.ratio, Ratio::finite(q_int(3)));
        assert_eq!(mp.ratio, bdp_ratio(&m, &prior).unwrap().ratio);
    }

    #[test]
    fn scaling_keeps_components() {
        let s = space(2, 2);
        let m = rr(&s);
        let prior = uniform(&s);
        let base = scenario(q(1, 2));
        let scaled = scale_distribution(&base, &q(1, 5)).unwrap();
        assert_eq!(
            scenario_output_distributions(&m, &prior, &base).unwrap(),
            scenario_output_distributions(&m, &prior, &scaled).unwrap()
        );
        assert_eq!(
            posterior_ratio(&m, &prior, &scaled, &[0]).unwrap(),
            q(15, 7)
        );
        assert_eq!(
            scaled_posterior_ratio(&Ratio::finite(q_int(3)), &q(1, 5)),
            q(15, 7)
        );
        assert!(scale_distribution(&base, &Q::one()).is_err());
    }

    #[test]
    fn violating_weight_bounds() {
        let two = Ratio::finite(q_int(2));
        assert_eq!(
            violating_weight(&Ratio::finite(q_int(3)), &two),
            Some(q(1, 8))
        );
        assert_eq!(violating_weight(&two, &two), None);
        assert_eq!(violating_weight(&Ratio::Infinite, &two), Some(q(1, 4)));
        assert_eq!(violating_weight(&Ratio::Infinite, &Ratio::Infinite), None);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let s = space(2, 2);
        let prior =
            JointPrior::new(ProbTable::new(s.clone(), [(Database(vec![0, 0]), Q::one())]).unwrap());
        let m = rr(&s);
        let mut sc = scenario(q(1, 2));
        sc.alt_value = 0;
        assert!(matches!(
            mp_check_analytic(&m, &prior, &sc, &Ratio::one()),
            Err(MembershipError::InvalidScenario(_))
        ));
        assert!(matches!(
            mp_check_direct(&m, &prior, &scenario(q(1, 2)), &Ratio::one()),
            Err(MembershipError::Unreachable(_))
        ));
    }
}
