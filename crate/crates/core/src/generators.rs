//! Canonical mechanisms and priors, plus random instances for fuzzing.
//!
//! Specs are plain serde types so they can be embedded in scenario files and
//! fuzz reproducers. Databases inside specs are written as symbol lists.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    Database, DatabaseSpace, JointPrior, Mechanism, ModelError, ProbTable, ValueDomain,
};
use crate::rational::{format_q, q_int, serde_q, Q};

/// Output symbol randomized response emits for a `⊥` entry.
pub const ABSENT: &str = "absent";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Every symbol, including the default one.
    pub values: Vec<String>,
    pub default: String,
}

impl DomainSpec {
    /// `"0".."k-1"` plus `⊥`.
    pub fn numeric(k: usize) -> Self {
        let d = ValueDomain::numeric_with_default(k);
        DomainSpec {
            values: d.values().to_vec(),
            default: d.symbol(d.default_index()).to_string(),
        }
    }

    pub fn build(&self) -> Result<ValueDomain, ModelError> {
        ValueDomain::with_default_symbol(self.values.clone(), &self.default)
    }
}

/// How randomized response reports a `⊥` entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottomReport {
    /// A dedicated `absent` output, emitted with probability 1.
    #[default]
    Absent,
    /// A uniformly random ordinary value.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpec {
    pub database: Vec<String>,
    #[serde(with = "serde_q::vec")]
    pub probs: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEntry {
    pub database: Vec<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismSpec {
    /// Each position independently keeps its value with probability
    /// `1 − p_flip` and otherwise reports one of the other ordinary values
    /// uniformly. Outputs for `n > 1` are comma-joined per-position reports.
    RandomizedResponse {
        #[serde(with = "serde_q")]
        p_flip: Q,
        /// Mixes each position's report with the uniform report at this weight.
        #[serde(
            default,
            with = "serde_q::option",
            skip_serializing_if = "Option::is_none"
        )]
        smoothing: Option<Q>,
        #[serde(default)]
        bottom: BottomReport,
    },
    /// Count of positions equal to `counted`, released with truncated
    /// two-sided geometric noise `∝ alpha^|k − c|` on `lo..=hi`.
    NoisyCount {
        counted: String,
        #[serde(with = "serde_q")]
        alpha: Q,
        lo: i64,
        hi: i64,
    },
    Constant {
        outputs: Vec<String>,
        /// Uniform when omitted.
        #[serde(
            default,
            with = "serde_q::option_vec",
            skip_serializing_if = "Option::is_none"
        )]
        probs: Option<Vec<Q>>,
    },
    /// Releases the database itself.
    Identity,
    Deterministic {
        map: Vec<MapEntry>,
    },
    /// Integer weights in `0..=bound` per entry, each row renormalized.
    RandomKernel {
        seed: u64,
        outputs: usize,
        bound: u32,
    },
    Table {
        outputs: Vec<String>,
        rows: Vec<RowSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorEntry {
    pub database: Vec<String>,
    #[serde(with = "serde_q")]
    pub prob: Q,
}

/// Prior specs. Value distributions may list every symbol in domain order or
/// only the ordinary ones, in which case `⊥` gets mass 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Uniform {
        #[serde(default)]
        include_bottom: bool,
    },
    Product {
        #[serde(with = "serde_q::nested")]
        marginals: Vec<Vec<Q>>,
    },
    Markov {
        #[serde(with = "serde_q::vec")]
        initial: Vec<Q>,
        #[serde(with = "serde_q::nested")]
        transition: Vec<Vec<Q>>,
    },
    Table {
        entries: Vec<PriorEntry>,
    },
    TwoPoint {
        first: Vec<String>,
        second: Vec<String>,
        #[serde(with = "serde_q")]
        weight: Q,
    },
}

fn invalid(msg: impl Into<String>) -> GeneratorError {
    GeneratorError::InvalidParameter(msg.into())
}

fn parse_db(space: &DatabaseSpace, symbols: &[String]) -> Result<Database, ModelError> {
    space.parse(symbols)
}

/// Per-position report distributions for randomized response.
fn rr_position_rows(
    domain: &ValueDomain,
    p_flip: &Q,
    smoothing: Option<&Q>,
    bottom: BottomReport,
) -> Result<(Vec<String>, Vec<Vec<Q>>), GeneratorError> {
    let ordinary = domain.ordinary_indices();
    let k = ordinary.len();
    if k < 2 {
        return Err(invalid(
            "randomized response needs at least two ordinary values",
        ));
    }
    if *p_flip <= Q::zero() || *p_flip > Q::new(1.into(), 2.into()) {
        return Err(invalid(format!(
            "p_flip {} must lie in (0, 1/2]",
            format_q(p_flip)
        )));
    }
    if let Some(l) = smoothing {
        if *l < Q::zero() || *l > Q::one() {
            return Err(invalid(format!(
                "smoothing {} must lie in [0, 1]",
                format_q(l)
            )));
        }
    }
    let mut symbols: Vec<String> = ordinary
        .iter()
        .map(|&v| domain.symbol(v).to_string())
        .collect();
    if bottom == BottomReport::Absent {
        symbols.push(ABSENT.to_string());
    }
    let width = symbols.len();
    let other = p_flip / q_int(k as i64 - 1);
    let mut rows = Vec::with_capacity(domain.len());
    for v in 0..domain.len() {
        let mut row = vec![Q::zero(); width];
        if v == domain.default_index() {
            match bottom {
                BottomReport::Absent => row[k] = Q::one(),
                BottomReport::Uniform => row[..k].fill(Q::new(1.into(), (k as i64).into())),
            }
        } else {
            let pos = ordinary
                .iter()
                .position(|&o| o == v)
                .expect("ordinary value");
            for (j, r) in row[..k].iter_mut().enumerate() {
                *r = if j == pos {
                    Q::one() - p_flip
                } else {
                    other.clone()
                };
            }
        }
        if let Some(l) = smoothing {
            let u = Q::new(1.into(), (width as i64).into());
            for r in row.iter_mut() {
                *r = (Q::one() - l) * &*r + l * &u;
            }
        }
        rows.push(row);
    }
    Ok((symbols, rows))
}

/// Enumerates the product of per-position alphabets; symbols comma-joined.
fn product_labels(symbols: &[String], n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for pos in 0..n {
        out = out
            .iter()
            .flat_map(|prefix| {
                symbols.iter().map(move |s| {
                    if pos == 0 {
                        s.clone()
                    } else {
                        format!("{prefix},{s}")
                    }
                })
            })
            .collect();
    }
    out
}

pub fn build_mechanism(
    spec: &MechanismSpec,
    space: &DatabaseSpace,
) -> Result<Mechanism, GeneratorError> {
    let domain = space.domain();
    let n = space.n();
    match spec {
        MechanismSpec::RandomizedResponse {
            p_flip,
            smoothing,
            bottom,
        } => {
            let (symbols, per) = rr_position_rows(domain, p_flip, smoothing.as_ref(), *bottom)?;
            let width = symbols.len();
            let outputs = product_labels(&symbols, n);
            Ok(Mechanism::from_fn(space.clone(), outputs, |db| {
                let mut row = vec![Q::one()];
                for &v in &db.0 {
                    row = row
                        .iter()
                        .flat_map(|a| per[v].iter().map(move |b| a * b))
                        .collect();
                }
                debug_assert_eq!(row.len(), width.pow(n as u32));
                row
            })?)
        }
        MechanismSpec::NoisyCount {
            counted,
            alpha,
            lo,
            hi,
        } => {
            let c = domain.index_of(counted)?;
            if c == domain.default_index() {
                return Err(invalid("noisy_count cannot count the default value"));
            }
            if *alpha <= Q::zero() || *alpha >= Q::one() {
                return Err(invalid(format!(
                    "alpha {} must lie in (0, 1)",
                    format_q(alpha)
                )));
            }
            if lo > hi {
                return Err(invalid(format!("empty clamp range {lo}..={hi}")));
            }
            let outputs: Vec<String> = (*lo..=*hi).map(|k| k.to_string()).collect();
            Ok(Mechanism::from_fn(space.clone(), outputs, |db| {
                let count = db.0.iter().filter(|&&v| v == c).count() as i64;
                let weights: Vec<Q> = (*lo..=*hi)
                    .map(|k| num_traits::pow(alpha.clone(), (k - count).unsigned_abs() as usize))
                    .collect();
                let total: Q = weights.iter().sum();
                weights.into_iter().map(|w| w / &total).collect()
            })?)
        }
        MechanismSpec::Constant { outputs, probs } => {
            if outputs.is_empty() {
                return Err(ModelError::EmptyAlphabet.into());
            }
            let row = match probs {
                Some(p) => p.clone(),
                None => vec![Q::new(1.into(), (outputs.len() as i64).into()); outputs.len()],
            };
            Ok(Mechanism::from_fn(space.clone(), outputs.clone(), |_| {
                row.clone()
            })?)
        }
        MechanismSpec::Identity => {
            let outputs: Vec<String> = space.databases().map(|db| space.format(&db)).collect();
            Ok(Mechanism::from_fn(space.clone(), outputs, |db| {
                let mut row = vec![Q::zero(); space.size()];
                row[space.index_of(db)] = Q::one();
                row
            })?)
        }
        MechanismSpec::Deterministic { map } => {
            let mut outputs: Vec<String> = Vec::new();
            let mut image = BTreeMap::new();
            for e in map {
                let db = parse_db(space, &e.database)?;
                if !outputs.contains(&e.output) {
                    outputs.push(e.output.clone());
                }
                if image.insert(db.clone(), e.output.clone()).is_some() {
                    return Err(ModelError::DuplicateRow(space.format(&db)).into());
                }
            }
            let rows = image
                .into_iter()
                .map(|(db, out)| {
                    let mut row = vec![Q::zero(); outputs.len()];
                    row[outputs.iter().position(|o| *o == out).expect("collected")] = Q::one();
                    (db, row)
                })
                .collect();
            Ok(Mechanism::new(space.clone(), outputs, rows)?)
        }
        MechanismSpec::RandomKernel {
            seed,
            outputs,
            bound,
        } => {
            if *outputs == 0 || *bound == 0 {
                return Err(invalid(
                    "random_kernel needs at least one output and bound >= 1",
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let rows = random_rows(&mut rng, space.size(), *outputs, *bound);
            let labels: Vec<String> = (0..*outputs).map(|o| format!("o{o}")).collect();
            Ok(Mechanism::from_fn(space.clone(), labels, |db| {
                rows[space.index_of(db)].clone()
            })?)
        }
        MechanismSpec::Table { outputs, rows } => {
            let mut table = BTreeMap::new();
            for r in rows {
                let db = parse_db(space, &r.database)?;
                if table.insert(db.clone(), r.probs.clone()).is_some() {
                    return Err(ModelError::DuplicateRow(space.format(&db)).into());
                }
            }
            Ok(Mechanism::new(space.clone(), outputs.clone(), table)?)
        }
    }
}

fn random_rows(rng: &mut ChaCha8Rng, count: usize, width: usize, bound: u32) -> Vec<Vec<Q>> {
    (0..count)
        .map(|_| {
            let mut w: Vec<u32> = (0..width).map(|_| rng.gen_range(0..=bound)).collect();
            if w.iter().all(|&x| x == 0) {
                w[rng.gen_range(0..width)] = 1;
            }
            let total: u32 = w.iter().sum();
            w.into_iter()
                .map(|x| Q::new(x.into(), total.into()))
                .collect()
        })
        .collect()
}

/// Expands a value distribution given over all symbols or only the ordinary
/// ones to one over all symbols.
fn expand_values(domain: &ValueDomain, v: &[Q], what: &str) -> Result<Vec<Q>, GeneratorError> {
    let full = if v.len() == domain.len() {
        v.to_vec()
    } else if v.len() + 1 == domain.len() {
        let mut full = vec![Q::zero(); domain.len()];
        for (&idx, p) in domain.ordinary_indices().iter().zip(v) {
            full[idx] = p.clone();
        }
        full
    } else {
        return Err(invalid(format!(
            "{what} has {} entries; expected {} or {}",
            v.len(),
            domain.len(),
            domain.len() - 1
        )));
    };
    if full.iter().any(|p| *p < Q::zero()) {
        return Err(invalid(format!("{what} has a negative entry")));
    }
    let sum: Q = full.iter().sum();
    if !sum.is_one() {
        return Err(invalid(format!("{what} sums to {}", format_q(&sum))));
    }
    Ok(full)
}

pub fn build_prior(spec: &PriorSpec, space: &DatabaseSpace) -> Result<JointPrior, GeneratorError> {
    let domain = space.domain();
    let n = space.n();
    let table = match spec {
        PriorSpec::Uniform { include_bottom } => {
            let bottom = domain.default_index();
            let dbs: Vec<Database> = space
                .databases()
                .filter(|db| *include_bottom || !db.0.contains(&bottom))
                .collect();
            if dbs.is_empty() {
                return Err(invalid("uniform prior has empty support"));
            }
            let p = Q::new(1.into(), (dbs.len() as i64).into());
            ProbTable::new(space.clone(), dbs.into_iter().map(|db| (db, p.clone())))?
        }
        PriorSpec::Product { marginals } => {
            if marginals.len() != n {
                return Err(invalid(format!(
                    "product prior lists {} marginals for {n} positions",
                    marginals.len()
                )));
            }
            let ms = marginals
                .iter()
                .enumerate()
                .map(|(k, m)| expand_values(domain, m, &format!("marginal {}", k + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            let probs = space
                .databases()
                .map(|db| db.0.iter().enumerate().map(|(k, &v)| &ms[k][v]).product())
                .collect();
            ProbTable::from_dense(space.clone(), probs)?
        }
        PriorSpec::Markov {
            initial,
            transition,
        } => {
            let init = expand_values(domain, initial, "initial distribution")?;
            let trans = expand_transition(domain, transition)?;
            let probs = space
                .databases()
                .map(|db| {
                    let mut p = init[db.0[0]].clone();
                    for w in db.0.windows(2) {
                        p *= &trans[w[0]][w[1]];
                    }
                    p
                })
                .collect();
            ProbTable::from_dense(space.clone(), probs)?
        }
        PriorSpec::Table { entries } => {
            let parsed = entries
                .iter()
                .map(|e| Ok((parse_db(space, &e.database)?, e.prob.clone())))
                .collect::<Result<Vec<_>, ModelError>>()?;
            ProbTable::new(space.clone(), parsed)?
        }
        PriorSpec::TwoPoint {
            first,
            second,
            weight,
        } => {
            if *weight <= Q::zero() || *weight >= Q::one() {
                return Err(invalid(format!(
                    "two-point weight {} must lie in (0, 1)",
                    format_q(weight)
                )));
            }
            let a = parse_db(space, first)?;
            let b = parse_db(space, second)?;
            if a == b {
                return Err(invalid("two-point prior needs two distinct databases"));
            }
            ProbTable::new(space.clone(), [(a, weight.clone()), (b, Q::one() - weight)])?
        }
    };
    Ok(JointPrior::new(table))
}

/// Transition rows for ordinary values may omit the `⊥` row; it then stays at `⊥`.
fn expand_transition(domain: &ValueDomain, rows: &[Vec<Q>]) -> Result<Vec<Vec<Q>>, GeneratorError> {
    let d = domain.len();
    let bottom = domain.default_index();
    let by_state: Vec<usize> = if rows.len() == d {
        (0..d).collect()
    } else if rows.len() + 1 == d {
        domain.ordinary_indices()
    } else {
        return Err(invalid(format!(
            "transition has {} rows; expected {} or {}",
            rows.len(),
            d,
            d - 1
        )));
    };
    let mut out = vec![Vec::new(); d];
    for (state, row) in by_state.iter().zip(rows) {
        out[*state] = expand_values(
            domain,
            row,
            &format!("transition row {}", domain.symbol(*state)),
        )?;
    }
    if out[bottom].is_empty() {
        let mut stay = vec![Q::zero(); d];
        stay[bottom] = Q::one();
        out[bottom] = stay;
    }
    Ok(out)
}

/// A complete, self-contained problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub domain: DomainSpec,
    pub n: usize,
    pub mechanism: MechanismSpec,
    pub prior: PriorSpec,
}

impl InstanceSpec {
    pub fn space(&self) -> Result<DatabaseSpace, GeneratorError> {
        Ok(DatabaseSpace::new(self.domain.build()?, self.n)?)
    }

    pub fn build(&self) -> Result<(Mechanism, JointPrior), GeneratorError> {
        let space = self.space()?;
        Ok((
            build_mechanism(&self.mechanism, &space)?,
            build_prior(&self.prior, &space)?,
        ))
    }
}

/// A mechanism as an explicit table spec.
pub fn mechanism_table_spec(m: &Mechanism) -> MechanismSpec {
    let space = m.space();
    MechanismSpec::Table {
        outputs: m.outputs().to_vec(),
        rows: space
            .databases()
            .map(|db| RowSpec {
                database: space.symbols(&db),
                probs: m.row_of(&db).to_vec(),
            })
            .collect(),
    }
}

/// A prior as an explicit table spec listing its support.
pub fn prior_table_spec(prior: &JointPrior) -> PriorSpec {
    let space = prior.space();
    PriorSpec::Table {
        entries: prior
            .entries()
            .into_iter()
            .map(|(db, prob)| PriorEntry {
                database: space.symbols(&db),
                prob,
            })
            .collect(),
    }
}

/// Size limits for random instances. `max_domain` counts `⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceBounds {
    pub max_n: usize,
    pub max_domain: usize,
    pub max_outputs: usize,
    /// Largest integer weight before normalization.
    pub weight_bound: u32,
}

impl Default for InstanceBounds {
    fn default() -> Self {
        InstanceBounds {
            max_n: 4,
            max_domain: 4,
            max_outputs: 8,
            weight_bound: 6,
        }
    }
}

impl InstanceBounds {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.max_n == 0 {
            return Err(invalid("max_n must be at least 1"));
        }
        if self.max_domain < 2 {
            return Err(invalid(
                "max_domain must be at least 2 (one value plus the default)",
            ));
        }
        if self.max_outputs < 2 {
            return Err(invalid("max_outputs must be at least 2"));
        }
        if self.weight_bound == 0 {
            return Err(invalid("weight_bound must be at least 1"));
        }
        if (self.max_domain as u128).pow(self.max_n as u32) > crate::model::MAX_DATABASES as u128 {
            return Err(invalid(format!(
                "max_domain^max_n exceeds {} databases",
                crate::model::MAX_DATABASES
            )));
        }
        Ok(())
    }
}

/// Which shape a random prior takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PriorShape {
    FullTable,
    FullProduct,
    Markov,
    Sparse,
}

fn random_dist(rng: &mut impl Rng, len: usize, bound: u32, allow_zero: bool) -> Vec<Q> {
    let lo = if allow_zero { 0 } else { 1 };
    let mut w: Vec<u32> = (0..len).map(|_| rng.gen_range(lo..=bound)).collect();
    if w.iter().all(|&x| x == 0) {
        w[rng.gen_range(0..len)] = 1;
    }
    let total: u32 = w.iter().sum();
    w.into_iter()
        .map(|x| Q::new(x.into(), total.into()))
        .collect()
}

/// Draws a random instance within `bounds`. Mechanism kernels are explicit
/// tables whose rows may contain zeros; priors are full-support tables,
/// full-support products, Markov chains over the ordinary values, or sparse
/// tables.
pub fn random_instance(
    rng: &mut impl Rng,
    bounds: &InstanceBounds,
) -> Result<InstanceSpec, GeneratorError> {
    bounds.validate()?;
    let d = rng.gen_range(2..=bounds.max_domain);
    let n = rng.gen_range(1..=bounds.max_n);
    let k = rng.gen_range(2..=bounds.max_outputs);
    let domain = DomainSpec::numeric(d - 1);
    let space = DatabaseSpace::new(domain.build()?, n)?;
    let b = bounds.weight_bound;

    // A quarter of kernels get strictly positive rows so finite ratios are common.
    let positive = rng.gen_ratio(1, 4);
    let outputs: Vec<String> = (0..k).map(|o| format!("o{o}")).collect();
    let rows: Vec<RowSpec> = space
        .databases()
        .map(|db| RowSpec {
            database: space.symbols(&db),
            probs: random_dist(rng, k, b, !positive),
        })
        .collect();
    let mechanism = MechanismSpec::Table { outputs, rows };

    let shape = match rng.gen_range(0..4) {
        0 => PriorShape::FullTable,
        1 => PriorShape::FullProduct,
        2 if d > 2 => PriorShape::Markov,
        _ => PriorShape::Sparse,
    };
    let prior = match shape {
        PriorShape::FullTable => {
            let probs = random_dist(rng, space.size(), b, false);
            PriorSpec::Table {
                entries: space
                    .databases()
                    .zip(probs)
                    .map(|(db, prob)| PriorEntry {
                        database: space.symbols(&db),
                        prob,
                    })
                    .collect(),
            }
        }
        PriorShape::FullProduct => PriorSpec::Product {
            marginals: (0..n).map(|_| random_dist(rng, d, b, false)).collect(),
        },
        PriorShape::Markov => PriorSpec::Markov {
            initial: random_dist(rng, d - 1, b, false),
            transition: (0..d - 1)
                .map(|_| random_dist(rng, d - 1, b, true))
                .collect(),
        },
        PriorShape::Sparse => {
            let count = rng.gen_range(1..=space.size().min(6));
            let mut pool: Vec<usize> = (0..space.size()).collect();
            let mut chosen: Vec<usize> = (0..count)
                .map(|_| pool.swap_remove(rng.gen_range(0..pool.len())))
                .collect();
            chosen.sort_unstable();
            let probs = random_dist(rng, count, b, false);
            PriorSpec::Table {
                entries: chosen
                    .into_iter()
                    .zip(probs)
                    .map(|(idx, prob)| PriorEntry {
                        database: space.symbols(&space.database(idx)),
                        prob,
                    })
                    .collect(),
            }
        }
    };
    Ok(InstanceSpec {
        domain,
        n,
        mechanism,
        prior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::dp_ratio;
    use crate::rational::{q, Ratio};

    fn space(k: usize, n: usize) -> DatabaseSpace {
        DatabaseSpace::new(ValueDomain::numeric_with_default(k), n).unwrap()
    }

    fn rr(p: Q, bottom: BottomReport) -> MechanismSpec {
        MechanismSpec::RandomizedResponse {
            p_flip: p,
            smoothing: None,
            bottom,
        }
    }

    #[test]
    fn randomized_response_rows() {
        let s = space(2, 1);
        let m = build_mechanism(&rr(q(1, 4), BottomReport::Absent), &s).unwrap();
        assert_eq!(m.outputs(), ["0", "1", ABSENT]);
        assert_eq!(m.row(0), [q(3, 4), q(1, 4), Q::zero()]);
        assert_eq!(m.row(1), [q(1, 4), q(3, 4), Q::zero()]);
        assert_eq!(m.row(2), [Q::zero(), Q::zero(), Q::one()]);
        assert_eq!(dp_ratio(&m).0, Ratio::Infinite);
        let u = build_mechanism(&rr(q(1, 4), BottomReport::Uniform), &s).unwrap();
        assert_eq!(u.row(2), [q(1, 2), q(1, 2)]);
        assert_eq!(dp_ratio(&u).0, Ratio::finite(q_int(3)));
    }

    #[test]
    fn randomized_response_product_and_smoothing() {
        let s = space(2, 2);
        let m = build_mechanism(&rr(q(1, 4), BottomReport::Absent), &s).unwrap();
        assert_eq!(m.output_count(), 9);
        assert_eq!(m.outputs()[1], "0,1");
        assert_eq!(m.row_of(&Database(vec![0, 1]))[1], q(9, 16));
        let smooth = MechanismSpec::RandomizedResponse {
            p_flip: q(1, 4),
            smoothing: Some(q(3, 10)),
            bottom: BottomReport::Absent,
        };
        let m = build_mechanism(&smooth, &space(2, 1)).unwrap();
        // (7/10)(3/4) + (3/10)(1/3)
        assert_eq!(m.row(0)[0], q(5, 8));
        assert!(dp_ratio(&m).0.as_finite().is_some());
        assert!(build_mechanism(&rr(q(3, 5), BottomReport::Absent), &s).is_err());
        assert!(build_mechanism(&rr(q(1, 4), BottomReport::Absent), &space(1, 1)).is_err());
    }

    #[test]
    fn noisy_count_rows() {
        let s = space(2, 2);
        let spec = MechanismSpec::NoisyCount {
            counted: "1".into(),
            alpha: q(1, 2),
            lo: 0,
            hi: 2,
        };
        let m = build_mechanism(&spec, &s).unwrap();
        assert_eq!(m.outputs(), ["0", "1", "2"]);
        // Count 1: weights 1/2, 1, 1/2.
        assert_eq!(m.row_of(&Database(vec![1, 2])), [q(1, 4), q(1, 2), q(1, 4)]);
        // ⊥ contributes nothing: count 0 -> weights 1, 1/2, 1/4.
        assert_eq!(m.row_of(&Database(vec![2, 2])), [q(4, 7), q(2, 7), q(1, 7)]);
        let bad = MechanismSpec::NoisyCount {
            counted: "⊥".into(),
            alpha: q(1, 2),
            lo: 0,
            hi: 2,
        };
        assert!(build_mechanism(&bad, &s).is_err());
    }

    #[test]
    fn simple_mechanisms() {
        let s = space(2, 1);
        let c = build_mechanism(
            &MechanismSpec::Constant {
                outputs: vec!["a".into(), "b".into()],
                probs: None,
            },
            &s,
        )
        .unwrap();
        assert!((0..3).all(|i| c.row(i) == c.row(0)));
        let id = build_mechanism(&MechanismSpec::Identity, &s).unwrap();
        for i in 0..3 {
            assert_eq!(id.row(i).iter().filter(|p| p.is_one()).count(), 1);
            assert!(id.row(i)[i].is_one());
        }
        let k = build_mechanism(
            &MechanismSpec::RandomKernel {
                seed: 4,
                outputs: 3,
                bound: 5,
            },
            &s,
        )
        .unwrap();
        assert_eq!(k.output_count(), 3);
    }

    #[test]
    fn table_errors_name_the_row() {
        let s = space(1, 1);
        let spec = MechanismSpec::Table {
            outputs: vec!["a".into(), "b".into()],
            rows: vec![
                RowSpec {
                    database: vec!["0".into()],
                    probs: vec![q(1, 2), q(1, 3)],
                },
                RowSpec {
                    database: vec!["⊥".into()],
                    probs: vec![q(1, 2), q(1, 2)],
                },
            ],
        };
        let err = build_mechanism(&spec, &s).unwrap_err().to_string();
        assert!(err.contains("(0)"), "{err}");
    }

    #[test]
    fn prior_examples() {
        let s = space(2, 2);
        let u = build_prior(
            &PriorSpec::Uniform {
                include_bottom: false,
            },
            &s,
        )
        .unwrap();
        assert_eq!(u.support().len(), 4);
        assert!(u.support().iter().all(|&i| *u.prob(i) == q(1, 4)));
        let markov = PriorSpec::Markov {
            initial: vec![q(1, 2), q(1, 2)],
            transition: vec![vec![q(9, 10), q(1, 10)], vec![q(1, 10), q(9, 10)]],
        };
        let mk = build_prior(&markov, &s).unwrap();
        assert_eq!(*mk.prob(s.index_of(&Database(vec![0, 0]))), q(9, 20));
        assert_eq!(*mk.prob(s.index_of(&Database(vec![0, 1]))), q(1, 20));
        let tp = PriorSpec::TwoPoint {
            first: vec!["0".into(), "1".into()],
            second: vec!["⊥".into(), "1".into()],
            weight: q(1, 2),
        };
        assert_eq!(build_prior(&tp, &s).unwrap().support().len(), 2);
        let prod = PriorSpec::Product {
            marginals: vec![vec![q(1, 3), q(1, 3), q(1, 3)], vec![q(1, 2), q(1, 2)]],
        };
        let p = build_prior(&prod, &s).unwrap();
        assert_eq!(*p.prob(s.index_of(&Database(vec![2, 0]))), q(1, 6));
        assert!(p.prob(s.index_of(&Database(vec![0, 2]))).is_zero());
        let bad = PriorSpec::Product {
            marginals: vec![vec![q(1, 2)], vec![q(1, 2), q(1, 2)]],
        };
        assert!(build_prior(&bad, &s).is_err());
    }

    #[test]
    fn random_instances_are_valid_and_reproducible() {
        let bounds = InstanceBounds {
            max_n: 3,
            max_domain: 3,
            max_outputs: 8,
            weight_bound: 6,
        };
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let x = random_instance(&mut a, &bounds).unwrap();
            assert_eq!(x, random_instance(&mut b, &bounds).unwrap());
            let (m, p) = x.build().unwrap();
            let back = InstanceSpec {
                mechanism: mechanism_table_spec(&m),
                prior: prior_table_spec(&p),
                ..x.clone()
            };
            let (m2, p2) = back.build().unwrap();
            assert_eq!(m, m2);
            assert_eq!(p, p2);
        }
    }

    #[test]
    fn specs_round_trip_through_json() {
        let x = InstanceSpec {
            domain: DomainSpec::numeric(2),
            n: 2,
            mechanism: rr(q(1, 4), BottomReport::Uniform),
            prior: PriorSpec::Product {
                marginals: vec![vec![q(1, 2), q(1, 2)], vec![q(1, 4), q(3, 4)]],
            },
        };
        let text = serde_json::to_string(&x).unwrap();
        assert!(text.contains("\"1/4\""), "{text}");
        assert_eq!(serde_json::from_str::<InstanceSpec>(&text).unwrap(), x);
    }
}
