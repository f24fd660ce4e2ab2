//! Domains, databases, mechanisms, priors and beliefs, plus the shared
//! probability plumbing: conditioning, marginalization and statistical distance.
//!
//! A database is a dense vector of `n` value indices over a [`ValueDomain`].
//! The domain always contains a designated default value `⊥` ("no data"), and
//! mechanisms must be defined on databases containing it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_q, Q};

/// Upper bound on `|D|^n`; everything here enumerates the full database space.
pub const MAX_DATABASES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("value domain must not be empty")]
    EmptyDomain,
    #[error("duplicate domain symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("default index {index} out of range for a domain of {len} values")]
    DefaultOutOfRange { index: usize, len: usize },
    #[error("unknown domain symbol {0:?}")]
    UnknownSymbol(String),
    #[error("database length must be at least 1")]
    ZeroLength,
    #[error("database space |D|^n = {size} exceeds the limit of {MAX_DATABASES}")]
    SpaceTooLarge { size: usize },
    #[error("database {database} has {got} entries, expected {expected}")]
    DatabaseLength {
        database: String,
        got: usize,
        expected: usize,
    },
    #[error("database {database} uses value index {index} outside the domain")]
    InvalidValue { database: String, index: usize },
    #[error("output alphabet must not be empty")]
    EmptyAlphabet,
    #[error("duplicate output symbol {0:?}")]
    DuplicateOutput(String),
    #[error("kernel row for database {0} is missing")]
    MissingRow(String),
    #[error("kernel row for database {0} is given more than once")]
    DuplicateRow(String),
    #[error("kernel row for database {database} has {got} entries, expected {expected}")]
    RowLength {
        database: String,
        got: usize,
        expected: usize,
    },
    #[error("kernel row for database {database} has a negative entry")]
    NegativeProbability { database: String },
    #[error("kernel row for database {database} sums to {sum}, not 1")]
    RowSum { database: String, sum: String },
    #[error("probability table entry for {database} is negative")]
    NegativeMass { database: String },
    #[error("probability table lists database {0} more than once")]
    DuplicateEntry(String),
    #[error("probability table sums to {0}, not 1")]
    TableSum(String),
    #[error("mechanism and table are defined over different database spaces")]
    SpaceMismatch,
    #[error("probability vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid fixing: {0}")]
    InvalidFixing(String),
    #[error("conditioning event {0} has zero mass")]
    ZeroMass(String),
}

/// Ordered finite set of symbols with a designated default value `⊥`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueDomain {
    values: Vec<String>,
    default_index: usize,
}

impl ValueDomain {
    pub fn new(values: Vec<String>, default_index: usize) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        for (k, v) in values.iter().enumerate() {
            if values[..k].contains(v) {
                return Err(ModelError::DuplicateSymbol(v.clone()));
            }
        }
        if default_index >= values.len() {
            return Err(ModelError::DefaultOutOfRange {
                index: default_index,
                len: values.len(),
            });
        }
        Ok(ValueDomain {
            values,
            default_index,
        })
    }

    pub fn with_default_symbol(values: Vec<String>, default: &str) -> Result<Self, ModelError> {
        let idx = values
            .iter()
            .position(|v| v == default)
            .ok_or_else(|| ModelError::UnknownSymbol(default.to_string()))?;
        Self::new(values, idx)
    }

    /// `k` ordinary values `"0"..` followed by `⊥`.
    pub fn numeric_with_default(k: usize) -> Self {
        let mut values: Vec<String> = (0..k).map(|v| v.to_string()).collect();
        values.push("⊥".to_string());
        ValueDomain::new(values, k).expect("generated symbols are distinct")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn default_index(&self) -> usize {
        self.default_index
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.values[index]
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize, ModelError> {
        self.values
            .iter()
            .position(|v| v == symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))
    }

    /// Indices of every value other than `⊥`.
    pub fn ordinary_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| v != self.default_index)
            .collect()
    }
}

/// A database: one value index per tuple position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Database(pub Vec<usize>);

impl Database {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn with_value(&self, position: usize, value: usize) -> Database {
        let mut v = self.0.clone();
        v[position] = value;
        Database(v)
    }
}

/// The finite space `D^n`, enumerated in lexicographic order (position 0 most
/// significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseSpace {
    domain: ValueDomain,
    n: usize,
    size: usize,
}

impl DatabaseSpace {
    pub fn new(domain: ValueDomain, n: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::ZeroLength);
        }
        let mut size: usize = 1;
        for _ in 0..n {
            size = size.saturating_mul(domain.len());
            if size > MAX_DATABASES {
                return Err(ModelError::SpaceTooLarge { size });
            }
        }
        Ok(DatabaseSpace { domain, n, size })
    }

    pub fn domain(&self) -> &ValueDomain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn default_value(&self) -> usize {
        self.domain.default_index
    }

    pub fn database(&self, mut index: usize) -> Database {
        let k = self.domain.len();
        let mut v = vec![0; self.n];
        for slot in v.iter_mut().rev() {
            *slot = index % k;
            index /= k;
        }
        Database(v)
    }

    pub fn index_of(&self, db: &Database) -> usize {
        db.0.iter().fold(0, |acc, &v| acc * self.domain.len() + v)
    }

    pub fn databases(&self) -> impl Iterator<Item = Database> + '_ {
        (0..self.size).map(move |i| self.database(i))
    }

    /// Index of the database obtained by overwriting one position.
    pub fn substitute(&self, index: usize, position: usize, value: usize) -> usize {
        let k = self.domain.len();
        let weight = k.pow((self.n - 1 - position) as u32);
        let current = (index / weight) % k;
        index - current * weight + value * weight
    }

    pub fn check(&self, db: &Database) -> Result<(), ModelError> {
        if db.0.len() != self.n {
            return Err(ModelError::DatabaseLength {
                database: self.format(db),
                got: db.0.len(),
                expected: self.n,
            });
        }
        if let Some(&bad) = db.0.iter().find(|&&v| v >= self.domain.len()) {
            return Err(ModelError::InvalidValue {
                database: format!("{:?}", db.0),
                index: bad,
            });
        }
        Ok(())
    }

    pub fn parse(&self, symbols: &[String]) -> Result<Database, ModelError> {
        let entries = symbols
            .iter()
            .map(|s| self.domain.index_of(s))
            .collect::<Result<Vec<_>, _>>()?;
        let db = Database(entries);
        self.check(&db)?;
        Ok(db)
    }

    pub fn symbols(&self, db: &Database) -> Vec<String> {
        db.0.iter()
            .map(|&v| {
                self.domain
                    .values
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| format!("#{v}"))
            })
            .collect()
    }

    pub fn format(&self, db: &Database) -> String {
        format!("({})", self.symbols(db).join(","))
    }
}

/// A randomized mechanism as a stochastic kernel over `D^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mechanism {
    space: DatabaseSpace,
    outputs: Vec<String>,
    rows: Vec<Vec<Q>>,
}

impl Mechanism {
    /// Validates a kernel given as a map from databases to output distributions.
    pub fn new(
        space: DatabaseSpace,
        outputs: Vec<String>,
        rows: BTreeMap<Database, Vec<Q>>,
    ) -> Result<Self, ModelError> {
        validate_mechanism(space, outputs, rows)
    }

    /// Builds and validates a kernel from a row function.
    pub fn from_fn<F>(space: DatabaseSpace, outputs: Vec<String>, f: F) -> Result<Self, ModelError>
    where
        F: Fn(&Database) -> Vec<Q>,
    {
        let rows = space
            .databases()
            .map(|db| {
                let r = f(&db);
                (db, r)
            })
            .collect();
        validate_mechanism(space, outputs, rows)
    }

    pub fn space(&self) -> &DatabaseSpace {
        &self.space
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn row(&self, index: usize) -> &[Q] {
        &self.rows[index]
    }

    pub fn row_of(&self, db: &Database) -> &[Q] {
        &self.rows[self.space.index_of(db)]
    }
}

/// Checks every kernel invariant: one row per database of `D^n` (including
/// `⊥`-bearing ones), nonnegative entries, and exact row sums of 1.
pub fn validate_mechanism(
    space: DatabaseSpace,
    outputs: Vec<String>,
    mut rows: BTreeMap<Database, Vec<Q>>,
) -> Result<Mechanism, ModelError> {
    if outputs.is_empty() {
        return Err(ModelError::EmptyAlphabet);
    }
    for (k, o) in outputs.iter().enumerate() {
        if outputs[..k].contains(o) {
            return Err(ModelError::DuplicateOutput(o.clone()));
        }
    }
    for db in rows.keys() {
        space.check(db)?;
    }
    let mut dense = Vec::with_capacity(space.size());
    for db in space.databases() {
        let name = space.format(&db);
        let row = rows
            .remove(&db)
            .ok_or_else(|| ModelError::MissingRow(name.clone()))?;
        if row.len() != outputs.len() {
            return Err(ModelError::RowLength {
                database: name,
                got: row.len(),
                expected: outputs.len(),
            });
        }
        if row.iter().any(|p| p.is_negative()) {
            return Err(ModelError::NegativeProbability { database: name });
        }
        let sum: Q = row.iter().sum();
        if !sum.is_one() {
            return Err(ModelError::RowSum {
                database: name,
                sum: format_q(&sum),
            });
        }
        dense.push(row);
    }
    Ok(Mechanism {
        space,
        outputs,
        rows: dense,
    })
}

/// A probability table over `D^n`, stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbTable {
    space: DatabaseSpace,
    probs: Vec<Q>,
}

impl ProbTable {
    /// Builds a table from sparse entries; unlisted databases get mass 0.
    pub fn new<I>(space: DatabaseSpace, entries: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (Database, Q)>,
    {
        let mut probs = vec![Q::zero(); space.size()];
        let mut seen = vec![false; space.size()];
        for (db, p) in entries {
            space.check(&db)?;
            let idx = space.index_of(&db);
            if seen[idx] {
                return Err(ModelError::DuplicateEntry(space.format(&db)));
            }
            if p.is_negative() {
                return Err(ModelError::NegativeMass {
                    database: space.format(&db),
                });
            }
            seen[idx] = true;
            probs[idx] = p;
        }
        Self::from_dense(space, probs)
    }

    pub fn from_dense(space: DatabaseSpace, probs: Vec<Q>) -> Result<Self, ModelError> {
        if probs.len() != space.size() {
            return Err(ModelError::LengthMismatch(probs.len(), space.size()));
        }
        if let Some(idx) = probs.iter().position(|p| p.is_negative()) {
            return Err(ModelError::NegativeMass {
                database: space.format(&space.database(idx)),
            });
        }
        let sum: Q = probs.iter().sum();
        if !sum.is_one() {
            return Err(ModelError::TableSum(format_q(&sum)));
        }
        Ok(ProbTable { space, probs })
    }

    pub fn space(&self) -> &DatabaseSpace {
        &self.space
    }

    pub fn prob(&self, index: usize) -> &Q {
        &self.probs[index]
    }

    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    /// Indices of databases with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len())
            .filter(|&i| !self.probs[i].is_zero())
            .collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|p| !p.is_zero())
    }

    /// Nonzero entries as `(database, mass)` pairs.
    pub fn entries(&self) -> Vec<(Database, Q)> {
        self.support()
            .into_iter()
            .map(|i| (self.space.database(i), self.probs[i].clone()))
            .collect()
    }

    /// Marginal on the listed positions, keyed by their values in order.
    pub fn marginal(&self, positions: &[usize]) -> BTreeMap<Vec<usize>, Q> {
        let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for idx in self.support() {
            let db = self.space.database(idx);
            let key: Vec<usize> = positions.iter().map(|&p| db.0[p]).collect();
            *out.entry(key).or_insert_with(Q::zero) += &self.probs[idx];
        }
        out
    }
}

/// The data-generating distribution over databases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPrior(ProbTable);

impl JointPrior {
    pub fn new(table: ProbTable) -> Self {
        JointPrior(table)
    }

    pub fn table(&self) -> &ProbTable {
        &self.0
    }
}

impl std::ops::Deref for JointPrior {
    type Target = ProbTable;
    fn deref(&self) -> &ProbTable {
        &self.0
    }
}

/// An adversary's belief over databases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Belief(ProbTable);

impl Belief {
    pub fn new(table: ProbTable) -> Self {
        Belief(table)
    }

    pub fn table(&self) -> &ProbTable {
        &self.0
    }
}

impl std::ops::Deref for Belief {
    type Target = ProbTable;
    fn deref(&self) -> &ProbTable {
        &self.0
    }
}

/// A partial assignment `X_i = value, X_S = known_values` realizing `x_{i+S}`.
///
/// `known` is sorted ascending and never contains `position`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fixing {
    pub position: usize,
    pub value: usize,
    pub known: Vec<usize>,
    pub known_values: Vec<usize>,
}

impl Fixing {
    pub fn new(position: usize, value: usize, known: Vec<usize>, known_values: Vec<usize>) -> Self {
        Fixing {
            position,
            value,
            known,
            known_values,
        }
    }

    /// The same assignment with position `i` set to another value.
    pub fn with_value(&self, value: usize) -> Fixing {
        Fixing {
            value,
            ..self.clone()
        }
    }

    pub fn validate(&self, space: &DatabaseSpace) -> Result<(), ModelError> {
        let n = space.n();
        let k = space.domain().len();
        let bad = |m: &str| Err(ModelError::InvalidFixing(m.to_string()));
        if self.position >= n || self.value >= k {
            return bad("target position or value out of range");
        }
        if self.known.len() != self.known_values.len() {
            return bad("known positions and values differ in length");
        }
        if self.known.windows(2).any(|w| w[0] >= w[1]) {
            return bad("known positions must be strictly increasing");
        }
        if self.known.iter().any(|&p| p >= n || p == self.position) {
            return bad("known position out of range or equal to the target");
        }
        if self.known_values.iter().any(|&v| v >= k) {
            return bad("known value out of range");
        }
        Ok(())
    }

    /// Whether every position of the database is fixed.
    pub fn is_complete(&self, n: usize) -> bool {
        self.known.len() + 1 == n
    }

    /// The fully specified database when `is_complete`.
    pub fn database(&self, n: usize) -> Database {
        let mut v = vec![0; n];
        v[self.position] = self.value;
        for (&p, &x) in self.known.iter().zip(&self.known_values) {
            v[p] = x;
        }
        Database(v)
    }

    pub fn describe(&self, space: &DatabaseSpace) -> String {
        let d = space.domain();
        let mut parts = vec![format!("X{}={}", self.position + 1, d.symbol(self.value))];
        for (&p, &x) in self.known.iter().zip(&self.known_values) {
            parts.push(format!("X{}={}", p + 1, d.symbol(x)));
        }
        format!("[{}]", parts.join(", "))
    }

    fn matches_known(&self, db: &Database) -> bool {
        self.known
            .iter()
            .zip(&self.known_values)
            .all(|(&p, &x)| db.0[p] == x)
    }
}

impl fmt::Display for Fixing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={} v={} S={:?} x_S={:?}",
            self.position, self.value, self.known, self.known_values
        )
    }
}

/// Adversary `A(i, S)` together with the two values it tries to tell apart.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdversaryView {
    pub position: usize,
    pub known: Vec<usize>,
    pub value: usize,
    pub alt_value: usize,
    pub known_values: Vec<usize>,
}

impl AdversaryView {
    pub fn fixing(&self) -> Fixing {
        Fixing::new(
            self.position,
            self.value,
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

    pub fn validate(&self, space: &DatabaseSpace) -> Result<(), ModelError> {
        if self.value == self.alt_value {
            return Err(ModelError::InvalidFixing(
                "view compares a value with itself".into(),
            ));
        }
        self.fixing().validate(space)?;
        self.alt_fixing().validate(space)
    }
}

/// `P[Y = · | X_i = v, X_S = x_S]`, marginalizing the unfixed positions under
/// `law` conditioned on the fixed ones.
///
/// With every position fixed this is the kernel row itself. When `v` is `⊥`,
/// `law` is conditioned on `X_S = x_S` only and position `i` is overwritten
/// with `⊥` before the kernel is applied.
pub fn conditional_output_distribution(
    m: &Mechanism,
    law: &ProbTable,
    fixing: &Fixing,
) -> Result<Vec<Q>, ModelError> {
    let space = m.space();
    if law.space() != space {
        return Err(ModelError::SpaceMismatch);
    }
    fixing.validate(space)?;
    if fixing.is_complete(space.n()) {
        return Ok(m.row_of(&fixing.database(space.n())).to_vec());
    }
    let bottom = space.default_value();
    let mut acc = vec![Q::zero(); m.output_count()];
    let mut mass = Q::zero();
    for idx in law.support() {
        let db = space.database(idx);
        if !fixing.matches_known(&db) {
            continue;
        }
        let fed = if fixing.value == bottom {
            db.with_value(fixing.position, bottom)
        } else if db.0[fixing.position] == fixing.value {
            db
        } else {
            continue;
        };
        let w = law.prob(idx);
        mass += w;
        for (a, p) in acc.iter_mut().zip(m.row_of(&fed)) {
            *a += w * p;
        }
    }
    if mass.is_zero() {
        return Err(ModelError::ZeroMass(fixing.describe(space)));
    }
    for a in acc.iter_mut() {
        *a /= &mass;
    }
    Ok(acc)
}

/// `SD(p, q)`: half the L1 distance between two distributions.
pub fn statistical_distance(p: &[Q], q: &[Q]) -> Result<Q, ModelError> {
    if p.len() != q.len() {
        return Err(ModelError::LengthMismatch(p.len(), q.len()));
    }
    Ok(p.iter()
        .zip(q)
        .map(|(a, b)| if a > b { a - b } else { Q::zero() })
        .sum())
}

/// All subsets of `{0..n} \ {excluded}`, each sorted, in lexicographic order.
pub fn subsets_excluding(n: usize, excluded: usize) -> Vec<Vec<usize>> {
    let others: Vec<usize> = (0..n).filter(|&p| p != excluded).collect();
    let mut out: Vec<Vec<usize>> = (0..1usize << others.len())
        .map(|mask| {
            others
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &p)| p)
                .collect()
        })
        .collect();
    out.sort();
    out
}

/// Every assignment of `k` values from a domain of size `d`, lexicographic.
pub fn assignments(k: usize, d: usize) -> Vec<Vec<usize>> {
    let total = d.pow(k as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![0; k];
            for slot in v.iter_mut().rev() {
                *slot = idx % d;
                idx /= d;
            }
            v
        })
        .collect()
}

/// Precomputed [`conditional_output_distribution`] for every fixing of a
/// mechanism under one law. Unreachable fixings map to `None`.
///
/// Built with one pass over the database space per `(i, S)` rather than one
/// pass per fixing.
#[derive(Debug, Clone)]
pub struct ConditionalCache {
    entries: HashMap<Fixing, Option<Vec<Q>>>,
}

impl ConditionalCache {
    pub fn build(m: &Mechanism, law: &ProbTable) -> Result<Self, ModelError> {
        let space = m.space();
        if law.space() != space {
            return Err(ModelError::SpaceMismatch);
        }
        let n = space.n();
        let d = space.domain().len();
        let bottom = space.default_value();
        let support = law.support();
        let mut entries = HashMap::new();
        for i in 0..n {
            for known in subsets_excluding(n, i) {
                if known.len() + 1 == n {
                    for values in assignments(n, d) {
                        let db = Database(values);
                        let f = Fixing::new(
                            i,
                            db.0[i],
                            known.clone(),
                            known.iter().map(|&p| db.0[p]).collect(),
                        );
                        entries.insert(f, Some(m.row_of(&db).to_vec()));
                    }
                    continue;
                }
                // (value, x_S) -> (mass, weighted row sum); value = ⊥ holds the x_S-only group.
                let mut groups: BTreeMap<(usize, Vec<usize>), (Q, Vec<Q>)> = BTreeMap::new();
                for &idx in &support {
                    let db = space.database(idx);
                    let xs: Vec<usize> = known.iter().map(|&p| db.0[p]).collect();
                    let w = law.prob(idx);
                    let mut add = |key: (usize, Vec<usize>), row: &[Q]| {
                        let e = groups
                            .entry(key)
                            .or_insert_with(|| (Q::zero(), vec![Q::zero(); row.len()]));
                        e.0 += w;
                        for (a, p) in e.1.iter_mut().zip(row) {
                            *a += w * p;
                        }
                    };
                    if db.0[i] != bottom {
                        add((db.0[i], xs.clone()), m.row(idx));
                    }
                    add((bottom, xs), m.row(space.substitute(idx, i, bottom)));
                }
                for xs in assignments(known.len(), d) {
                    for v in 0..d {
                        let f = Fixing::new(i, v, known.clone(), xs.clone());
                        let dist = groups
                            .get(&(v, xs.clone()))
                            .map(|(mass, acc)| acc.iter().map(|a| a / mass).collect::<Vec<Q>>());
                        entries.insert(f, dist);
                    }
                }
            }
        }
        Ok(ConditionalCache { entries })
    }

    /// The conditional output distribution, or `None` if the fixing is unreachable.
    pub fn get(&self, fixing: &Fixing) -> Option<&[Q]> {
        self.entries.get(fixing).and_then(|e| e.as_deref())
    }
}
