//! Audit reports, mechanical checks of the relations between the notions, and
//! the fuzzing driver.
//!
//! Every comparison happens in ratio space: `R = e^ε`, so `e^{2ε} − 1` is
//! `R² − 1` and `½ − 1/(e^ε + 1)` is `(R − 1)/(2(R + 1))`. Floats appear only
//! in [`compare_bound_functions`] and in displayed `ε` values.

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generators::{random_instance, GeneratorError, InstanceBounds, InstanceSpec};
use crate::leakage::{bdp_ratio, dp_ratio, LeakageWitness};
use crate::membership::{
    mp_check_analytic, mp_check_direct, mp_ratio_family, posterior_ratio, scale_distribution,
    scaled_posterior_ratio, scenario_output_distributions, violating_weight, FamilySpec,
    MembershipError, MpLeakage, MpWitness, DIRECT_CHECK_MAX_OUTPUTS,
};
use crate::model::{JointPrior, Mechanism, ModelError};
use crate::rational::{serde_q, Ratio, Q};
use crate::semantic::{
    bsp_leakage, sp_leakage, BeliefFamily, SemanticError, SemanticLeakage, SemanticOptions,
    SemanticWitness, UnfixedLaw,
};

/// Margin used by the only floating-point comparison in the crate.
pub const BOUND_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

fn default_random_beliefs() -> usize {
    50
}

fn default_target() -> Ratio {
    Ratio::one()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Seed for the random belief family.
    #[serde(default)]
    pub seed: u64,
    /// Random beliefs drawn per audit, on top of the two-point family.
    #[serde(default = "default_random_beliefs")]
    pub random_beliefs: usize,
    /// Additional belief families.
    #[serde(default)]
    pub families: Vec<BeliefFamily>,
    #[serde(default)]
    pub semantic: SemanticOptions,
    /// Level `R` at which the scaling construction is attempted.
    #[serde(default = "default_target")]
    pub theorem4_target: Ratio,
    /// Mixing weight for the scaled scenario; derived from the bound if absent.
    #[serde(
        default,
        with = "serde_q::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub theorem4_weight: Option<Q>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            seed: 0,
            random_beliefs: default_random_beliefs(),
            families: Vec::new(),
            semantic: SemanticOptions::default(),
            theorem4_target: default_target(),
            theorem4_weight: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: &Ratio, rhs: &Ratio) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub claim: String,
    pub relation: Relation,
    pub lhs: Ratio,
    pub rhs: Ratio,
    pub pass: bool,
}

impl ClaimCheck {
    pub fn new(claim: impl Into<String>, relation: Relation, lhs: Ratio, rhs: Ratio) -> Self {
        let pass = relation.holds(&lhs, &rhs);
        ClaimCheck {
            claim: claim.into(),
            relation,
            lhs,
            rhs,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem: u8,
    pub checks: Vec<ClaimCheck>,
    pub pass: bool,
    pub witness: Option<String>,
}

impl TheoremVerdict {
    fn new(theorem: u8, checks: Vec<ClaimCheck>, witness: Option<String>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        TheoremVerdict {
            theorem,
            checks,
            pass,
            witness,
        }
    }
}

/// `ln R` for each notion; `None` when the ratio is infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epsilons {
    pub dp: Option<f64>,
    pub bdp: Option<f64>,
    pub mp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    pub dp: Option<LeakageWitness>,
    pub bdp: Option<LeakageWitness>,
    pub mp: Option<MpWitness>,
    pub sp: Option<SemanticWitness>,
    pub bsp: Option<SemanticWitness>,
    pub sp_twopoint: Option<SemanticWitness>,
    pub bsp_twopoint: Option<SemanticWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub r_dp: Ratio,
    pub r_bdp: Ratio,
    pub r_mp: Ratio,
    /// Largest SD found over every belief family: a lower bound on SP leakage.
    #[serde(with = "serde_q")]
    pub sp_lower: Q,
    #[serde(with = "serde_q")]
    pub bsp_lower: Q,
    /// Largest SD over uniform two-point beliefs.
    #[serde(with = "serde_q")]
    pub sp_twopoint: Q,
    #[serde(with = "serde_q")]
    pub bsp_twopoint: Q,
    /// Number of `(belief, i, S, y)` cases behind `sp_lower` / `bsp_lower`.
    pub sp_evaluations: u64,
    pub bsp_evaluations: u64,
    pub epsilons: Epsilons,
    pub witnesses: Witnesses,
    pub verdicts: Vec<TheoremVerdict>,
    pub skipped_views: Vec<String>,
    pub config: AuditConfig,
    pub seed: u64,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, theorem: u8) -> Option<&TheoremVerdict> {
        self.verdicts.iter().find(|v| v.theorem == theorem)
    }
}

fn finite_eps(r: &Ratio) -> Option<f64> {
    (!r.is_infinite()).then(|| r.epsilon())
}

fn describe_semantic(m: &Mechanism, w: &Option<SemanticWitness>) -> Option<String> {
    w.as_ref().map(|w| {
        format!(
            "{} attacking X{} knowing {:?}, output {}",
            w.label,
            w.position + 1,
            w.known.iter().map(|p| p + 1).collect::<Vec<_>>(),
            m.outputs()[w.output]
        )
    })
}

fn merge(a: SemanticLeakage, b: SemanticLeakage) -> SemanticLeakage {
    let evaluations = a.evaluations + b.evaluations;
    let skipped = a.skipped + b.skipped;
    let mut best = if b.value > a.value || a.witness.is_none() {
        b
    } else {
        a
    };
    best.evaluations = evaluations;
    best.skipped = skipped;
    best
}

/// Computes every leakage figure and every verdict for one instance.
pub fn audit(
    m: &Mechanism,
    prior: &JointPrior,
    config: &AuditConfig,
) -> Result<AuditReport, AuditError> {
    if prior.space() != m.space() {
        return Err(ModelError::SpaceMismatch.into());
    }
    let (r_dp, dp_w) = dp_ratio(m);
    let bdp = bdp_ratio(m, prior)?;
    let family = FamilySpec::supported(m.space(), prior);
    let mp = mp_ratio_family(m, prior, &family)?;
    let mp_for_t4 = mp.clone();

    let two_point = [BeliefFamily::TwoPointUniform];
    let mut others = Vec::new();
    if config.random_beliefs > 0 {
        others.push(BeliefFamily::RandomSampled {
            seed: config.seed,
            count: config.random_beliefs,
        });
    }
    others.extend(config.families.iter().cloned());

    let sp_two = sp_leakage(m, &two_point)?;
    let sp_all = merge(sp_two.clone(), sp_leakage(m, &others)?);
    let bsp_two = bsp_leakage(m, prior, &two_point, config.semantic)?;
    let bsp_all = merge(
        bsp_two.clone(),
        bsp_leakage(m, prior, &others, config.semantic)?,
    );

    let mut report = AuditReport {
        epsilons: Epsilons {
            dp: finite_eps(&r_dp),
            bdp: finite_eps(&bdp.ratio),
            mp: finite_eps(&mp.ratio),
        },
        r_dp,
        r_bdp: bdp.ratio,
        r_mp: mp.ratio,
        sp_lower: sp_all.value.clone(),
        bsp_lower: bsp_all.value.clone(),
        sp_twopoint: sp_two.value.clone(),
        bsp_twopoint: bsp_two.value.clone(),
        sp_evaluations: sp_all.evaluations,
        bsp_evaluations: bsp_all.evaluations,
        witnesses: Witnesses {
            dp: dp_w,
            bdp: bdp.witness,
            mp: mp.witness,
            sp: sp_all.witness,
            bsp: bsp_all.witness,
            sp_twopoint: sp_two.witness,
            bsp_twopoint: bsp_two.witness,
        },
        verdicts: Vec::new(),
        skipped_views: bdp.skipped.iter().map(|f| f.describe(m.space())).collect(),
        config: config.clone(),
        seed: config.seed,
    };
    let t4 = theorem4_from(
        m,
        prior,
        &report.r_bdp,
        mp_for_t4,
        &config.theorem4_target,
        config.theorem4_weight.as_ref(),
    )?;
    let t1 = check_theorem1(&report, m);
    let t2 = check_theorem2(&report, m);
    let t3 = check_theorem3(&report);
    report.verdicts = vec![t1, t2, t3, t4];
    Ok(report)
}

/// BDP against BSP: `bsp_lower ≤ R_BDP² − 1`, and the two-point family
/// attains `(R_BDP − 1)/(2(R_BDP + 1))` exactly.
pub fn check_theorem1(report: &AuditReport, m: &Mechanism) -> TheoremVerdict {
    let r = &report.r_bdp;
    TheoremVerdict::new(
        1,
        vec![
            ClaimCheck::new(
                "bsp_lower <= R_BDP^2 - 1",
                Relation::Le,
                Ratio::finite(report.bsp_lower.clone()),
                r.squared_minus_one(),
            ),
            ClaimCheck::new(
                "bsp_twopoint = (R_BDP - 1) / (2 (R_BDP + 1))",
                Relation::Eq,
                Ratio::finite(report.bsp_twopoint.clone()),
                Ratio::finite(r.two_point_distance()),
            ),
        ],
        describe_semantic(m, &report.witnesses.bsp),
    )
}

/// DP against SP, mirroring [`check_theorem1`].
pub fn check_theorem2(report: &AuditReport, m: &Mechanism) -> TheoremVerdict {
    let r = &report.r_dp;
    TheoremVerdict::new(
        2,
        vec![
            ClaimCheck::new(
                "sp_lower <= R_DP^2 - 1",
                Relation::Le,
                Ratio::finite(report.sp_lower.clone()),
                r.squared_minus_one(),
            ),
            ClaimCheck::new(
                "sp_twopoint = (R_DP - 1) / (2 (R_DP + 1))",
                Relation::Eq,
                Ratio::finite(report.sp_twopoint.clone()),
                Ratio::finite(r.two_point_distance()),
            ),
        ],
        describe_semantic(m, &report.witnesses.sp),
    )
}

/// BDP against MP: `R_MP ≤ R_BDP`, with equality on the mixture family.
pub fn check_theorem3(report: &AuditReport) -> TheoremVerdict {
    TheoremVerdict::new(
        3,
        vec![
            ClaimCheck::new(
                "R_MP <= R_BDP",
                Relation::Le,
                report.r_mp.clone(),
                report.r_bdp.clone(),
            ),
            ClaimCheck::new(
                "R_MP = R_BDP",
                Relation::Eq,
                report.r_mp.clone(),
                report.r_bdp.clone(),
            ),
        ],
        report.witnesses.mp.as_ref().map(|w| {
            format!(
                "scenario X{}: {} vs {} knowing {:?}, output {}",
                w.scenario.position + 1,
                w.scenario.target_value,
                w.scenario.alt_value,
                w.scenario.known.iter().map(|p| p + 1).collect::<Vec<_>>(),
                w.output
            )
        }),
    )
}

/// MP at level `target` against BDP: if `R_BDP = α > target`, scaling the
/// mixing weight of the extremal scenario to a small `q` breaks
/// `target`-membership privacy; otherwise every scenario passes for every `p`.
pub fn check_theorem4(
    m: &Mechanism,
    prior: &JointPrior,
    target: &Ratio,
) -> Result<TheoremVerdict, AuditError> {
    check_theorem4_with(m, prior, target, None)
}

/// [`check_theorem4`] with an explicit scaled weight `q`.
pub fn check_theorem4_with(
    m: &Mechanism,
    prior: &JointPrior,
    target: &Ratio,
    weight: Option<&Q>,
) -> Result<TheoremVerdict, AuditError> {
    let alpha = bdp_ratio(m, prior)?.ratio;
    let family = FamilySpec::supported(m.space(), prior);
    let mp = mp_ratio_family(m, prior, &family)?;
    theorem4_from(m, prior, &alpha, mp, target, weight)
}

fn theorem4_from(
    m: &Mechanism,
    prior: &JointPrior,
    alpha: &Ratio,
    mp: MpLeakage,
    target: &Ratio,
    weight: Option<&Q>,
) -> Result<TheoremVerdict, AuditError> {
    let alpha = alpha.clone();
    let q = if alpha > *target {
        weight.cloned().or_else(|| violating_weight(&alpha, target))
    } else {
        None
    };
    let Some(q) = q else {
        // No violation is constructible: every scenario passes for every p.
        return Ok(TheoremVerdict::new(
            4,
            vec![ClaimCheck::new(
                "sup_p max_y A <= R_target",
                Relation::Le,
                mp.ratio,
                target.clone(),
            )],
            None,
        ));
    };
    let w = mp
        .witness
        .ok_or_else(|| MembershipError::InvalidScenario("no supported scenario".into()))?;
    let scaled = scale_distribution(&w.scenario, &q)?;
    let posterior = posterior_ratio(m, prior, &scaled, &[w.output])?;
    let mut checks = vec![
        ClaimCheck::new(
            "R_target < R_BDP",
            Relation::Lt,
            target.clone(),
            alpha.clone(),
        ),
        ClaimCheck::new(
            "scaled posterior ratio = a / (a q + 1 - q)",
            Relation::Eq,
            Ratio::finite(posterior.clone()),
            Ratio::finite(scaled_posterior_ratio(&w.ratio, &q)),
        ),
        ClaimCheck::new(
            "R_target < scaled posterior ratio",
            Relation::Lt,
            target.clone(),
            Ratio::finite(posterior),
        ),
    ];
    if m.output_count() <= DIRECT_CHECK_MAX_OUTPUTS {
        let direct = mp_check_direct(m, prior, &scaled, target)?;
        checks.push(ClaimCheck::new(
            "R_target < max over output sets of P[x_i|Y] / P[x_i]",
            Relation::Lt,
            target.clone(),
            Ratio::finite(direct.max_posterior_ratio),
        ));
    } else {
        let analytic = mp_check_analytic(m, prior, &scaled, target)?;
        checks.push(ClaimCheck::new(
            "g(q) < A",
            Relation::Lt,
            analytic.bound,
            analytic.statistic,
        ));
    }
    Ok(TheoremVerdict::new(
        4,
        checks,
        Some(format!(
            "{}, output {}",
            scaled.describe(m.space()),
            m.outputs()[w.output]
        )),
    ))
}

/// Re-derives every stored witness and verdict. Returns the list of problems
/// found; an empty list means the report is consistent with the instance.
pub fn verify_report(m: &Mechanism, prior: &JointPrior, report: &AuditReport) -> Vec<String> {
    let mut problems = Vec::new();
    let mut expect = |what: &str, ok: bool| {
        if !ok {
            problems.push(format!("{what} does not re-verify"));
        }
    };
    let w = &report.witnesses;
    if let Some(dp) = &w.dp {
        expect(
            "DP witness",
            dp.recompute(m, None).ok().as_ref() == Some(&report.r_dp),
        );
    }
    if let Some(bdp) = &w.bdp {
        expect(
            "BDP witness",
            bdp.recompute(m, Some(prior)).ok().as_ref() == Some(&report.r_bdp),
        );
    }
    if let Some(mp) = &w.mp {
        let ok = scenario_output_distributions(m, prior, &mp.scenario)
            .map(|(a, b)| {
                a[mp.output] == mp.numerator
                    && b[mp.output] == mp.denominator
                    && Ratio::from_parts(&a[mp.output], &b[mp.output]) == report.r_mp
            })
            .unwrap_or(false);
        expect("MP witness", ok);
    }
    let unfixed = report.config.semantic.unfixed;
    let semantic = [
        (
            "SP witness",
            &w.sp,
            &report.sp_lower,
            UnfixedLaw::Prior,
            None,
        ),
        (
            "SP two-point witness",
            &w.sp_twopoint,
            &report.sp_twopoint,
            UnfixedLaw::Prior,
            None,
        ),
        (
            "BSP witness",
            &w.bsp,
            &report.bsp_lower,
            unfixed,
            Some(prior),
        ),
        (
            "BSP two-point witness",
            &w.bsp_twopoint,
            &report.bsp_twopoint,
            unfixed,
            Some(prior),
        ),
    ];
    for (what, witness, value, law, p) in semantic {
        match witness {
            Some(sw) => {
                let ok = sw.distance == *value
                    && sw.recompute(m, p, law).ok().flatten().as_ref() == Some(value);
                expect(what, ok);
            }
            None => expect(what, value.is_zero()),
        }
    }
    for v in &report.verdicts {
        for c in &v.checks {
            expect(
                &format!("theorem {} claim `{}`", v.theorem, c.claim),
                c.relation.holds(&c.lhs, &c.rhs) == c.pass,
            );
        }
        expect(
            &format!("theorem {} verdict", v.theorem),
            v.checks.iter().all(|c| c.pass) == v.pass,
        );
    }
    match audit(m, prior, &report.config) {
        Ok(fresh) => {
            expect(
                "leakage ratios",
                fresh.r_dp == report.r_dp
                    && fresh.r_bdp == report.r_bdp
                    && fresh.r_mp == report.r_mp,
            );
            expect(
                "semantic bounds",
                fresh.sp_lower == report.sp_lower
                    && fresh.bsp_lower == report.bsp_lower
                    && fresh.sp_twopoint == report.sp_twopoint
                    && fresh.bsp_twopoint == report.bsp_twopoint,
            );
            expect("verdicts", fresh.verdicts == report.verdicts);
        }
        Err(e) => problems.push(format!("re-running the audit failed: {e}")),
    }
    problems
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub eps: f64,
    /// `½ − 1/(e^ε + 1)`.
    pub new_bound: f64,
    /// `ε/6`.
    pub old_bound: f64,
    pub improved: bool,
}

/// Tabulates the two-point semantic bound against `ε/6`.
pub fn compare_bound_functions(grid: &[f64]) -> Vec<BoundRow> {
    grid.iter()
        .map(|&eps| {
            let new_bound = 0.5 - 1.0 / (eps.exp() + 1.0);
            let old_bound = eps / 6.0;
            BoundRow {
                eps,
                new_bound,
                old_bound,
                improved: new_bound - old_bound > BOUND_MARGIN,
            }
        })
        .collect()
}

/// `min, min + step, …` up to `max` (inclusive within half a step), rounded
/// to 12 decimals so printed grids stay clean.
pub fn bound_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(min > 0.0 && max >= min && step > 0.0) || !(min.is_finite() && max.is_finite()) {
        return Vec::new();
    }
    let count = ((max - min) / step + 0.5).floor() as usize;
    (0..=count)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

/// One theorem check that failed during fuzzing, with its reproducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub theorem: Option<u8>,
    pub message: String,
    pub instance: InstanceSpec,
    pub config: AuditConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremStats {
    pub theorem: u8,
    pub checked: u64,
    pub passed: u64,
    /// Largest observed `lower / (R² − 1)` for the forward semantic bounds,
    /// `R_MP / R_BDP` for the membership relation. Absent when undefined.
    #[serde(with = "serde_q::option")]
    pub max_tightness: Option<Q>,
    pub extremal_trial: Option<u64>,
}

impl TheoremStats {
    fn new(theorem: u8) -> Self {
        TheoremStats {
            theorem,
            checked: 0,
            passed: 0,
            max_tightness: None,
            extremal_trial: None,
        }
    }

    fn absorb(&mut self, other: &TheoremStats) {
        self.checked += other.checked;
        self.passed += other.passed;
        if let Some(t) = &other.max_tightness {
            let better = match &self.max_tightness {
                None => true,
                Some(cur) => t > cur || (t == cur && other.extremal_trial < self.extremal_trial),
            };
            if better {
                self.max_tightness = Some(t.clone());
                self.extremal_trial = other.extremal_trial;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub trials: u64,
    pub bounds: InstanceBounds,
    pub random_beliefs: usize,
    /// Semantic `(belief, i, S, y)` cases compared against the forward bounds.
    pub semantic_cases: u64,
    pub theorems: Vec<TheoremStats>,
    pub violations: Vec<Violation>,
}

impl FuzzSummary {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzOptions {
    pub seed: u64,
    pub trials: u64,
    pub bounds: InstanceBounds,
    pub random_beliefs: usize,
}

/// The instance drawn for one fuzz trial.
pub fn fuzz_instance(
    seed: u64,
    trial: u64,
    bounds: &InstanceBounds,
) -> Result<InstanceSpec, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    random_instance(&mut rng, bounds)
}

/// Audit configuration used for one fuzz trial.
pub fn fuzz_config(seed: u64, trial: u64, random_beliefs: usize) -> AuditConfig {
    AuditConfig {
        seed: seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        random_beliefs,
        ..AuditConfig::default()
    }
}

struct TrialOutcome {
    stats: Vec<TheoremStats>,
    cases: u64,
    violations: Vec<Violation>,
}

fn tightness(lower: &Q, r: &Ratio) -> Option<Q> {
    match r.squared_minus_one() {
        Ratio::Finite(b) if !b.is_zero() => Some(lower / b),
        _ => None,
    }
}

fn run_trial(opts: &FuzzOptions, trial: u64) -> TrialOutcome {
    let mut stats: Vec<TheoremStats> = (1..=4).map(TheoremStats::new).collect();
    let config = fuzz_config(opts.seed, trial, opts.random_beliefs);
    let instance = match fuzz_instance(opts.seed, trial, &opts.bounds) {
        Ok(i) => i,
        Err(e) => {
            return TrialOutcome {
                stats,
                cases: 0,
                violations: vec![Violation {
                    trial,
                    theorem: None,
                    message: format!("instance generation failed: {e}"),
                    instance: InstanceSpec {
                        domain: crate::generators::DomainSpec::numeric(1),
                        n: 1,
                        mechanism: crate::generators::MechanismSpec::Identity,
                        prior: crate::generators::PriorSpec::Uniform {
                            include_bottom: true,
                        },
                    },
                    config,
                }],
            }
        }
    };
    let result = instance
        .build()
        .map_err(AuditError::from)
        .and_then(|(m, p)| audit(&m, &p, &config));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            return TrialOutcome {
                stats,
                cases: 0,
                violations: vec![Violation {
                    trial,
                    theorem: None,
                    message: format!("audit failed: {e}"),
                    instance,
                    config,
                }],
            }
        }
    };
    let mut violations = Vec::new();
    for v in &report.verdicts {
        let s = &mut stats[v.theorem as usize - 1];
        s.checked += 1;
        if v.pass {
            s.passed += 1;
        } else {
            let failed: Vec<&str> = v
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.claim.as_str())
                .collect();
            violations.push(Violation {
                trial,
                theorem: Some(v.theorem),
                message: failed.join("; "),
                instance: instance.clone(),
                config: config.clone(),
            });
        }
    }
    let t = [
        tightness(&report.bsp_lower, &report.r_bdp),
        tightness(&report.sp_lower, &report.r_dp),
        match (&report.r_mp, &report.r_bdp) {
            (Ratio::Finite(a), Ratio::Finite(b)) => Some(a / b),
            _ => None,
        },
    ];
    for (s, t) in stats.iter_mut().zip(t) {
        if t.is_some() {
            s.max_tightness = t;
            s.extremal_trial = Some(trial);
        }
    }
    TrialOutcome {
        stats,
        cases: report.sp_evaluations + report.bsp_evaluations,
        violations,
    }
}

/// Audits `trials` random instances. Trial `t` draws its instance from a
/// ChaCha8 stream `t` of `seed`, so trials are independent and the summary is
/// identical whatever the thread count.
pub fn fuzz(opts: &FuzzOptions) -> Result<FuzzSummary, GeneratorError> {
    opts.bounds.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..opts.trials)
        .into_par_iter()
        .map(|t| run_trial(opts, t))
        .collect();
    let mut theorems: Vec<TheoremStats> = (1..=4).map(TheoremStats::new).collect();
    let mut violations = Vec::new();
    let mut semantic_cases = 0;
    for o in outcomes {
        for (acc, s) in theorems.iter_mut().zip(&o.stats) {
            acc.absorb(s);
        }
        semantic_cases += o.cases;
        violations.extend(o.violations);
    }
    Ok(FuzzSummary {
        seed: opts.seed,
        trials: opts.trials,
        bounds: opts.bounds,
        random_beliefs: opts.random_beliefs,
        semantic_cases,
        theorems,
        violations,
    })
}
