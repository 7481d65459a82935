//! End to end validation: inputs are renamed for role cycles, checked for
//! stratification and consistency, and then validated along one route.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::chase::{run_core_chase, ChaseError};
use crate::kb::{ABox, Concept, ConceptSet, Interpretation, RoleName, TBox};
use crate::model::{build_can, complete_abox, BuildOptions, CompletedABox, ModelError, Mutation};
use crate::rewrite::{pure, rewrite, RewriteError, RewriteOptions, RootTypes};
use crate::shacl::{
    normalize, stratify_constraints, validate, Constraint, EvalError, NormalConstraint, ShapeAtom,
    ShapeRule, StrataError, TargetVerdict,
};
use crate::tbox::{collapse_role_cycles, rename_role, saturate_with, SaturatedTBox};

pub const DEFAULT_DEPTH: usize = 32;
/// Node budget of the direct and chase routes.
pub const DEFAULT_MAX_NODES: usize = 100_000;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Over the finite approximation of the austere canonical model.
    Direct,
    /// Over `A_T` with the rewritten constraints.
    Rewrite,
    /// Over the plain ABox, for ontologies without at-most axioms.
    PureAlchi,
    /// Over the plain ABox with binary shapes.
    PureShaclb,
    /// Over the result of the core chase.
    Chase,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Direct,
        Mode::Rewrite,
        Mode::PureAlchi,
        Mode::PureShaclb,
        Mode::Chase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Rewrite => "rewrite",
            Mode::PureAlchi => "pure-alchi",
            Mode::PureShaclb => "pure-shaclb",
            Mode::Chase => "chase",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    /// Largest word length of the direct route, and round limit of the
    /// chase route.
    pub depth: usize,
    pub max_nodes: usize,
    pub mutation: Mutation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Direct,
            depth: DEFAULT_DEPTH,
            max_nodes: DEFAULT_MAX_NODES,
            mutation: Mutation::default(),
        }
    }
}

impl RunConfig {
    pub fn mode(mode: Mode) -> Self {
        RunConfig {
            mode,
            ..RunConfig::default()
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum PipelineError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    NotStratified(#[from] StrataError),
    #[error("depth limit reached: {0}")]
    DepthLimit(String),
    #[error("rewriting failed: {0}")]
    Rewrite(RewriteError),
    #[error("mode {mode} does not apply: {reason}")]
    Unsupported { mode: Mode, reason: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_)
            | PipelineError::Rewrite(_)
            | PipelineError::Unsupported { .. } => 3,
            PipelineError::NotStratified(_) => 4,
            PipelineError::DepthLimit(_) => 5,
        }
    }
}

impl From<RewriteError> for PipelineError {
    fn from(e: RewriteError) -> Self {
        match e {
            RewriteError::NotStratified(e) => PipelineError::NotStratified(e),
            other => PipelineError::Rewrite(other),
        }
    }
}

/// Parsed inputs of one validation run.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Input {
    pub tbox: TBox,
    pub abox: ABox,
    pub constraints: Vec<Constraint>,
    pub targets: BTreeSet<ShapeAtom>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct Stats {
    pub individuals: usize,
    /// Domain size of the interpretation validated over.
    pub nodes: usize,
    pub constraints: usize,
    /// Constraints actually evaluated, after normalization or rewriting.
    pub evaluated_constraints: usize,
    pub strata: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct TargetReport {
    pub shape: String,
    pub node: String,
    pub valid: bool,
}

/// Field order is the JSON key order.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ValidationReport {
    pub consistent: bool,
    pub mode: Mode,
    pub targets: Vec<TargetReport>,
    pub stats: Stats,
}

impl ValidationReport {
    /// 0 when every target holds, 1 on a violation, 2 when inconsistent.
    pub fn exit_code(&self) -> i32 {
        if !self.consistent {
            2
        } else if self.targets.iter().all(|t| t.valid) {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.consistent {
            out.push_str("INCONSISTENT knowledge base\n");
            return out;
        }
        for t in &self.targets {
            let verdict = if t.valid { "VALID" } else { "VIOLATION" };
            out.push_str(&format!("{verdict} ${}(@{})\n", t.shape, t.node));
        }
        out
    }

    pub fn verdicts(&self) -> Vec<bool> {
        self.targets.iter().map(|t| t.valid).collect()
    }
}

/// Inputs after role-cycle renaming, with the saturated TBox and, for
/// consistent knowledge bases, the completed ABox.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub sat: SaturatedTBox,
    pub abox: ABox,
    pub constraints: Vec<Constraint>,
    pub targets: BTreeSet<ShapeAtom>,
    pub completed: Option<CompletedABox>,
}

impl Prepared {
    pub fn normalized(&self) -> Vec<NormalConstraint> {
        normalize(&self.constraints)
    }

    /// The completed 1-types of the individuals.
    pub fn root_types(&self) -> Vec<ConceptSet> {
        let Some(completed) = &self.completed else {
            return Vec::new();
        };
        (0..completed.individuals().len())
            .map(|i| completed.concepts(i))
            .collect()
    }
}

pub fn prepare(input: &Input) -> Result<Prepared, PipelineError> {
    stratify_constraints(&input.constraints)?;
    let (tbox, renaming) = collapse_role_cycles(&input.tbox);
    let rename = |r: &crate::kb::Role| rename_role(&renaming, r);
    let mut abox = input.abox.rename_roles(rename);
    let constraints: Vec<Constraint> = input
        .constraints
        .iter()
        .map(|c| Constraint {
            head: c.head.clone(),
            body: c.body.map_roles(&rename),
        })
        .collect();
    for c in &constraints {
        for a in c.body.individuals() {
            abox.add_individual(a);
        }
    }
    for t in &input.targets {
        abox.add_individual(t.node.clone());
    }
    let concepts: BTreeSet<Concept> = abox
        .concept_names()
        .into_iter()
        .chain(constraints.iter().flat_map(|c| c.body.concepts()))
        .collect();
    let roles: BTreeSet<RoleName> = abox
        .role_names()
        .into_iter()
        .chain(
            constraints
                .iter()
                .flat_map(|c| c.body.roles())
                .map(|r| r.name),
        )
        .collect();
    let sat =
        saturate_with(&tbox, concepts, roles).map_err(|e| PipelineError::Input(e.to_string()))?;
    let completed = match complete_abox(&sat, &abox) {
        Ok(c) => Some(c),
        Err(ModelError::Inconsistent(_)) => None,
        Err(e) => return Err(PipelineError::Input(e.to_string())),
    };
    Ok(Prepared {
        sat,
        abox,
        constraints,
        targets: input.targets.clone(),
        completed,
    })
}

fn report(
    mode: Mode,
    prepared: &Prepared,
    verdicts: Vec<TargetVerdict>,
    stats: Stats,
) -> ValidationReport {
    let targets = verdicts
        .into_iter()
        .map(|v| TargetReport {
            shape: v.shape.to_string(),
            node: v.node.to_string(),
            valid: v.valid,
        })
        .collect();
    let stats = Stats {
        individuals: prepared.abox.individuals().count(),
        constraints: prepared.constraints.len(),
        ..stats
    };
    ValidationReport {
        consistent: true,
        mode,
        targets,
        stats,
    }
}

fn check<R: ShapeRule>(
    interp: &Interpretation,
    rules: &[R],
    strat: &crate::shacl::Stratification,
    targets: &BTreeSet<ShapeAtom>,
    depth: usize,
) -> Result<Vec<TargetVerdict>, PipelineError> {
    validate(interp, rules, strat, targets).map_err(|e| match e {
        EvalError::NegationOverTruncated => PipelineError::DepthLimit(format!(
            "the model is not complete at depth {depth} and the constraints use negation"
        )),
    })
}

pub fn run(input: &Input, config: &RunConfig) -> Result<ValidationReport, PipelineError> {
    run_prepared(&prepare(input)?, config)
}

pub fn run_prepared(
    prepared: &Prepared,
    config: &RunConfig,
) -> Result<ValidationReport, PipelineError> {
    let mode = config.mode;
    let Some(completed) = &prepared.completed else {
        return Ok(ValidationReport {
            consistent: false,
            mode,
            targets: Vec::new(),
            stats: Stats::default(),
        });
    };
    let sat = &prepared.sat;
    let targets = &prepared.targets;
    match mode {
        Mode::Direct => {
            let options = BuildOptions {
                depth: config.depth,
                max_nodes: config.max_nodes,
                mutation: config.mutation,
            };
            let can = build_can(sat, completed, options);
            let strat = stratify_constraints(&prepared.constraints)?;
            let verdicts = check(&can, &prepared.constraints, &strat, targets, config.depth)?;
            let stats = Stats {
                nodes: can.len(),
                evaluated_constraints: prepared.constraints.len(),
                strata: strat.stratum_count(),
                ..Stats::default()
            };
            Ok(report(mode, prepared, verdicts, stats))
        }
        Mode::Chase => {
            let atoms = run_core_chase(sat, &prepared.abox, config.depth, config.max_nodes)
                .map_err(|e| match e {
                    ChaseError::NotTerminated(n) => {
                        PipelineError::DepthLimit(format!("the core chase ran {n} rounds"))
                    }
                    ChaseError::TooLarge { nodes, bound } => PipelineError::DepthLimit(format!(
                        "the chase reached {nodes} nodes (bound {bound})"
                    )),
                })?;
            let interp = atoms.to_interpretation();
            let strat = stratify_constraints(&prepared.constraints)?;
            let verdicts = check(
                &interp,
                &prepared.constraints,
                &strat,
                targets,
                config.depth,
            )?;
            let stats = Stats {
                nodes: interp.len(),
                evaluated_constraints: prepared.constraints.len(),
                strata: strat.stratum_count(),
                ..Stats::default()
            };
            Ok(report(mode, prepared, verdicts, stats))
        }
        Mode::Rewrite => {
            let options = RewriteOptions {
                roots: RootTypes::Only(prepared.root_types()),
                keep_quadruples: false,
            };
            let rewriting = rewrite(sat, &prepared.normalized(), &options)?;
            let interp = completed.to_interpretation(sat);
            let verdicts = check(
                &interp,
                &rewriting.rules,
                &rewriting.stratification,
                targets,
                0,
            )?;
            let stats = Stats {
                nodes: interp.len(),
                evaluated_constraints: rewriting.rules.len(),
                strata: rewriting.stratification.stratum_count(),
                ..Stats::default()
            };
            Ok(report(mode, prepared, verdicts, stats))
        }
        Mode::PureAlchi | Mode::PureShaclb => {
            let options = RewriteOptions {
                roots: RootTypes::Only(prepared.root_types()),
                keep_quadruples: false,
            };
            let rewriting = rewrite(sat, &prepared.normalized(), &options)?;
            let interp = Interpretation::from_abox(&prepared.abox);
            let (verdicts, evaluated, strata) = if mode == Mode::PureAlchi {
                let program = pure::alchi(sat, &rewriting)
                    .map_err(|reason| PipelineError::Unsupported { mode, reason })?;
                let verdicts = check(&interp, &program.rules, &program.stratification, targets, 0)?;
                (
                    verdicts,
                    program.rules.len(),
                    program.stratification.stratum_count(),
                )
            } else {
                let program = pure::shaclb(sat, &rewriting);
                (
                    program.validate(&interp, targets),
                    program.len(),
                    program.stratum_count(),
                )
            };
            let stats = Stats {
                nodes: interp.len(),
                evaluated_constraints: evaluated,
                strata,
                ..Stats::default()
            };
            Ok(report(mode, prepared, verdicts, stats))
        }
    }
}
