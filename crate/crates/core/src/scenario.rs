//! Scenario files: a grid, named fields, and an ordered pipeline of
//! transforms and checks that report one row per assertion.
//!
//! ```toml
//! version = 1
//! name = "demo"
//! seed = 7
//! grid = { dim = 1, lo = [-1.0, -1.0], hi = [1.0, 1.0], counts = [17, 17] }
//!
//! [[fields]]
//! name = "u"
//! function = "normsq"
//!
//! [[stages]]
//! op = "axioms"
//! input = "u"
//! kernel = { kind = "quadratic", theta = 2.0 }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::catalog::{self, Params, SetShape};
use crate::error::{Error, Result};
use crate::fields::{sample, BoxGrid, ExtReal, ScalarField};
use crate::hessian::complex_hessian;
use crate::io::{read_field, write_field, write_mask, GridSpec};
use crate::qpsh::{
    canonical_pool, classical_qpsh_oracle_with, default_slices, random_pool, smooth_qpsh_index,
    smooth_qpsh_index_sampled, strict_qpsh_check, viscosity_falsifier, viscosity_scan, BallOptions, ClassicalOptions,
    Monomial, PluriharmonicPoly, ProbeFamily, Status, StrictOptions, SMOOTH_TOL,
};
use crate::setgeom::{distance_transform, GridSet};
use crate::supconv::{check_envelope_axioms, moreau_envelope_fast, sup_convolve_bruteforce, EnvelopeResult, Kernel};

pub const VERSION: u32 = 1;

const ENVELOPE_AXIOMS: &str = include_str!("../scenarios/envelope_axioms.toml");
const IM4_REGRESSION: &str = include_str!("../scenarios/im4_regression.toml");

/// Names of the scenarios shipped with the binary.
pub const BUNDLED: [&str; 2] = ["envelope_axioms", "im4_regression"];

pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "envelope_axioms" => Some(ENVELOPE_AXIOMS),
        "im4_regression" => Some(IM4_REGRESSION),
        _ => None,
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub grid: GridSpec,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    /// Catalog id.
    pub function: Option<String>,
    /// CSV path, relative to the scenario file.
    pub input: Option<PathBuf>,
    /// Uniform noise in `[-amplitude, amplitude]` drawn from the scenario seed.
    pub random: Option<RandomSpec>,
    /// Overrides the scenario grid.
    pub grid: Option<GridSpec>,
    pub set: Option<String>,
    pub radius: Option<f64>,
    pub poly: Option<Vec<TermSpec>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub amplitude: f64,
}

/// `coeff * z^exponents`, with `coeff = [re, im]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: [f64; 2],
    pub exponents: Vec<u8>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Quadratic { theta: f64 },
    /// `neg_linear` (-t), `neg_square` (-t²) or `neg_log1p` (-ln(1+t)).
    Radial { profile: String },
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSpec::Quadratic { theta } => Kernel::quadratic(*theta),
            KernelSpec::Radial { profile } => {
                let f: crate::supconv::RadialProfile = match profile.as_str() {
                    "neg_linear" => Arc::new(|t| -t),
                    "neg_square" => Arc::new(|t| -t * t),
                    "neg_log1p" => Arc::new(|t: f64| -t.ln_1p()),
                    _ => {
                        return Err(Error::Config { key: "kernel.profile".into(), message: format!("unknown `{profile}`") })
                    }
                };
                Kernel::radial(profile.clone(), f)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Fast,
    Brute,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Smooth,
    Classical,
    Viscosity,
    All,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelect {
    #[default]
    All,
    /// Nodes with every `Im z_k = 0`.
    RealAxis,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage {
    /// Sup-convolution of `input`; `mask_output` receives the proper
    /// interior as a mask.
    Supconv {
        input: String,
        output: String,
        kernel: KernelSpec,
        #[serde(default)]
        engine: Engine,
        mask_output: Option<String>,
    },
    /// Envelope axioms, one row per clause.
    Axioms { input: String, kernel: KernelSpec },
    /// Finite-difference complex Hessian of a catalog function against its
    /// closed form at random points with `|Im z_1| >= min_abs_im`.
    Hessian { row: String, function: String, points: usize, min_abs_im: f64, tol: f64 },
    /// Strict q-psh check; with `expect = "fail"` every selected node must fail.
    Strict {
        row: String,
        input: String,
        q: usize,
        epsilons: Vec<f64>,
        ball_radius: f64,
        #[serde(default)]
        nodes: NodeSelect,
        expect: Expect,
    },
    /// q-psh verdict of one or all checkers.
    Qpsh {
        row: String,
        input: String,
        q: usize,
        mode: Mode,
        expect: Expect,
        #[serde(default)]
        forbid_real_axis_touches: bool,
    },
    /// Distance to the finite nodes of `input`.
    Distance { input: String, output: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub artifact: String,
    pub path: PathBuf,
}

/// Overrides of the default probe family, read from a probes file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub betas: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub window_radius: Option<usize>,
    pub center_stride: Option<usize>,
    pub random_polys: Option<RandomPolys>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPolys {
    pub count: usize,
    pub max_degree: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn family(&self, n: usize) -> Result<ProbeFamily> {
        let mut fam = ProbeFamily::default_for(n);
        if let Some(b) = &self.betas {
            fam.betas = b.clone();
        }
        if let Some(d) = &self.deltas {
            fam.deltas = d.clone();
        }
        if let Some(w) = self.window_radius {
            fam.window_radius = w;
        }
        if let Some(s) = self.center_stride {
            fam.center_stride = s;
        }
        if let Some(r) = &self.random_polys {
            fam.poly_pool.extend(random_pool(n, r.count, r.max_degree, r.seed));
        }
        fam.validate(n)?;
        Ok(fam)
    }
}

/// Parses and validates a scenario.
pub fn parse(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if s.version != VERSION {
        return Err(Error::Config { key: "version".into(), message: format!("unsupported version {}", s.version) });
    }
    s.grid.build().map_err(|e| Error::Config { key: "grid".into(), message: e.to_string() })?;
    let mut known: Vec<&str> = Vec::new();
    for (i, f) in s.fields.iter().enumerate() {
        let sources = [f.function.is_some(), f.input.is_some(), f.random.is_some()].iter().filter(|&&b| b).count();
        if sources != 1 {
            return Err(Error::Config {
                key: format!("fields[{i}]"),
                message: "exactly one of `function`, `input`, `random` is required".into(),
            });
        }
        if known.contains(&f.name.as_str()) {
            return Err(Error::Config { key: format!("fields[{i}].name"), message: format!("duplicate `{}`", f.name) });
        }
        known.push(&f.name);
    }
    for (i, st) in s.stages.iter().enumerate() {
        let (inputs, outputs): (Vec<&String>, Vec<&String>) = match st {
            Stage::Supconv { input, output, mask_output, .. } => {
                (vec![input], std::iter::once(output).chain(mask_output.as_ref()).collect())
            }
            Stage::Axioms { input, .. } | Stage::Strict { input, .. } | Stage::Qpsh { input, .. } => (vec![input], vec![]),
            Stage::Distance { input, output } => (vec![input], vec![output]),
            Stage::Hessian { .. } => (vec![], vec![]),
        };
        for a in inputs {
            if !known.contains(&a.as_str()) {
                return Err(Error::Config {
                    key: format!("stages[{i}].input"),
                    message: format!("`{a}` is not produced by an earlier field or stage"),
                });
            }
        }
        for a in outputs {
            if known.contains(&a.as_str()) {
                return Err(Error::Config { key: format!("stages[{i}].output"), message: format!("`{a}` already exists") });
            }
            known.push(a);
        }
    }
    for (i, o) in s.outputs.iter().enumerate() {
        if !known.contains(&o.artifact.as_str()) {
            return Err(Error::Config {
                key: format!("outputs[{i}].artifact"),
                message: format!("unknown artifact `{}`", o.artifact),
            });
        }
    }
    Ok(s)
}

/// Loads a scenario from a path, falling back to a bundled scenario of that
/// name. Returns the directory relative inputs are resolved against.
pub fn load(spec: &str) -> Result<(Scenario, PathBuf)> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((parse(&text)?, dir));
    }
    match bundled(spec) {
        Some(text) => Ok((parse(text)?, PathBuf::from("."))),
        None => Err(Error::Config { key: "scenario".into(), message: format!("no file or bundled scenario `{spec}`") }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    Fail,
    Skip,
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RowStatus::Pass => "PASS",
            RowStatus::Fail => "FAIL",
            RowStatus::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    pub status: RowStatus,
    pub max_error: Option<f64>,
    pub witness: Option<String>,
}

impl Row {
    fn new(name: impl Into<String>, ok: bool, max_error: Option<f64>) -> Self {
        Row { name: name.into(), status: if ok { RowStatus::Pass } else { RowStatus::Fail }, max_error, witness: None }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub name: String,
    pub rows: Vec<Row>,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != RowStatus::Fail)
    }

    /// `0` when no row failed, `2` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    /// Summary table, then the first witness if some row failed.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.name);
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(3).max(3);
        let _ = writeln!(s, "{:<width$}  status  max_error", "row");
        for r in &self.rows {
            let err = r.max_error.map_or("-".to_string(), |e| format!("{e:.3e}"));
            let _ = writeln!(s, "{:<width$}  {:<6}  {err}", r.name, r.status.to_string());
        }
        let failed = self.rows.iter().filter(|r| r.status == RowStatus::Fail).count();
        let verdict = if failed == 0 { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "result: {verdict} ({} rows, {failed} failed)", self.rows.len());
        if let Some(w) = self.rows.iter().find(|r| r.status == RowStatus::Fail).and_then(|r| r.witness.as_ref()) {
            let _ = writeln!(s, "first witness:\n{w}");
        }
        s
    }
}

enum Artifact {
    Field { field: ScalarField, function: Option<(String, catalog::Function)> },
    Mask(GridSet),
}

struct Runner<'a> {
    scenario: &'a Scenario,
    base: PathBuf,
    rng: ChaCha8Rng,
    artifacts: BTreeMap<String, Artifact>,
    rows: Vec<Row>,
}

fn config(key: impl Into<String>, e: impl std::fmt::Display) -> Error {
    Error::Config { key: key.into(), message: e.to_string() }
}

fn poly_from_terms(n: usize, terms: &[TermSpec]) -> Result<PluriharmonicPoly> {
    let monomials = terms
        .iter()
        .map(|t| Monomial { coeff: Complex64::new(t.coeff[0], t.coeff[1]), exponents: t.exponents.clone() })
        .collect();
    PluriharmonicPoly::new(n, 1.0, monomials)
}

fn real_axis(grid: &BoxGrid, node: usize) -> bool {
    let n = grid.dim_complex();
    grid.coord(node)[n..].iter().all(|y| y.abs() < 1e-12)
}

fn verdict_ok(status: Status, expect: Expect) -> bool {
    matches!((status, expect), (Status::Pass, Expect::Pass) | (Status::Fail, Expect::Fail))
}

impl Runner<'_> {
    fn field(&self, name: &str) -> Result<(&ScalarField, Option<&(String, catalog::Function)>)> {
        match self.artifacts.get(name) {
            Some(Artifact::Field { field, function }) => Ok((field, function.as_ref())),
            Some(Artifact::Mask(_)) => Err(config("input", format!("`{name}` is a mask, not a field"))),
            None => Err(config("input", format!("unknown artifact `{name}`"))),
        }
    }

    fn build_field(&mut self, i: usize, f: &FieldSpec) -> Result<Artifact> {
        let key = |k: &str| format!("fields[{i}].{k}");
        let grid = match &f.grid {
            Some(g) => g.build().map_err(|e| config(key("grid"), e))?,
            None => self.scenario.grid.build()?,
        };
        if let Some(path) = &f.input {
            let field = read_field(&self.base.join(path))?;
            return Ok(Artifact::Field { field, function: None });
        }
        if let Some(r) = &f.random {
            if !(r.amplitude > 0.0 && r.amplitude.is_finite()) {
                return Err(config(key("random.amplitude"), "must be positive"));
            }
            let values = (0..grid.len()).map(|_| ExtReal::Finite(self.rng.gen_range(-r.amplitude..=r.amplitude))).collect();
            let field = ScalarField::new(grid, values)?.with_upper_bound(r.amplitude)?;
            return Ok(Artifact::Field { field, function: None });
        }
        let id = f.function.clone().expect("checked by parse");
        let mut p = Params::dim(grid.dim_complex());
        if let Some(set) = &f.set {
            p.set = Some(SetShape::parse(set, f.radius).map_err(|e| config(key("set"), e))?);
        }
        if let Some(terms) = &f.poly {
            p.poly = Some(poly_from_terms(grid.dim_complex(), terms).map_err(|e| config(key("poly"), e))?);
        }
        let func = catalog::build(&id, &p).map_err(|e| config(key("function"), e))?;
        let mut field = sample(|x| func(x), &grid)?;
        if id == "char" {
            field = field.with_upper_bound(0.0)?;
        }
        Ok(Artifact::Field { field, function: Some((id, func)) })
    }

    fn envelope(u: &ScalarField, kernel: &Kernel, engine: Engine) -> Result<EnvelopeResult> {
        match (kernel.theta(), engine) {
            (Some(theta), Engine::Fast) => moreau_envelope_fast(u, theta),
            _ => sup_convolve_bruteforce(u, kernel, u.grid()),
        }
    }

    fn stage(&mut self, i: usize, st: &Stage) -> Result<()> {
        match st {
            Stage::Supconv { input, output, kernel, engine, mask_output } => {
                let kernel = kernel.build().map_err(|e| config(format!("stages[{i}].kernel"), e))?;
                let env = Self::envelope(self.field(input)?.0, &kernel, *engine)?;
                if let Some(m) = mask_output {
                    let set = GridSet::new(env.values.grid().clone(), env.proper_interior_mask.clone())?;
                    self.artifacts.insert(m.clone(), Artifact::Mask(set));
                }
                self.artifacts.insert(output.clone(), Artifact::Field { field: env.values, function: None });
            }
            Stage::Axioms { input, kernel } => {
                let kernel = kernel.build().map_err(|e| config(format!("stages[{i}].kernel"), e))?;
                let u = self.field(input)?.0;
                let env = Self::envelope(u, &kernel, Engine::Fast)?;
                let report = check_envelope_axioms(u, &kernel, &env);
                for c in &report.clauses {
                    let mut row = Row::new(format!("{input}/clause-{}", c.clause), c.passed, Some(c.max_error));
                    if !c.applicable {
                        row.status = RowStatus::Skip;
                        row.max_error = None;
                    }
                    self.rows.push(row);
                }
            }
            Stage::Hessian { row, function, points, min_abs_im, tol } => {
                let grid = self.scenario.grid.build()?;
                let n = grid.dim_complex();
                let f = catalog::build(function, &Params::dim(n)).map_err(|e| config(format!("stages[{i}].function"), e))?;
                if catalog::exact_complex_hessian(function, n, &vec![Complex64::new(0.0, 0.0); n]).is_none() {
                    return Err(config(format!("stages[{i}].function"), format!("`{function}` has no closed-form Hessian")));
                }
                let mut worst: f64 = 0.0;
                let mut drawn = 0;
                while drawn < *points {
                    let x: Vec<f64> = (0..grid.real_dim()).map(|a| self.rng.gen_range(grid.lo()[a]..=grid.hi()[a])).collect();
                    if x[n].abs() < *min_abs_im {
                        continue;
                    }
                    drawn += 1;
                    let z = crate::fields::complex_point(&x);
                    let fd = complex_hessian(|p| f(p), &z, None)?;
                    let exact = catalog::exact_complex_hessian(function, n, &z).expect("checked above");
                    worst = worst.max((&fd - &exact).frobenius_norm());
                }
                self.rows.push(Row::new(row.clone(), worst <= *tol, Some(worst)));
            }
            Stage::Strict { row, input, q, epsilons, ball_radius, nodes, expect } => {
                let u = self.field(input)?.0;
                let grid = u.grid();
                let selected: Vec<usize> = match nodes {
                    NodeSelect::All => (0..grid.len()).collect(),
                    NodeSelect::RealAxis => (0..grid.len()).filter(|&k| real_axis(grid, k)).collect(),
                };
                let opts = StrictOptions { nodes: Some(selected), ..Default::default() };
                let r = strict_qpsh_check(u, *q, epsilons, *ball_radius, &opts)?;
                let ok = !r.nodes.is_empty()
                    && match expect {
                        Expect::Pass => r.all_passed(),
                        Expect::Fail => r.all_failed(),
                    };
                let mut out = Row::new(row.clone(), ok, None);
                if !ok {
                    out.witness = Some(format!(
                        "checked nodes = {}\npassing nodes = {}\nskipped nodes = {}",
                        r.nodes.len(),
                        r.passed_nodes().len(),
                        r.skipped_nodes.len()
                    ));
                }
                self.rows.push(out);
            }
            Stage::Qpsh { row, input, q, mode, expect, forbid_real_axis_touches } => {
                let (u, function) = self.field(input)?;
                self.rows.push(qpsh_row(row, u, function, *q, *mode, *expect, *forbid_real_axis_touches)?);
            }
            Stage::Distance { input, output } => {
                let u = self.field(input)?.0;
                let set = GridSet::new(u.grid().clone(), u.values().iter().map(|v| v.is_finite()).collect())?;
                let d = distance_transform(&set)?;
                self.artifacts.insert(output.clone(), Artifact::Field { field: d, function: None });
            }
        }
        Ok(())
    }
}

fn qpsh_row(
    name: &str,
    u: &ScalarField,
    function: Option<&(String, catalog::Function)>,
    q: usize,
    mode: Mode,
    expect: Expect,
    forbid_real_axis_touches: bool,
) -> Result<Row> {
    let n = u.grid().dim_complex();
    let mut statuses = Vec::new();
    let mut witness = None;
    if matches!(mode, Mode::Smooth | Mode::All) {
        let report = match function {
            Some((id, f)) if catalog::entry(id)?.smooth => smooth_qpsh_index(&|x: &[f64]| f(x), u.grid(), None, SMOOTH_TOL),
            _ => smooth_qpsh_index_sampled(u, SMOOTH_TOL),
        };
        match report {
            Ok(r) => statuses.push(if r.q_star <= q || q >= n { Status::Pass } else { Status::Fail }),
            Err(Error::NonSmooth { .. }) if mode == Mode::All => {}
            Err(e) => return Err(e),
        }
    }
    if matches!(mode, Mode::Classical | Mode::All) {
        let balls = BallOptions::for_dim(n);
        let slices = default_slices(u.grid(), q, &balls);
        let v = classical_qpsh_oracle_with(u, q, &slices, &canonical_pool(n), &ClassicalOptions::new(balls.balls_per_slice))?;
        if witness.is_none() {
            witness = v.witness.as_ref().map(|w| w.to_string());
        }
        statuses.push(v.status);
    }
    let mut touches_on_axis = 0;
    if matches!(mode, Mode::Viscosity | Mode::All) {
        let fam = ProbeFamily::default_for(n);
        let v = if forbid_real_axis_touches {
            let scan = viscosity_scan(u, q, &fam)?;
            touches_on_axis = scan.touches.iter().filter(|t| real_axis(u.grid(), t.node)).count();
            scan.verdict
        } else {
            viscosity_falsifier(u, q, &fam)
        };
        if witness.is_none() {
            witness = v.witness.as_ref().map(|w| w.to_string());
        }
        statuses.push(v.status);
    }
    let status = if statuses.contains(&Status::Fail) { Status::Fail } else { Status::Pass };
    let agree = statuses.windows(2).all(|w| w[0] == w[1]);
    let ok = verdict_ok(status, expect) && agree && touches_on_axis == 0;
    let mut row = Row::new(name, ok, None);
    if !ok {
        let mut text = witness.unwrap_or_default();
        if touches_on_axis > 0 {
            let _ = write!(text, "\ntouches_on_real_axis = {touches_on_axis}");
        }
        if !agree {
            let _ = write!(text, "\ncheckers disagree: {statuses:?}");
        }
        row.witness = Some(text.trim_start().to_string());
    }
    Ok(row)
}

/// Runs every field and stage in order and writes the declared outputs
/// under `out_dir`.
pub fn run(scenario: &Scenario, base: &Path, out_dir: &Path) -> Result<Outcome> {
    let mut runner = Runner {
        scenario,
        base: base.to_path_buf(),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        artifacts: BTreeMap::new(),
        rows: Vec::new(),
    };
    for (i, f) in scenario.fields.iter().enumerate() {
        let a = runner.build_field(i, f)?;
        runner.artifacts.insert(f.name.clone(), a);
    }
    for (i, st) in scenario.stages.iter().enumerate() {
        runner.stage(i, st)?;
    }
    let mut written = Vec::new();
    if !scenario.outputs.is_empty() {
        fs::create_dir_all(out_dir)?;
    }
    for o in &scenario.outputs {
        let path = out_dir.join(&o.path);
        match &runner.artifacts[&o.artifact] {
            Artifact::Field { field, .. } => write_field(&path, field)?,
            Artifact::Mask(set) => write_mask(&path, set)?,
        }
        written.push(path);
    }
    Ok(Outcome { name: scenario.name.clone(), rows: runner.rows, written })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
version = 1
name = "t"
seed = 1
grid = { dim = 1, lo = [-1.0, -1.0], hi = [1.0, 1.0], counts = [9, 9] }

[[fields]]
name = "u"
function = "normsq"

[[stages]]
op = "qpsh"
row = "convex"
input = "u"
q = 0
mode = "all"
expect = "pass"
"#;

    #[test]
    fn minimal_runs() {
        let s = parse(MINIMAL).unwrap();
        let out = run(&s, Path::new("."), Path::new(".")).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.passed(), "{}", out.summary());
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = MINIMAL.replace("seed = 1", "seed = 1\nsede = 2");
        let e = parse(&bad).unwrap_err().to_string();
        assert!(e.contains("sede"), "{e}");
        let e = parse(&MINIMAL.replace("version = 1", "version = 3")).unwrap_err().to_string();
        assert!(e.contains("version"), "{e}");
        let e = parse(&MINIMAL.replace("input = \"u\"", "input = \"v\"")).unwrap_err().to_string();
        assert!(e.contains("stages[0].input"), "{e}");
    }

    #[test]
    fn bundled_scenarios_parse() {
        for name in BUNDLED {
            parse(bundled(name).unwrap()).unwrap();
        }
    }
}
