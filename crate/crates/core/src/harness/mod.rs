//! Config-driven suite runner: TOML experiment configs in, JSON reports and
//! CSV profiles out.

mod suites;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bodies::{make_standard, StandardBody};
use crate::error::{Error, Result};
use crate::geom::io::body_from_json;
use crate::geom::Polytope;
use crate::measures::MeasureKind;
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PettyClassical,
    PettyLpq,
    SteinerStep,
    LemmaConvexity,
    SpMonotone,
    ShadowInvariants,
    EmpiricalPetty,
    FiberProfile,
    RearrangeProps,
    OracleVp,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::PettyClassical,
        Suite::PettyLpq,
        Suite::SteinerStep,
        Suite::LemmaConvexity,
        Suite::SpMonotone,
        Suite::ShadowInvariants,
        Suite::EmpiricalPetty,
        Suite::FiberProfile,
        Suite::RearrangeProps,
        Suite::OracleVp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::PettyClassical => "petty-classical",
            Suite::PettyLpq => "petty-lpq",
            Suite::SteinerStep => "steiner-step",
            Suite::LemmaConvexity => "lemma-convexity",
            Suite::SpMonotone => "sp-monotone",
            Suite::ShadowInvariants => "shadow-invariants",
            Suite::EmpiricalPetty => "empirical-petty",
            Suite::FiberProfile => "fiber-profile",
            Suite::RearrangeProps => "rearrange-props",
            Suite::OracleVp => "oracle-vp",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    /// The property a suite checks.
    pub fn verifies(self) -> &'static str {
        match self {
            Suite::PettyClassical => "|Π°K| ≤ |Π°B_K| and |K|·|Π°K| ≤ |B|·|Π°B| (classical projection inequality)",
            Suite::PettyLpq => "ν(Π°_{Q,p}K) ≤ ν(Π°_{Q,p}B_K) for rotation-invariant convex ν",
            Suite::SteinerStep => "ν(Π°_{Q,p}K) ≤ ν(Π°_{Q,p}S^uK): one Steiner step never decreases the measure",
            Suite::LemmaConvexity => {
                "convexity in t of V_p, mixed volumes, volumes and p-sum volumes along linear parameter systems"
            }
            Suite::SpMonotone => "t ↦ S_p(K_u(t)) is convex and S_p(S^uK) ≤ S_p(K)",
            Suite::ShadowInvariants => "shadow systems keep volume and interpolate K, S^uK, R^uK; Steiner flows reach B_K",
            Suite::EmpiricalPetty => "E ν(Π°_Q[X_1…X_N]C) increases when every density is symmetrically rearranged",
            Suite::FiberProfile => "the fiber integral F_w(t) is even and peaks at t = 0",
            Suite::RearrangeProps => "rearrangements preserve level-set volumes and mass; marginals of convex indicators are concave",
            Suite::OracleVp => "facet formula for V_p agrees with the finite-difference limit definition",
        }
    }

    /// Library entry point the suite drives.
    pub fn entry_point(self) -> &'static str {
        match self {
            Suite::PettyClassical => "projbody::polar_proj_body",
            Suite::PettyLpq => "projbody::StarBodySpec + measures::star_body_measure (B_K)",
            Suite::SteinerStep => "projbody::StarBodySpec + measures::star_body_measure (S^uK)",
            Suite::LemmaConvexity => "scan::scan_fn over mixed::lp_mixed_volume",
            Suite::SpMonotone => "mixed::lp_surface_area",
            Suite::ShadowInvariants => "symmetrize::ShadowSystem, symmetrize::symmetrization_flow",
            Suite::EmpiricalPetty => "empirical::paired_comparison",
            Suite::FiberProfile => "empirical::fiber_profile",
            Suite::RearrangeProps => "rearrange::symmetric_decreasing_rearrangement",
            Suite::OracleVp => "mixed::lp_mixed_volume_fd_oracle",
        }
    }

    /// Tolerances the suite's verdicts use.
    pub fn tolerance_names(self) -> &'static [&'static str] {
        match self {
            Suite::PettyClassical | Suite::SpMonotone | Suite::ShadowInvariants => &["exact_rel"],
            Suite::PettyLpq | Suite::SteinerStep => &["sigma", "mc_max_rel_stderr"],
            Suite::LemmaConvexity => &["exact_rel", "grid_bias_factor"],
            Suite::EmpiricalPetty | Suite::FiberProfile => &["sigma"],
            Suite::RearrangeProps => &["mass_rel"],
            Suite::OracleVp => &["oracle_rel", "oracle_eps", "oracle_dirs"],
        }
    }
}

/// Decision thresholds, defaulting to the library-wide values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub exact_rel: f64,
    pub mass_rel: f64,
    pub oracle_rel: f64,
    pub oracle_eps: f64,
    pub oracle_dirs: usize,
    pub sigma: f64,
    pub mc_max_rel_stderr: f64,
    pub grid_bias_factor: f64,
    pub flow_rel_hausdorff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact_rel: tolerance::EXACT_REL_TOL,
            mass_rel: 1e-12,
            oracle_rel: tolerance::ORACLE_REL_TOL,
            oracle_eps: tolerance::ORACLE_EPS,
            oracle_dirs: tolerance::ORACLE_DIRS,
            sigma: tolerance::SIGMA_MULTIPLIER,
            mc_max_rel_stderr: tolerance::MC_MAX_REL_STDERR,
            grid_bias_factor: tolerance::GRID_BIAS_FACTOR,
            flow_rel_hausdorff: tolerance::FLOW_REL_HAUSDORFF,
        }
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "exact_rel" => self.exact_rel,
            "mass_rel" => self.mass_rel,
            "oracle_rel" => self.oracle_rel,
            "oracle_eps" => self.oracle_eps,
            "oracle_dirs" => self.oracle_dirs as f64,
            "sigma" => self.sigma,
            "mc_max_rel_stderr" => self.mc_max_rel_stderr,
            "grid_bias_factor" => self.grid_bias_factor,
            "flow_rel_hausdorff" => self.flow_rel_hausdorff,
            _ => return None,
        })
    }
}

/// Monte-Carlo budgets; unset values use the suite defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub outer: Option<usize>,
    pub inner: Option<usize>,
    /// Multiplies every Monte-Carlo budget.
    pub samples_scale: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { outer: None, inner: None, samples_scale: 1.0 }
    }
}

impl McConfig {
    fn scaled(&self, n: usize) -> usize {
        ((n as f64 * self.samples_scale).round() as usize).max(2)
    }

    pub fn outer_or(&self, default: usize) -> usize {
        self.scaled(self.outer.unwrap_or(default))
    }

    pub fn inner_or(&self, default: usize) -> usize {
        self.scaled(self.inner.unwrap_or(default))
    }
}

/// A body given by catalog entry or by a JSON body file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodyRef {
    File { file: PathBuf },
    Catalog(StandardBody),
}

impl BodyRef {
    pub fn load(&self, base: &Path) -> Result<Polytope> {
        match self {
            BodyRef::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                body_from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
            BodyRef::Catalog(b) => make_standard(b).map_err(|e| Error::Config(format!("{b:?}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub seed: u64,
    #[serde(default)]
    pub mc: McConfig,
    /// Number of seeded random instances.
    pub instances: Option<usize>,
    /// Ambient dimensions to test.
    pub dims: Option<Vec<usize>>,
    pub p_values: Option<Vec<f64>>,
    pub t_points: Option<usize>,
    /// Extra bodies checked in addition to (or, for some suites, instead of)
    /// the seeded instances.
    #[serde(default)]
    pub bodies: Vec<BodyRef>,
    /// Bodies `Q` for the `(Q, p)` projection bodies.
    #[serde(default)]
    pub q_bodies: Vec<BodyRef>,
    #[serde(default)]
    pub measures: Vec<MeasureKind>,
    /// Grid density file (rearrange-props, empirical-petty).
    pub density: Option<PathBuf>,
    pub grid_resolution: Option<usize>,
    pub flow_steps: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    /// Directory against which relative paths resolve; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        ExperimentConfig {
            suite,
            seed,
            mc: McConfig::default(),
            instances: None,
            dims: None,
            p_values: None,
            t_points: None,
            bodies: vec![],
            q_bodies: vec![],
            measures: vec![],
            density: None,
            grid_resolution: None,
            flow_steps: None,
            tolerances: Tolerances::default(),
            output: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Schema-level checks that do not need to build any body.
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.dims {
            if d.is_empty() || d.iter().any(|n| !(2..=3).contains(n)) {
                return Err(Error::Config("dims must be a nonempty subset of {2, 3}".into()));
            }
        }
        if let Some(ps) = &self.p_values {
            if ps.is_empty() || ps.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
                return Err(Error::Config("p_values must be finite and ≥ 1".into()));
            }
        }
        if matches!(self.t_points, Some(n) if n < 3) {
            return Err(Error::Config("t_points must be at least 3".into()));
        }
        if !(self.mc.samples_scale > 0.0 && self.mc.samples_scale.is_finite()) {
            return Err(Error::Config("samples_scale must be positive".into()));
        }
        if self.instances == Some(0) {
            return Err(Error::Config("instances must be positive".into()));
        }
        if matches!(self.grid_resolution, Some(r) if r < 4) {
            return Err(Error::Config("grid_resolution must be at least 4".into()));
        }
        if self.flow_steps == Some(0) {
            return Err(Error::Config("flow_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn load_bodies(&self) -> Result<Vec<Polytope>> {
        self.bodies.iter().map(|b| b.load(&self.base_dir)).collect()
    }

    pub fn load_q_bodies(&self) -> Result<Vec<Polytope>> {
        self.q_bodies.iter().map(|b| b.load(&self.base_dir)).collect()
    }
}

/// One checked case of a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    /// SHA-256 of the canonical JSON of the case inputs.
    pub inputs_digest: String,
    pub values: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub pass: bool,
}

/// Tabular data for plotting, written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Profile {
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| crate::geom::io::fmt_f64(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Effective parameters after defaults and scaling.
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub cases: Vec<CaseResult>,
    pub pass: bool,
    /// SHA-256 over the cases; equal for equal results.
    pub values_digest: String,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub profiles: Vec<Profile>,
}

impl Report {
    pub fn case(&self, name: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }

    /// Writes the JSON report atomically and each profile as
    /// `<stem>.<profile>.csv` next to it. Returns the CSV paths.
    pub fn write(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
        let mut written = Vec::new();
        for p in &self.profiles {
            let target = dir.join(format!("{stem}.{}.csv", p.name));
            let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
            p.write_csv(&mut tmp)?;
            tmp.persist(&target).map_err(|e| e.error)?;
            written.push(target);
        }
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        serde_json::to_writer_pretty(&mut tmp, self)?;
        writeln!(tmp)?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(written)
    }
}

pub fn digest(v: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured suite.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut ctx = suites::Ctx::new(cfg);
    match cfg.suite {
        Suite::PettyClassical => suites::petty_classical(&mut ctx)?,
        Suite::PettyLpq => suites::projection_measures(&mut ctx, suites::Compare::Ball)?,
        Suite::SteinerStep => suites::projection_measures(&mut ctx, suites::Compare::Steiner)?,
        Suite::LemmaConvexity => suites::lemma_convexity(&mut ctx)?,
        Suite::SpMonotone => suites::sp_monotone(&mut ctx)?,
        Suite::ShadowInvariants => suites::shadow_invariants(&mut ctx)?,
        Suite::EmpiricalPetty => suites::empirical_petty(&mut ctx)?,
        Suite::FiberProfile => suites::fiber_profiles(&mut ctx)?,
        Suite::RearrangeProps => suites::rearrange_props(&mut ctx)?,
        Suite::OracleVp => suites::oracle_vp(&mut ctx)?,
    }
    let (cases, profiles, parameters) = ctx.finish();
    let tolerances = cfg
        .suite
        .tolerance_names()
        .iter()
        .map(|n| (n.to_string(), cfg.tolerances.get(n).expect("known tolerance")))
        .collect();
    Ok(Report {
        suite: cfg.suite,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg)?,
        parameters,
        tolerances,
        pass: cases.iter().all(|c| c.pass),
        values_digest: digest(&cases),
        cases,
        wall_time_s: start.elapsed().as_secs_f64(),
        profiles,
    })
}

/// Human-readable suite table.
pub fn list_suites() -> String {
    let defaults = Tolerances::default();
    let mut out = String::new();
    for s in Suite::ALL {
        let tols: Vec<String> = s
            .tolerance_names()
            .iter()
            .map(|n| format!("{n}={}", defaults.get(n).expect("known tolerance")))
            .collect();
        out.push_str(&format!(
            "{:<18} {}\n{:<18} entry: {}; tolerances: {}\n",
            s.name(),
            s.verifies(),
            "",
            s.entry_point(),
            tols.join(", ")
        ));
    }
    out
}
