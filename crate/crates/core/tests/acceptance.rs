//! End-to-end acceptance run: every criterion at its stated tolerance and
//! time budget, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pettykit::harness::{run, CaseResult, ExperimentConfig, Report, Suite};

const SEED: u64 = 20240917;

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { ok: true, notes: Vec::new() }
    }

    fn require(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.ok = false;
            self.notes.push(what.into());
        }
    }

    fn within(&mut self, elapsed: Duration, limit_s: f64) {
        let s = elapsed.as_secs_f64();
        self.require(s < limit_s, format!("took {s:.2}s, budget {limit_s}s"));
    }
}

fn run_suite(suite: Suite, tweak: impl FnOnce(&mut ExperimentConfig)) -> (Report, Duration) {
    let mut cfg = ExperimentConfig::new(suite, SEED);
    tweak(&mut cfg);
    let start = Instant::now();
    let report = run(&cfg).unwrap_or_else(|e| panic!("{}: {e}", suite.name()));
    (report, start.elapsed())
}

fn cases<'a>(r: &'a Report, prefix: &'a str) -> impl Iterator<Item = &'a CaseResult> + 'a {
    r.cases.iter().filter(move |c| c.name.starts_with(prefix))
}

fn v(c: &CaseResult, key: &str) -> f64 {
    *c.values.get(key).unwrap_or_else(|| panic!("{}: no value {key}", c.name))
}

fn se(c: &CaseResult, key: &str) -> f64 {
    *c.stderr.get(key).unwrap_or_else(|| panic!("{}: no stderr {key}", c.name))
}

fn all_pass(chk: &mut Check, r: &Report) {
    let failed: Vec<&str> = r.failures().map(|c| c.name.as_str()).take(5).collect();
    chk.require(failed.is_empty(), format!("failed cases: {failed:?}"));
}

fn classical_petty() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::PettyClassical, |c| c.instances = Some(20));
    all_pass(&mut chk, &r);
    let petty: Vec<_> = cases(&r, "petty/").collect();
    chk.require(petty.len() == 22, format!("{} bodies, expected 22", petty.len()));
    for c in &petty {
        chk.require(v(c, "polar_volume") <= v(c, "ball_polar_volume") * (1.0 + 1e-9), format!("{} above ball", c.name));
    }
    let sq = r.case("petty/square").expect("square case");
    chk.require((v(sq, "polar_volume") - 0.5).abs() <= 1e-12, format!("square |Π°K| = {}", v(sq, "polar_volume")));
    let ball = PI * PI / 16.0;
    chk.require((v(sq, "ball_polar_volume") - ball).abs() <= 1e-12 * ball, "square ball value is not π²/16");
    chk.within(t, 1.0);
    chk
}

fn product_bound() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::PettyClassical, |c| c.instances = Some(50));
    let bound = PI * PI / 4.0;
    let random: Vec<_> = cases(&r, "petty/random-").collect();
    chk.require(random.len() == 50, format!("{} polygons, expected 50", random.len()));
    for c in &random {
        chk.require(v(c, "product") <= bound + 1e-6, format!("{} product {}", c.name, v(c, "product")));
    }
    let g = r.case("ball-attainment/64-gon").expect("64-gon case");
    chk.require(v(g, "product") >= 0.995 * bound, format!("64-gon ratio {}", v(g, "ratio")));
    chk.within(t, 5.0);
    chk
}

fn vp_oracle() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::OracleVp, |_| {});
    all_pass(&mut chk, &r);
    chk.require(r.tolerances["oracle_eps"] == 1e-4 && r.tolerances["oracle_dirs"] == 2048.0, "oracle settings changed");
    let oc: Vec<_> = cases(&r, "oracle/2d/").collect();
    chk.require(oc.len() == 60, format!("{} pairs × p, expected 60", oc.len()));
    let worst = oc.iter().map(|c| v(c, "relative_error")).fold(0.0, f64::max);
    chk.require(worst <= 1e-3, format!("worst relative error {worst:.3e}"));
    chk.within(t, 30.0);
    chk
}

fn convexity_scans() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::LemmaConvexity, |_| {});
    all_pass(&mut chk, &r);
    chk.require(r.parameters["t_points"] == 41, "t-grid is not 41 points");
    for (family, per_instance) in [("vp-shadow/", 3), ("mixed-volume/", 1), ("volume-lps/", 1), ("p-sum/", 1)] {
        for n in [2, 3] {
            let k = cases(&r, family).filter(|c| c.name[family.len()..].starts_with(&format!("{n}d/"))).count();
            chk.require(k == 50 * per_instance, format!("{family}{n}d has {k} cases"));
        }
    }
    for c in cases(&r, "vp-shadow/").chain(cases(&r, "mixed-volume/")).chain(cases(&r, "volume-lps/")) {
        chk.require(v(c, "max_violation") <= 1e-9 * v(c, "scale"), format!("{} violation", c.name));
    }
    for c in cases(&r, "p-sum/") {
        let allowed = 10.0 * v(c, "grid_bias") + 1e-9 * v(c, "scale");
        chk.require(v(c, "max_violation") <= allowed, format!("{} violation", c.name));
    }
    chk.within(t, 60.0);
    chk
}

fn sp_monotone() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::SpMonotone, |_| {});
    all_pass(&mut chk, &r);
    let st: Vec<_> = cases(&r, "steiner/").collect();
    chk.require(st.len() == 600, format!("{} (K, u, p) triples, expected 600", st.len()));
    for c in &st {
        chk.require(v(c, "sp_steiner") <= v(c, "sp_k") * (1.0 + 1e-9), format!("{} increased", c.name));
    }
    chk.within(t, 10.0);
    chk
}

fn measure_inequalities() -> Check {
    let mut chk = Check::new();
    let mut total = Duration::ZERO;
    for (suite, other) in [(Suite::SteinerStep, "measure_steiner"), (Suite::PettyLpq, "measure_ball")] {
        let (r, t) = run_suite(suite, |_| {});
        total += t;
        all_pass(&mut chk, &r);
        chk.require(r.cases.len() == 72, format!("{}: {} cases, expected 72", suite.name(), r.cases.len()));
        for c in &r.cases {
            let (a, b) = (v(c, "measure_k"), v(c, other));
            let s = se(c, "measure_k").hypot(se(c, other));
            chk.require(a <= b + 3.0 * s, format!("{} {}", suite.name(), c.name));
            chk.require(se(c, "measure_k") <= 0.02 * a && se(c, other) <= 0.02 * b, format!("{} stderr", c.name));
        }
        let measures = ["lebesgue", "gaussian", "cauchy"];
        for m in measures {
            chk.require(r.cases.iter().any(|c| c.name.contains(m)), format!("no {m} cases"));
        }
    }
    chk.within(total, 600.0);
    chk
}

fn fiber_profile() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::FiberProfile, |_| {});
    all_pass(&mut chk, &r);
    chk.require(r.cases.len() == 20, format!("{} profiles, expected 20", r.cases.len()));
    for c in &r.cases {
        chk.require(v(c, "max_excess_over_center") <= 0.0, format!("{} exceeds F(0)", c.name));
        let gap = (v(c, "f_plus_one") - v(c, "f_minus_one")).abs();
        chk.require(gap <= 3.0 * se(c, "f_plus_one").hypot(se(c, "f_minus_one")), format!("{} asymmetric", c.name));
    }
    chk.within(t, 300.0);
    chk
}

fn empirical_rearrangement() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::EmpiricalPetty, |_| {});
    all_pass(&mut chk, &r);
    chk.require(r.parameters["outer"] == 200, "outer sample count is not 200");
    chk.require(r.cases.len() == 4, format!("{} configurations, expected 4", r.cases.len()));
    for c in &r.cases {
        chk.require(v(c, "rearranged") >= v(c, "raw") - 3.0 * se(c, "difference"), format!("{} decreased", c.name));
    }
    chk.within(t, 600.0);
    chk
}

fn rearrangement_properties() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::RearrangeProps, |_| {});
    all_pass(&mut chk, &r);
    for c in &r.cases {
        chk.require(v(c, "mass_error") <= 1e-12, format!("{} mass", c.name));
    }
    for c in cases(&r, "star/") {
        chk.require(v(c, "equimeasurable") == 1.0, format!("{} level sets", c.name));
    }
    for c in cases(&r, "steiner/") {
        chk.require(v(c, "l1_to_exact") <= v(c, "grid_bound"), format!("{} off the exact symmetral", c.name));
    }
    for c in cases(&r, "marginal/") {
        chk.require(v(c, "concavity_violation") <= v(c, "allowed"), format!("{} not concave", c.name));
    }
    chk.require(cases(&r, "marginal/").count() > 0 && cases(&r, "steiner/").count() > 0, "missing case families");
    chk.within(t, 30.0);
    chk
}

fn symmetrization_flow() -> Check {
    let mut chk = Check::new();
    let (r, t) = run_suite(Suite::ShadowInvariants, |_| {});
    all_pass(&mut chk, &r);
    chk.require(r.parameters["flow_steps"] == 200, "flow is not 200 steps");
    for name in ["flow/square", "flow/pentagon"] {
        let c = r.case(name).unwrap_or_else(|| panic!("missing {name}"));
        chk.require(v(c, "relative_hausdorff") <= 0.05, format!("{name} d_H/diam {}", v(c, "relative_hausdorff")));
        chk.require(v(c, "volume_drift") <= 1e-9, format!("{name} drift {}", v(c, "volume_drift")));
    }
    chk.within(t, 30.0);
    chk
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("classical projection inequality", classical_petty),
        ("projection product bound and 64-gon attainment", product_bound),
        ("V_p facet formula vs finite differences", vp_oracle),
        ("convexity along linear parameter systems", convexity_scans),
        ("S_p under Steiner symmetrization", sp_monotone),
        ("measure of Π°_{Q,p}: Steiner step and ball endpoint", measure_inequalities),
        ("fiber profile even and peaked at 0", fiber_profile),
        ("empirical inequality under rearrangement", empirical_rearrangement),
        ("rearrangement properties", rearrangement_properties),
        ("Steiner flow to the ball", symmetrization_flow),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let chk = f();
        let verdict = if chk.ok { "PASS" } else { "FAIL" };
        println!("[{:2}] {verdict} {name} ({:.2}s)", i + 1, start.elapsed().as_secs_f64());
        for n in chk.notes.iter().take(5) {
            println!("       {n}");
        }
        failed += usize::from(!chk.ok);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
