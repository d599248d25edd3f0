//! Command-line front end: orchestration, configuration resolution,
//! persistence, and reproducible reporting. The binary is a thin wrapper
//! around `run`.
//!
//! Exit codes: 0 success, 2 validation/parse error, 3 resource budget
//! exceeded, 4 statistical check failed (reports are still written).

use clap::{Parser, Subcommand};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dims::Dimensions;
use crate::diophantine::{self, TargetMatrix};
use crate::error::{Error, Result};
use crate::escape::{self, EscapeConfig};
use crate::heights::{self, EnumBudget, HeightFunction};
use crate::lattice::{self, Lattice};
use crate::manifest::{self, RunManifest};
use crate::mc::{self, RngSpec};
use crate::stats::fmt_f64;
use crate::suites;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "LATFLOW_SEED";

#[derive(Parser, Debug)]
#[command(name = "latflow", version, about = "Flows on the space of lattices: heights, contraction checks, singular systems, escape surveys")]
pub struct Cli {
    /// RNG seed (default: $LATFLOW_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Cap the worker pool; default is the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for output files.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// key=value configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Follow g_{t l} u_s x and emit heights per step as CSV.
    Flow {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Offset matrix: rows ';'-separated, entries ','-separated,
        /// fractions, decimals, or a named constant (1x1).
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        steps: usize,
        /// Base lattice file (defaults to the standard lattice).
        #[arg(long)]
        lattice: Option<PathBuf>,
    },
    /// Height profile, minima, witnesses, and the covering constant.
    Alpha {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lattice: Option<PathBuf>,
        /// Optional flow push applied to the base lattice.
        #[arg(long)]
        push_t: Option<f64>,
        /// Optional offset applied before the push.
        #[arg(long)]
        s: Option<String>,
    },
    /// Build the height construction and print its index table.
    Height {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        a_prime: f64,
        /// Flow bound; overrides --t.
        #[arg(long)]
        omega: Option<f64>,
        /// Flow time from which to take the bound e^{mnt}.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run a named statistical suite: prop31, tails, lemma35, cor36,
    /// cor42, prop51.
    Verify {
        suite: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Largest flow time in the suite grid.
        #[arg(long)]
        t: Option<u64>,
        /// Rank for cor36; grade for tails.
        #[arg(long)]
        i: Option<usize>,
        /// Ambient dimension for tails.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
        /// Contraction constant for cor42/prop51.
        #[arg(long)]
        c: Option<f64>,
        /// Per-rank constant for cor36.
        #[arg(long)]
        c0: Option<f64>,
        /// Outer constant for prop51.
        #[arg(long)]
        constant: Option<f64>,
        /// Step count for prop51.
        #[arg(long)]
        steps: Option<usize>,
        /// Lattice count for cor42.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Classify a target matrix as singular on average.
    Classify {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        s: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        levels: u32,
    },
    /// Survey the escape set at one resolution.
    Survey {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        steps: usize,
        /// Escape proportion, as a fraction like 1/3 or a decimal.
        #[arg(long)]
        delta: String,
        /// Sublevel threshold; omit to search for it empirically.
        #[arg(long)]
        threshold: Option<f64>,
        /// Offset defining the base lattice u_s Z^d.
        #[arg(long)]
        x_offset: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Box-count dimension estimate over a ladder of step counts.
    Dimension {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        /// Comma-separated step counts, e.g. 2,3,4.
        #[arg(long)]
        ladder: String,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        x_offset: Option<String>,
    },
    /// The dimension bound mn - delta mn/(m+n), exact and float.
    Bound {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: String,
    },
    /// Re-run a recorded manifest and compare output digests.
    Rerun { manifest: PathBuf },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    seed: u64,
    output_dir: PathBuf,
    cfg: BTreeMap<String, String>,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Ctx> {
        let cfg = match &cli.config {
            Some(path) => parse_config(path)?,
            None => BTreeMap::new(),
        };
        let seed = cli
            .seed
            .or_else(|| cfg.get("seed").and_then(|v| v.parse().ok()))
            .or_else(|| std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0);
        let output_dir = cli
            .output_dir
            .clone()
            .or_else(|| cfg.get("output-dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&output_dir)?;
        Ok(Ctx {
            seed,
            output_dir,
            cfg,
        })
    }

    /// Flag > config file > default.
    fn resolve<V: Copy + ToString + std::str::FromStr>(
        &self,
        flag: Option<V>,
        key: &str,
        default: V,
    ) -> V {
        flag.or_else(|| self.cfg.get(key).and_then(|v| v.parse().ok()))
            .unwrap_or(default)
    }

    fn write_output(&self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.output_dir.join(name), contents)?;
        Ok(())
    }

    fn finalize(&self, command: &str, argv: Vec<String>, names: &[&str]) -> Result<()> {
        let mut man = RunManifest::start(command, argv, self.seed);
        man.finish(&self.output_dir, names)?;
        man.write(&self.output_dir.join(RunManifest::manifest_name(command)))?;
        Ok(())
    }
}

fn parse_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in std::fs::read_to_string(path)?.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad config line: {line}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli)?;
    match cli.command {
        Command::Flow {
            m,
            n,
            s,
            t,
            steps,
            lattice,
        } => cmd_flow(&ctx, m, n, &s, t, steps, lattice.as_deref()),
        Command::Alpha {
            m,
            n,
            lattice,
            push_t,
            s,
        } => cmd_alpha(&ctx, m, n, lattice.as_deref(), push_t, s.as_deref()),
        Command::Height {
            m,
            n,
            a,
            a_prime,
            omega,
            t,
        } => cmd_height(&ctx, m, n, a, a_prime, omega, t),
        Command::Verify {
            suite,
            m,
            n,
            t,
            i,
            d,
            samples,
            c,
            c0,
            constant,
            steps,
            count,
        } => cmd_verify(
            &ctx, &suite, m, n, t, i, d, samples, c, c0, constant, steps, count,
        ),
        Command::Classify {
            m,
            n,
            s,
            eps,
            levels,
        } => cmd_classify(&ctx, m, n, &s, eps, levels),
        Command::Survey {
            m,
            n,
            t,
            steps,
            delta,
            threshold,
            x_offset,
            samples,
        } => cmd_survey(&ctx, m, n, t, steps, &delta, threshold, x_offset.as_deref(), samples),
        Command::Dimension {
            m,
            n,
            t,
            ladder,
            delta,
            threshold,
            samples,
            x_offset,
        } => cmd_dimension(
            &ctx,
            m,
            n,
            t,
            &ladder,
            &delta,
            threshold,
            samples,
            x_offset.as_deref(),
        ),
        Command::Bound { m, n, delta } => cmd_bound(&ctx, m, n, &delta),
        Command::Rerun { manifest } => cmd_rerun(&ctx, &manifest),
    }
}

fn load_base_lattice(dims: Dimensions, path: Option<&Path>) -> Result<Lattice> {
    match path {
        Some(p) => {
            let x = lattice::parse_lattice(&std::fs::read_to_string(p)?)?;
            if x.dims() != dims {
                return Err(Error::validation("lattice file dimensions mismatch"));
            }
            Ok(x)
        }
        None => Ok(Lattice::standard(dims)),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_flow(
    ctx: &Ctx,
    m: usize,
    n: usize,
    s: &str,
    t: f64,
    steps: usize,
    lattice_path: Option<&Path>,
) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    if !(t > 0.0) {
        return Err(Error::validation("flow time must be positive"));
    }
    let offset = TargetMatrix::parse(m, n, s)?.to_matrix();
    let x0 = load_base_lattice(dims, lattice_path)?;
    let h = HeightFunction::standard(dims, t.max(1.0), 0.1, 0.2)?;
    let budget = EnumBudget::default();
    let d = dims.d();

    let mut csv = String::from("step,time,lambda1");
    for i in 1..d {
        csv.push_str(&format!(",alpha_{i}"));
    }
    csv.push_str(",tilde_alpha\n");

    let u = lattice::horospherical(dims, &offset)?;
    let mut y = lattice::act(&u, &x0)?;
    let g = lattice::diagonal_flow(dims, t);
    for step in 1..=steps {
        y = lattice::act(&g, &y)?;
        let minima = crate::reduction::successive_minima(&y, 1, budget.max_vectors)?;
        let profile = heights::alpha_profile(&y, &budget)?;
        let height = heights::composite_height_from_profile(&profile, &h);
        csv.push_str(&format!("{step},{}", fmt_f64(step as f64 * t)));
        csv.push_str(&format!(",{}", fmt_f64(minima.values[0])));
        for i in 1..d {
            csv.push_str(&format!(",{}", fmt_f64(profile.values[i])));
        }
        csv.push_str(&format!(",{}\n", fmt_f64(height)));
    }
    ctx.write_output("flow.csv", &csv)?;
    let argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "flow".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--s".into(),
        s.to_string(),
        "--t".into(),
        fmt_f64(t),
        "--steps".into(),
        steps.to_string(),
    ];
    ctx.finalize("flow", argv, &["flow.csv"])?;
    println!("flow: wrote {} steps to flow.csv", steps);
    Ok(())
}

fn cmd_alpha(
    ctx: &Ctx,
    m: usize,
    n: usize,
    lattice_path: Option<&Path>,
    push_t: Option<f64>,
    s: Option<&str>,
) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    let mut x = load_base_lattice(dims, lattice_path)?;
    if let Some(s) = s {
        let offset = TargetMatrix::parse(m, n, s)?.to_matrix();
        x = lattice::act(&lattice::horospherical(dims, &offset)?, &x)?;
    }
    if let Some(r) = push_t {
        x = lattice::act(&lattice::diagonal_flow(dims, r), &x)?;
    }
    let budget = EnumBudget::default();
    let minima = heights::minkowski_minima(&x, &budget)?;
    let profile = heights::alpha_profile(&x, &budget)?;
    let c_x = heights::covering_constant(&x, &budget)?;
    let witnesses: Vec<_> = profile
        .witnesses
        .iter()
        .map(|w| json!({"coords": w.witness_coords, "covolume": w.covolume}))
        .collect();
    let doc = json!({
        "m": m, "n": n,
        "minima": minima,
        "alpha": profile.values,
        "witnesses": witnesses,
        "covering_constant": c_x,
    });
    ctx.write_output("alpha.json", &serde_json::to_string_pretty(&doc)?)?;
    let mut argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "alpha".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
    ];
    if let Some(r) = push_t {
        argv.extend(["--push-t".into(), fmt_f64(r)]);
    }
    if let Some(s) = s {
        argv.extend(["--s".into(), s.to_string()]);
    }
    ctx.finalize("alpha", argv, &["alpha.json"])?;
    for i in 0..profile.values.len() {
        println!("alpha_{i} = {}", profile.values[i]);
    }
    println!("C(x) = {c_x}");
    Ok(())
}

fn cmd_height(
    ctx: &Ctx,
    m: usize,
    n: usize,
    a: f64,
    a_prime: f64,
    omega: Option<f64>,
    t: Option<f64>,
) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    let omega = omega.unwrap_or_else(|| lattice::flow_norm_bound(dims, t.unwrap_or(0.0)));
    let h = heights::build_height(&heights::beta_profile(dims), a, a_prime, omega)?;
    ctx.write_output("height.json", &serde_json::to_string_pretty(&h)?)?;
    let mut argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "height".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--a".into(),
        fmt_f64(a),
        "--a-prime".into(),
        fmt_f64(a_prime),
        "--omega".into(),
        fmt_f64(omega),
    ];
    if let Some(t) = t {
        argv.extend(["--t".into(), fmt_f64(t)]);
    }
    ctx.finalize("height", argv, &["height.json"])?;

    println!("profile beta: {:?}", h.beta);
    println!("pairs psi:    {:?}", h.psi);
    println!("affine phi:   {:?}", h.phi);
    println!("strict set I: {:?}", h.strict_set);
    println!("defect b:     {}", h.b);
    println!("epsilon:      {}", h.epsilon);
    println!("weights:      {:?}", h.weights);
    println!("c0:           {}", h.c0);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    ctx: &Ctx,
    suite: &str,
    m: Option<usize>,
    n: Option<usize>,
    t: Option<u64>,
    i: Option<usize>,
    d: Option<usize>,
    samples: Option<u64>,
    c: Option<f64>,
    c0: Option<f64>,
    constant: Option<f64>,
    steps: Option<usize>,
    count: Option<usize>,
) -> Result<()> {
    if !suites::KNOWN_SUITES.contains(&suite) {
        return Err(Error::validation(format!(
            "unknown suite {suite}; expected one of {:?}",
            suites::KNOWN_SUITES
        )));
    }
    let m = ctx.resolve(m, "m", 1);
    let n = ctx.resolve(n, "n", 1);
    let t = ctx.resolve(t, "t", 3);
    let samples = ctx.resolve(samples, "samples", 100_000);
    let c = ctx.resolve(c, "c", 8.0);
    let c0 = ctx.resolve(c0, "c0", 8.0);
    let constant = ctx.resolve(constant, "constant", 4.0);
    let steps = ctx.resolve(steps, "steps", 3);
    let count = ctx.resolve(count, "count", 20);
    let dims = Dimensions::new(m, n)?;
    let seed = ctx.seed;

    let report = match suite {
        "prop31" => suites::prop31_suite(dims, t, samples, seed)?,
        "tails" => {
            let pairs: Vec<(usize, usize)> = match (d, i) {
                (Some(d), Some(i)) => vec![(d, i)],
                (None, None) => vec![(2, 1), (3, 1), (3, 2), (4, 2)],
                _ => {
                    return Err(Error::validation(
                        "tails needs both --d and --i, or neither",
                    ))
                }
            };
            suites::tails_suite(&pairs, samples, seed)?
        }
        "lemma35" => suites::lemma35_suite(dims, t, 1.0, samples, seed)?,
        "cor36" => suites::cor36_suite(dims, i.unwrap_or(1), t.max(4), c0, samples, seed)?,
        "cor42" => suites::cor42_suite(dims, t as f64, c, count, samples, seed)?,
        "prop51" => suites::prop51_suite(dims, t as f64, steps, c, constant, samples, seed)?,
        _ => unreachable!(),
    };

    let name = format!("{suite}.json");
    ctx.write_output(&name, &serde_json::to_string_pretty(&report)?)?;
    let mut argv = vec![
        "--seed".into(),
        seed.to_string(),
        "verify".into(),
        suite.to_string(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--t".into(),
        t.to_string(),
        "--samples".into(),
        samples.to_string(),
        "--c".into(),
        fmt_f64(c),
        "--c0".into(),
        fmt_f64(c0),
        "--constant".into(),
        fmt_f64(constant),
        "--steps".into(),
        steps.to_string(),
        "--count".into(),
        count.to_string(),
    ];
    if let Some(d) = d {
        argv.extend(["--d".into(), d.to_string()]);
    }
    if let Some(i) = i {
        argv.extend(["--i".into(), i.to_string()]);
    }
    ctx.finalize(&format!("verify_{suite}"), argv, &[&name])?;

    for check in &report.checks {
        println!(
            "{}: mean={} stderr={} bound={} -> {}",
            check.estimator,
            check.mean,
            check.stderr,
            check.bound,
            if check.pass { "pass" } else { "FAIL" }
        );
    }
    if report.pass {
        println!("suite {suite}: pass");
        Ok(())
    } else {
        Err(Error::Statistical(format!("suite {suite} failed")))
    }
}

fn cmd_classify(ctx: &Ctx, m: usize, n: usize, s: &str, eps: f64, levels: u32) -> Result<()> {
    let target = TargetMatrix::parse(m, n, s)?;
    let (verdict, profile) = diophantine::classify_on_average(&target, eps, levels)?;
    let dani = diophantine::dani_crosscheck(&target, levels, eps)?;

    let mut csv = String::from("ell,T,eps_T");
    for j in 1..=n {
        csv.push_str(&format!(",q_{j}"));
    }
    for j in 1..=m {
        csv.push_str(&format!(",p_{j}"));
    }
    csv.push('\n');
    for level in &profile.levels {
        csv.push_str(&format!(
            "{},{},{}",
            level.level,
            level.t_scale,
            fmt_f64(level.eps)
        ));
        for q in &level.q {
            csv.push_str(&format!(",{q}"));
        }
        for p in &level.p {
            csv.push_str(&format!(",{p}"));
        }
        csv.push('\n');
    }
    ctx.write_output("classify.csv", &csv)?;
    let doc = json!({"verdict": verdict, "dani": dani});
    ctx.write_output("classify.json", &serde_json::to_string_pretty(&doc)?)?;
    let argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "classify".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--s".into(),
        s.to_string(),
        "--eps".into(),
        fmt_f64(eps),
        "--levels".into(),
        levels.to_string(),
    ];
    ctx.finalize("classify", argv, &["classify.csv", "classify.json"])?;

    println!(
        "fraction {} (trailing {}): {}",
        verdict.fraction,
        verdict.trailing_fraction,
        if verdict.singular_on_average {
            "singular-on-average"
        } else {
            "not singular-on-average"
        }
    );
    println!(
        "dani flags: singular={} divergent={} agree={}",
        dani.singular_flag, dani.divergent_flag, dani.flags_agree
    );
    Ok(())
}

fn resolve_threshold(
    dims: Dimensions,
    t: f64,
    flag: Option<f64>,
    seed: u64,
    budget: &EnumBudget,
) -> Result<(f64, HeightFunction)> {
    let h = HeightFunction::standard(dims, t, 0.1, 0.2)?;
    match flag {
        Some(m) => Ok((m, h)),
        None => {
            let probes = mc::contraction::default_probes(dims, RngSpec::new(seed, 901), 12);
            let region =
                mc::estimate_m_tilde(&h, t, 8.0, &probes, 4000, RngSpec::new(seed, 902), budget)?;
            Ok((region.threshold, h))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_survey(
    ctx: &Ctx,
    m: usize,
    n: usize,
    t: f64,
    steps: usize,
    delta: &str,
    threshold: Option<f64>,
    x_offset: Option<&str>,
    samples: Option<u64>,
) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    let delta_ratio = diophantine::parse_rational(delta)?;
    let delta_f = *delta_ratio.numer() as f64 / *delta_ratio.denom() as f64;
    let budget = EnumBudget::default();
    let (m_threshold, h) = resolve_threshold(dims, t, threshold, ctx.seed, &budget)?;
    let mut cfg = EscapeConfig::new(dims, t, steps, delta_f, m_threshold)?;
    cfg.mc_samples = ctx.resolve(samples, "samples", 200_000);

    let x0 = match x_offset {
        Some(s) => {
            let offset = TargetMatrix::parse(m, n, s)?.to_matrix();
            lattice::act(
                &lattice::horospherical(dims, &offset)?,
                &Lattice::standard(dims),
            )?
        }
        None => Lattice::standard(dims),
    };
    let cells = escape::survey(&x0, &h, &cfg, RngSpec::new(ctx.seed, 0), &budget)?;

    let mut csv = String::from("r,total,occupied,bound,pass\n");
    csv.push_str(&format!(
        "{},{},{},{},{}\n",
        fmt_f64(cells.resolution),
        fmt_f64(cells.total),
        fmt_f64(cells.occupied),
        fmt_f64(cells.bound),
        cells.pass
    ));
    ctx.write_output("survey.csv", &csv)?;
    let doc = json!({
        "dims": {"m": m, "n": n}, "t": t, "steps": steps, "delta": delta_f,
        "threshold": m_threshold, "seed": ctx.seed, "slack": cells.slack,
        "survey": cells,
    });
    ctx.write_output("survey.json", &serde_json::to_string_pretty(&doc)?)?;
    let mut argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "survey".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--t".into(),
        fmt_f64(t),
        "--steps".into(),
        steps.to_string(),
        "--delta".into(),
        delta.to_string(),
        "--threshold".into(),
        fmt_f64(m_threshold),
        "--samples".into(),
        cfg.mc_samples.to_string(),
    ];
    if let Some(s) = x_offset {
        argv.extend(["--x-offset".into(), s.to_string()]);
    }
    ctx.finalize("survey", argv, &["survey.csv", "survey.json"])?;

    println!(
        "survey: occupied {} of {} cells at r = {:.3e}; bound {:.3e} -> {}",
        cells.occupied,
        cells.total,
        cells.resolution,
        cells.bound * cells.slack,
        if cells.pass { "pass" } else { "FAIL" }
    );
    if cells.pass {
        Ok(())
    } else {
        Err(Error::Statistical("covering bound violated".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_dimension(
    ctx: &Ctx,
    m: usize,
    n: usize,
    t: f64,
    ladder: &str,
    delta: &str,
    threshold: Option<f64>,
    samples: Option<u64>,
    x_offset: Option<&str>,
) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    let delta_ratio = diophantine::parse_rational(delta)?;
    let delta_f = *delta_ratio.numer() as f64 / *delta_ratio.denom() as f64;
    let ladder: Vec<usize> = ladder
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad ladder entry: {s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = EnumBudget::default();
    let (m_threshold, h) = resolve_threshold(dims, t, threshold, ctx.seed, &budget)?;
    let mut base = EscapeConfig::new(dims, t, *ladder.first().unwrap_or(&1), delta_f, m_threshold)?;
    base.mc_samples = ctx.resolve(samples, "samples", 2_000_000);

    let x0 = match x_offset {
        Some(s) => {
            let offset = TargetMatrix::parse(m, n, s)?.to_matrix();
            lattice::act(
                &lattice::horospherical(dims, &offset)?,
                &Lattice::standard(dims),
            )?
        }
        None => Lattice::standard(dims),
    };
    let est = escape::dimension_estimate(&x0, &h, &base, &ladder, RngSpec::new(ctx.seed, 0), &budget)?;

    let mut csv = String::from("log_inv_r,count,log_count\n");
    for (r, c) in est.resolutions.iter().zip(&est.counts) {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64((1.0 / r).ln()),
            fmt_f64(*c),
            if *c > 0.0 {
                fmt_f64(c.ln())
            } else {
                "-inf".to_string()
            }
        ));
    }
    ctx.write_output("dimension.csv", &csv)?;
    let doc = json!({
        "dims": {"m": m, "n": n}, "t": t, "delta": delta_f,
        "threshold": m_threshold, "seed": ctx.seed,
        "estimate": est,
    });
    ctx.write_output("dimension.json", &serde_json::to_string_pretty(&doc)?)?;
    let mut argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "dimension".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--t".into(),
        fmt_f64(t),
        "--ladder".into(),
        ladder
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
        "--delta".into(),
        delta.to_string(),
        "--threshold".into(),
        fmt_f64(m_threshold),
        "--samples".into(),
        base.mc_samples.to_string(),
    ];
    if let Some(s) = x_offset {
        argv.extend(["--x-offset".into(), s.to_string()]);
    }
    ctx.finalize("dimension", argv, &["dimension.csv", "dimension.json"])?;

    println!(
        "dimension: fitted {} (raw {}), box-bound at t {}, dimension bound {}",
        est.fitted_dim, est.raw_slope, est.theory_box, est.theory_dim
    );
    Ok(())
}

fn cmd_bound(ctx: &Ctx, m: usize, n: usize, delta: &str) -> Result<()> {
    let dims = Dimensions::new(m, n)?;
    let delta_ratio = diophantine::parse_rational(delta)?;
    let delta64 = num_rational::Ratio::new(
        i64::try_from(*delta_ratio.numer()).map_err(|_| Error::validation("delta too large"))?,
        i64::try_from(*delta_ratio.denom()).map_err(|_| Error::validation("delta too large"))?,
    );
    if delta64 <= num_rational::Ratio::new(0, 1) || delta64 > num_rational::Ratio::new(1, 1) {
        return Err(Error::validation("delta must lie in (0, 1]"));
    }
    let (exact, float) = escape::theoretical_bound(dims, delta64);
    let doc = json!({
        "m": m, "n": n, "delta": delta,
        "exact": format!("{}/{}", exact.numer(), exact.denom()),
        "float": float,
    });
    ctx.write_output("bound.json", &serde_json::to_string_pretty(&doc)?)?;
    let argv = vec![
        "--seed".into(),
        ctx.seed.to_string(),
        "bound".into(),
        "--m".into(),
        m.to_string(),
        "--n".into(),
        n.to_string(),
        "--delta".into(),
        delta.to_string(),
    ];
    ctx.finalize("bound", argv, &["bound.json"])?;
    println!("dimension bound: {}/{} = {float}", exact.numer(), exact.denom());
    Ok(())
}

fn cmd_rerun(ctx: &Ctx, manifest_path: &Path) -> Result<()> {
    let man = RunManifest::load(manifest_path)?;
    let mut argv: Vec<String> = vec!["latflow".into()];
    argv.extend(man.argv.iter().cloned());
    argv.extend([
        "--output-dir".into(),
        ctx.output_dir.to_string_lossy().to_string(),
    ]);
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| Error::Parse(format!("recorded argv does not parse: {e}")))?;
    // statistical failures still write their outputs; digests decide
    match dispatch(cli) {
        Ok(()) | Err(Error::Statistical(_)) => {}
        Err(e) => return Err(e),
    }
    let bad = manifest::diff_outputs(&man, &ctx.output_dir)?;
    if bad.is_empty() {
        println!("rerun: all {} outputs reproduced bit-exactly", man.outputs.len());
        Ok(())
    } else {
        Err(Error::Statistical(format!(
            "outputs differ from the manifest: {bad:?}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg");
        std::fs::write(&path, "seed = 9\n# comment\nsamples=123\n").unwrap();
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg["seed"], "9");
        assert_eq!(cfg["samples"], "123");
    }

    #[test]
    fn cli_parses_spec_examples() {
        for argv in [
            vec!["latflow", "flow", "--m", "1", "--n", "1", "--s", "1/2", "--t", "1", "--steps", "10"],
            vec!["latflow", "verify", "prop31", "--m", "1", "--n", "1", "--t", "3", "--samples", "100000", "--seed", "7"],
            vec!["latflow", "verify", "tails", "--d", "2", "--i", "1"],
            vec!["latflow", "classify", "--s", "golden", "--eps", "0.1", "--levels", "20"],
            vec!["latflow", "height", "--m", "2", "--n", "1", "--a", "0.1", "--a-prime", "0.2"],
            vec!["latflow", "survey", "--m", "1", "--n", "1", "--t", "2", "--steps", "3", "--delta", "0.333"],
            vec!["latflow", "bound", "--m", "2", "--n", "1", "--delta", "1"],
        ] {
            Cli::try_parse_from(&argv).unwrap_or_else(|e| panic!("{argv:?}: {e}"));
        }
    }

    #[test]
    fn invalid_dimension_exits_with_validation_code() {
        let code = run(["latflow", "flow", "--m", "0", "--n", "1", "--s", "0", "--t", "1", "--steps", "1"]);
        assert_eq!(code, 2);
    }
}
