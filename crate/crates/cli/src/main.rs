//! `covdive` command-line entry point. Every subcommand writes into a run
//! directory holding its artifacts and a `manifest.json`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use covdive::diving::{
    cf_solve, collect_targets, train_nd, ManifestEntry, NdConfig, Strategy, TrainingExample, TrainingManifest,
};
use covdive::eval::{
    coverage_csv, cutoff_csv, metrics_csv, run_benchmark, sweep_coverage, sweep_cutoff, BenchSetup, CoverageSweep, ScaleSet,
};
use covdive::io::{gen_capped_selection, gen_indep_set, gen_set_cover, parse_mps, read_instance, write_instance};
use covdive::mip::{solve_lp, solve_mip_opts, Assignment, ClockKind, MipInstance, MipOptions, SolveMode, SolveTrace};
use covdive::model::{read_checkpoint, write_checkpoint, ModelParams};
use covdive::par::{set_workers, Parallelism};
use covdive::rng::SplitMix64;
use covdive::tal::properties::{fit_frequency, verify_lemmas};
use covdive::tal::{tal_solve, train_tal, TalConfig};

const RUN_ROOT_ENV: &str = "COVDIVE_RUN_ROOT";
const MANIFEST: &str = "manifest.json";

#[derive(Parser)]
#[command(name = "covdive", version, about = "Learning-guided partial assignment for MIPs")]
struct Cli {
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Deterministic work clock instead of wall time.
    #[arg(long, global = true)]
    fixed_clock: bool,
    /// Run directory; defaults to a fresh directory under $COVDIVE_RUN_ROOT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Write synthetic instances.
    #[command(subcommand)]
    Generate(Generate),
    /// Solve training instances and record target assignments.
    Collect(CollectArgs),
    /// Supervised training of the backbone and per-variable head.
    TrainNd(TrainNdArgs),
    /// Threshold-aware training of the coverage heads.
    TrainTal(TrainTalArgs),
    /// Solve one instance.
    Solve(SolveArgs),
    /// Feasibility curves over the cutoff or the coverage.
    #[command(subcommand)]
    Sweep(Sweep),
    /// Head-to-head benchmark from a JSON config (or a bench manifest).
    Bench(BenchArgs),
    /// Exhaustive checks of the monotonicity lemmas and the frequency fit.
    VerifyTheory(TheoryArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Collect(_) => "collect",
            Command::TrainNd(_) => "train-nd",
            Command::TrainTal(_) => "train-tal",
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::Bench(_) => "bench",
            Command::VerifyTheory(_) => "verify-theory",
        }
    }
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Generate {
    SetCover {
        #[arg(long, default_value_t = 50)]
        rows: usize,
        #[arg(long, default_value_t = 100)]
        cols: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// Seed of the first instance; instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    IndepSet {
        #[arg(long, default_value_t = 50)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        affinity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// `min w'x` with at least `cap` variables taken: feasible iff at most
    /// `vars - cap` are fixed to zero.
    CappedSelection {
        #[arg(long, default_value_t = 20)]
        vars: usize,
        #[arg(long, default_value_t = 8)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

#[derive(Args, Serialize)]
struct CollectArgs {
    /// Directory of instance files (.json or .mps).
    #[arg(long)]
    instances: PathBuf,
    /// Solve budget per instance, in seconds.
    #[arg(long, default_value_t = 10.0)]
    budget: f64,
}

#[derive(Args, Serialize)]
struct TrainNdArgs {
    /// Training manifest written by `collect`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
}

#[derive(Args, Serialize)]
struct TrainTalArgs {
    /// Pretrained checkpoint.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[arg(long, default_value_t = 20)]
    outer: usize,
    #[arg(long, default_value_t = 10)]
    inner: usize,
    /// Budget of each probe solve, in seconds.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 5)]
    probes: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::TopK)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Learning rates of the pi, (psi, phi) and (Psi, Phi) head groups.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.03")]
    lr: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
enum StrategyArg {
    TopK,
    Bernoulli,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::TopK => Strategy::ConfidenceTopK,
            StrategyArg::Bernoulli => Strategy::BernoulliRandom,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Baseline,
    Cf,
    Tal,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Baseline)]
    mode: Mode,
    /// Checkpoint, required by `cf` and `tal`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 10.0)]
    budget: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::TopK)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Sweep {
    Cutoff {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        instances: PathBuf,
        /// Comma-separated cutoffs in [0.5, 1].
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,0.9,0.95,0.99,1.0")]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        budget: f64,
    },
    Coverage {
        #[arg(long)]
        model: PathBuf,
        /// One directory per scale, smallest first.
        #[arg(long, required = true, num_args = 1..)]
        instances: Vec<PathBuf>,
        /// Scale label of each directory; defaults to 1, 2, 3, ...
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
        /// Evenly spaced coverage points on [0, 1].
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Bernoulli)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 2.0)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Serialize)]
struct TheoryArgs {
    /// Discrete variables per instance (at most 12).
    #[arg(long, default_value_t = 10)]
    max_vars: usize,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Benchmark configuration file. Relative paths are resolved against the
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    test: PathBuf,
    validation: PathBuf,
    nd_model: PathBuf,
    #[serde(default)]
    tal_model: Option<PathBuf>,
    budget: f64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_grid")]
    gamma_grid: Vec<f64>,
    #[serde(default = "default_reference_budget")]
    reference_budget: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_strategy")]
    strategy: StrategyArg,
    #[serde(default)]
    fixed_clock: bool,
}

fn default_gamma() -> f64 {
    0.9
}

fn default_grid() -> Vec<f64> {
    vec![0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
}

fn default_reference_budget() -> f64 {
    60.0
}

fn default_strategy() -> StrategyArg {
    StrategyArg::TopK
}

struct Ctx {
    dir: PathBuf,
    clock: ClockKind,
    par: Parallelism,
}

impl Ctx {
    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }
}

fn clock_for(fixed: bool) -> ClockKind {
    if fixed {
        ClockKind::fixed()
    } else {
        ClockKind::Wall
    }
}

/// First unused `root/<command>-NNN`.
fn numbered_dir(root: &Path, command: &str) -> PathBuf {
    (1..).map(|k| root.join(format!("{command}-{k:03}"))).find(|p| !p.exists()).expect("unbounded search")
}

fn run_dir(explicit: Option<&Path>, command: &str) -> Result<PathBuf> {
    let dir = match explicit {
        Some(d) => d.to_path_buf(),
        None => numbered_dir(&PathBuf::from(std::env::var_os(RUN_ROOT_ENV).unwrap_or_else(|| "runs".into())), command),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating run directory {}", dir.display()))?;
    Ok(dir)
}

fn is_instance_file(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    (ext == "json" || ext == "mps") && name != MANIFEST && name != "training.json"
}

fn read_instance_file(path: &Path) -> Result<MipInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = if path.extension().is_some_and(|e| e == "mps") {
        parse_mps(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        read_instance(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(inst)
}

/// Instance files of `dir` in file-name order.
fn load_dir(dir: &Path) -> Result<Vec<(PathBuf, MipInstance)>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading instance directory {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| is_instance_file(p)).collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no instance files (.json or .mps) in {}", dir.display());
    }
    paths.into_iter().map(|p| read_instance_file(&p).map(|i| (p, i))).collect()
}

fn load_instances(dir: &Path) -> Result<Vec<MipInstance>> {
    Ok(load_dir(dir)?.into_iter().map(|(_, i)| i).collect())
}

fn load_model(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading checkpoint {}", path.display()))?;
    read_checkpoint(&text).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    joined.canonicalize().unwrap_or(joined)
}

fn trace_json(trace: &SolveTrace) -> Value {
    json!({
        "status": trace.status,
        "objective": trace.best_objective(),
        "dual_bound": if trace.dual_bound.is_finite() { Some(trace.dual_bound) } else { None },
        "nodes": trace.nodes,
        "lp_iterations": trace.lp_iterations,
        "seconds": trace.elapsed,
        "incumbents": trace.events,
    })
}

fn generate(ctx: &Ctx, g: &Generate) -> Result<Value> {
    let (seed, count) = match *g {
        Generate::SetCover { seed, count, .. } | Generate::IndepSet { seed, count, .. } | Generate::CappedSelection { seed, count, .. } => {
            (seed, count)
        }
    };
    let mut files = Vec::new();
    for s in seed..seed + count as u64 {
        let inst = match *g {
            Generate::SetCover { rows, cols, density, .. } => gen_set_cover(rows, cols, density, s)?,
            Generate::IndepSet { nodes, affinity, .. } => gen_indep_set(nodes, affinity, s)?,
            Generate::CappedSelection { vars, cap, .. } => gen_capped_selection(vars, cap, s)?,
        };
        let name = format!("{}.json", inst.name());
        ctx.write(&name, &write_instance(&inst))?;
        files.push(name);
    }
    Ok(json!({ "files": files }))
}

fn collect(ctx: &Ctx, a: &CollectArgs) -> Result<Value> {
    let loaded = load_dir(&a.instances)?;
    let instances: Vec<MipInstance> = loaded.iter().map(|(_, i)| i.clone()).collect();
    let coll = collect_targets(&instances, a.budget, ctx.clock, ctx.par)?;
    let by_name = |name: &str| loaded.iter().find(|(_, i)| i.name() == name).map(|(p, _)| absolute(Path::new("."), p));
    let examples = coll
        .examples
        .iter()
        .map(|ex| ManifestEntry {
            instance: by_name(ex.instance.name()).expect("collected from loaded set").display().to_string(),
            target: ex.target.0.clone(),
            status: ex.status,
        })
        .collect();
    ctx.write_json("training.json", &TrainingManifest { examples })?;
    Ok(json!({ "collected": coll.examples.len(), "dropped": coll.dropped }))
}

fn train_nd_cmd(ctx: &Ctx, a: &TrainNdArgs) -> Result<Value> {
    let text = fs::read_to_string(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let manifest: TrainingManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.data.display()))?;
    if manifest.examples.is_empty() {
        bail!("training manifest {} has no examples", a.data.display());
    }
    let base = a.data.parent().unwrap_or(Path::new("."));
    let examples = manifest
        .examples
        .iter()
        .map(|e| {
            let instance = read_instance_file(&absolute(base, Path::new(&e.instance)))?;
            Ok(TrainingExample { instance, target: Assignment(e.target.clone()), status: e.status })
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = NdConfig { epochs: a.epochs, lr: a.lr, momentum: a.momentum, seed: a.seed, hidden: a.hidden, rounds: a.rounds };
    let trained = train_nd(&examples, &cfg, ctx.par)?;
    ctx.write("model.json", &write_checkpoint(&trained.params))?;
    let mut csv = String::from("epoch,loss\n");
    for (k, l) in trained.losses.iter().enumerate() {
        csv.push_str(&format!("{k},{l}\n"));
    }
    ctx.write("losses.csv", &csv)?;
    Ok(json!({ "final_loss": trained.losses.last() }))
}

fn train_tal_cmd(ctx: &Ctx, a: &TrainTalArgs) -> Result<Value> {
    let pretrained = load_model(&a.model)?;
    let instances = load_instances(&a.instances)?;
    let mut cfg = TalConfig::new(a.outer, a.inner, a.tau, a.probes);
    cfg.probe.strategy = a.strategy.into();
    cfg.probe.seed = a.seed;
    cfg.probe.clock = ctx.clock;
    cfg.lr = a.lr.as_slice().try_into().context("--lr takes three rates")?;
    let mut log = String::new();
    let state = train_tal(&pretrained, &instances, &cfg, |step| {
        log.push_str(&serde_json::to_string(step).expect("step log serializes"));
        log.push('\n');
    })?;
    ctx.write("model.json", &write_checkpoint(&state.params))?;
    ctx.write("steps.jsonl", &log)?;
    Ok(json!({ "steps": state.steps(), "null_fraction": state.null_fraction() }))
}

fn solve_cmd(ctx: &Ctx, a: &SolveArgs) -> Result<Value> {
    let inst = read_instance_file(&a.instance)?;
    let model = || -> Result<ModelParams> {
        let path = a.model.as_deref().context("--model is required for this mode")?;
        load_model(path)
    };
    let (trace, coverage) = match a.mode {
        Mode::Baseline => (solve_mip_opts(&inst, &MipOptions::new(a.budget, SolveMode::Optimize).with_clock(ctx.clock))?, 0.0),
        Mode::Cf => {
            let (trace, pa) = cf_solve(&model()?, &inst, a.gamma, a.budget, ctx.clock)?;
            (trace, pa.coverage())
        }
        Mode::Tal => {
            let res = tal_solve(&model()?, &inst, a.budget, ctx.clock, a.strategy.into(), a.seed)?;
            (res.trace, res.fixed.coverage())
        }
    };
    let mut out = trace_json(&trace);
    out["instance"] = json!(inst.name());
    out["coverage"] = json!(coverage);
    out["solution"] = json!(trace.best.as_ref().map(|x| x.0.clone()));
    ctx.write_json("solve.json", &out)?;
    println!(
        "{}: {:?} objective {} in {:.3} s",
        inst.name(),
        trace.status,
        trace.best_objective().map_or("none".to_string(), |v| v.to_string()),
        trace.elapsed
    );
    Ok(json!({ "status": trace.status, "objective": trace.best_objective() }))
}

fn sweep_cmd(ctx: &Ctx, s: &Sweep) -> Result<Value> {
    match s {
        Sweep::Cutoff { model, instances, gammas, budget } => {
            let params = load_model(model)?;
            let insts = load_instances(instances)?;
            let rows = sweep_cutoff(&params, &insts, gammas, *budget, ctx.clock, ctx.par)?;
            ctx.write("cutoff.csv", &cutoff_csv(&rows))?;
            Ok(json!({ "rows": rows.len() }))
        }
        Sweep::Coverage { model, instances, scales, points, samples, strategy, budget, seed } => {
            let params = load_model(model)?;
            if !scales.is_empty() && scales.len() != instances.len() {
                bail!("{} scale labels for {} instance directories", scales.len(), instances.len());
            }
            if *points < 2 {
                bail!("--points must be at least 2");
            }
            let sets = instances
                .iter()
                .enumerate()
                .map(|(k, dir)| Ok(ScaleSet { scale: scales.get(k).copied().unwrap_or(k as f64 + 1.0), instances: load_instances(dir)? }))
                .collect::<Result<Vec<_>>>()?;
            let cfg = CoverageSweep {
                rhos: (0..*points).map(|i| i as f64 / (*points - 1) as f64).collect(),
                strategy: (*strategy).into(),
                samples: *samples,
                budget: *budget,
                clock: ctx.clock,
                seed: *seed,
            };
            let rows = sweep_coverage(&params, &sets, &cfg, ctx.par)?;
            ctx.write("coverage.csv", &coverage_csv(&rows))?;
            Ok(json!({ "rows": rows.len() }))
        }
    }
}

/// Reads a bench config, or the config echoed in a bench run's manifest.
fn read_bench_config(path: &Path) -> Result<BenchConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match value.get("command") {
        Some(c) if c == "bench" => value.get("config").cloned().context("manifest has no config block")?,
        Some(c) => bail!("{} is a manifest of `{}`, not of `bench`", path.display(), c),
        None => value,
    };
    let mut cfg: BenchConfig = serde_json::from_value(inner).with_context(|| format!("invalid bench config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    cfg.test = absolute(base, &cfg.test);
    cfg.validation = absolute(base, &cfg.validation);
    cfg.nd_model = absolute(base, &cfg.nd_model);
    cfg.tal_model = cfg.tal_model.map(|p| absolute(base, &p));
    Ok(cfg)
}

fn bench_cmd(ctx: &Ctx, cfg: &BenchConfig) -> Result<Value> {
    let test = load_instances(&cfg.test)?;
    let validation = load_instances(&cfg.validation)?;
    let nd = load_model(&cfg.nd_model)?;
    let tal = cfg.tal_model.as_deref().map(load_model).transpose()?;
    let setup = BenchSetup {
        test: &test,
        validation: &validation,
        nd: &nd,
        tal: tal.as_ref(),
        budget: cfg.budget,
        gamma: cfg.gamma,
        gamma_grid: cfg.gamma_grid.clone(),
        reference_budget: cfg.reference_budget,
        clock: ctx.clock,
        strategy: cfg.strategy.into(),
        seed: cfg.seed,
        par: ctx.par,
    };
    let report = run_benchmark(&setup)?;
    ctx.write("metrics.csv", &metrics_csv(&report.rows))?;
    let references: Vec<Value> =
        report.references.iter().map(|(name, r)| json!({ "instance": name, "objective": r.objective, "provenance": r.provenance })).collect();
    let summary = json!({
        "seed": cfg.seed,
        "config": cfg,
        "clock": ctx.clock,
        "tuning": report.tuning,
        "methods": report.summaries,
        "references": references,
    });
    ctx.write_json("summary.json", &summary)?;
    for s in &report.summaries {
        println!(
            "{:<9} PI {:>12} PB {:>12} OG% {:>8} OR {:.2}",
            serde_json::to_value(s.method)?.as_str().unwrap_or(""),
            fmt_opt(s.mean_pi),
            fmt_opt(s.mean_pb),
            fmt_opt(s.mean_og_pct),
            s.optimal_ratio
        );
    }
    Ok(json!({ "tuned_gamma": report.tuning.gamma }))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".to_string(), |v| format!("{v:.4}"))
}

/// Random instance with exactly `r` binary variables.
fn theory_instance(r: usize, k: usize, seed: u64) -> Result<MipInstance> {
    let mut rng = SplitMix64::derive(seed, k as u64);
    Ok(if k % 2 == 0 {
        let rows = 3 + rng.below(4) as usize;
        gen_set_cover(rows, r, 0.3, rng.next_u64())?
    } else {
        gen_indep_set(r, 2, rng.next_u64())?
    })
}

fn verify_theory(ctx: &Ctx, a: &TheoryArgs) -> Result<(Value, bool)> {
    let mut lemma_rows = Vec::new();
    let (mut p_viol, mut q_viol) = (0usize, 0usize);
    for k in 0..a.instances {
        let inst = theory_instance(a.max_vars, k, a.seed)?;
        let mut rng = SplitMix64::derive(a.seed ^ 0x5eed, k as u64);
        let x: Vec<f64> = (0..inst.num_vars()).map(|_| f64::from(u8::from(rng.bernoulli(0.5)))).collect();
        let root = solve_lp(&inst).objective.unwrap_or(0.0);
        let kappas = [root, root + 1.0, root + 5.0];
        let rep = verify_lemmas(&inst, &x, &kappas)?;
        p_viol += rep.p_violations;
        q_viol += rep.q_violations;
        lemma_rows.push(json!({
            "instance": inst.name(),
            "pairs": rep.pairs,
            "p_violations": rep.p_violations,
            "q_violations": rep.q_violations,
        }));
    }
    let mut fits = Vec::new();
    let mut fits_ok = true;
    for mu in [0.1, 0.5, 0.9] {
        let targets: Vec<bool> = (0..1000).map(|i| (i as f64) < mu * 1000.0).collect();
        let (p, steps) = fit_frequency(&targets, 1.0, 10_000, 1e-4);
        fits_ok &= (p - mu).abs() <= 1e-4;
        fits.push(json!({ "mean": mu, "fitted": p, "steps": steps }));
    }
    let ok = p_viol == 0 && q_viol == 0 && fits_ok;
    let report = json!({
        "lemmas": { "instances": lemma_rows, "p_violations": p_viol, "q_violations": q_viol },
        "frequency_fit": fits,
        "passed": ok,
    });
    ctx.write_json("theory.json", &report)?;
    println!(
        "lemmas: {} instances, {p_viol} P violations, {q_viol} Q violations; frequency fit {}",
        a.instances,
        if fits_ok { "converged" } else { "did not converge" }
    );
    Ok((json!({ "passed": ok }), ok))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(w) = cli.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        set_workers(w);
    }
    let par = if cli.workers == Some(1) { Parallelism::Sequential } else { Parallelism::default() };
    let name = cli.command.name();
    // resolve the bench config before creating the run directory, so a bad
    // config leaves nothing behind
    let bench = match &cli.command {
        Command::Bench(b) => Some(read_bench_config(&b.config)?),
        _ => None,
    };
    let fixed = cli.fixed_clock || bench.as_ref().is_some_and(|b| b.fixed_clock);
    let ctx = Ctx { dir: run_dir(cli.out.as_deref(), name)?, clock: clock_for(fixed), par };
    let config = match &bench {
        Some(b) => serde_json::to_value(BenchConfig { fixed_clock: fixed, ..b.clone() })?,
        None => serde_json::to_value(&cli.command)?,
    };
    let (result, ok) = match &cli.command {
        Command::Generate(g) => (generate(&ctx, g)?, true),
        Command::Collect(a) => (collect(&ctx, a)?, true),
        Command::TrainNd(a) => (train_nd_cmd(&ctx, a)?, true),
        Command::TrainTal(a) => (train_tal_cmd(&ctx, a)?, true),
        Command::Solve(a) => (solve_cmd(&ctx, a)?, true),
        Command::Sweep(s) => (sweep_cmd(&ctx, s)?, true),
        Command::Bench(_) => (bench_cmd(&ctx, bench.as_ref().expect("parsed above"))?, true),
        Command::VerifyTheory(a) => verify_theory(&ctx, a)?,
    };
    let manifest = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "clock": ctx.clock,
        "workers": cli.workers,
        "result": result,
    });
    ctx.write_json(MANIFEST, &manifest)?;
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(1)
        }
    }
}
