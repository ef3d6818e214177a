//! Command-line surface for the shadowing library.
//!
//! Exit codes: 0 = success / property true; 1 = property false (a witness
//! file is written) or a reported negative outcome; 2 = usage or validation
//! error; 3 = state budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shadowing::analyze::{
    cgpotp_check, epsilon_grid, equivalence_experiment, fgpotp_check, modulus_table,
    orbit_death_prefix, separation_search, structural_check, structural_check_nonaut, usc_check,
    AnalyzeConfig, AnalyzeError, CheckVerdict, PropertyKind,
};
use shadowing::construct::{
    realize_autonomous, realize_by_continuous_sequence, realize_nonautonomous,
    realize_prefix_continuous, ConstructError, RealizationResult,
};
use shadowing::doc::{
    equivalence_report_json, load_pseudo_orbit, load_system_path, modulus_table_csv,
    save_realization, save_system_path, separation_report_json, witness_doc, witness_to_json,
    write_text, DocError, Dynamics, LoadedSystem,
};
use shadowing::pseudo::{decide_shadowing, Budget, PseudoError};
use shadowing::rational::{parse_rat, Rat};
use shadowing::system::{ContinuityClass, NonautonomousSystem, SystemMap};
use shadowing::zoo::{build_zoo, zoo_catalog, ZooSpec};

/// Exact shadowing analysis for finite metric dynamical systems.
#[derive(Parser)]
#[command(name = "shadowing", version, about)]
struct Cli {
    /// Worker threads for table and experiment sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Cap on visited states per search (overrides SHADOWING_STATE_BUDGET).
    #[arg(long, global = true)]
    max_states: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a system document.
    Validate { system: PathBuf },
    /// Decide one property at a given (epsilon, delta).
    Check(CheckArgs),
    /// Compute the per-epsilon delta*-threshold table as CSV.
    Modulus(ModulusArgs),
    /// Realize a pseudo-orbit as a genuine orbit of a nearby system.
    Realize(RealizeArgs),
    /// Run the property-equivalence experiment and report violations.
    Equiv(EquivArgs),
    /// Sweep systems for CGPOTP-but-not-FGPOTP candidates.
    SearchSeparation(SearchArgs),
    /// List or build the example systems.
    #[command(subcommand)]
    Zoo(ZooCommand),
}

#[derive(Args)]
struct CheckArgs {
    system: PathBuf,
    #[arg(long)]
    eps: String,
    #[arg(long)]
    delta: String,
    /// Property to decide.
    #[arg(long, default_value = "shadow")]
    property: String,
    /// Continuity class: `all` or `lip:P/Q` (default: the document's class).
    #[arg(long)]
    class: Option<String>,
    /// Where to write the witness file on a false verdict.
    #[arg(long, default_value = "witness.json")]
    witness: PathBuf,
}

#[derive(Args)]
struct ModulusArgs {
    system: PathBuf,
    /// Comma-separated epsilons (`1/8,1/4`) or `auto:N`.
    #[arg(long)]
    eps_grid: String,
    #[arg(long)]
    class: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RealizeArgs {
    system: PathBuf,
    #[arg(long)]
    pseudo_orbit: PathBuf,
    /// `auto`, `nonauto`, `continuous`, or `continuous-prefix:N`.
    #[arg(long, default_value = "auto")]
    mode: String,
    #[arg(long)]
    class: Option<String>,
    /// Target sup-distance for the continuous modes (default: the
    /// pseudo-orbit's delta).
    #[arg(long)]
    target: Option<String>,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EquivArgs {
    system: PathBuf,
    #[arg(long)]
    eps_grid: String,
    #[arg(long)]
    class: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Zoo family with an optional range in the last argument,
    /// e.g. `tent:4..10` or `shift:2,2..3`; repeatable.
    #[arg(long, required = true)]
    family: Vec<String>,
    /// Continuity class for the continuously generated side.
    #[arg(long)]
    class: String,
    /// Cell budget for the sweep.
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    /// Epsilons examined per system.
    #[arg(long, default_value_t = 6)]
    eps_count: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ZooCommand {
    /// List the known families.
    List,
    /// Build a system document from a zoo spec.
    Build {
        spec: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Everything that can end a run, mapped onto the exit-code protocol.
enum Failure {
    /// Property decided false; diagnostics already written.
    PropertyFalse(String),
    Usage(String),
    Budget(String),
}

type RunResult = Result<(), Failure>;

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<PseudoError> for Failure {
    fn from(e: PseudoError) -> Self {
        match e {
            PseudoError::BudgetExceeded { .. } | PseudoError::PointCapExceeded { .. } => {
                Failure::Budget(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<AnalyzeError> for Failure {
    fn from(e: AnalyzeError) -> Self {
        match e {
            AnalyzeError::Pseudo(p) => p.into(),
            AnalyzeError::Construct(c) => c.into(),
        }
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::SearchBudget { .. } => Failure::Budget(e.to_string()),
            ConstructError::Infeasible
            | ConstructError::InfeasibleAtStep { .. }
            | ConstructError::PoolExhausted { .. } => Failure::PropertyFalse(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let budget = resolve_budget(cli.max_states);
    match dispatch(&cli.command, &budget) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::PropertyFalse(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("budget: {msg}");
            ExitCode::from(3)
        }
    }
}

fn resolve_budget(flag: Option<usize>) -> Budget {
    let mut budget = Budget::default();
    if let Ok(v) = std::env::var("SHADOWING_STATE_BUDGET") {
        if let Ok(v) = v.parse() {
            budget.max_states = v;
        }
    }
    if let Ok(v) = std::env::var("SHADOWING_POINT_CAP") {
        if let Ok(v) = v.parse() {
            budget.max_points = v;
        }
    }
    if let Some(v) = flag {
        budget.max_states = v;
    }
    budget
}

fn dispatch(command: &Command, budget: &Budget) -> RunResult {
    match command {
        Command::Validate { system } => {
            let sys = load_system_path(system)?;
            println!(
                "valid: {} points, {}",
                sys.space().len(),
                match &sys.dynamics {
                    Dynamics::Map(_) => "autonomous map".to_string(),
                    Dynamics::Sequence(s) => format!(
                        "map sequence (preperiod {}, period {})",
                        s.preperiod_len(),
                        s.period_len()
                    ),
                }
            );
            Ok(())
        }
        Command::Check(args) => run_check(args, budget),
        Command::Modulus(args) => run_modulus(args, budget),
        Command::Realize(args) => run_realize(args, budget),
        Command::Equiv(args) => run_equiv(args, budget),
        Command::SearchSeparation(args) => run_search(args, budget),
        Command::Zoo(ZooCommand::List) => {
            for (syntax, description) in zoo_catalog() {
                println!("{syntax:<20} {description}");
            }
            Ok(())
        }
        Command::Zoo(ZooCommand::Build { spec, output }) => {
            let spec: ZooSpec = spec.parse().map_err(|e: shadowing::zoo::ZooError| {
                Failure::Usage(e.to_string())
            })?;
            let map = build_zoo(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            let sys = LoadedSystem {
                dynamics: Dynamics::Map(map),
                class: None,
            };
            save_system_path(&sys, output)?;
            println!("wrote {} ({})", output.display(), spec);
            Ok(())
        }
    }
}

fn parse_class(arg: Option<&str>, doc_class: Option<&ContinuityClass>) -> Result<ContinuityClass, Failure> {
    match arg {
        None => Ok(doc_class.cloned().unwrap_or(ContinuityClass::All)),
        Some(s) if s.eq_ignore_ascii_case("all") => Ok(ContinuityClass::All),
        Some(s) => match s.strip_prefix("lip:") {
            Some(l) => {
                let bound = parse_field_rat("class", l)?;
                if bound < shadowing::rational::rat_int(0) {
                    return Err(Failure::Usage(
                        "Lipschitz bounds must be nonnegative".into(),
                    ));
                }
                Ok(ContinuityClass::Lipschitz(bound))
            }
            None => Err(Failure::Usage(format!(
                "unknown class {s:?}, expected `all` or `lip:P/Q`"
            ))),
        },
    }
}

fn parse_field_rat(field: &str, s: &str) -> Result<Rat, Failure> {
    parse_rat(s).map_err(|m| Failure::Usage(format!("{field}: {m}")))
}

fn parse_eps_grid(arg: &str, sys: &LoadedSystem) -> Result<Vec<Rat>, Failure> {
    if let Some(n) = arg.strip_prefix("auto:") {
        let n: usize = n
            .parse()
            .map_err(|_| Failure::Usage("auto grid needs a count".into()))?;
        return Ok(epsilon_grid(sys.space(), n));
    }
    arg.split(',')
        .map(|s| parse_field_rat("eps-grid", s.trim()))
        .collect()
}

fn analyze_config(budget: &Budget) -> AnalyzeConfig {
    AnalyzeConfig {
        budget: budget.clone(),
        ..AnalyzeConfig::default()
    }
}

fn run_check(args: &CheckArgs, budget: &Budget) -> RunResult {
    let sys = load_system_path(&args.system)?;
    let eps = parse_field_rat("eps", &args.eps)?;
    let delta = parse_field_rat("delta", &args.delta)?;
    let class = parse_class(args.class.as_deref(), sys.class.as_ref())?;
    let cfg = analyze_config(budget);
    let kind = match args.property.as_str() {
        "shadow" => PropertyKind::Shadow,
        "struct" => PropertyKind::Structural,
        "fgpotp" => PropertyKind::Fgpotp,
        "cgpotp" => PropertyKind::Cgpotp,
        "usc" => PropertyKind::Usc,
        other => {
            return Err(Failure::Usage(format!(
                "unknown property {other:?}, expected shadow|struct|fgpotp|cgpotp|usc"
            )))
        }
    };

    let f = match &sys.dynamics {
        Dynamics::Map(f) => f.clone(),
        Dynamics::Sequence(seq) => {
            return check_nonautonomous(seq, kind, &eps, &delta, &args.witness, budget)
        }
    };

    let witness = match kind {
        PropertyKind::Shadow => match decide_shadowing(&f, &eps, &delta, budget)? {
            shadowing::pseudo::ShadowingVerdict::Holds => None,
            shadowing::pseudo::ShadowingVerdict::Fails(w) => Some(witness_doc(
                &f, &eps, &delta, "shadow", &w.prefix, None, None,
            )),
        },
        PropertyKind::Structural => {
            match structural_check(&f, &eps, &delta, &class, &cfg)? {
                CheckVerdict::Holds => None,
                CheckVerdict::Fails(c) => Some(witness_doc(
                    &f,
                    &eps,
                    &delta,
                    "struct",
                    &c.prefix,
                    Some(&c.map),
                    Some(c.start),
                )),
            }
        }
        PropertyKind::Fgpotp => match fgpotp_check(&f, &eps, &delta, &cfg)? {
            CheckVerdict::Holds => None,
            CheckVerdict::Fails(w) => {
                let generator = w.realization(&f);
                let start = w.orbit.start();
                Some(witness_doc(
                    &f,
                    &eps,
                    &delta,
                    "fgpotp",
                    &w.orbit.prefix(w.orbit.window_len()),
                    Some(&generator),
                    Some(start),
                ))
            }
        },
        PropertyKind::Cgpotp => match cgpotp_check(&f, &eps, &delta, &class, &cfg)? {
            CheckVerdict::Holds => None,
            CheckVerdict::Fails(c) => {
                let start = c.witness.orbit.start();
                Some(witness_doc(
                    &f,
                    &eps,
                    &delta,
                    "cgpotp",
                    &c.witness.orbit.prefix(c.witness.orbit.window_len()),
                    Some(&c.generator),
                    Some(start),
                ))
            }
        },
        PropertyKind::Usc => {
            let out = usc_check(&f, &eps, &delta, &class, &cfg)?;
            if let shadowing::analyze::Coverage::Sampled { samples, seed } = &out.coverage {
                eprintln!("usc coverage: sampled, {samples} nearby maps, seed {seed}");
            }
            match out.verdict {
                CheckVerdict::Holds => None,
                CheckVerdict::Fails(c) => {
                    let prefix = orbit_death_prefix(&f, &eps, &c.map, c.start, budget)?
                        .expect("an unshadowed orbit has a dying survivor prefix");
                    Some(witness_doc(
                        &f,
                        &eps,
                        &delta,
                        "usc",
                        &prefix,
                        Some(&c.map),
                        Some(c.start),
                    ))
                }
            }
        }
    };

    match witness {
        None => {
            println!("{} holds at eps={} delta={}", args.property, eps, delta);
            Ok(())
        }
        Some(doc) => {
            write_text(&args.witness, &witness_to_json(&doc))?;
            Err(Failure::PropertyFalse(format!(
                "{} fails at eps={} delta={}; witness written to {}",
                args.property,
                eps,
                delta,
                args.witness.display()
            )))
        }
    }
}

fn check_nonautonomous(
    seq: &NonautonomousSystem,
    kind: PropertyKind,
    eps: &Rat,
    delta: &Rat,
    witness_path: &Path,
    budget: &Budget,
) -> RunResult {
    if !matches!(kind, PropertyKind::Shadow | PropertyKind::Structural) {
        return Err(Failure::Usage(
            "map sequences support only the shadow and struct properties".into(),
        ));
    }
    match structural_check_nonaut(seq, eps, delta, budget)? {
        CheckVerdict::Holds => {
            println!("{} holds at eps={} delta={}", kind.name(), eps, delta);
            Ok(())
        }
        CheckVerdict::Fails(w) => {
            let space = seq.space();
            let trace = shadowing::pseudo::shadow_survivors_nonaut(seq, &w.prefix, eps);
            let doc = shadowing::doc::WitnessDoc {
                epsilon: shadowing::rational::format_rat(eps),
                delta: shadowing::rational::format_rat(delta),
                property: kind.name().to_string(),
                prefix: w
                    .prefix
                    .iter()
                    .map(|p| space.label(*p).to_string())
                    .collect(),
                survivor_trace: trace
                    .iter()
                    .map(|t| t.iter().map(|p| space.label(p).to_string()).collect())
                    .collect(),
                counterexample_map: None,
                start: None,
            };
            write_text(witness_path, &witness_to_json(&doc))?;
            Err(Failure::PropertyFalse(format!(
                "{} fails at eps={} delta={}; witness written to {}",
                kind.name(),
                eps,
                delta,
                witness_path.display()
            )))
        }
    }
}

fn require_map(sys: &LoadedSystem) -> Result<SystemMap, Failure> {
    sys.dynamics
        .as_map()
        .cloned()
        .ok_or_else(|| Failure::Usage("this command needs an autonomous system".into()))
}

fn run_modulus(args: &ModulusArgs, budget: &Budget) -> RunResult {
    let sys = load_system_path(&args.system)?;
    let f = require_map(&sys)?;
    let grid = parse_eps_grid(&args.eps_grid, &sys)?;
    let class = parse_class(args.class.as_deref(), sys.class.as_ref())?;
    let cfg = analyze_config(budget);
    let table = modulus_table(&f, &grid, &class, &cfg)?;
    let csv = modulus_table_csv(&table);
    match &args.output {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_realize(args: &RealizeArgs, budget: &Budget) -> RunResult {
    let sys = load_system_path(&args.system)?;
    let text = std::fs::read_to_string(&args.pseudo_orbit).map_err(|e| {
        Failure::Usage(format!("cannot read {}: {e}", args.pseudo_orbit.display()))
    })?;
    let po = load_pseudo_orbit(&text, sys.space())?;
    let class = parse_class(args.class.as_deref(), sys.class.as_ref())?;
    let target = match &args.target {
        Some(t) => parse_field_rat("target", t)?,
        None => po.delta().clone(),
    };

    let result: RealizationResult = match args.mode.as_str() {
        "auto" => realize_autonomous(&require_map(&sys)?, &po)?,
        "nonauto" => {
            let seq = match &sys.dynamics {
                Dynamics::Sequence(seq) => seq.clone(),
                Dynamics::Map(f) => NonautonomousSystem::constant(f.clone()),
            };
            realize_nonautonomous(&seq, &po)?
        }
        "continuous" => {
            realize_by_continuous_sequence(&require_map(&sys)?, &po, &class, &target, budget)?
        }
        mode => match mode.strip_prefix("continuous-prefix:") {
            Some(n) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Failure::Usage("continuous-prefix needs a step count".into()))?;
                realize_prefix_continuous(&require_map(&sys)?, &po, n, &class, &target, budget)?
            }
            None => {
                return Err(Failure::Usage(format!(
                    "unknown mode {mode:?}, expected auto|nonauto|continuous|continuous-prefix:N"
                )))
            }
        },
    };

    let json = save_realization(&result, sys.space());
    match &args.output {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn run_equiv(args: &EquivArgs, budget: &Budget) -> RunResult {
    let sys = load_system_path(&args.system)?;
    let f = require_map(&sys)?;
    let grid = parse_eps_grid(&args.eps_grid, &sys)?;
    let class = parse_class(args.class.as_deref(), sys.class.as_ref())?;
    let cfg = analyze_config(budget);
    let report = equivalence_experiment(&f, &grid, &class, &cfg)?;
    let json = equivalence_report_json(&report);
    match &args.output {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    if report.violations > 0 {
        Err(Failure::PropertyFalse(format!(
            "{} violated implication(s)",
            report.violations
        )))
    } else {
        Ok(())
    }
}

fn expand_family(pattern: &str) -> Result<Vec<ZooSpec>, Failure> {
    let expand_err = |m: &str| Failure::Usage(format!("family {pattern:?}: {m}"));
    match pattern.find("..") {
        None => {
            let spec: ZooSpec = pattern
                .parse()
                .map_err(|e: shadowing::zoo::ZooError| expand_err(&e.to_string()))?;
            Ok(vec![spec])
        }
        Some(pos) => {
            // the range lives in the last comma- or colon-separated token
            let head_end = pattern[..pos]
                .rfind([',', ':'])
                .ok_or_else(|| expand_err("range must follow `:` or `,`"))?;
            let head = &pattern[..=head_end];
            let token = &pattern[head_end + 1..];
            let (lo, hi) = token
                .split_once("..")
                .ok_or_else(|| expand_err("malformed range"))?;
            let lo: usize = lo.parse().map_err(|_| expand_err("range start"))?;
            let hi: usize = hi.parse().map_err(|_| expand_err("range end"))?;
            if lo > hi {
                return Err(expand_err("empty range"));
            }
            (lo..=hi)
                .map(|v| {
                    format!("{head}{v}")
                        .parse()
                        .map_err(|e: shadowing::zoo::ZooError| expand_err(&e.to_string()))
                })
                .collect()
        }
    }
}

fn run_search(args: &SearchArgs, budget: &Budget) -> RunResult {
    let class = parse_class(Some(&args.class), None)?;
    let mut systems = Vec::new();
    for pattern in &args.family {
        for spec in expand_family(pattern)? {
            let map = build_zoo(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            systems.push((spec.to_string(), map));
        }
    }
    if systems.is_empty() {
        return Err(Failure::Usage("no systems to sweep".into()));
    }
    let cfg = analyze_config(budget);
    let report = separation_search(&systems, &class, args.eps_count, args.budget, &cfg)?;
    let json = separation_report_json(&report);
    match &args.output {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    if !report.completed {
        return Err(Failure::Budget(
            "separation sweep stopped at the cell budget".into(),
        ));
    }
    println!(
        "checked {} cells, {} candidate(s)",
        report.cells_checked,
        report.candidates.len()
    );
    Ok(())
}
