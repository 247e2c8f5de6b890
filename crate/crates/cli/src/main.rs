//! `grandexp`: compute grand exponential-class / weak / small-Lebesgue
//! norms on step functions, run the verification suites, exercise the
//! weighted operators, and check weak monotonicity of relaxed p-harmonic
//! grids. Reports are JSON (canonical) or CSV (flattened), written
//! atomically; the exit status reflects the overall pass flag.

mod gridspec;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grandexp::generators::{
    analytic_corpus, random_corpus, shared_partition_pairs, AnalyticFunctionSpec, Kind,
};
use grandexp::grid::{GridFunction, Weight};
use grandexp::monotone::{
    grand_sobolev_norm, random_boundary_grid, relax_p, weak_monotone_check,
};
use grandexp::norms::{
    exp_class_norm, grand_lp_norm, grand_rearrangement_norm, grand_theta_infty_norm,
    proper_inclusion_witness, small_lp_norm, verify_equivalence_thm31, verify_inclusions,
    verify_norm_axioms, weak_theta_norm, EpsGrid, GrandLpForm, PGrid, TGrid, TailPolicy,
};
use grandexp::weighted::{
    ap_constant, cz_apply, doubling_constant, maximal_operator, operator_norm_estimate,
    KernelSpec, OperatorKind,
};
use grandexp::{Check, StepFunction, Suite};
use gridspec::GridSpec;
use output::{suite_value, write_atomic, Envelope};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "grandexp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report to this path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute norms of a step function
    Norm(NormArgs),
    /// Run a verification suite
    Verify {
        #[command(subcommand)]
        suite: VerifyCmd,
    },
    /// Weighted operators and weight diagnostics
    Operators {
        #[command(subcommand)]
        op: OperatorsCmd,
    },
    /// Weak-monotonicity checks and p-harmonic relaxation
    Monotone {
        #[command(subcommand)]
        action: MonotoneCmd,
    },
    /// Generate the analytic corpus and tabulate its norms
    Corpus(CorpusArgs),
}

/// Where the step function comes from: a generator spec or a CSV file.
#[derive(Args)]
struct SourceArgs {
    /// Generator spec, e.g. `log_power:theta=1,n=100000`
    #[arg(long, conflicts_with = "input")]
    gen: Option<String>,
    /// Step-function CSV (`value,measure` header)
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct PGridArgs {
    /// Largest exponent of the geometric p grid
    #[arg(long, default_value_t = PGrid::DEFAULT_P_MAX)]
    p_max: f64,
    /// Geometric spacing of the p grid
    #[arg(long, default_value_t = PGrid::DEFAULT_RATIO)]
    ratio: f64,
    /// Tail handling beyond p_max
    #[arg(long, value_enum, default_value_t = TailArg::Analytic)]
    tail: TailArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TailArg {
    /// Bound the tail by p_max^-theta * max|f| (valid for step functions)
    Analytic,
    /// Report the bound but never claim convergence
    ReportOnly,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum NormKind {
    Grand,
    Weak,
    Exp,
    Small,
    GrandRearrangement,
    GrandLp,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LpFormArg {
    /// eps^(theta/p) outside the mean
    Outer,
    /// eps^theta inside the mean
    Inner,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_enum, default_value_t = NormKind::Grand)]
    norm: NormKind,
    /// Theta values (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "1")]
    theta: Vec<f64>,
    /// Lebesgue exponent for the small / grand-lp / rearrangement norms
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = LpFormArg::Outer)]
    form: LpFormArg,
    #[command(flatten)]
    grid: PGridArgs,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Triangle inequality, homogeneity and definiteness over random pairs
    Axioms {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 64)]
        atoms: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
        theta: Vec<f64>,
        #[command(flatten)]
        grid: PGridArgs,
    },
    /// Theta-scale ordering, L^q embedding, and the unbounded witness
    Inclusions {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 2.0)]
        theta_prime: f64,
        #[arg(long, default_value_t = 3.0)]
        q: f64,
        #[command(flatten)]
        grid: PGridArgs,
    },
    /// Weak/strong equivalence: split-integral bound, Chebyshev, chain
    Thm31 {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[command(flatten)]
        grid: PGridArgs,
    },
    /// Exponential-class norm of the log witness and ratio stability
    ExpEquiv {
        /// Corpus resolution (refinement doubles it)
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[command(flatten)]
        grid: PGridArgs,
    },
    /// Layer-cake identity over a seeded random corpus
    LayerCake {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        atoms: usize,
    },
}

#[derive(Args)]
struct GridSource {
    /// Grid-function CSV (`x,value` header)
    #[arg(long, conflicts_with = "gen_grid")]
    input: Option<PathBuf>,
    /// Grid generator, e.g. `indicator:a=0,b=0.5,n=512`
    #[arg(long)]
    gen_grid: Option<String>,
}

#[derive(Args)]
struct WeightSource {
    /// Weight CSV (`x,value` header, positive values)
    #[arg(long, conflicts_with = "gen_weight")]
    weight: Option<PathBuf>,
    /// Weight generator, e.g. `abs_pow:alpha=0.5,n=1024,lo=-1,hi=1`
    #[arg(long)]
    gen_weight: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OpArg {
    Maximal,
    Hilbert,
}

#[derive(Subcommand)]
enum OperatorsCmd {
    /// Weighted Hardy-Littlewood maximal function of a 1D grid function
    Maximal {
        #[command(flatten)]
        grid: GridSource,
        #[command(flatten)]
        weight: WeightSource,
        /// Write the transformed grid as CSV here
        #[arg(long)]
        out_grid: Option<PathBuf>,
    },
    /// Discrete principal-value Hilbert transform
    Hilbert {
        #[command(flatten)]
        grid: GridSource,
        #[arg(long)]
        out_grid: Option<PathBuf>,
    },
    /// Muckenhoupt constant over dyadic cubes, with divergence flag
    Ap {
        #[command(flatten)]
        weight: WeightSource,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        levels: Vec<u32>,
    },
    /// Doubling constant over dyadic cubes
    Doubling {
        #[command(flatten)]
        weight: WeightSource,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        levels: Vec<u32>,
    },
    /// Empirical operator norm over a random smooth corpus
    Opnorm {
        #[arg(long, value_enum)]
        op: OpArg,
        #[command(flatten)]
        weight: WeightSource,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
        #[command(flatten)]
        grid: PGridArgs,
    },
}

#[derive(Subcommand)]
enum MonotoneCmd {
    /// Max/min principle over every discrete ball of a 2D grid CSV
    Check {
        /// Grid-function CSV (`x,y,value` header)
        #[arg(long)]
        input: PathBuf,
    },
    /// Relax the discrete p-Laplacian from seeded or supplied boundary data
    Relax {
        #[arg(long, default_value_t = 33)]
        nx: usize,
        #[arg(long, default_value_t = 33)]
        ny: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 5)]
        seed: u64,
        /// Boundary data CSV (`index,value`, flat row-major indices)
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Grid spacing
        #[arg(long, default_value_t = 0.03125)]
        h: f64,
        /// Run the monotonicity check on the relaxed output
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        check: bool,
        /// Theta for the grand Sobolev norm of the output
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long)]
        out_grid: Option<PathBuf>,
        #[command(flatten)]
        grid: PGridArgs,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Atom count per corpus entry
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
    theta: Vec<f64>,
    /// Also write each entry as a step-function CSV into this directory
    #[arg(long)]
    emit_dir: Option<PathBuf>,
    #[command(flatten)]
    grid: PGridArgs,
}

enum CliError {
    /// Bad flags or generator specs: exit 64.
    Config(String),
    /// Malformed input data or IO failure: exit 2.
    Data(String),
}

impl From<grandexp::Error> for CliError {
    fn from(e: grandexp::Error) -> Self {
        match e {
            grandexp::Error::Csv { .. } | grandexp::Error::Io(_) => CliError::Data(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl PGridArgs {
    fn build(&self) -> Result<PGrid, CliError> {
        let policy = match self.tail {
            TailArg::Analytic => TailPolicy::AnalyticBound,
            TailArg::ReportOnly => TailPolicy::ReportOnly,
        };
        Ok(PGrid::new(self.p_max, self.ratio, policy)?)
    }

    fn echo(&self) -> Value {
        json!({"p_max": self.p_max, "ratio": self.ratio,
               "tail": if self.tail == TailArg::Analytic { "analytic_bound" } else { "report_only" }})
    }
}

impl SourceArgs {
    fn load(&self) -> Result<(StepFunction, Value), CliError> {
        match (&self.gen, &self.input) {
            (Some(spec), None) => {
                let parsed: AnalyticFunctionSpec = spec
                    .parse()
                    .map_err(|e: grandexp::Error| CliError::Config(e.to_string()))?;
                Ok((parsed.discretize(), json!({"gen": spec})))
            }
            (None, Some(path)) => {
                let f = StepFunction::from_csv_path(path).map_err(|e| {
                    CliError::Data(format!("{}: {e}", path.display()))
                })?;
                Ok((f, json!({"input": path.display().to_string()})))
            }
            _ => Err(CliError::Config(
                "exactly one of --gen or --input is required".into(),
            )),
        }
    }

    /// The parsed generator spec, when the source is a generator.
    fn spec(&self) -> Option<AnalyticFunctionSpec> {
        self.gen.as_deref().and_then(|s| s.parse().ok())
    }
}

impl GridSource {
    fn load(&self) -> Result<(GridFunction, Value), CliError> {
        match (&self.input, &self.gen_grid) {
            (Some(path), None) => {
                let g = GridFunction::from_csv_path(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                Ok((g, json!({"input": path.display().to_string()})))
            }
            (None, Some(spec)) => Ok((
                GridSpec::parse(spec)?.build_grid()?,
                json!({"gen_grid": spec}),
            )),
            _ => Err(CliError::Config(
                "exactly one of --input or --gen-grid is required".into(),
            )),
        }
    }
}

impl WeightSource {
    /// Loads the weight, defaulting to w = 1 on `like`'s lattice.
    fn load_or_unit(&self, like: Option<&GridFunction>) -> Result<(Weight, Value), CliError> {
        match (&self.weight, &self.gen_weight) {
            (Some(path), None) => {
                let w = Weight::from_csv_path(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                Ok((w, json!({"weight": path.display().to_string()})))
            }
            (None, Some(spec)) => Ok((
                GridSpec::parse(spec)?.build_weight()?,
                json!({"gen_weight": spec}),
            )),
            (None, None) => match like {
                Some(g) => Ok((Weight::unit(g), json!({"weight": "unit"}))),
                None => Err(CliError::Config(
                    "one of --weight or --gen-weight is required".into(),
                )),
            },
            _ => Err(CliError::Config(
                "give only one of --weight and --gen-weight".into(),
            )),
        }
    }
}

fn merge(params: &mut Value, extra: Value) {
    if let (Value::Object(dst), Value::Object(src)) = (params, extra) {
        for (k, v) in src {
            dst.insert(k, v);
        }
    }
}

fn run(cli: &Cli) -> Result<Envelope, CliError> {
    match &cli.command {
        Command::Norm(args) => run_norm(args),
        Command::Verify { suite } => run_verify(suite),
        Command::Operators { op } => run_operators(op),
        Command::Monotone { action } => run_monotone(action),
        Command::Corpus(args) => run_corpus(args),
    }
}

fn run_norm(args: &NormArgs) -> Result<Envelope, CliError> {
    for &t in &args.theta {
        if t < 0.0 {
            return Err(CliError::Config(format!("theta must be >= 0, got {t}")));
        }
    }
    let (f, src_echo) = args.source.load()?;
    let grid = args.grid.build()?;
    let mut params = args.grid.echo();
    merge(&mut params, src_echo);
    merge(
        &mut params,
        json!({"theta": args.theta, "p": args.p, "atoms": f.atoms().len(),
               "total_measure": f.total_measure()}),
    );

    let mut results = Vec::new();
    match args.norm {
        NormKind::Grand => {
            for &theta in &args.theta {
                let rep = grand_theta_infty_norm(&f, theta, &grid)?;
                results.push(json!({"norm": "grand", "theta": theta, "report": rep}));
            }
        }
        NormKind::Weak => {
            for &theta in &args.theta {
                let rep = weak_theta_norm(&f, theta, &grid)?;
                results.push(json!({"norm": "weak", "theta": theta, "report": rep}));
            }
        }
        NormKind::Exp => {
            results.push(json!({"norm": "exp", "value": exp_class_norm(&f)}));
        }
        NormKind::Small => {
            let v = small_lp_norm(&f, args.p, &TGrid::default())?;
            results.push(json!({"norm": "small", "p": args.p, "value": v}));
        }
        NormKind::GrandRearrangement => {
            let v = grand_rearrangement_norm(&f, args.p, &TGrid::default())?;
            results.push(json!({"norm": "grand_rearrangement", "p": args.p, "value": v}));
        }
        NormKind::GrandLp => {
            let form = match args.form {
                LpFormArg::Outer => GrandLpForm::OuterTheta,
                LpFormArg::Inner => GrandLpForm::InnerTheta,
            };
            for &theta in &args.theta {
                let rep = grand_lp_norm(&f, theta, args.p, &EpsGrid::default(), form)?;
                results.push(json!({"norm": "grand_lp", "theta": theta, "p": args.p,
                                    "report": rep}));
            }
        }
    }
    Ok(Envelope::new(
        "norm".into(),
        params,
        true,
        Value::Array(results),
    ))
}

fn run_verify(cmd: &VerifyCmd) -> Result<Envelope, CliError> {
    match cmd {
        VerifyCmd::Axioms {
            pairs,
            atoms,
            seed,
            theta,
            grid,
        } => {
            let g = grid.build()?;
            let corpus = shared_partition_pairs(*seed, *pairs, *atoms, 1.0);
            let suite = verify_norm_axioms(&corpus, theta, &g, *seed)?;
            let mut params = grid.echo();
            merge(
                &mut params,
                json!({"pairs": pairs, "atoms": atoms, "seed": seed, "theta": theta}),
            );
            let passed = suite.passed;
            Ok(Envelope::new(
                "verify axioms".into(),
                params,
                passed,
                suite_value(&suite),
            ))
        }
        VerifyCmd::Inclusions {
            source,
            theta,
            theta_prime,
            q,
            grid,
        } => {
            let g = grid.build()?;
            let (f, src_echo) = source.load()?;
            let mut suites = vec![verify_inclusions(&f, *theta, *theta_prime, *q, &g)?];
            // witness needs a refinement pair: only derivable from a generator
            if let Some(spec) = source.spec() {
                if matches!(spec.kind, Kind::LogPower { .. }) {
                    let fine = AnalyticFunctionSpec::new(
                        spec.kind,
                        spec.domain,
                        spec.resolution * 4,
                    )
                    .map_err(|e| CliError::Config(e.to_string()))?
                    .discretize();
                    suites.push(proper_inclusion_witness(&f, &fine, *theta, &g)?);
                }
            }
            let mut params = grid.echo();
            merge(&mut params, src_echo);
            merge(
                &mut params,
                json!({"theta": theta, "theta_prime": theta_prime, "q": q}),
            );
            let passed = suites.iter().all(|s| s.passed);
            Ok(Envelope::new(
                "verify inclusions".into(),
                params,
                passed,
                Value::Array(suites.iter().map(suite_value).collect()),
            ))
        }
        VerifyCmd::Thm31 { source, theta, grid } => {
            let g = grid.build()?;
            let (f, src_echo) = source.load()?;
            let suite = verify_equivalence_thm31(&f, *theta, &g)?;
            let mut params = grid.echo();
            merge(&mut params, src_echo);
            merge(&mut params, json!({"theta": theta}));
            let passed = suite.passed;
            Ok(Envelope::new(
                "verify thm31".into(),
                params,
                passed,
                suite_value(&suite),
            ))
        }
        VerifyCmd::ExpEquiv { n, grid } => {
            let g = grid.build()?;
            let suite = exp_equiv_suite(*n, &g)?;
            let mut params = grid.echo();
            merge(&mut params, json!({"n": n}));
            let passed = suite.passed;
            Ok(Envelope::new(
                "verify exp-equiv".into(),
                params,
                passed,
                suite_value(&suite),
            ))
        }
        VerifyCmd::LayerCake { count, seed, atoms } => {
            let corpus = random_corpus(*seed, *count, *atoms);
            let mut worst = 0.0f64;
            for f in &corpus {
                for s in [1.0, 1.5, 2.0, 3.0, 7.0] {
                    let (lhs, rhs) = f.layer_cake(s);
                    worst = worst.max((lhs - rhs).abs() / lhs.max(1.0));
                }
            }
            let mut suite = Suite::new("layer_cake");
            suite.push(Check::le("worst_rel_discrepancy", worst, 1e-10));
            suite.push(Check::info("functions", *count as f64));
            let passed = suite.passed;
            Ok(Envelope::new(
                "verify layer-cake".into(),
                json!({"count": count, "seed": seed, "atoms": atoms,
                       "exponents": [1.0, 1.5, 2.0, 3.0, 7.0]}),
                passed,
                suite_value(&suite),
            ))
        }
    }
}

/// Exponential-class equivalence: the log witness's Luxemburg norm against
/// its closed form, plus stability of the grand/exp ratio under refinement.
fn exp_equiv_suite(n: usize, grid: &PGrid) -> Result<Suite, CliError> {
    let mut suite = Suite::new("exp_equivalence");
    let log = AnalyticFunctionSpec::new(Kind::LogPower { theta: 1.0 }, (0.0, 1.0), n)
        .map_err(|e| CliError::Config(e.to_string()))?
        .discretize();
    let exp_norm = exp_class_norm(&log);
    suite.push(Check::le("log_witness_exp_norm_err", (exp_norm - 2.0).abs(), 0.01 * 2.0));
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut worst_drift = 0.0f64;
    for (coarse, fine) in analytic_corpus(n).iter().zip(analytic_corpus(2 * n).iter()) {
        let ratio = |f: &StepFunction| -> Result<Option<f64>, CliError> {
            let e = exp_class_norm(f);
            if e > 0.0 {
                Ok(Some(grand_theta_infty_norm(f, 1.0, grid)?.value / e))
            } else {
                Ok(None)
            }
        };
        if let (Some(rc), Some(rf)) = (ratio(&coarse.f)?, ratio(&fine.f)?) {
            lo = lo.min(rc);
            hi = hi.max(rc);
            worst_drift = worst_drift.max((rf - rc).abs() / rc);
        }
    }
    suite.push(Check::le("ratio_drift_under_refinement", worst_drift, 0.05));
    suite.push(Check::info("ratio_bracket_lo", lo));
    suite.push(Check::info("ratio_bracket_hi", hi));
    Ok(suite)
}

fn grid_summary(g: &GridFunction) -> Value {
    let l2 = (g.samples().iter().map(|v| v * v).sum::<f64>() * g.cell_volume()).sqrt();
    json!({"n": g.len(), "h": g.h(), "max_abs": g.max_abs(), "l2": l2})
}

fn run_operators(cmd: &OperatorsCmd) -> Result<Envelope, CliError> {
    match cmd {
        OperatorsCmd::Maximal {
            grid,
            weight,
            out_grid,
        } => {
            let (f, mut params) = grid.load()?;
            let (w, w_echo) = weight.load_or_unit(Some(&f))?;
            merge(&mut params, w_echo);
            let m = maximal_operator(&f, &w)?;
            if let Some(path) = out_grid {
                m.write_csv_path(path)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            Ok(Envelope::new(
                "operators maximal".into(),
                params,
                true,
                json!({"input": grid_summary(&f), "output": grid_summary(&m)}),
            ))
        }
        OperatorsCmd::Hilbert { grid, out_grid } => {
            let (f, params) = grid.load()?;
            let t = cz_apply(&f, &KernelSpec::hilbert())?;
            if let Some(path) = out_grid {
                t.write_csv_path(path)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            Ok(Envelope::new(
                "operators hilbert".into(),
                params,
                true,
                json!({"input": grid_summary(&f), "output": grid_summary(&t),
                       "kernel_c": KernelSpec::hilbert().c_k()}),
            ))
        }
        OperatorsCmd::Ap { weight, p, levels } => {
            let (w, mut params) = weight.load_or_unit(None)?;
            merge(&mut params, json!({"p": p, "levels": levels}));
            let rep = ap_constant(&w, *p, levels)?;
            Ok(Envelope::new(
                "operators ap".into(),
                params,
                true,
                json!(rep),
            ))
        }
        OperatorsCmd::Doubling { weight, levels } => {
            let (w, mut params) = weight.load_or_unit(None)?;
            merge(&mut params, json!({"levels": levels}));
            let rep = doubling_constant(&w, levels)?;
            Ok(Envelope::new(
                "operators doubling".into(),
                params,
                true,
                json!(rep),
            ))
        }
        OperatorsCmd::Opnorm {
            op,
            weight,
            theta,
            count,
            seed,
            n,
            lo,
            hi,
            grid,
        } => {
            let g = grid.build()?;
            let corpus: Vec<GridFunction> = (0..*count as u64)
                .map(|k| grandexp::grid::random_smooth_1d(seed + k, *n, *lo, *hi))
                .collect();
            let (w, w_echo) = weight.load_or_unit(corpus.first())?;
            let kernel = KernelSpec::hilbert();
            let kind = match op {
                OpArg::Maximal => OperatorKind::Maximal,
                OpArg::Hilbert => OperatorKind::CalderonZygmund(&kernel),
            };
            let rep = operator_norm_estimate(kind, &w, *theta, &corpus, &g)?;
            let mut params = grid.echo();
            merge(&mut params, w_echo);
            merge(
                &mut params,
                json!({"theta": theta, "count": count, "seed": seed, "n": n,
                       "lo": lo, "hi": hi}),
            );
            Ok(Envelope::new(
                "operators opnorm".into(),
                params,
                true,
                json!(rep),
            ))
        }
    }
}

fn load_boundary_grid(
    path: &PathBuf,
    nx: usize,
    ny: usize,
    h: f64,
) -> Result<GridFunction, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut vals = vec![0.0; nx * ny];
    let mut seen = vec![false; nx * ny];
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        if !saw_header {
            if row.to_ascii_lowercase() != "index,value" {
                return Err(CliError::Data(format!(
                    "{}:{line}: expected header `index,value`",
                    path.display()
                )));
            }
            saw_header = true;
            continue;
        }
        let (is, vs) = row.split_once(',').ok_or_else(|| {
            CliError::Data(format!("{}:{line}: expected index,value", path.display()))
        })?;
        let i: usize = is.trim().parse().map_err(|_| {
            CliError::Data(format!("{}:{line}: bad index `{is}`", path.display()))
        })?;
        let v: f64 = vs.trim().parse().map_err(|_| {
            CliError::Data(format!("{}:{line}: bad value `{vs}`", path.display()))
        })?;
        if i >= nx * ny {
            return Err(CliError::Data(format!(
                "{}:{line}: index {i} outside {nx}x{ny} grid",
                path.display()
            )));
        }
        let (ix, iy) = (i % nx, i / nx);
        if ix != 0 && iy != 0 && ix != nx - 1 && iy != ny - 1 {
            return Err(CliError::Data(format!(
                "{}:{line}: index {i} is not a boundary node",
                path.display()
            )));
        }
        vals[i] = v;
        seen[i] = true;
    }
    // unspecified boundary nodes stay 0; interior starts at the boundary mean
    let mut bsum = 0.0;
    let mut bcount = 0usize;
    for iy in 0..ny {
        for ix in 0..nx {
            if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                bsum += vals[iy * nx + ix];
                bcount += 1;
            }
        }
    }
    let mean = bsum / bcount as f64;
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            vals[iy * nx + ix] = mean;
        }
    }
    GridFunction::new_2d(vals, nx, ny, h, (0.0, 0.0)).map_err(|e| CliError::Data(e.to_string()))
}

fn run_monotone(cmd: &MonotoneCmd) -> Result<Envelope, CliError> {
    match cmd {
        MonotoneCmd::Check { input } => {
            let u = GridFunction::from_csv_path(input)
                .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            let rep = weak_monotone_check(&u)?;
            let passed = rep.passed;
            Ok(Envelope::new(
                "monotone check".into(),
                json!({"input": input.display().to_string(),
                       "nx": u.nx(), "ny": u.ny()}),
                passed,
                json!(rep),
            ))
        }
        MonotoneCmd::Relax {
            nx,
            ny,
            p,
            seed,
            boundary,
            tol,
            max_iters,
            h,
            check,
            theta,
            out_grid,
            grid,
        } => {
            let init = match boundary {
                Some(path) => load_boundary_grid(path, *nx, *ny, *h)?,
                None => random_boundary_grid(*seed, *nx, *ny, *h, (0.0, 0.0)),
            };
            let out = relax_p(&init, *p, *tol, *max_iters)?;
            let monotone = if *check {
                Some(weak_monotone_check(&out.u)?)
            } else {
                None
            };
            let pg = grid.build()?;
            let sobolev = grand_sobolev_norm(&out.u, *theta, &pg)?;
            if let Some(path) = out_grid {
                out.u
                    .write_csv_path(path)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            let passed = out.converged && monotone.as_ref().map_or(true, |m| m.passed);
            let mut params = grid.echo();
            merge(
                &mut params,
                json!({"nx": nx, "ny": ny, "p": p, "seed": seed, "tol": tol,
                       "max_iters": max_iters, "h": h, "theta": theta, "check": check}),
            );
            Ok(Envelope::new(
                "monotone relax".into(),
                params,
                passed,
                json!({"converged": out.converged, "sweeps": out.sweeps,
                       "max_update": out.max_update,
                       "final_energy": out.energies.last(),
                       "monotone": monotone,
                       "grand_sobolev": sobolev}),
            ))
        }
    }
}

fn run_corpus(args: &CorpusArgs) -> Result<Envelope, CliError> {
    for &t in &args.theta {
        if t < 0.0 {
            return Err(CliError::Config(format!("theta must be >= 0, got {t}")));
        }
    }
    let grid = args.grid.build()?;
    let entries = analytic_corpus(args.n);
    if let Some(dir) = &args.emit_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(e.to_string()))?;
    }
    let mut rows = Vec::new();
    for entry in &entries {
        if let Some(dir) = &args.emit_dir {
            entry
                .f
                .write_csv_path(dir.join(format!("{}.csv", entry.name)))
                .map_err(|e| CliError::Data(e.to_string()))?;
        }
        let mut grand = Vec::new();
        let mut weak = Vec::new();
        for &theta in &args.theta {
            grand.push(json!({"theta": theta,
                              "value": grand_theta_infty_norm(&entry.f, theta, &grid)?.value}));
            weak.push(json!({"theta": theta,
                             "value": weak_theta_norm(&entry.f, theta, &grid)?.value}));
        }
        rows.push(json!({
            "name": entry.name,
            "atoms": entry.f.atoms().len(),
            "sup_norm": entry.f.max_abs_value(),
            "grand": grand,
            "weak": weak,
            "exp": exp_class_norm(&entry.f),
        }));
    }
    let mut params = args.grid.echo();
    merge(&mut params, json!({"n": args.n, "theta": args.theta}));
    Ok(Envelope::new(
        "corpus".into(),
        params,
        true,
        Value::Array(rows),
    ))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(envelope) => {
            let rendered = match cli.format {
                Format::Json => envelope.to_json(),
                Format::Csv => envelope.to_csv(),
            };
            match &cli.out {
                Some(path) => {
                    if let Err(e) = write_atomic(path, &rendered) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{rendered}"),
            }
            if envelope.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
