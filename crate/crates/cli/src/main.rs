//! `pptupb`: construct, transform, classify and certify rank-4 PPT states.
//!
//! Exit codes: 0 success; 1 malformed input or I/O failure; 2 invalid
//! parameters; 3 round-trip failure; 4 state not in the class; 5 numerical
//! degeneracy.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pptupb::io::{
    from_json, to_json, CertificateFile, ClassificationFile, RoundtripFile, StateFile, Tolerances, TransformFile,
    UpbFile,
};
use pptupb::orthogonalizer::{classify_with, ClassifyError, ClassifyOptions};
use pptupb::symmetry::{canonical_params, group, ParamPoint};
use pptupb::transform::{apply_to_state, random_transform};
use pptupb::upb::{build_state, build_upb, UpbParams};
use pptupb::verify::certify;
use pptupb::{Error, SearchConfig};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "PPTUPB_OUT_DIR";
/// Relative canonical-parameter error accepted by `roundtrip`.
const ROUNDTRIP_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "pptupb", version, about = "Rank-4 entangled PPT states from orthogonal UPBs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Seed for random transforms and search restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for generated files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
    /// Condition-number bound for random transforms.
    #[arg(long, global = true, default_value_t = pptupb::transform::DEFAULT_COND_MAX)]
    cond_max: f64,
    /// See-saw restarts per search.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Relative eigenvalue cutoff for numerical rank.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Reality/positivity tolerance for the invariants.
    #[arg(long, global = true)]
    tol_positivity: Option<f64>,
    /// Minimal null-space gap ratio of the orthogonalizer.
    #[arg(long, global = true)]
    tol_null_gap: Option<f64>,
    /// Accepted Frobenius reconstruction residual.
    #[arg(long, global = true)]
    tol_reconstruction: Option<f64>,
    /// Objective below which a product vector counts as found.
    #[arg(long, global = true)]
    tol_accept: Option<f64>,
    /// Merge distance for found product vectors.
    #[arg(long, global = true)]
    tol_dedup: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the standard-form UPB and its rank-4 state (`state.json`, `upb.json`).
    Generate {
        /// Standard-form parameters `a,b,c,d` (all positive)
        #[arg(long, value_parser = parse_params)]
        params: [f64; 4],
    },
    /// Apply a product transformation to a state (`transformed.json`, `transform.json`).
    Transform {
        /// State file (`{"dim_a", "dim_b", "rho"}`)
        input: PathBuf,
        /// Use this transform instead of a random one.
        #[arg(long)]
        with: Option<PathBuf>,
    },
    /// Classify rank-(4,4) states (`classification.json`, or `<stem>.classification.json` for several).
    Classify {
        /// One or more state files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Worker threads for batch classification.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Certify PPT, ranks, entanglement and extremality (`certificate.json`).
    Verify {
        /// State file to certify
        input: PathBuf,
    },
    /// Print the 60 images of a parameter tuple under the symmetry group.
    Orbit {
        /// Standard-form parameters `a,b,c,d` (all positive)
        #[arg(long, value_parser = parse_params)]
        params: [f64; 4],
    },
    /// Generate, transform randomly, classify, and compare canonical parameters.
    Roundtrip {
        /// Standard-form parameters `a,b,c,d` (all positive)
        #[arg(long, value_parser = parse_params)]
        params: [f64; 4],
    },
}

fn parse_params(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Dimension(_) | Error::NotHermitian(_) | Error::InvalidState(_) => 1,
        Error::InvalidParameter(_) => 2,
        Error::NotInClass(_) | Error::NotOrthogonalizable | Error::NotPpt(_) => 4,
        Error::Singular
        | Error::Degenerate(_)
        | Error::Search(_)
        | Error::AmbiguousNullSpace(_)
        | Error::Reconstruction(_)
        | Error::Closure(_) => 5,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        Failure::new(exit_code(&e.error), e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

impl Common {
    fn options(&self) -> ClassifyOptions<f64> {
        let mut search = SearchConfig::with_seed(self.seed);
        if let Some(r) = self.restarts {
            search.restarts = r;
        }
        if let Some(t) = self.tol_accept {
            search.accept_tol = t;
        }
        if let Some(t) = self.tol_dedup {
            search.dedup_tol = t;
        }
        if let Some(t) = self.tol_rank {
            search.rank_tol = t;
        }
        let mut o = ClassifyOptions::from_search(search);
        o.rank_tol = search.rank_tol;
        if let Some(t) = self.tol_positivity {
            o.positivity_tol = t;
        }
        if let Some(t) = self.tol_null_gap {
            o.min_null_gap = t;
        }
        if let Some(t) = self.tol_reconstruction {
            o.reconstruction_tol = t;
        }
        o
    }

    fn output(&self, name: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| Failure::new(1, format!("cannot create {}: {e}", self.out_dir.display())))?;
        Ok(self.out_dir.join(name))
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn read_state(path: &Path) -> CliResult<pptupb::State> {
    let file: StateFile = from_json(&read_file(path)?)?;
    Ok(file.to_state()?)
}

fn checked_params(p: [f64; 4]) -> CliResult<UpbParams<f64>> {
    let params = UpbParams::new(p[0], p[1], p[2], p[3])?;
    if !params.is_well_conditioned() {
        let (lo, hi) = pptupb::upb::WELL_CONDITIONED_RANGE;
        eprintln!("warning: parameters {params} outside [{lo:e}, {hi:e}]; rank thresholds may misbehave");
    }
    Ok(params)
}

fn generate(common: &Common, p: [f64; 4]) -> CliResult {
    let params = checked_params(p)?;
    let upb = build_upb(&params)?;
    let rho = build_state(&upb)?;
    write_file(&common.output("state.json")?, &to_json(&StateFile::from_state(&rho)))?;
    write_file(&common.output("upb.json")?, &to_json(&UpbFile::from_upb(&upb)))
}

fn transform(common: &Common, input: &Path, with: Option<&Path>) -> CliResult {
    let rho = read_state(input)?;
    let t = match with {
        Some(path) => from_json::<TransformFile>(&read_file(path)?)?.to_transform()?,
        None => random_transform(common.seed, common.cond_max)?,
    };
    let moved = apply_to_state(&t, &rho)?;
    write_file(&common.output("transformed.json")?, &to_json(&StateFile::from_state(&moved)))?;
    write_file(&common.output("transform.json")?, &to_json(&TransformFile::from_transform(&t)))
}

fn classify_one(common: &Common, input: &Path, output: &Path) -> CliResult {
    let rho = read_state(input)?;
    let opts = common.options();
    let report = classify_with(&rho, &opts)?;
    let file = ClassificationFile::from_report(&report, &opts);
    write_file(output, &to_json(&file))?;
    println!("{}: canonical params {}", input.display(), report.canonical_params);
    Ok(())
}

fn classify(common: &Common, inputs: &[PathBuf], jobs: usize) -> CliResult {
    if inputs.len() == 1 {
        return classify_one(common, &inputs[0], &common.output("classification.json")?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::new(1, format!("thread pool: {e}")))?;
    let results: Vec<CliResult> = pool.install(|| {
        inputs
            .par_iter()
            .map(|input| {
                let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                classify_one(common, input, &common.output(&format!("{stem}.classification.json"))?)
            })
            .collect()
    });
    // Report every failure; exit with the most severe code.
    let mut worst: Option<Failure> = None;
    let mut failed = 0;
    for (input, r) in inputs.iter().zip(results) {
        if let Err(f) = r {
            failed += 1;
            eprintln!("{}: {}", input.display(), f.message);
            if worst.as_ref().is_none_or(|w| f.code > w.code) {
                worst = Some(f);
            }
        }
    }
    match worst {
        Some(f) => Err(Failure::new(f.code, format!("{failed} of {} inputs failed", inputs.len()))),
        None => Ok(()),
    }
}

fn verify(common: &Common, input: &Path) -> CliResult {
    let rho = read_state(input)?;
    let search = common.options().search;
    let cert = certify(&rho, &search)?;
    let file = CertificateFile::from_certificate(&cert, &search);
    write_file(&common.output("certificate.json")?, &to_json(&file))?;
    println!(
        "ppt={} ranks=({},{}) local=({},{}) entangled={} ({}) extremal={}",
        file.is_ppt,
        file.rank_pair[0],
        file.rank_pair[1],
        file.local_ranks[0],
        file.local_ranks[1],
        file.entangled,
        file.image_verdict,
        file.extremal
    );
    Ok(())
}

fn orbit(p: [f64; 4]) -> CliResult {
    use std::fmt::Write as _;
    use std::io::Write as _;
    let params = checked_params(p)?;
    let point = ParamPoint::from_params(&params);
    let mut table = String::from("# index a b c d word\n");
    for (k, g) in group().iter().enumerate() {
        let image = g.apply(&point).to_params()?;
        let word: Vec<&str> = g.word().iter().map(|x| x.name()).collect();
        let word = if word.is_empty() { "id".to_string() } else { word.join(".") };
        let _ = writeln!(table, "{k} {} {} {} {} {word}", image.a, image.b, image.c, image.d);
    }
    // A closed pipe (e.g. `| head`) is not an error for a table printer.
    let _ = std::io::stdout().lock().write_all(table.as_bytes());
    Ok(())
}

fn roundtrip(common: &Common, p: [f64; 4]) -> CliResult {
    let params = checked_params(p)?;
    let opts = common.options();
    let rho1 = build_state(&build_upb(&params)?)?;
    let t = random_transform(common.seed, common.cond_max)?;
    let rho = apply_to_state(&t, &rho1)?;
    let report = classify_with(&rho, &opts)
        .map_err(|e| Failure::new(3, format!("roundtrip: classification failed at stage {}: {}", e.stage, e.error)))?;
    let expected = canonical_params(&params)?;
    let relative_error = report.canonical_params.max_rel_diff(&expected);
    let passed = relative_error < ROUNDTRIP_TOL;
    let file = RoundtripFile {
        params: params.to_array(),
        seed: common.seed,
        cond_max: common.cond_max,
        expected_canonical: expected.to_array(),
        recovered_canonical: report.canonical_params.to_array(),
        relative_error,
        residuals: (&report.residuals).into(),
        passed,
        tolerances: Tolerances::from_options(&opts),
    };
    print!("{}", to_json(&file));
    if passed {
        Ok(())
    } else {
        Err(Failure::new(3, format!("roundtrip: canonical parameters differ by {relative_error:e}")))
    }
}

fn run(cli: &Cli) -> CliResult {
    let c = &cli.common;
    match &cli.command {
        Command::Generate { params } => generate(c, *params),
        Command::Transform { input, with } => transform(c, input, with.as_deref()),
        Command::Classify { inputs, jobs } => classify(c, inputs, *jobs),
        Command::Verify { input } => verify(c, input),
        Command::Orbit { params } => orbit(*params),
        Command::Roundtrip { params } => roundtrip(c, *params),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
