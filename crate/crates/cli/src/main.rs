use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand};
use nnta::data::{
    gaussian_mixture_tensor, hilbert_tensor, import_cube, load_raw_f64, load_tensor, save_tensor, write_sidecar,
    GaussianMixtureSpec,
};
use nnta::QualityReport;
use nnta_cli::artifacts::{create_dir, load_decomposition, read_json, write_json};
use nnta_cli::bench::{run_bench, write_bench_csv, BenchConfig, Solver, Variant};
use nnta_cli::{run, CliError, DatasetSource, ExitCode, Format, Method, PartialConfig, SvdKind, OUTPUT_DIR_ENV};

type Result<T> = nnta_cli::error::Result<T>;

#[derive(Parser)]
#[command(name = "nnta", version, about = "Nonnegative low-rank tensor approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset as a DTEN file.
    #[command(subcommand)]
    Generate(Generate),
    /// Plain decomposition or alternating projections (NSTHOSVD / NTTSVD).
    Approximate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// The NLRT consensus baseline (Tucker format).
    Nlrt {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Median per-iteration times over a grid of cube sizes, with log-log
    /// slopes.
    Bench(BenchArgs),
    /// Quality metrics of a stored decomposition against a reference.
    Report {
        #[arg(long)]
        reference: PathBuf,
        /// Directory holding `manifest.json`.
        #[arg(long)]
        decomposition: PathBuf,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Generate {
    /// `X(i₁,…,i_d) = 1/(i₁+…+i_d−d+1)`.
    Hilbert {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-component 4-D Gaussian mixture sampled on `n⁴` points.
    Gaussian {
        #[arg(long)]
        n: usize,
        /// JSON mixture spec replacing the built-in balanced pair.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a cube (DTEN, or raw little-endian f64 with --shape) to a
    /// DTEN file rescaled to [0, 1].
    Import {
        #[arg(long)]
        input: PathBuf,
        /// Required for raw input.
        #[arg(long, value_delimiter = ',')]
        shape: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// DTEN input tensor.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Hilbert tensor of this shape.
    #[arg(long, value_delimiter = ',', group = "source")]
    hilbert: Option<Vec<usize>>,
    /// Gaussian mixture with this many points per axis.
    #[arg(long, group = "source")]
    gaussian: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    svd: Option<SvdKind>,
    /// Sketch size k.
    #[arg(long)]
    sketch_k: Option<usize>,
    /// HMT power iterations p.
    #[arg(long)]
    power: Option<usize>,
    /// Tropp co-range sketch size l.
    #[arg(long)]
    cotail_l: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop once the negative part's Frobenius norm drops below this.
    #[arg(long)]
    stop_below: Option<f64>,
    /// Output directory; defaults to $NNTA_OUTPUT_DIR or the current one.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write zero timings so that repeated runs give identical files.
    #[arg(long)]
    omit_timings: bool,
}

impl RunArgs {
    fn into_partial(self, method: Option<Method>, format: Option<Format>) -> Result<PartialConfig> {
        let file = match &self.config {
            Some(path) => PartialConfig::from_toml_file(path)?,
            None => PartialConfig::default(),
        };
        let dataset = match (self.input, self.hilbert, self.gaussian) {
            (Some(path), _, _) => Some(DatasetSource::File { path }),
            (_, Some(shape), _) => Some(DatasetSource::Hilbert { shape }),
            (_, _, Some(n)) => Some(DatasetSource::Gaussian { n }),
            _ => None,
        };
        let flags = PartialConfig {
            dataset,
            format,
            method,
            ranks: self.ranks,
            svd: self.svd,
            sketch_k: self.sketch_k,
            power: self.power,
            cotail_l: self.cotail_l,
            iters: self.iters,
            seed: self.seed,
            stop_below: self.stop_below,
            out_dir: self.out_dir,
            omit_timings: self.omit_timings.then_some(true),
        };
        Ok(file.merge(flags))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "nsthosvd")]
    solver: Solver,
    /// `det`, `hmt:P:K` or `tropp:K:L`; repeatable.
    #[arg(long = "variant", required = true)]
    variants: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_values_t = [32, 48, 64, 96])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Defaults to (3,2,4) for Tucker solvers and (3,2) for TT on 3-D cubes.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Iterations per size; the first is warm-up.
    #[arg(long, default_value_t = 9)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn output_path(out: Option<PathBuf>, name: String) -> Result<PathBuf> {
    match out {
        Some(p) => Ok(p),
        None => {
            let dir = default_out_dir();
            create_dir(&dir)?;
            Ok(dir.join(name))
        }
    }
}

fn shape_tag(shape: &[usize]) -> String {
    shape.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
}

fn generate(cmd: Generate) -> Result<()> {
    let path = match cmd {
        Generate::Hilbert { shape, out } => {
            let x = hilbert_tensor(&shape)?;
            let path = output_path(out, format!("hilbert_{}.dten", shape_tag(&shape)))?;
            save_tensor(&x, &path)?;
            write_sidecar(&path, &serde_json::json!({ "source": "hilbert", "shape": shape }))?;
            path
        }
        Generate::Gaussian { n, spec, out } => {
            let spec = match spec {
                Some(p) => read_json::<GaussianMixtureSpec>(&p)?,
                None => GaussianMixtureSpec::balanced_pair(n),
            };
            if spec.n != n {
                return Err(CliError::config(format!("--n {n} disagrees with the spec's n = {}", spec.n)));
            }
            let x = gaussian_mixture_tensor(&spec)?;
            let path = output_path(out, format!("gaussian_{}.dten", shape_tag(x.shape())))?;
            save_tensor(&x, &path)?;
            write_sidecar(&path, &serde_json::json!({ "source": "gaussian_mixture", "spec": spec }))?;
            path
        }
        Generate::Import { input, shape, out } => {
            let x = match &shape {
                Some(shape) => load_raw_f64(&input, shape)?,
                None => load_tensor(&input)?,
            };
            let stem = input.file_stem().map_or_else(|| "cube".into(), |s| s.to_string_lossy().into_owned());
            let path = output_path(out, format!("{stem}.dten"))?;
            import_cube(&x, &input.display().to_string(), &path)?;
            path
        }
    };
    println!("{}", path.display());
    Ok(())
}

fn approximate(partial: PartialConfig) -> Result<()> {
    let config = partial.resolve(&default_out_dir())?;
    let report = run(&config)?;
    let q = &report.quality;
    println!(
        "{} iterations: rel_err_frobenius {:.6e}, rel_err_chebyshev {:.6e}, neg_frobenius {:.3e}, neg_fraction {:.3e}",
        report.iterations_run, q.rel_err_frobenius, q.rel_err_chebyshev, q.negativity.frobenius, q.negativity.fraction
    );
    if let Some(t) = &report.timings {
        println!(
            "solver {:.3} s, median per iteration {:.3e} s",
            t.solver_s, t.per_iteration_median_s
        );
    }
    println!("report: {}", report.artifacts.report.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let ranks = match args.ranks {
        Some(r) => r,
        None if args.order == 3 => match args.solver {
            Solver::Nttsvd => vec![3, 2],
            _ => vec![3, 2, 4],
        },
        None => return Err(CliError::config("--ranks is required unless --order is 3")),
    };
    let config = BenchConfig {
        solver: args.solver,
        variants: args.variants,
        sizes: args.sizes,
        order: args.order,
        ranks,
        iterations: args.iters,
        seed: args.seed,
    };
    let (rows, slopes) = run_bench(&config)?;
    let dir = args.out_dir.unwrap_or_else(default_out_dir);
    create_dir(&dir)?;
    write_bench_csv(&dir.join("bench.csv"), &rows)?;
    write_json(&dir.join("slopes.json"), &slopes)?;
    for r in &rows {
        println!("{} {:<12} n={:<4} median {:.4e} s", r.solver, r.strategy, r.n, r.median_s);
    }
    for s in &slopes {
        println!("{} {:<12} log-log slope {:.3}", s.solver, s.strategy, s.slope);
    }
    Ok(())
}

fn report(reference: &Path, decomposition: &Path, out: Option<PathBuf>) -> Result<()> {
    let x = load_tensor(reference)?;
    let d = load_decomposition(decomposition)?;
    if d.shape() != x.shape() {
        return Err(CliError::config(format!(
            "decomposition shape {:?} does not match reference {:?}",
            d.shape(),
            x.shape()
        )));
    }
    let q = QualityReport::evaluate(&x, &d.reconstruct())?;
    match out {
        Some(path) => write_json(&path, &q),
        None => {
            println!("{}", serde_json::to_string_pretty(&q).expect("serializable"));
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(g) => generate(g),
        Command::Approximate { run, method, format } => {
            if method == Some(Method::Nlrt) {
                return Err(CliError::config("use the nlrt subcommand for NLRT"));
            }
            approximate(run.into_partial(method, format)?)
        }
        Command::Nlrt { run } => approximate(run.into_partial(Some(Method::Nlrt), Some(Format::Tucker))?),
        Command::Bench(args) => bench(args),
        Command::Report {
            reference,
            decomposition,
            out,
        } => report(&reference, &decomposition, out),
    }
}

fn main() -> ProcessExit {
    match dispatch(Cli::parse()) {
        Ok(()) => ProcessExit::from(ExitCode::Success as u8),
        Err(e) => {
            eprintln!("nnta: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}
