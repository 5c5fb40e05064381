//! `nonincidence`: build Steiner triple systems, bound and search for
//! nonincident sets, and check certificates.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use nonincidence::{
    classify_equality_order, disjoint_block_bound, doubling, embed_subsystem,
    enumerate_equality_orders, exact_max_nonincident, fv_upper_bound, greedy_max_nonincident,
    intersection_curve_data, is_admissible, steiner_triple_system,
    subsystem_complement_certificate, verify_certificate, Design, EffortBudget, Error,
    NonincidenceCertificate, SearchOptions,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RETRYABLE: u8 = 3;
const EXIT_DIGEST: u8 = 4;

#[derive(Parser)]
#[command(name = "nonincidence", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an STS(v) and write it as canonical JSON.
    #[command(group(ArgGroup::new("shape").args(["sub", "double_from"])))]
    Construct {
        #[arg(long)]
        order: u64,
        /// Embed a sub-STS(w) on points 0..w and certify its complement.
        #[arg(long, value_name = "W")]
        sub: Option<u64>,
        /// Double an STS(w) (v = 2w+1) and record the resulting maximal arc.
        #[arg(long, value_name = "W")]
        double_from: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hill-climbing move budget.
        #[arg(long, default_value_t = EffortBudget::default().max_moves)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
        /// Certificate path; defaults to `<out>.cert.json`.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Print the upper bound on f(v).
    Bound {
        #[arg(long)]
        order: u64,
        /// Emit the disjoint-block ceiling against the diagonal instead.
        #[arg(long)]
        curve: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv, requires = "curve")]
        format: Format,
    },
    /// List or classify the orders where the bound is attained.
    #[command(group(ArgGroup::new("mode").args(["zmax", "classify"]).required(true)))]
    Families {
        #[arg(long, value_name = "Z")]
        zmax: Option<u64>,
        #[arg(long, value_name = "V")]
        classify: Option<u64>,
    },
    /// Find the largest nonincident square in a given design.
    #[command(group(ArgGroup::new("method").args(["exact", "greedy"])))]
    Search {
        #[arg(long)]
        design: PathBuf,
        /// Branch and bound (the default).
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        greedy: bool,
        /// Node budget for the exact search.
        #[arg(long, default_value_t = SearchOptions::default().max_nodes)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the exact search; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the witness as a standalone certificate.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Check a certificate against a design.
    Verify {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        require_square: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// An error carrying its exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Exit(EXIT_USAGE, msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExhausted { .. }) => EXIT_RETRYABLE,
        Some(Error::DigestMismatch { .. } | Error::OrderMismatch { .. }) => EXIT_DIGEST,
        Some(Error::InadmissibleOrder { .. } | Error::InvalidParameters(_)) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NONINCIDENCE_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Construct {
            order,
            sub,
            double_from,
            seed,
            budget,
            out,
            cert,
        } => construct(
            order,
            sub,
            double_from,
            seed,
            EffortBudget { max_moves: budget },
            &out,
            cert,
        ),
        Command::Bound {
            order,
            curve,
            format,
        } => bound(order, curve, format),
        Command::Families { zmax, classify } => families(zmax, classify),
        Command::Search {
            design,
            exact: _,
            greedy,
            budget,
            seed,
            threads,
            out,
            cert,
        } => search(
            &design,
            greedy,
            budget,
            seed,
            threads,
            &out,
            cert.as_deref(),
        ),
        Command::Verify {
            design,
            cert,
            require_square,
        } => verify(&design, &cert, require_square),
    }
}

fn to_usize(v: u64) -> anyhow::Result<usize> {
    usize::try_from(v).map_err(|_| usage(format!("{v} does not fit in memory")))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn default_cert_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".cert.json");
    PathBuf::from(name)
}

fn construct(
    order: u64,
    sub: Option<u64>,
    double_from: Option<u64>,
    seed: u64,
    budget: EffortBudget,
    out: &Path,
    cert: Option<PathBuf>,
) -> anyhow::Result<u8> {
    if !is_admissible(order) {
        return Err(Error::InadmissibleOrder { v: order }.into());
    }
    let v = to_usize(order)?;
    let (design, certificate) = match (sub, double_from) {
        (Some(w), _) => {
            let e = embed_subsystem(to_usize(w)?, v, seed, budget)?;
            info!("embedded sub-STS({w}) in STS({v}) after {} moves", e.moves);
            let c = subsystem_complement_certificate(&e);
            println!(
                "STS({v}) with sub-STS({w}): |Y| = {}, |C| = {}, s = {}",
                c.points.len(),
                c.blocks.len(),
                c.claimed_s()
            );
            (e.design, Some(c))
        }
        (None, Some(w)) => {
            if order != 2 * w + 1 {
                return Err(usage(format!(
                    "--double-from {w} builds order {}, not {order}",
                    2 * w + 1
                )));
            }
            let base = steiner_triple_system(to_usize(w)?, seed, budget)?;
            let (d, arc) = doubling(&base)?;
            let y = d.point_mask(&arc)?;
            let disjoint = d.disjoint_blocks_of_mask(&y).to_vec();
            let c = NonincidenceCertificate::new(&d, arc, disjoint)
                .with_meta("kind", "maximal_arc")
                .with_meta("construction", "doubling")
                .with_meta("w", w);
            println!(
                "STS({v}) doubled from STS({w}): maximal arc of {} points, {} blocks avoid it",
                c.points.len(),
                c.blocks.len()
            );
            (d, Some(c))
        }
        (None, None) => {
            let d = steiner_triple_system(v, seed, budget)?;
            println!("STS({v}): {} blocks", d.num_blocks());
            (d, None)
        }
    };
    write(out, &design.to_canonical_json())?;
    println!("design {} written to {}", design.digest(), out.display());
    if let Some(c) = certificate {
        let path = cert.unwrap_or_else(|| default_cert_path(out));
        write(&path, &c.to_json())?;
        println!("certificate written to {}", path.display());
    } else if cert.is_some() {
        warn!("--cert ignored: plain construction produces no certificate");
    }
    Ok(0)
}

fn bound(order: u64, curve: bool, format: Format) -> anyhow::Result<u8> {
    if !curve {
        println!("{}", fv_upper_bound(order)?);
        return Ok(0);
    }
    let data = intersection_curve_data(order)?;
    match format {
        Format::Csv => print!("{}", data.to_csv()),
        Format::Json => println!("{}", serde_json::to_string(&data)?),
    }
    info!("{}", data.describe_crossing());
    Ok(0)
}

fn families(zmax: Option<u64>, classify: Option<u64>) -> anyhow::Result<u8> {
    match (zmax, classify) {
        (Some(z), _) => {
            for record in enumerate_equality_orders(z) {
                println!("{}", serde_json::to_string(&record)?);
            }
        }
        (None, Some(v)) => match classify_equality_order(v) {
            Some(record) => println!("{}", serde_json::to_string(&record)?),
            None => println!("none"),
        },
        (None, None) => unreachable!("clap requires one of --zmax, --classify"),
    }
    Ok(0)
}

/// Reads a design file and insists it is an STS, naming each failed invariant.
fn load_design(path: &Path) -> anyhow::Result<Design> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let design = Design::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = design.validate();
    if !report.is_sts() {
        let mut msg = format!("{} is not a Steiner triple system:", path.display());
        for failure in report.failures() {
            msg.push_str("\n  ");
            msg.push_str(&failure);
        }
        return Err(Exit(EXIT_FAILURE, msg).into());
    }
    Ok(design)
}

fn search(
    path: &Path,
    greedy: bool,
    budget: u64,
    seed: u64,
    threads: usize,
    out: &Path,
    cert: Option<&Path>,
) -> anyhow::Result<u8> {
    let design = load_design(path)?;
    if threads != 1 && !nonincidence::par::parallel_enabled() {
        warn!("built without the parallel feature; --threads {threads} runs on one thread");
    }
    let report = if greedy {
        greedy_max_nonincident(&design, seed)?
    } else {
        exact_max_nonincident(
            &design,
            SearchOptions {
                max_nodes: budget,
                threads,
            },
        )?
    };
    info!("search took {:?}", report.elapsed);
    write(out, &report.to_json())?;
    if let (Some(path), Some(c)) = (cert, &report.certificate) {
        write(path, &c.to_json())?;
    }
    println!(
        "best_s={} exact={} nodes={} bound={}",
        report.best_s, report.exact, report.nodes_visited, report.bound_used
    );
    println!("{}", report.note);
    if !greedy && !report.exact {
        eprintln!("node budget exhausted; rerun with a larger --budget for an exact answer");
        return Ok(EXIT_RETRYABLE);
    }
    Ok(0)
}

fn verify(design_path: &Path, cert_path: &Path, require_square: bool) -> anyhow::Result<u8> {
    let design = load_design(design_path)?;
    let text = fs::read_to_string(cert_path)
        .with_context(|| format!("reading {}", cert_path.display()))?;
    let cert = NonincidenceCertificate::from_json(&text)
        .with_context(|| format!("parsing {}", cert_path.display()))?;
    let check = verify_certificate(&design, &cert, require_square)?;
    let v = design.v() as u64;
    let fv = fv_upper_bound(v)?;
    let ceiling = disjoint_block_bound(v, check.s as u64)?;
    println!(
        "s={} ≤ bound {fv} (|Y|={}, |C|={}; at most {ceiling} blocks avoid {} points)",
        check.s.min(check.t),
        check.s,
        check.t,
        check.s
    );
    if check.accepted {
        println!("certificate verified");
        return Ok(0);
    }
    for (point, block) in &check.incidences {
        println!(
            "incidence: point {point} lies on block {block} {:?}",
            design.block(*block)
        );
    }
    if check.s == 0 || check.t == 0 {
        println!("certificate is empty");
    }
    if require_square && !check.square {
        println!(
            "certificate is not square: |Y| = {}, |C| = {}",
            check.s, check.t
        );
    }
    if check.incidences.is_empty()
        && check.s > 0
        && check.t > 0
        && (check.square || !require_square)
    {
        println!("certificate repeats a point or block");
    }
    Err(Exit(EXIT_FAILURE, "certificate rejected".into()).into())
}
