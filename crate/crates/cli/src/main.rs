//! `fraisse`: command-line front end.
//!
//! Every subcommand prints one JSON document (keys sorted) or a DOT graph on
//! stdout. Exit codes: 0 success, 1 certificate rejected by `mono verify`,
//! 2 budget or search bound exhausted, 3 bit prefix exhausted, 4 invalid input.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fraisse::dot::{graph_dot, ldiag_dot};
use fraisse::ranked::audit_prime_witness;
use fraisse::{
    audit_certificate, check_homogeneity_sample, enumerate_copies, genericity_probe, induced, monochromatic_embedding,
    prime_witness, BitDescriptor, BitSource, CopyIndex, EmbeddingCertificate, Error, ExtensionInstance, FinStructure,
    LimitPresentation, Mapping, PresentationDescriptor, PrimeTable, ProbeCaps, StructureFile, Vertex, VertexSet,
};

const DEFAULT_BUDGET: u64 = 100_000;
const DEFAULT_DEPTH: usize = 8;
const BUDGET_ENV: &str = "FORGE_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "fraisse", version, about = "Monochromatic embeddings into computable homogeneous structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Presentations of the homogeneous targets.
    #[command(subcommand)]
    Limit(LimitCmd),
    /// Copies of β in canonical order.
    #[command(subcommand)]
    Copies(CopiesCmd),
    /// Colours of copies under a bit source.
    #[command(subcommand)]
    Color(ColorCmd),
    /// Monochromatic embeddings and their certificates.
    #[command(subcommand)]
    Mono(MonoCmd),
    /// Ranked ℓ-diagrams.
    #[command(subcommand)]
    Ldiag(LdiagCmd),
    /// One-point homogeneity extensions.
    #[command(subcommand)]
    Homog(HomogCmd),
}

#[derive(Subcommand, Debug)]
enum LimitCmd {
    /// Induced structure on the first `n` vertices.
    Show {
        #[arg(long, default_value = "rado")]
        pres: PresentationDescriptor,
        #[arg(long, default_value_t = 8)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum CopiesCmd {
    /// First `count` copies, one `{"j":..,"set":[..]}` line each.
    List {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(Subcommand, Debug)]
enum ColorCmd {
    /// Colour `ε(j)` of the first `count` copies.
    Show {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        bits: BitDescriptor,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(Subcommand, Debug)]
enum MonoCmd {
    /// Greedy embedding whose β-copies all have colour 1.
    Embed {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        bits: BitDescriptor,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Defaults to $FORGE_BUDGET, then 100000.
        #[arg(long)]
        budget: Option<u64>,
        /// Use the complemented source (all copies get colour 0).
        #[arg(long)]
        complement: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Independent audit of a certificate file (`-` for stdin).
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum LdiagCmd {
    /// Bounded search for extension-axiom violations.
    Probe {
        #[arg(long)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = DiagramKind::Primes)]
        pres: DiagramKind,
        /// Bit source for `--pres bits`.
        #[arg(long)]
        bits: Option<BitDescriptor>,
        /// Maximum size of each of X, Y, Z, X′, Y′.
        #[arg(long, default_value_t = 1)]
        caps: usize,
        /// Maximum of |X|+|Y| and |X′|+|Y′| (defaults to twice `caps`).
        #[arg(long)]
        max_pair: Option<usize>,
        /// Maximum size of Z (defaults to `caps`).
        #[arg(long)]
        max_z: Option<usize>,
        #[arg(long, default_value_t = 2)]
        max_index: u64,
        #[arg(long, default_value_t = 10_000)]
        zbound: u64,
        /// Include the witness of every satisfied instance.
        #[arg(long)]
        witnesses: bool,
    },
    /// Closed-form witness of the prime construction, with its audit.
    Witness {
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        level: usize,
        #[command(flatten)]
        sets: InstanceSets,
    },
    /// DOT drawing of the first `n` in-level indices of every level.
    Show {
        #[arg(long)]
        levels: usize,
        #[arg(long, value_enum, default_value_t = DiagramKind::Primes)]
        pres: DiagramKind,
        #[arg(long)]
        bits: Option<BitDescriptor>,
        #[arg(long, default_value_t = 4)]
        n: u64,
    },
}

#[derive(Args, Debug)]
struct InstanceSets {
    #[arg(long, value_delimiter = ',')]
    x: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    y: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    z: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    x_lower: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    y_lower: Vec<u64>,
}

#[derive(Subcommand, Debug)]
enum HomogCmd {
    /// Extends `h: A → pres` to `B` (B is A plus one last element).
    Check {
        #[arg(long, default_value = "rado")]
        pres: PresentationDescriptor,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Images of A's elements, comma separated.
        #[arg(long, value_delimiter = ',')]
        h: Vec<u64>,
        #[arg(long, default_value_t = 1 << 20)]
        bound: Vertex,
    },
}

#[derive(Args, Debug)]
struct Target {
    #[arg(long, default_value = "rado")]
    pres: PresentationDescriptor,
    /// Structure file, or `K<n>` (complete graph) / `E<n>` (edgeless graph).
    #[arg(long)]
    beta: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiagramKind {
    Primes,
    Bits,
}

/// Outcome of a subcommand that did not raise a library error.
enum Output {
    Json(Value),
    Lines(Vec<Value>),
    Text(String),
    /// Printed, then the process exits with the given code.
    Rejected(Value, u8),
}

fn load_structure(arg: &str) -> Result<FinStructure, Error> {
    let shorthand = |prefix: char| {
        arg.strip_prefix(prefix)
            .or_else(|| arg.strip_prefix(prefix.to_ascii_lowercase()))
            .and_then(|n| n.parse::<usize>().ok())
    };
    if let Some(n) = shorthand('K') {
        return Ok(FinStructure::complete_graph(n));
    }
    if let Some(n) = shorthand('E') {
        return FinStructure::graph(n, &[]);
    }
    let text = std::fs::read_to_string(arg).map_err(|e| Error::Invalid(format!("cannot read `{arg}`: {e}")))?;
    FinStructure::from_json_str(&text)
}

fn diagram(levels: usize, kind: DiagramKind, bits: Option<BitDescriptor>) -> Result<LimitPresentation, Error> {
    let descriptor = match (kind, bits) {
        (DiagramKind::Primes, None) => PresentationDescriptor::LdiagPrimes { levels },
        (DiagramKind::Bits, Some(bits)) => PresentationDescriptor::LdiagBits { levels, bits },
        (DiagramKind::Primes, Some(_)) => return Err(Error::Invalid("--bits only applies to --pres bits".into())),
        (DiagramKind::Bits, None) => return Err(Error::Invalid("--pres bits needs --bits".into())),
    };
    LimitPresentation::new(&descriptor)
}

fn budget(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Invalid(format!("{BUDGET_ENV}=`{v}` is not a natural number"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn certificate_dot(cert: &EmbeddingCertificate) -> Result<String, Error> {
    let pres = LimitPresentation::new(&cert.presentation)?;
    let image = cert.image();
    if !pres.is_graph() {
        return ldiag_dot(&pres, &image);
    }
    let beta = FinStructure::try_from(cert.beta.clone())?;
    let copies = CopyIndex::new(&pres, &beta)?.copies_within(&image)?;
    let labels: Vec<(Vertex, String)> = cert.nu_table.iter().map(|&(i, v)| (v, format!("{i}:{v}"))).collect();
    graph_dot(&pres, &image, &copies, &labels)
}

fn run(cli: Cli) -> Result<Output, Error> {
    match cli.command {
        Command::Limit(LimitCmd::Show { pres, n, format }) => {
            let p = LimitPresentation::new(&pres)?;
            let vertices: VertexSet = (0..n).collect();
            match format {
                Format::Dot => Ok(Output::Text(fraisse::dot::structure_dot(&p, &vertices)?)),
                Format::Json => {
                    let s = StructureFile::from(&induced(&p, &vertices)?);
                    Ok(Output::Json(json!({ "presentation": to_value(&pres), "prefix": n, "structure": to_value(&s) })))
                }
            }
        }
        Command::Copies(CopiesCmd::List { target, count }) => {
            let pres = LimitPresentation::new(&target.pres)?;
            let beta = load_structure(&target.beta)?;
            Ok(Output::Lines(enumerate_copies(&pres, &beta, count)?.iter().map(to_value).collect()))
        }
        Command::Color(ColorCmd::Show { target, bits, count }) => {
            let pres = LimitPresentation::new(&target.pres)?;
            let beta = load_structure(&target.beta)?;
            let eps = BitSource::new(&bits)?;
            let mut rows = Vec::with_capacity(count);
            for e in enumerate_copies(&pres, &beta, count)? {
                rows.push(json!({ "j": e.j, "set": to_value(&e.set), "color": u8::from(eps.bit_at(e.j)?) }));
            }
            Ok(Output::Json(json!({ "bits": to_value(&bits), "copies": rows, "presentation": to_value(&target.pres) })))
        }
        Command::Mono(MonoCmd::Embed { target, bits, depth, budget: b, complement, format }) => {
            let pres = LimitPresentation::new(&target.pres)?;
            let beta = load_structure(&target.beta)?;
            let bits = if complement { bits.complement() } else { bits };
            let eps = BitSource::new(&bits)?;
            let cert = monochromatic_embedding(&pres, &beta, &eps, depth, budget(b)?)?;
            match format {
                Format::Json => Ok(Output::Json(to_value(&cert))),
                Format::Dot => Ok(Output::Text(certificate_dot(&cert)?)),
            }
        }
        Command::Mono(MonoCmd::Verify { cert }) => {
            let text = if cert.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin()).map_err(|e| Error::Invalid(format!("stdin: {e}")))?
            } else {
                std::fs::read_to_string(&cert)
                    .map_err(|e| Error::Invalid(format!("cannot read `{}`: {e}", cert.display())))?
            };
            let cert: EmbeddingCertificate =
                serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("certificate: {e}")))?;
            let v = audit_certificate(&cert)?;
            let mut doc = to_value(&v);
            doc["valid"] = Value::Bool(v.valid());
            Ok(if v.valid() { Output::Json(doc) } else { Output::Rejected(doc, 1) })
        }
        Command::Ldiag(LdiagCmd::Probe { levels, pres, bits, caps, max_pair, max_z, max_index, zbound, witnesses }) => {
            let p = diagram(levels, pres, bits)?;
            let caps = ProbeCaps {
                max_set: caps,
                max_pair: max_pair.unwrap_or(2 * caps),
                max_z: max_z.unwrap_or(caps),
                max_index,
            };
            let report = genericity_probe(&p, &caps, zbound)?;
            let mut doc = to_value(&report);
            doc["presentation"] = to_value(p.descriptor());
            doc["instances"] = json!(report.instance_count());
            if !witnesses {
                doc.as_object_mut().expect("object").remove("witnesses");
            }
            Ok(Output::Json(doc))
        }
        Command::Ldiag(LdiagCmd::Witness { levels, level, sets }) => {
            let pt = PrimeTable::new(levels);
            let inst = ExtensionInstance {
                level,
                x: sets.x,
                y: sets.y,
                z: sets.z,
                x_lower: sets.x_lower,
                y_lower: sets.y_lower,
            };
            let z = prime_witness(&pt, &inst)?;
            let audit = audit_prime_witness(&pt, &inst, z)?;
            Ok(Output::Json(json!({ "audit": audit, "instance": to_value(&inst), "levels": levels, "witness": z })))
        }
        Command::Ldiag(LdiagCmd::Show { levels, pres, bits, n }) => {
            let p = diagram(levels, pres, bits)?;
            let vertices: VertexSet = (0..n * levels as u64).collect();
            Ok(Output::Text(ldiag_dot(&p, &vertices)?))
        }
        Command::Homog(HomogCmd::Check { pres, a, b, h, bound }) => {
            let p = LimitPresentation::new(&pres)?;
            let (a, b) = (load_structure(&a)?, load_structure(&b)?);
            let h = Mapping::new(h);
            let extended = check_homogeneity_sample(&p, &a, &b, &h, bound)?;
            Ok(Output::Json(json!({
                "bound": bound,
                "extended": extended.as_ref().map(to_value),
                "h": to_value(&h),
                "presentation": to_value(&pres),
            })))
        }
    }
}

fn emit(out: &mut impl Write, output: &Output) -> std::io::Result<()> {
    match output {
        Output::Json(v) | Output::Rejected(v, _) => writeln!(out, "{v}"),
        Output::Lines(lines) => lines.iter().try_for_each(|v| writeln!(out, "{v}")),
        Output::Text(t) => write!(out, "{t}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(output) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = emit(&mut stdout, &output).and_then(|_| stdout.flush()) {
                eprintln!("error: {e}");
                return ExitCode::from(4);
            }
            match output {
                Output::Rejected(_, code) => {
                    eprintln!("certificate rejected");
                    ExitCode::from(code)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
