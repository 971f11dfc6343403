use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use vssdd::export::{export_dot, parse_diagram, parse_diagram_into, serialize_diagram};
use vssdd::frontend::{
    compile_cnf_sdd, compile_cnf_vs, gen_grid_matching, gen_matching_tree, gen_nqueens,
    parse_dimacs, Cnf, GeneratedInstance,
};
use vssdd::oracle;
use vssdd::queries::{self, CountContext};
use vssdd::{Error, Mode, SddManager, Var, VsManager, Vtree};

#[derive(Parser)]
#[command(name = "vssdd", about = "VS-SDD knowledge compiler", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark, writing <prefix>.cnf and <prefix>.vtree.
    Gen {
        /// queens <N> | grid <PxQ> | ftree <J>
        kind: String,
        /// Parameter: board size, PxQ grid dimensions, or tree depth.
        param: String,
        /// Output file prefix.
        prefix: PathBuf,
    },
    /// Compile a CNF to a VS-SDD and report sizes.
    Compile {
        #[arg(long)]
        cnf: PathBuf,
        /// balanced | rightlinear | <path to vtree file>
        #[arg(long, default_value = "balanced")]
        vtree: String,
        #[arg(long, default_value = "trimmed")]
        mode: String,
        /// Disable compression (OR-merging of primes with equal subs).
        #[arg(long)]
        no_compress: bool,
        /// Also compile a baseline SDD on the same vtree and report the
        /// size ratio.
        #[arg(long)]
        compare_sdd: bool,
        /// Cross-check the model count against the brute-force oracle.
        #[arg(long)]
        verify: bool,
        /// Write the compiled diagram to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit machine-readable key=value lines.
        #[arg(long)]
        porcelain: bool,
    },
    /// Run a query against a compiled diagram file.
    Query {
        #[arg(long)]
        diagram: PathBuf,
        #[command(subcommand)]
        op: QueryOp,
    },
    /// Print the diagram as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        diagram: PathBuf,
    },
}

#[derive(Subcommand)]
enum QueryOp {
    /// Model count over all vtree variables.
    Count,
    /// Satisfiability (CO).
    Sat,
    /// Validity (VA).
    Valid,
    /// Equivalence against a second diagram on the same vtree.
    Equiv { other: PathBuf },
    /// Sentential entailment: does the diagram entail the second one?
    Entails { other: PathBuf },
    /// Enumerate models, one "X1=0 X2=1 ..." line each.
    Enumerate {
        /// Maximum number of models (0 = all).
        #[arg(long, default_value_t = 0)]
        limit: usize,
    },
}

const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::ResourceLimit(_) => EXIT_RESOURCE,
            Error::Contract(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, anything else is a
            // usage error (clap's default exit code 2 is reserved for
            // input errors here).
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            kind,
            param,
            prefix,
        } => cmd_gen(&kind, &param, &prefix),
        Command::Compile {
            cnf,
            vtree,
            mode,
            no_compress,
            compare_sdd,
            verify,
            out,
            porcelain,
        } => cmd_compile(
            &cnf,
            &vtree,
            &mode,
            !no_compress,
            compare_sdd,
            verify,
            out.as_deref(),
            porcelain,
        ),
        Command::Query { diagram, op } => cmd_query(&diagram, op),
        Command::ExportDot { diagram } => {
            let text = read(&diagram)?;
            let (mgr, root) = parse_diagram(&text)?;
            print!("{}", export_dot(&mgr, root));
            Ok(())
        }
    }
}

fn cmd_gen(kind: &str, param: &str, prefix: &Path) -> Result<(), Failure> {
    let instance: GeneratedInstance = match kind {
        "queens" => gen_nqueens(parse_param(param)?)?,
        "ftree" => gen_matching_tree(parse_param(param)?)?,
        "grid" => {
            let (p, q) = param
                .split_once('x')
                .ok_or_else(|| Failure::new(EXIT_INPUT, "grid size must look like 2x3"))?;
            gen_grid_matching(parse_param(p)?, parse_param(q)?)?
        }
        other => {
            return Err(Failure::new(
                EXIT_INPUT,
                format!("unknown generator `{other}` (expected queens, grid, or ftree)"),
            ))
        }
    };
    write(
        &prefix.with_extension("cnf"),
        &instance.cnf.serialize(&instance.name),
    )?;
    write(&prefix.with_extension("vtree"), &instance.vtree.serialize())?;
    println!(
        "{}: {} vars, {} clauses",
        instance.name,
        instance.cnf.num_vars,
        instance.cnf.clauses.len()
    );
    Ok(())
}

fn parse_param<T: std::str::FromStr>(s: &str) -> Result<T, Failure> {
    s.parse()
        .map_err(|_| Failure::new(EXIT_INPUT, format!("invalid parameter `{s}`")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compile(
    cnf_path: &Path,
    vtree_arg: &str,
    mode_arg: &str,
    compress: bool,
    compare_sdd: bool,
    verify: bool,
    out: Option<&Path>,
    porcelain: bool,
) -> Result<(), Failure> {
    let cnf = parse_dimacs(&read(cnf_path)?)?;
    let vtree = Arc::new(build_vtree(vtree_arg, &cnf)?);
    let mode = match mode_arg {
        "trimmed" => Mode::Trimmed,
        "normalized" => Mode::Normalized,
        other => return Err(Failure::new(EXIT_INPUT, format!("unknown mode `{other}`"))),
    };

    let mut vs = VsManager::new(vtree.clone(), mode, compress);
    let (root, vstats) = compile_cnf_vs(&cnf, &mut vs)?;

    let sdd_result = if compare_sdd {
        let mut sm = SddManager::new(vtree.clone());
        let (s, stats) = compile_cnf_sdd(&cnf, &mut sm)?;
        Some((sm, s, stats))
    } else {
        None
    };

    let mut ctx = CountContext::new();
    let count = ctx.count_all(&vs, root)?;

    let verified = if verify {
        let expect = oracle::table_of_cnf(&cnf)?.count();
        if count != expect.into() {
            return Err(Failure::new(
                EXIT_INTERNAL,
                format!("count mismatch: compiled {count}, oracle {expect}"),
            ));
        }
        true
    } else {
        false
    };

    let name = cnf_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cnf".into());
    let v = vs.size(root);

    if porcelain {
        println!("name={name}");
        println!("vars={}", cnf.num_vars);
        println!("vssdd_size={v}");
        println!("vssdd_nodes={}", vs.node_count(root));
        if let Some((_, _, sstats)) = &sdd_result {
            println!("sdd_size={}", sstats.size);
            println!("ratio={}", ratio_percent(v, sstats.size));
        }
        println!("count={count}");
        println!("vs_apply_calls={}", vstats.apply_calls);
        println!("vs_cache_hits={}", vstats.cache_hits);
        println!("vs_cache_misses={}", vstats.cache_misses);
        println!("vs_wall_ms={}", vstats.wall.as_millis());
        if let Some((_, _, sstats)) = &sdd_result {
            println!("sdd_apply_calls={}", sstats.apply_calls);
            println!("sdd_cache_hits={}", sstats.cache_hits);
            println!("sdd_wall_ms={}", sstats.wall.as_millis());
        }
        println!("verified={verified}");
    } else {
        println!("instance: {name}");
        println!("vars: {}", cnf.num_vars);
        if let Some((_, _, sstats)) = &sdd_result {
            println!("sdd size S: {}", sstats.size);
            println!("vssdd size V: {v}");
            println!("ratio V/S: {}", ratio_percent(v, sstats.size));
        } else {
            println!("vssdd size V: {v}");
        }
        println!("vssdd nodes: {}", vs.node_count(root));
        println!(
            "apply calls: {} ({} cache hits)",
            vstats.apply_calls, vstats.cache_hits
        );
        println!("wall time: {} ms", vstats.wall.as_millis());
        println!(
            "model count: {count}{}",
            if verified { " (verified)" } else { "" }
        );
    }

    if let Some(path) = out {
        write(path, &serialize_diagram(&vs, root))?;
    }
    Ok(())
}

fn ratio_percent(v: u64, s: u64) -> String {
    if s == 0 {
        return "100.0%".into();
    }
    format!("{:.1}%", v as f64 / s as f64 * 100.0)
}

fn build_vtree(arg: &str, cnf: &Cnf) -> Result<Vtree, Failure> {
    let vars: Vec<Var> = (1..=cnf.num_vars.max(1)).collect();
    let vt = match arg {
        "balanced" => Vtree::build_balanced(&vars)?,
        "rightlinear" => Vtree::build_right_linear(&vars)?,
        path => {
            let vt = Vtree::parse(&read(Path::new(path))?)?;
            if vt.num_vars() < cnf.num_vars {
                return Err(Failure::new(
                    EXIT_INPUT,
                    format!(
                        "vtree covers {} variables but the CNF uses {}",
                        vt.num_vars(),
                        cnf.num_vars
                    ),
                ));
            }
            vt
        }
    };
    Ok(vt)
}

fn cmd_query(diagram: &Path, op: QueryOp) -> Result<(), Failure> {
    let (mut mgr, root) = parse_diagram(&read(diagram)?)?;
    match op {
        QueryOp::Count => {
            let mut ctx = CountContext::new();
            println!("{}", ctx.count_all(&mgr, root)?);
        }
        QueryOp::Sat => println!("{}", queries::satisfiable(&mut mgr, root)),
        QueryOp::Valid => println!("{}", queries::valid(&mut mgr, root)?),
        QueryOp::Equiv { other } => {
            let g = parse_diagram_into(&read(&other)?, &mut mgr)?;
            println!("{}", queries::equivalent(&mut mgr, root, g)?);
        }
        QueryOp::Entails { other } => {
            let g = parse_diagram_into(&read(&other)?, &mut mgr)?;
            println!("{}", queries::entails(&mut mgr, root, g)?);
        }
        QueryOp::Enumerate { limit } => {
            for model in queries::enumerate_models(&mgr, root, limit)? {
                let line: Vec<String> = model
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| format!("X{}={}", i + 1, b as u8))
                    .collect();
                println!("{}", line.join(" "));
            }
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content).map_err(|e| {
        Failure::new(
            EXIT_RESOURCE,
            format!("cannot write {}: {e}", path.display()),
        )
    })
}
