use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fwreg::certificate::{self, CertStrategy, Command, DriverError, TransfixerSpec, DEFAULT_BOUND, DEFAULT_RADIUS};
use fwreg::examples;
use fwreg::format::{self, Instance};

/// Partial actions, globalizations and regularization on finite spaces.
#[derive(Parser)]
#[command(name = "fwreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Instance file.
    instance: PathBuf,
    /// Write the certificate here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Strategy {
    /// `exact`, `symbolic`, or `cert FILE`.
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "FILE"])]
    transfixer: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the partial-action axioms on words up to a length.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        bound: usize,
    },
    /// Build the universal globalization.
    Globalize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
    },
    /// Decide whether a subset is commensurated.
    Commensurated {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long)]
        subset: Option<String>,
    },
    /// Find an invariant set at finite distance from a subset.
    Transfix {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long)]
        subset: Option<String>,
        #[command(flatten)]
        strategy: Strategy,
    },
    /// Find g with F and gF disjoint.
    Neumann {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: usize,
        #[arg(long)]
        subset: Option<String>,
    },
    /// Dense invariant open set whose pairs move into X together.
    NoetherianCore {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long)]
        subset: Option<String>,
    },
    /// Run the full regularization pipeline.
    Regularize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[command(flatten)]
        strategy: Strategy,
    },
    /// Re-check a certificate.
    Verify { certificate: PathBuf },
    /// Print a built-in instance; `list` prints the names.
    Example {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, DriverError> {
    fs::read_to_string(path).map_err(|e| DriverError::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Instance, DriverError> {
    Ok(format::parse(&read(path)?)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), DriverError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| DriverError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn strategy(s: &Strategy) -> Result<Option<TransfixerSpec>, DriverError> {
    let spec = match s.transfixer.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        [] => return Ok(None),
        ["exact"] => TransfixerSpec::Exact,
        ["symbolic"] => TransfixerSpec::Symbolic,
        ["cert", file] => TransfixerSpec::Cert(CertStrategy::parse(&read(Path::new(file))?)?),
        _ => return Err(DriverError::Usage("--transfixer takes `exact`, `symbolic` or `cert FILE`".into())),
    };
    Ok(Some(spec))
}

fn execute(cmd: Cmd) -> Result<u8, DriverError> {
    let (common, command) = match cmd {
        Cmd::Verify { certificate } => {
            certificate::verify_or_reject(&read(&certificate)?)?;
            println!("accepted");
            return Ok(0);
        }
        Cmd::Example { name, out } => {
            if name == "list" {
                emit(&examples::NAMES.iter().map(|n| format!("{n}\n")).collect::<String>(), out.as_deref())?;
                return Ok(0);
            }
            let inst = examples::example(&name).ok_or_else(|| DriverError::Usage(format!("no example `{name}`")))?;
            emit(&inst.serialize(), out.as_deref())?;
            return Ok(0);
        }
        Cmd::Validate { common, bound } => (common, Command::Validate { bound }),
        Cmd::Globalize { common, radius } => (common, Command::Globalize { radius }),
        Cmd::Commensurated { common, radius, subset } => (common, Command::Commensurated { radius, subset }),
        Cmd::Transfix { common, radius, subset, strategy: s } => {
            (common, Command::Transfix { radius, subset, transfixer: strategy(&s)? })
        }
        Cmd::Neumann { common, radius, bound, subset } => (common, Command::Neumann { radius, bound, subset }),
        Cmd::NoetherianCore { common, radius, subset } => (common, Command::NoetherianCore { radius, subset }),
        Cmd::Regularize { common, radius, strategy: s } => {
            (common, Command::Regularize { radius, transfixer: strategy(&s)? })
        }
    };
    let inst = load(&common.instance)?;
    let cert = certificate::run(command, &inst)?;
    emit(&cert.text, common.out.as_deref())?;
    Ok(cert.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fwreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
