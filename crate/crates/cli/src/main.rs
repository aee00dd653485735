use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use comdb::coql::split_statements;
use comdb::engine::{Engine, Format, Outcome, ResultSet};
use comdb::Error;

const QUERY_ERROR: u8 = 2;
const LOAD_ERROR: u8 = 3;

/// Query a concept-oriented database with COQL.
#[derive(Parser, Debug)]
#[command(name = "comdb", version)]
#[command(group(ArgGroup::new("mode").args(["query", "script", "repl"])))]
struct Cli {
    /// Schema file in COQL DDL.
    #[arg(long)]
    schema: PathBuf,
    /// Directory of `<Collection>.csv` files.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Run one query and exit.
    #[arg(long)]
    query: Option<String>,
    /// Run `;`-separated statements from a file.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: Format,
    /// Abort loading on the first rejected row.
    #[arg(long)]
    strict: bool,
    /// Interactive shell (the default when no query or script is given).
    #[arg(long)]
    repl: bool,
}

fn load(cli: &Cli) -> Result<Engine, String> {
    let mut engine = Engine::new();
    let summary = engine
        .load_schema_file(&cli.schema)
        .map_err(|e| format!("{}: {e}", cli.schema.display()))?;
    for w in summary.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = &cli.data {
        if !dir.is_dir() {
            return Err(format!("{}: not a directory", dir.display()));
        }
        let reports = engine
            .load_directory(dir, cli.strict)
            .map_err(|e| format!("{}: {e}", dir.display()))?;
        for report in reports {
            for (line, e) in &report.rejected {
                eprintln!("{}.csv line {line}: rejected: {e}", report.collection);
            }
        }
    }
    Ok(engine)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_query_error() {
        QUERY_ERROR
    } else {
        1
    }
}

fn print_rows(out: &mut impl Write, rows: &ResultSet, format: Format) -> io::Result<()> {
    for w in &rows.warnings {
        eprintln!("warning: {w}");
    }
    out.write_all(rows.render(format).as_bytes())
}

fn run_statement(engine: &mut Engine, text: &str, format: Format, out: &mut impl Write) -> Result<(), Error> {
    match engine.run(text)? {
        Outcome::Defined(name) => writeln!(out, "defined {name}")?,
        Outcome::Rows(rows) => print_rows(out, &rows, format)?,
    }
    Ok(())
}

fn run_script(engine: &mut Engine, text: &str, format: Format, out: &mut impl Write) -> Result<(), Error> {
    for (i, stmt) in split_statements(text)?.into_iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "-- {stmt}")?;
        run_statement(engine, stmt, format, out)?;
    }
    Ok(())
}

fn repl(cli: &Cli, mut engine: Engine) -> u8 {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut out = io::stdout().lock();
    let mut format = cli.format;
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            eprint!("comdb> ");
        }
        let Some(Ok(line)) = lines.next() else { return 0 };
        let line = line.trim();
        let (command, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let result = match command {
            "" => Ok(()),
            ".quit" | ".exit" => return 0,
            ".schema" => engine.schema().map_or(Ok(()), |s| {
                out.write_all(s.hasse().as_bytes()).map_err(Error::from)
            }),
            ".collections" => {
                let db = engine.snapshot();
                db.collections()
                    .iter()
                    .try_for_each(|c| writeln!(out, "{} ({})", c.name(), c.len()))
                    .map_err(Error::from)
            }
            ".explain" => engine
                .explain(rest)
                .and_then(|text| writeln!(out, "{text}").map_err(Error::from)),
            ".format" => match rest.parse() {
                Ok(f) => {
                    format = f;
                    Ok(())
                }
                Err(msg) => {
                    eprintln!("error: {msg}");
                    Ok(())
                }
            },
            ".reload" => {
                match load(cli) {
                    Ok(fresh) => engine = fresh,
                    Err(msg) => eprintln!("error: {msg}"),
                }
                Ok(())
            }
            c if c.starts_with('.') => {
                eprintln!(
                    "error: unknown command `{c}`; try .schema .collections .explain .format .reload .quit"
                );
                Ok(())
            }
            _ => run_statement(&mut engine, line, format, &mut out),
        };
        if let Err(e) = result {
            eprintln!("error: {e}");
        }
        let _ = out.flush();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut engine = match load(&cli) {
        Ok(engine) => engine,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(LOAD_ERROR);
        }
    };
    let mut out = io::stdout().lock();
    let result = if let Some(q) = &cli.query {
        engine
            .query(q)
            .and_then(|rows| print_rows(&mut out, &rows, cli.format).map_err(Error::from))
    } else if let Some(path) = &cli.script {
        match std::fs::read_to_string(path) {
            Ok(text) => run_script(&mut engine, &text, cli.format, &mut out),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(LOAD_ERROR);
            }
        }
    } else {
        drop(out);
        return ExitCode::from(repl(&cli, engine));
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
