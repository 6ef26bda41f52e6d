//! Command-line surface: `check`, `export` and `serve`.

pub mod args;
pub mod export;
pub mod report;
pub mod serve;

use std::io::Write;
use std::path::Path;

use crate::checker::{confirm, explore, load, Loaded, Report, Status};
use crate::framework::AssembleOptions;

pub use args::{CheckArgs, Cli, Command, ExportArgs, Format, Mode, ServeArgs};
pub use report::{exit_status, EXIT_FAILS, EXIT_HOLDS, EXIT_INCONCLUSIVE, EXIT_USAGE};

/// Runs a parsed command line, writing to `out` and `err`. Returns the exit
/// status.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Check(a) => cmd_check(&a, out, err),
        Command::Export(a) => cmd_export(&a, err),
        Command::Serve(a) => cmd_serve(&a, out, err),
    }
}

fn load_file(path: &Path, opts: AssembleOptions, err: &mut dyn Write) -> Option<Loaded> {
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match load(&src, opts) {
        Ok(l) => {
            for w in &l.warnings {
                let _ = writeln!(err, "{}: {w}", path.display());
            }
            Some(l)
        }
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            None
        }
    }
}

fn program_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let props = match a.properties() {
        Ok(p) if p.is_empty() => {
            let _ = writeln!(err, "error: no property requested (try --all)");
            return EXIT_USAGE;
        }
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let Some(l) = load_file(&a.model.input, a.model.assemble_options(), err) else {
        return EXIT_USAGE;
    };
    let policy = a.model.policy();
    let g = match explore(&l.composition, &a.limits.limits(policy)) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut report = Report::build(&program_name(&a.model.input), &l.composition, &g, &props);
    for v in &mut report.verdicts {
        match confirm(&l.composition, v, policy) {
            Ok(true) => {}
            Ok(false) | Err(_) => {
                let _ = writeln!(
                    err,
                    "internal error: counterexample for {} does not replay",
                    v.property
                );
                v.status = Status::Inconclusive;
            }
        }
    }
    let text = match a.format {
        Format::Human => report::human(&report, g.elapsed_ms),
        Format::Structured => report::structured(&report),
    };
    let _ = out.write_all(text.as_bytes());
    exit_status(&report.verdicts)
}

pub fn cmd_export(a: &ExportArgs, err: &mut dyn Write) -> i32 {
    let Some(l) = load_file(&a.model.input, a.model.assemble_options(), err) else {
        return EXIT_USAGE;
    };
    let g = match explore(&l.composition, &a.limits.limits(a.model.policy())) {
        Ok(g) => g,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let channels = a.output.with_extension("channels");
    let written = std::fs::write(&a.output, export::graph_text(&l.composition, &g))
        .and_then(|_| std::fs::write(&channels, export::channel_text(&l.composition)));
    match written {
        Ok(()) => EXIT_HOLDS,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", a.output.display());
            EXIT_USAGE
        }
    }
}

pub fn cmd_serve(a: &ServeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(l) = load_file(&a.model.input, a.model.assemble_options(), err) else {
        return EXIT_USAGE;
    };
    let mut session = match serve::Session::new(l.composition, a.model.policy()) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let server = match serve::bind(a.port) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = writeln!(
        out,
        "serving {} on http://127.0.0.1:{}",
        a.model.input.display(),
        a.port
    );
    let _ = out.flush();
    serve::run(&server, &mut session);
    EXIT_HOLDS
}
