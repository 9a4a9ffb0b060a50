//! Command-line front end for the segmentation library.

pub mod args;
pub mod commands;
pub mod configfile;
pub mod errors;
pub mod imageio;
pub mod report;

use args::{Cli, Command};
use clap::error::ErrorKind;
use clap::Parser;

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; argument problems exit 1.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };

    let workers = match &cli.command {
        Command::Saliency(a) => a.cfg.thread_count(),
        Command::Segment(a) => a.cfg.thread_count(),
        Command::Bench(a) => a.cfg.thread_count(),
        _ => 1,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: failed to build worker pool: {e}");
            return 2;
        }
    };

    let result = pool.install(|| match &cli.command {
        Command::Gen(a) => commands::gen::run(a),
        Command::Saliency(a) => commands::saliency_cmd::run(a),
        Command::Segment(a) => commands::segment::run(a, workers),
        Command::Eval(a) => commands::eval_cmd::run(a),
        Command::Bench(a) => commands::bench::run(a, workers),
    });

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
