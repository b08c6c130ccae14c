use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use disconj::cli::Cli;
use disconj::{exit, run, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(o) => {
            let written = o.file.as_ref().map_or(Ok(()), |(path, text)| {
                std::fs::write(path, text).map_err(|e| CliError::io(path, e))
            });
            match written {
                Ok(()) => {
                    let _ = std::io::stdout().write_all(o.stdout.as_bytes());
                    let _ = std::io::stderr().write_all(o.stderr.as_bytes());
                    o.code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
