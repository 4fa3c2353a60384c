use std::process::ExitCode;

use clap::Parser;

use polqpd::cli::Cli;

fn main() -> ExitCode {
    let (command, flags) = Cli::parse().command.split();
    match polqpd::execute(command, flags) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
