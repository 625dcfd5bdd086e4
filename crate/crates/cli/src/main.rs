use std::process::ExitCode;

use clap::Parser;
use keldysh_cli::cli::Cli;
use keldysh_cli::commands;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = cli.command.resolve().and_then(|cfg| commands::run(&cfg));
    match outcome {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
