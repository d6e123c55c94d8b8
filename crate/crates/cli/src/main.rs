use std::process::ExitCode;

use clap::Parser;
use salab::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match salab::run(&cli) {
        Ok(manifest) => {
            for note in &manifest.notes {
                eprintln!("note: {note}");
            }
            if !manifest.dry_run {
                for f in &manifest.files {
                    println!("{f}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
