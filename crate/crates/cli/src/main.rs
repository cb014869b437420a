use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cbd_cli::Cli::parse();
    match cbd_cli::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cbd: {e}");
            print!("{}", cbd_cli::Output::Json(e.to_json()).render());
            ExitCode::from(e.exit_code())
        }
    }
}
