use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(subcir_cli::run(std::env::args_os()))
}
