use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(composed_lab::cli::run(std::env::args_os()))
}
