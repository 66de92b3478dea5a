use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(xtrap::cli::run(std::env::args_os()))
}
