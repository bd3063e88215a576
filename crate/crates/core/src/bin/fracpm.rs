use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fracpm::cli::main_with_args(std::env::args_os()))
}
