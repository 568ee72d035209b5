use std::process::ExitCode;

fn main() -> ExitCode {
    esg_risk::cli::main_with_args(std::env::args_os())
}
