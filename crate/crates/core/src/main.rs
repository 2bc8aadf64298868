use std::process::ExitCode;

fn main() -> ExitCode {
    sea_oco::cli::main_with_args(std::env::args_os())
}
