use std::process::ExitCode;

fn main() -> ExitCode {
    blockpole::cli::main_with_args(std::env::args_os())
}
