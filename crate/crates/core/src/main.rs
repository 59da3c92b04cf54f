use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(orbimorse::cli::execute(std::env::args_os()))
}
