use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lexalign::cli::run(std::env::args_os()))
}
