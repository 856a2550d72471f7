use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gotlab::cli::main_from_env())
}
