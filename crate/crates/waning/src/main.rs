use std::process::ExitCode;

fn main() -> ExitCode {
    waning::cli::run()
}
