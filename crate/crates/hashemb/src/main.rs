use std::process::ExitCode;

fn main() -> ExitCode {
    hashemb::cli::run()
}
