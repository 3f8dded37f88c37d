use std::process::ExitCode;

fn main() -> ExitCode {
    eoratio::cli::main()
}
