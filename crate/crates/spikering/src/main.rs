use std::process::ExitCode;

fn main() -> ExitCode {
    spikering::cli::main()
}
