use std::process::ExitCode;

fn main() -> ExitCode {
    lowrank_harness::cli::main()
}
