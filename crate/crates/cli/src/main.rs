use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kinetic_net_cli::run(std::env::args_os()))
}
