use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(monge_dirichlet::cli::run_from_args(std::env::args_os()))
}
