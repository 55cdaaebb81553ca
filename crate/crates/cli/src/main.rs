fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(dss_cli::run(std::env::args_os()))
}
