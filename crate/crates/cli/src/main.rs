use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    ExitCode::from(gesturekit_cli::run(std::env::args_os()) as u8)
}
