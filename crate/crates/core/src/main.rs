use std::process::ExitCode;

fn main() -> ExitCode {
    let code = rulkit::cli::run_from(std::env::args_os());
    ExitCode::from(code.clamp(0, u8::MAX as i32) as u8)
}
