use std::process::ExitCode;

fn main() -> ExitCode {
    match lambda_asp_cli::main_with(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code())
        }
    }
}
