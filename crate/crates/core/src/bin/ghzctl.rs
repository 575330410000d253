use std::process::{Command, ExitCode};

fn main() -> ExitCode {
    // Pin an OpenBLAS core type whose symmetric eigensolver is correct on recent Xeons.
    if std::env::var_os("OPENBLAS_CORETYPE").is_none() {
        if let Ok(exe) = std::env::current_exe() {
            if let Ok(status) = Command::new(exe).args(std::env::args_os().skip(1)).env("OPENBLAS_CORETYPE", "Haswell").status() {
                return ExitCode::from(status.code().unwrap_or(ghz_chain::cli::EXIT_NUMERICAL) as u8);
            }
        }
    }
    let code = ghz_chain::cli::main_with_args(std::env::args_os(), &mut std::io::stdout().lock());
    ExitCode::from(code as u8)
}
