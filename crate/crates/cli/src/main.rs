use std::process::ExitCode;

fn main() -> ExitCode {
    match dbs_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(dbs_cli::CliError::Clap(e)) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
