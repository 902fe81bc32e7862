use std::io::Write;
use std::process::ExitCode;

fn main() -> anyhow::Result<ExitCode> {
    let outcome = match rw_spectral::cli::run(std::env::args_os()) {
        Ok(o) => o,
        Err(rw_spectral::Error::Usage(msg)) => {
            eprintln!("{}", msg.trim_end());
            return Ok(ExitCode::from(2));
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    std::io::stdout().write_all(outcome.stdout.as_bytes())?;
    std::io::stderr().write_all(outcome.stderr.as_bytes())?;
    Ok(if outcome.success { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
