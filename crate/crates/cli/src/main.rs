use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        eprintln!("{}", pvlab_cli::usage());
        return ExitCode::from(if args.is_empty() { 2 } else { 0 });
    }
    let config = match pvlab_cli::parse_args(&args) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("{}", e.record());
            eprintln!("{}", pvlab_cli::usage());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let diags = pvlab_cli::validate(&config);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("invalid configuration: {d}");
        }
        eprintln!("{}", pvlab_cli::CliError::Config(diags).record());
        return ExitCode::from(2);
    }
    match pvlab_cli::run_and_write(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
