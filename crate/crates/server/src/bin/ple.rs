use std::fs::OpenOptions;
use std::process::ExitCode;

use clap::Parser;
use ple_server::cli::{analyze, open_platform, Cli, Command};
use ple_server::{serve, shared_writer, AppState};

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), Box<dyn std::error::Error>> = match cli.command {
        Command::Analyze(args) => analyze(&args).map(|r| {
            eprintln!(
                "{} lines, {} API requests, {} spaces -> {}",
                r.totals.lines,
                r.totals.api_requests,
                r.spaces.total,
                args.out.display()
            );
        }).map_err(Into::into),
        Command::Serve(args) => run_server(args).await,
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

async fn run_server(args: ple_server::cli::ServeArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mut state = AppState::new(open_platform(&args)?);
    if let Some(p) = &args.assignments {
        state = state.with_assignments(p.clone())?;
    }
    let access_log = match &args.access_log {
        Some(p) => Some(shared_writer(OpenOptions::new().create(true).append(true).open(p)?)),
        None => None,
    };
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    serve(listener, state, access_log).await?;
    Ok(())
}
