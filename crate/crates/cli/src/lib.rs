//! Command-line front end: configuration, sweep orchestration, manifests
//! and figure data export.

pub mod config;
pub mod error;
pub mod figures;
pub mod manifest;
pub mod run;
pub mod table;

pub use config::{parse_command, Command, Mode, RunConfig};
pub use error::CliError;
pub use figures::emit_plot_data;
pub use manifest::RunManifest;
pub use run::execute;

/// Runs the CLI on `args` (without the program name) and returns the
/// process exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    let result = parse_command(args).and_then(|cmd| match cmd {
        Command::Help => {
            println!("{}", config::USAGE);
            Ok(0)
        }
        Command::Version => {
            println!("kicked-kerr {}", kicked_kerr::VERSION);
            Ok(0)
        }
        Command::Figure { id, out } => {
            for p in emit_plot_data(&out, &id)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Run(config) => {
            let m = execute(&config)?;
            if m.reused {
                println!(
                    "up to date: config {} already complete in {}",
                    &m.config_hash[..16],
                    config.out.display()
                );
            }
            for r in &m.runs {
                let status = serde_json::to_value(r.status)
                    .map(|v| v.as_str().unwrap_or("").to_string())
                    .unwrap_or_default();
                match &r.message {
                    Some(msg) => println!("{} {status}: {msg}", r.key),
                    None => println!("{} {status}", r.key),
                }
            }
            println!(
                "manifest: {}",
                manifest::manifest_path(&config.out, &m.config_hash).display()
            );
            Ok(run::exit_code(&m))
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kicked-kerr: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\n{}", config::USAGE);
            }
            e.exit_code()
        }
    }
}
