use clap::Parser;
use nlts_lab::{run, Cli, ExperimentConfig};

fn main() {
    let cli = Cli::parse();
    let outcome = ExperimentConfig::resolve(&cli.overrides).and_then(|cfg| run(cli.command, &cfg));
    match outcome {
        Ok(m) => {
            println!("{}: wrote {} files", m.subcommand, m.files.len() + 1);
        }
        Err(e) => {
            eprintln!("{}", e.record());
            std::process::exit(e.exit_code);
        }
    }
}
