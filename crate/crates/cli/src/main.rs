use clap::Parser;
use rkcca_cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("rkcca: {e}");
        std::process::exit(e.exit_code());
    }
}
