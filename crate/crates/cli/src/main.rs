use clap::Parser;
use lampworld_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    let mut out = std::io::stdout();
    if let Err(e) = execute(cli, &mut input, &mut out) {
        eprintln!("lampworld: {e}");
        std::process::exit(e.exit_code());
    }
}
