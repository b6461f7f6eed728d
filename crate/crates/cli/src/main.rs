use clap::Parser;
use dpgp_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
