use clap::Parser;

use pinsound_tools::cli::{run, Cli};

fn main() {
    // exit codes: 0 success, 1 usage, 2 data, 3 internal
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are not errors
            if e.exit_code() == 0 {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
