use clap::error::ErrorKind;
use clap::Parser;

use slb::cli::{self, Args};

fn main() {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => cli::EXIT_OK,
                _ => cli::EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = cli::execute(&args, &mut std::io::stderr());
    std::process::exit(code);
}
