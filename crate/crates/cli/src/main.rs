use clap::Parser;

fn main() {
    let cli = match trn_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { trn_cli::EXIT_USAGE } else { trn_cli::EXIT_OK });
        }
    };
    std::process::exit(trn_cli::execute(cli));
}
