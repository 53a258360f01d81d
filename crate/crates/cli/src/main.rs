use clap::Parser;

fn main() {
    let cli = match qpp_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                qpp_cli::EXIT_USAGE
            } else {
                qpp_cli::EXIT_PASS
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(qpp_cli::run(&cli));
}
