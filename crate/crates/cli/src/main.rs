use clap::Parser;

fn main() {
    let cli = u2v_cli::Cli::parse();
    match u2v_cli::run(cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
