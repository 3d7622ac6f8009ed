fn main() {
    std::process::exit(maeigen_cli::run_cli(std::env::args_os()));
}
