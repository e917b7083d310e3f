fn main() {
    std::process::exit(sbridge_cli::run_cli(std::env::args_os()));
}
