fn main() {
    std::process::exit(ksns_core::cli::run_cli(std::env::args_os()));
}
