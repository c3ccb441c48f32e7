fn main() {
    std::process::exit(apstat_cli::main_with_args(std::env::args_os()));
}
