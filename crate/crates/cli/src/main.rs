fn main() {
    std::process::exit(pqmiss_cli::app::main_with(std::env::args_os()));
}
