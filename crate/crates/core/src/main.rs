fn main() {
    std::process::exit(windkp::cli::main_with_args(std::env::args_os()));
}
