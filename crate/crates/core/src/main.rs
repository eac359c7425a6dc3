fn main() {
    std::process::exit(shortint::cli::main_with_args(std::env::args_os()));
}
