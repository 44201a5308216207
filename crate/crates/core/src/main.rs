fn main() {
    std::process::exit(corrkit::cli::main_with_args(std::env::args_os()));
}
