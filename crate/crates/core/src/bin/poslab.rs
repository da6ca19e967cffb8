fn main() {
    std::process::exit(poslab::cli::main_with_args(std::env::args_os()));
}
