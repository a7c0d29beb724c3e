fn main() {
    std::process::exit(lrstokes_cli::main_with_args(std::env::args_os()));
}
