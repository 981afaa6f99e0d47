fn main() {
    std::process::exit(permusteg::cli::main_with_args(std::env::args_os()));
}
