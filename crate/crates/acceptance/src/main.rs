//! The command-line tool, built inside this package so the gate can drive it
//! as a subprocess.

fn main() {
    std::process::exit(permusteg::cli::main_with_args(std::env::args_os()));
}
