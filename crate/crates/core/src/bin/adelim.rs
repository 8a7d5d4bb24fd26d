fn main() {
    std::process::exit(adiabatic_elim::cli::main_with_args(std::env::args_os()));
}
