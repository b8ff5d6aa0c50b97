fn main() {
    std::process::exit(phasecoop::cli::main_with(std::env::args_os()));
}
