fn main() {
    std::process::exit(kgfv::cli::main_with_args(std::env::args_os()));
}
