fn main() {
    std::process::exit(fhbvm::cli::main_with_args(std::env::args_os()));
}
