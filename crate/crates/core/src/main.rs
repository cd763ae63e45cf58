fn main() {
    std::process::exit(hadamard_lab::cli::run(std::env::args_os()));
}
