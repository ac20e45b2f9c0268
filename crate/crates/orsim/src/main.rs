fn main() {
    std::process::exit(orsim::cli::run(std::env::args_os()));
}
