fn main() {
    std::process::exit(brinkman::cli::run(std::env::args_os()));
}
