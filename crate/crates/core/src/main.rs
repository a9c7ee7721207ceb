fn main() {
    std::process::exit(deltachain::cli::run(std::env::args_os()));
}
