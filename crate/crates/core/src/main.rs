fn main() {
    std::process::exit(sureshrink::cli::run(std::env::args_os()));
}
