fn main() {
    std::process::exit(udatext::cli::run(std::env::args_os()));
}
