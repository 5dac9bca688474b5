fn main() {
    std::process::exit(logerg::cli::run(std::env::args_os()));
}
