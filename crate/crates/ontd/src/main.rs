fn main() {
    std::process::exit(ontd::cli::run(std::env::args_os()));
}
