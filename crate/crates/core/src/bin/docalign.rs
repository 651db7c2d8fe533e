fn main() {
    std::process::exit(docalign::cli::run(std::env::args_os()));
}
