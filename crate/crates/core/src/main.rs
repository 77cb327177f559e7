fn main() {
    std::process::exit(reconkit::cli::run(std::env::args_os()));
}
