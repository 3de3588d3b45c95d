fn main() {
    std::process::exit(bicm::cli::run(std::env::args_os()));
}
