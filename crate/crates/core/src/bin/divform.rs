fn main() {
    std::process::exit(divform::cli::run(std::env::args_os()));
}
