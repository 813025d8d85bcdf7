fn main() {
    std::process::exit(pmax::cli::run(std::env::args_os()));
}
