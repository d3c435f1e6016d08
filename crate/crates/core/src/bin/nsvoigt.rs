fn main() {
    std::process::exit(nsvoigt::cli::run(std::env::args_os()));
}
