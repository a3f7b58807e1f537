fn main() {
    std::process::exit(sobexlab::cli::run(std::env::args_os()));
}
