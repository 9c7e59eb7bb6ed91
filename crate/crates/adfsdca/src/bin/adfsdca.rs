fn main() {
    std::process::exit(adfsdca::cli::run(std::env::args()));
}
