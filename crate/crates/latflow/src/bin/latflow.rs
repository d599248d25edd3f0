fn main() {
    std::process::exit(latflow::cli::run(std::env::args()));
}
